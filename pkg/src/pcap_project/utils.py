import math
import os
from pathlib import Path
from typing import Any

import yaml
from box import ConfigBox
from box.exceptions import BoxValueError

from pcap_project.logger import logger


def read_yaml(path_to_yaml: Path) -> ConfigBox:
    """reads yaml file and returns as ConfigBox object"""
    try:
        with open(path_to_yaml) as yaml_file:
            content = yaml.safe_load(yaml_file)
            logger.info(f"yaml file: {path_to_yaml} loaded successfully")
            return ConfigBox(content)
    except BoxValueError:
        raise ValueError("yaml file is empty")
    except Exception as e:
        raise e


def save_bytes(path: Path, data: bytes):
    """save raw bytes, creating the parent directory

    Args:
        path (Path): destination file
        data (bytes): payload
    """
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(data)

    logger.info(f"file saved at: {path} ({get_size(path)})")


def get_size(path: Path) -> str:
    """get size in KB

    Args:
        path (Path): path of the file

    Returns:
        str: size in KB
    """
    size_in_kb = round(os.path.getsize(path) / 1024)
    return f"~ {size_in_kb} KB"


def format_decimal(value: float) -> str:
    """Shortest decimal text that round-trips to the same float."""
    if math.isnan(value) or math.isinf(value):
        raise ValueError(f"cannot format non-finite value {value}")
    text = repr(float(value))
    if text.endswith(".0"):
        text = text[:-2]
    if text == "-0":
        text = "0"
    return text


def format_fixed(value: float | None, decimals: int = 3) -> str:
    """Fixed-point text for tables; empty for missing or non-finite values."""
    if value is None or not math.isfinite(value):
        return ""
    text = f"{value:.{decimals}f}"
    # avoid "-0.000"
    if float(text) == 0.0:
        text = f"{0.0:.{decimals}f}"
    return text


def finite_or_none(value: Any) -> float | None:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None
