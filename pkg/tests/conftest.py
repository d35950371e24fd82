import os
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from pcap_project.components.data_ingestion import parse_dataset
from pcap_project.constants import DEFAULT_SEED
from pcap_project.entity.domain_entity import MeasurementSeries, ToleranceSpec

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def case_study_bytes():
    """Raw case-study data: 9 dimensions, 32 samples each."""
    return (DATA_DIR / "case_study.csv").read_bytes()


@pytest.fixture(scope="session")
def case_study_path():
    return DATA_DIR / "case_study.csv"


@pytest.fixture(scope="session")
def dataset(case_study_bytes):
    return parse_dataset(case_study_bytes)


def _reference(name):
    return pd.read_csv(DATA_DIR / name, dtype={"dimension_id": str}).set_index(
        "dimension_id"
    )


@pytest.fixture(scope="session")
def sigma_reference():
    """Published sigma estimates (4 decimals)."""
    return _reference("sigma_reference.csv")


@pytest.fixture(scope="session")
def cp_reference():
    return _reference("cp_reference.csv")


@pytest.fixture(scope="session")
def cpk_reference():
    return _reference("cpk_reference.csv")


@pytest.fixture
def rng():
    """Seeded generator; PCAP_SEED overrides the default seed."""
    return np.random.default_rng(int(os.getenv("PCAP_SEED", DEFAULT_SEED)))


@pytest.fixture
def symmetric_spec():
    return ToleranceSpec(lsl=-1.0, usl=1.0, target=0.0)


@pytest.fixture
def asymmetric_spec():
    return ToleranceSpec(lsl=4.0, usl=10.0, target=6.0)


@pytest.fixture
def normal_series(rng):
    return MeasurementSeries.from_values(rng.normal(0.0, 0.2, size=50))
