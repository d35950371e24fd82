import os
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[3]

# Absolute path based on project root; PCAP_CONFIG_DIR points elsewhere
CONFIG_DIR = Path(os.getenv("PCAP_CONFIG_DIR", PROJECT_ROOT / "config"))
CONFIG_FILE_PATH = CONFIG_DIR / "config.yaml"
PARAMS_FILE_PATH = CONFIG_DIR / "params.yaml"
SCHEMA_FILE_PATH = CONFIG_DIR / "schema.yaml"

DEFAULT_SEED = 20240607

# Control chart constants for sample sizes 2..10
CONTROL_CHART_CONSTANTS: dict[str, dict[int, float]] = {
    "d2": {
        2: 1.1284,
        3: 1.6926,
        4: 2.0588,
        5: 2.3259,
        6: 2.5344,
        7: 2.7044,
        8: 2.8472,
        9: 2.9700,
        10: 3.0775,
    },
    "c4": {
        2: 0.7979,
        3: 0.8862,
        4: 0.9213,
        5: 0.9400,
        6: 0.9515,
        7: 0.9594,
        8: 0.9650,
        9: 0.9693,
        10: 0.9727,
    },
    "d3": {
        2: 0.8525,
        3: 0.8884,
        4: 0.8798,
        5: 0.8641,
        6: 0.8480,
        7: 0.8332,
        8: 0.8198,
        9: 0.8078,
        10: 0.7971,
    },
    "d4": {
        2: 0.9539,
        3: 1.5878,
        4: 1.9783,
        5: 2.2569,
        6: 2.4717,
        7: 2.6455,
        8: 2.7908,
        9: 2.9154,
        10: 3.0242,
    },
}
MIN_WINDOW = 2
MAX_WINDOW = 10

# Percentiles spanning +/- 3 sigma of a normal process
P_LOWER = 0.00135
P_MEDIAN = 0.5
P_UPPER = 0.99865

# Capability rating bands for the headline index
MARGINAL_THRESHOLD = 1.00
CAPABLE_THRESHOLD = 1.33

# Relative-error bins in percent, last bin open-ended
DEFAULT_BIN_EDGES: tuple[float, ...] = (
    0.0,
    5.0,
    7.5,
    10.0,
    15.0,
    20.0,
    35.0,
    50.0,
    float("inf"),
)
DEFAULT_RATIO_EDGES: tuple[float, ...] = (0.0, 0.9, 1.1, float("inf"))
DEFAULT_RATIO_LIMITS: tuple[float, float] = (0.9, 1.1)

# Case-study sigma tables are tabulated to 4 decimals
TABLE_SIGMA_DECIMALS = 4

# Case-study table file labels
TOL_TARGET_ROW = "T"
TOL_PLUS_ROW = "Tol+"
TOL_MINUS_ROW = "Tol-"
HEADER_LABEL = "NO."

# CSV-row layout used when config/schema.yaml is not available
DEFAULT_REPORT_COLUMNS: tuple[str, ...] = (
    "dimension_id",
    "n",
    "tolerance_kind",
    "has_target",
    "path",
    "mean",
    "sigma_overall",
    "sigma_within_method",
    "sigma_within",
    "outlier_count",
    "a2_star",
    "p_value",
    "normality_passed",
    "best_family",
    "p00135",
    "p50",
    "p99865",
    "ppm_nonconforming",
    "rating",
    "error_code",
)
NORMAL_INDEX_NAMES: tuple[str, ...] = (
    "Cp",
    "Cp*",
    "Cpk",
    "Cpk*",
    "Cpu",
    "Cpl",
    "Cpm",
    "Cpm*",
    "Cpmk",
    "Cpmk*",
    "Pp",
    "Pp*",
    "Ppk",
    "Ppk*",
    "Ppu",
    "Ppl",
    "Ppm",
    "Ppmk",
)
NONNORMAL_INDEX_NAMES: tuple[str, ...] = ("CNp", "CNpk", "CNpu", "CNpl", "CNpm", "CNpmk")
SIMPLIFIED_NORMAL_INDEX_NAMES: tuple[str, ...] = ("Cp", "Cpk", "Pp", "Ppk")
SIMPLIFIED_NONNORMAL_INDEX_NAMES: tuple[str, ...] = ("CNp", "CNpk")
DEFAULT_INDEX_NAMES: tuple[str, ...] = NORMAL_INDEX_NAMES + NONNORMAL_INDEX_NAMES
