import json
import os

# --- PATHS ---
BASE_DIR = os.path.dirname(os.path.abspath(__file__))
SPECS_DIR = os.path.join(BASE_DIR, "specs")
RUNS_DB_FILE = os.environ.get("CONVLAB_RUNS_DB", os.path.join(BASE_DIR, "convlab_runs.db"))
LOG_ENV_VAR = "CONVLAB_LOG"

# --- EXPRESSION / REFINEMENT CAPS ---
MAX_TERMS = 8
MAX_PIECES = 10_000
GRID_POINTS_PER_PIECE = 256

# --- TOLERANCES ---
QUAD_TOLERANCE = 1e-9          # absolute, per piece
REPORT_TOLERANCE = 1e-6
BISECTION_XTOL = 1e-12
GOLDEN_TTOL = 1e-10            # golden-section tolerance in log(delta)
GOLDEN_COARSE_POINTS = 32
QUAD_LIMIT = 200               # subdivisions handed to scipy.integrate.quad

# --- HORIZON DECISION RULE ---
PASS_THRESHOLD = 1e-3
FAIL_THRESHOLD = 1e-2
MIN_DECAY_SLOPE = 0.5
DECAY_SLOPE_TOL = 1e-9         # fitted slopes above -tol count as flat
FIT_FACTOR = 2.0
MIN_HORIZON = 8

# --- CAUCHY / GRIDS ---
PAIR_WINDOW = 16
DEFAULT_PAIR_BUDGET = 4096
DEFAULT_DELTA_GRID = [1.0, 0.1, 0.01, 0.001]
AP_MEASURE_FRACTION = 0.5
AP_MAX_DOUBLINGS = 400

# --- ORACLE ---
ORACLE_MIN_CELLS = 1000
ORACLE_MIN_SAMPLES = 10_000
DEFAULT_SEED = 20240917

# --- EXIT CODES ---
EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_UNDECIDED = 2
EXIT_USAGE = 64

# --- OPTIONS ---
COMMAND_OPTIONS = [
    "check-in-measure", "check-alpha", "synth-witness", "check-cauchy",
    "weak-norm", "check-weak-conv", "ap-member", "embed",
    "gallery", "oracle", "history",
]

GALLERY_IDS = ["E1", "E2", "E3", "E4"]

OUTPUT_FORMATS = ["json", "csv"]

# Keys a settings file may override, with their defaults
OVERRIDABLE = {
    "quad_tolerance": QUAD_TOLERANCE,
    "report_tolerance": REPORT_TOLERANCE,
    "bisection_xtol": BISECTION_XTOL,
    "grid_points": GRID_POINTS_PER_PIECE,
    "max_pieces": MAX_PIECES,
    "pass_threshold": PASS_THRESHOLD,
    "fail_threshold": FAIL_THRESHOLD,
    "min_decay_slope": MIN_DECAY_SLOPE,
    "fit_factor": FIT_FACTOR,
    "pair_window": PAIR_WINDOW,
    "ap_measure_fraction": AP_MEASURE_FRACTION,
}


def load_settings(path=None):
    """
    Returns the overridable defaults, updated from a JSON settings file if given.
    Raises ValueError listing unknown keys.
    """
    settings = dict(OVERRIDABLE)
    if not path:
        return settings

    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)

    unknown = sorted(set(data) - set(OVERRIDABLE))
    if unknown:
        raise ValueError(f"Unknown settings keys in {path}: {', '.join(unknown)}")

    for key, value in data.items():
        settings[key] = type(OVERRIDABLE[key])(value)
    return settings
