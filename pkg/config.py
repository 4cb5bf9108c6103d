# config.py
import os
from pathlib import Path

# --- Configuration ---
PROJECT_ROOT = Path(__file__).parent

# Output
OUTPUT_DIR = Path(os.getenv("DEFRAG_OUTPUT_DIR", str(PROJECT_ROOT / "output")))

# Runtime
DEFAULT_SEED = int(os.getenv("DEFRAG_SEED", "0"))
N_JOBS = int(os.getenv("DEFRAG_N_JOBS", "1"))  # joblib workers for trees / restarts
LOG_LEVEL = os.getenv("DEFRAG_LOG_LEVEL", "INFO")
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Numeric guards (probabilities are clipped inside every log evaluation)
PROBA_EPS = 1e-6
PRECISION_FLOOR = 1e-8
VARIANCE_FLOOR = 1e-8

# Random forest trainer
FOREST_N_TREES = 100
FOREST_MAX_DEPTH = None  # None = grow until min_leaf stops the split
FOREST_MIN_LEAF = 5
FOREST_FEATURE_SUBSAMPLE = 1.0
FOREST_BOOTSTRAP = True

# EM algorithm (fixed K)
EM_TOL = 1e-6
EM_MAX_ITER = 300
EM_K_RANGE = range(1, 11)

# FAB inference
FAB_K_MAX = 10
FAB_DELTA = 1e-3
FAB_INNER_TOL = 1e-6
FAB_INNER_MAX_ITER = 100
FAB_OUTER_TOL = 1e-6
FAB_OUTER_MAX_ITER = 300
FAB_RESTARTS = 20

# Rules
RULE_TAU = 0.01  # statements with tau < eta < 1 - tau stay unconstrained

# Data
SYNTH_N = 1000
SYNTH_NOISE_RATE = 0.1
CSV_TARGET_COLUMN = -1  # last column

# Plot
PLOT_MAX_TREES = 5
