"""Constants for the WES benchmark suite."""

DOMAIN = "wesbench"
VERSION = "0.1.0"

# Label curves
N_POINTS = 2000
PAIR_REPEATS = 10
DOMAIN_LENGTH = 10.0
N_TERMS = 300
N_FEATURES = 5

# Density estimation and weighting
PDF_BINS = 100
OVERLAP_BINS = 100
POLY_DEGREE = 12
WEIGHT_GRID_POINTS = 10001
WEIGHT_EXPORT_POINTS = 201
TAIL_PROB = 0.05
TAIL_PERCENTILE = 0.01

# Network and training
LAYER_SIZES = (5, 25, 25, 25, 5, 1)
LEARNING_RATE = 0.01
BATCH_SIZE = 512
EPOCHS = 300
HOLDOUT_FRACTION = 0.2
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8
MODEL_FORMAT_VERSION = 1

# Experiment grid
SIGMAS = (0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10)
BETAS = (1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 15.0, 20.0, 25.0, 30.0)
BENCHMARK_LOSSES = (
    "mse",
    "mae",
    "huber:0.5",
    "huber:5.0",
    "huber:10.0",
    "logcosh",
    "quantile:0.25",
    "quantile:0.75",
)
WES_FAMILY = "wes"
ENSEMBLE_SIZE = 10
PAPER_ENSEMBLE_SIZE = 100
MASTER_SEED = 0
OUTPUT_DIR = "results"

RNG_ALGORITHM = "PCG64/ziggurat"

# Figure-4 prediction densities live on a range wider than [0, 1] so stretched
# predictions stay visible.
FIGURE_PDF_RANGE = (-0.25, 1.25)
FIGURE_PDF_BINS = 150
SCATTER_STRIDE = 50

RESULT_COLUMNS = (
    "distribution",
    "sigma",
    "loss",
    "beta",
    "member",
    "seed",
    "rmse",
    "cc",
    "overlap",
    "extreme_rmse",
    "p1_tail_mean",
    "p99_tail_mean",
    "train_loss_final",
    "wall_seconds",
    "status",
)
METRIC_COLUMNS = ("rmse", "cc", "overlap", "extreme_rmse", "p1_tail_mean", "p99_tail_mean")
# Direction in which each metric improves.
HIGHER_IS_BETTER = {
    "rmse": False,
    "cc": True,
    "overlap": True,
    "extreme_rmse": False,
    "p1_tail_mean": False,
    "p99_tail_mean": True,
}

STATUS_OK = "ok"
STATUS_NON_FINITE = "non_finite"

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2

ENV_WORKERS = "WESBENCH_WORKERS"
