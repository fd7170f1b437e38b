import os
from pathlib import Path
from textwrap import dedent
from typing import NewType, Optional

from platformdirs import user_data_path, user_log_path

DEFAULT_FEDCLINIC_LOG_DIR = user_log_path("fedclinic")
DEFAULT_FEDCLINIC_DATA_DIR = user_data_path("fedclinic")

FEDCLINIC_LOG_DIR = Path(
    os.environ.get("FEDCLINIC_LOG_DIR", DEFAULT_FEDCLINIC_LOG_DIR)
).resolve()
FEDCLINIC_DATA_DIR = Path(
    os.environ.get("FEDCLINIC_DATA_DIR", DEFAULT_FEDCLINIC_DATA_DIR)
).resolve()

DATASET_ENV_VAR = "FEDCLINIC_DATASET"
DATASET_FILENAME = "breast-cancer-wisconsin.data"
DATASET_URL = (
    "https://archive.ics.uci.edu/ml/machine-learning-databases/"
    "breast-cancer-wisconsin/breast-cancer-wisconsin.data"
)

# UCI column order after the sample id
ATTRIBUTE_NAMES = (
    "clump_thickness",
    "cell_size_uniformity",
    "cell_shape_uniformity",
    "marginal_adhesion",
    "single_epithelial_cell_size",
    "bare_nuclei",
    "bland_chromatin",
    "normal_nucleoli",
    "mitoses",
)
N_FEATURES = len(ATTRIBUTE_NAMES)
ATTRIBUTE_MIN = 1
ATTRIBUTE_MAX = 10
CLASS_BENIGN = 2
CLASS_MALIGNANT = 4
LABEL_BENIGN = -1
LABEL_MALIGNANT = 1

DEFAULT_TEST_FRACTION = 0.2
DEFAULT_ROUNDS = 20
DEFAULT_DELTA_TOTAL = 1e-5
DEFAULT_CLIP_BOUND = 1.0
DEFAULT_LEARNING_RATE = 0.05
DEFAULT_REGULARIZATION = 0.001
DEFAULT_LOCAL_EPOCHS = 5
DEFAULT_EPSILON_GRID = (1.0, 5.0, 10.0, 20.0, 28.0, 30.0, 50.0)
DEFAULT_CLIENT_GRID = (20,)
DEFAULT_SEEDS = tuple(range(10))
DEFAULT_OUTPUT_PATH = "put_sweep.csv"
DEFAULT_BACKDOOR_OUTPUT_PATH = "backdoor_study.csv"

MAX_PARTICIPATION_RETRIES = 3
MAX_LOGS = 10

ExitCode = NewType("ExitCode", int)
# fedclinic shell exit codes
EXIT_CODE_OK = ExitCode(0)
EXIT_CODE_CONFIG_ERROR = ExitCode(1)
EXIT_CODE_DATA_ERROR = ExitCode(2)
EXIT_CODE_RUN_ERROR = ExitCode(3)

fedclinic_log_file: Optional[Path] = None

completion_instructions = dedent(
    """
Add the appropriate command to your shell's config file
so that it is run on startup.

bash:
    eval "$(register-python-argcomplete fedclinic)"

zsh:
    autoload -U bashcompinit
    bashcompinit
    eval "$(register-python-argcomplete fedclinic)"

fish:
    register-python-argcomplete --shell fish fedclinic >~/.config/fish/completions/fedclinic.fish

"""
)
