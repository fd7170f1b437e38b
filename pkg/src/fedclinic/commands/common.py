import logging
import os
from pathlib import Path
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import pandas as pd

from fedclinic.constants import DATASET_ENV_VAR
from fedclinic.dataset import FeatureRecord, load_dataset, stratified_split
from fedclinic.experiment_config import ExperimentConfig, parse_config
from fedclinic.util import ConfigError, OutputError, RunError, derive_seed

logger = logging.getLogger(__name__)

METRICS_COLUMNS = (
    "epsilon",
    "n_clients",
    "seed",
    "round",
    "test_accuracy",
    "test_hinge_loss",
    "spent_epsilon",
    "asr",
    "topup_events",
)
METRICS_SORT_KEYS = ["epsilon", "n_clients", "seed", "round"]
REAL_FORMAT = "%.6f"


class MetricsRow(NamedTuple):
    epsilon: float
    n_clients: int
    seed: int
    round: int
    test_accuracy: float
    test_hinge_loss: float
    spent_epsilon: float
    asr: Optional[float]
    topup_events: int


def resolve_dataset_path(flag: Optional[Path], config: ExperimentConfig) -> Path:
    """--dataset beats $FEDCLINIC_DATASET, which beats dataset_path in the config"""
    if flag is not None:
        return Path(flag)
    from_env = os.environ.get(DATASET_ENV_VAR)
    if from_env:
        logger.info(f"dataset path taken from ${DATASET_ENV_VAR}: {from_env}")
        return Path(from_env)
    return config.dataset_path


def load_experiment(
    config_path: Path,
    *,
    output: Optional[Path] = None,
    dataset: Optional[Path] = None,
    seed_offset: int = 0,
) -> ExperimentConfig:
    """Parse the config and apply command line overrides"""
    config = parse_config(config_path)
    seeds = tuple(seed + seed_offset for seed in config.seeds)
    if any(seed < 0 for seed in seeds):
        raise ConfigError(f"--seed-offset {seed_offset} makes some seeds negative: {seeds}")
    return config.with_overrides(
        dataset_path=resolve_dataset_path(dataset, config),
        output_path=output,
        seeds=seeds,
    )


def load_records(config: ExperimentConfig) -> List[FeatureRecord]:
    return load_dataset(config.dataset_path)


def split_for_seed(
    records: Sequence[FeatureRecord], config: ExperimentConfig, seed: int
) -> Tuple[List[FeatureRecord], List[FeatureRecord]]:
    return stratified_split(records, config.test_fraction, seed)


def master_seed_for(config: ExperimentConfig, seed: int) -> int:
    return derive_seed(config.federation.master_seed, seed)


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    try:
        frame.to_csv(
            path, index=False, float_format=REAL_FORMAT, na_rep="", lineterminator="\n"
        )
    except OSError as e:
        raise OutputError(f"Unable to write {path}: {e.strerror or e}")
    logger.info(f"wrote {len(frame)} rows to {path}")
    return path


def metrics_frame(rows: Iterable[MetricsRow]) -> pd.DataFrame:
    frame = pd.DataFrame(list(rows), columns=list(METRICS_COLUMNS))
    frame["asr"] = pd.to_numeric(frame["asr"])
    return frame.sort_values(METRICS_SORT_KEYS, kind="mergesort").reset_index(drop=True)


def emit_csv(rows: Sequence[MetricsRow], path: Path) -> Path:
    """Write sorted metric rows; reals have six fixed decimals and ε=∞ reads "inf" """
    if not rows:
        raise RunError(f"No metric rows to write, {path} was not created")
    return write_csv(metrics_frame(rows), path)
