import logging
import math
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple

import pandas as pd

from fedclinic.adversary import AttackConfig, DefenseConfig, attack_success_rate
from fedclinic.colors import bold
from fedclinic.commands.common import (
    load_experiment,
    load_records,
    master_seed_for,
    split_for_seed,
    write_csv,
)
from fedclinic.constants import EXIT_CODE_OK, ExitCode
from fedclinic.dataset import FeatureRecord
from fedclinic.experiment_config import ExperimentConfig
from fedclinic.federation import prepare_shards, run_training
from fedclinic.util import ConfigError, RunError

logger = logging.getLogger(__name__)

ARMS = ("clean", "attacked", "defended")
BACKDOOR_COLUMNS = ["n_clients", "seed", "arm", "test_accuracy", "asr"]


class BackdoorRow(NamedTuple):
    n_clients: int
    seed: int
    arm: str
    test_accuracy: float
    asr: float


def arm_configs(config: ExperimentConfig, arm: str) -> Tuple[AttackConfig, DefenseConfig]:
    attack = config.attack_config()._replace(enabled=arm != "clean")
    defense = config.defense_config()._replace(enabled=arm == "defended")
    return attack, defense


def _run_arm(
    config: ExperimentConfig,
    arm: str,
    epsilon: float,
    n_clients: int,
    seed: int,
    records: Sequence[FeatureRecord],
) -> BackdoorRow:
    attack, defense = arm_configs(config, arm)
    train, test = split_for_seed(records, config, seed)
    shards = prepare_shards(
        train,
        n_clients,
        seed,
        mode=config.sharding.mode,
        alpha=config.sharding.alpha,
        attack=attack,
    )
    fed_cfg = config.federation_config(epsilon, n_clients, master_seed_for(config, seed))
    reports = run_training(fed_cfg, shards, test, attack=attack, defense=defense)
    final = reports[-1]
    # the clean arm is scored against the same trigger
    asr = attack_success_rate(final.global_after, test, attack._replace(enabled=True))
    logger.info(
        f"{arm} n_clients={n_clients} seed={seed}: accuracy={final.test_accuracy:.4f} asr={asr:.4f}"
    )
    return BackdoorRow(n_clients, seed, arm, final.test_accuracy, asr)


def backdoor_study(
    config: ExperimentConfig,
    epsilon: float = math.inf,
    records: Optional[Sequence[FeatureRecord]] = None,
) -> List[BackdoorRow]:
    """Clean, attacked and defended runs for every (n_clients, seed)"""
    if records is None:
        records = load_records(config)
    rows = []
    for n_clients in config.client_grid:
        for seed in config.seeds:
            for arm in ARMS:
                try:
                    rows.append(_run_arm(config, arm, epsilon, n_clients, seed, records))
                except (ConfigError, RunError) as e:
                    raise e.__class__(
                        f"backdoor arm {arm}, n_clients={n_clients}, seed={seed}: {e}",
                        wrap_message=False,
                    ) from e
    return rows


def backdoor_frame(rows: Sequence[BackdoorRow]) -> pd.DataFrame:
    frame = pd.DataFrame(list(rows), columns=BACKDOOR_COLUMNS)
    frame["arm"] = pd.Categorical(frame["arm"], categories=list(ARMS), ordered=True)
    return frame.sort_values(["n_clients", "seed", "arm"], kind="mergesort").reset_index(
        drop=True
    )


def backdoor(
    config_path: Path,
    epsilon: float,
    output: Optional[Path],
    dataset: Optional[Path],
    seed_offset: int,
) -> ExitCode:
    config = load_experiment(config_path, dataset=dataset, seed_offset=seed_offset)
    rows = backdoor_study(config, epsilon)
    if not rows:
        raise RunError("backdoor study produced no rows")
    path = write_csv(backdoor_frame(rows), output or config.backdoor_output_path)
    print(f"wrote {len(rows)} rows to {bold(str(path))}")
    return EXIT_CODE_OK
