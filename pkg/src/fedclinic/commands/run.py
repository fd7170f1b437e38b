import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence

from fedclinic.colors import bold
from fedclinic.commands.common import (
    MetricsRow,
    emit_csv,
    load_experiment,
    load_records,
    master_seed_for,
    split_for_seed,
)
from fedclinic.constants import EXIT_CODE_OK, ExitCode
from fedclinic.dataset import FeatureRecord
from fedclinic.experiment_config import ExperimentConfig
from fedclinic.federation import RoundReport, prepare_shards, run_training
from fedclinic.util import ConfigError, RunError

logger = logging.getLogger(__name__)

REFERENCE_EPSILON = math.inf


def sweep_epsilons(config: ExperimentConfig) -> List[float]:
    """The configured grid followed by the non-private reference"""
    epsilons = list(dict.fromkeys(config.epsilon_grid))
    if REFERENCE_EPSILON not in epsilons:
        epsilons.append(REFERENCE_EPSILON)
    return epsilons


def rows_from_reports(
    epsilon: float, n_clients: int, seed: int, reports: Sequence[RoundReport]
) -> List[MetricsRow]:
    rows = []
    topup_events = 0
    for report in reports:
        if report.applied_topup_sigma > 0:
            topup_events += 1
        rows.append(
            MetricsRow(
                epsilon=epsilon,
                n_clients=n_clients,
                seed=seed,
                round=report.round_index,
                test_accuracy=report.test_accuracy,
                test_hinge_loss=report.test_hinge_loss,
                spent_epsilon=report.accountant_after.spent_epsilon,
                asr=report.asr,
                topup_events=topup_events,
            )
        )
    return rows


def _run_point(
    config: ExperimentConfig,
    epsilon: float,
    n_clients: int,
    seed: int,
    records: Sequence[FeatureRecord],
) -> List[MetricsRow]:
    train, test = split_for_seed(records, config, seed)
    attack = config.attack_config()
    shards = prepare_shards(
        train,
        n_clients,
        seed,
        mode=config.sharding.mode,
        alpha=config.sharding.alpha,
        attack=attack,
    )
    fed_cfg = config.federation_config(epsilon, n_clients, master_seed_for(config, seed))
    reports = run_training(
        fed_cfg, shards, test, attack=attack, defense=config.defense_config()
    )
    return rows_from_reports(epsilon, n_clients, seed, reports)


def sweep_put(
    config: ExperimentConfig, records: Optional[Sequence[FeatureRecord]] = None
) -> List[MetricsRow]:
    """Privacy-utility sweep over every (ε, n_clients, seed) point plus ε=∞"""
    if records is None:
        records = load_records(config)

    rows: List[MetricsRow] = []
    epsilons = sweep_epsilons(config)
    for n_clients in config.client_grid:
        for seed in config.seeds:
            for epsilon in epsilons:
                logger.info(f"sweep point epsilon={epsilon} n_clients={n_clients} seed={seed}")
                try:
                    rows.extend(_run_point(config, epsilon, n_clients, seed, records))
                except (ConfigError, RunError) as e:
                    raise e.__class__(
                        f"sweep point epsilon={epsilon}, n_clients={n_clients}, "
                        f"seed={seed}: {e}",
                        wrap_message=False,
                    ) from e
    return rows


def run(
    config_path: Path,
    output: Optional[Path],
    dataset: Optional[Path],
    seed_offset: int,
) -> ExitCode:
    config = load_experiment(
        config_path, output=output, dataset=dataset, seed_offset=seed_offset
    )
    rows = sweep_put(config)
    path = emit_csv(rows, config.output_path)
    print(f"wrote {len(rows)} rows to {bold(str(path))}")
    return EXIT_CODE_OK
