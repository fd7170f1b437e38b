"""Round-based federated training with distributed Gaussian noise.

Each round: participating clinics train locally from the current global
model, clip their delta to C, add their share of Gaussian noise and send it.
The server averages what it received, tops the noise up when clients dropped
out, applies the average and charges the accountant once.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from fedclinic.adversary import (
    AttackConfig,
    DefenseConfig,
    adversarial_augment,
    attack_success_rate,
    poison_clients,
)
from fedclinic.constants import MAX_PARTICIPATION_RETRIES
from fedclinic.dataset import ClientShard, FeatureRecord, shard
from fedclinic.privacy import (
    CLASSICAL_EPSILON_LIMIT,
    AccountantState,
    PrivacySpec,
    add_gaussian,
    charge_round,
    clip_update,
    client_noise_sigma,
    new_accountant,
    spec_sigma_eff,
)
from fedclinic.svm import ModelVector, TrainSpec, accuracy, hinge_loss, local_train
from fedclinic.util import (
    STREAM_AUGMENT,
    STREAM_DROPOUT,
    STREAM_NOISE,
    STREAM_TOPUP,
    STREAM_TRAIN,
    BudgetError,
    ConfigError,
    NumericError,
    RunError,
    derive_seed,
)

logger = logging.getLogger(__name__)


class FederationConfig(NamedTuple):
    n_clients: int
    rounds: int
    privacy: PrivacySpec
    training: TrainSpec = TrainSpec()
    dropout_probability: float = 0.0
    master_seed: int = 0
    weighted_aggregation: bool = False
    workers: int = 1

    def validate(self) -> "FederationConfig":
        if self.privacy.n_clients != self.n_clients:
            raise ConfigError(
                f"privacy spec is calibrated for {self.privacy.n_clients} clients, "
                f"federation has {self.n_clients}"
            )
        if self.privacy.rounds != self.rounds:
            raise ConfigError(
                f"privacy spec covers {self.privacy.rounds} rounds, federation runs {self.rounds}"
            )
        if not 0 <= self.dropout_probability < 1:
            raise ConfigError(
                f"dropout_probability must lie in [0, 1), got {self.dropout_probability}"
            )
        if self.master_seed < 0:
            raise ConfigError(f"master_seed must be non-negative, got {self.master_seed}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        self.privacy.validate()
        self.training.validate()
        return self


class RoundReport(NamedTuple):
    round_index: int
    participating: Tuple[int, ...]
    dropped: Tuple[int, ...]
    aggregate_update: ModelVector
    applied_topup_sigma: float
    test_accuracy: float
    test_hinge_loss: float
    accountant_after: AccountantState
    global_after: ModelVector
    asr: Optional[float] = None


def aggregate(
    updates: Sequence[ModelVector], weights: Optional[Sequence[float]] = None
) -> ModelVector:
    """Coordinate-wise FedAvg; uniform unless weights are given"""
    if not updates:
        raise ValueError("cannot aggregate an empty list of updates")
    dim = updates[0].dim
    if any(u.dim != dim for u in updates):
        raise ValueError("updates have different dimensions")
    stacked = np.stack([u.to_array() for u in updates])
    if weights is None:
        return ModelVector.from_array(stacked.mean(axis=0))
    return ModelVector.from_array(np.average(stacked, axis=0, weights=np.asarray(weights)))


def adaptive_topup(received: int, expected: int, sigma_eff: float) -> float:
    """Std of the central noise the server adds when only `received` clients reported.

    Client shares were sized for `expected` clients, so their average carries
    sigma_eff·sqrt(expected/received), while the sensitivity of a
    `received`-client average needs sigma_eff·expected/received.
    """
    if not 1 <= received <= expected:
        raise ValueError(f"received must lie in [1, {expected}], got {received}")
    if received == expected or sigma_eff == 0:
        return 0.0
    sigma_have = client_noise_sigma(sigma_eff, expected) / math.sqrt(received)
    sigma_target = sigma_eff * expected / received
    return math.sqrt(max(0.0, sigma_target**2 - sigma_have**2))


def _draw_participants(
    shards: Sequence[ClientShard], cfg: FederationConfig, round_idx: int
) -> List[ClientShard]:
    if cfg.dropout_probability == 0:
        return list(shards)
    for attempt in range(MAX_PARTICIPATION_RETRIES + 1):
        rng = np.random.default_rng(
            derive_seed(cfg.master_seed, STREAM_DROPOUT, round_idx, attempt)
        )
        draws = rng.random(len(shards))
        participating = [s for s, u in zip(shards, draws) if u >= cfg.dropout_probability]
        if participating:
            return participating
        logger.warning(f"round {round_idx}: every client dropped out, redrawing participation")
    raise RunError(
        f"round {round_idx} aborted: no client participated after "
        f"{MAX_PARTICIPATION_RETRIES} retries"
    )


def _client_update(
    global_model: ModelVector,
    client: ClientShard,
    cfg: FederationConfig,
    round_idx: int,
    sigma_client: float,
    defense: Optional[DefenseConfig],
) -> ModelVector:
    seed = cfg.master_seed
    cid = client.client_id
    if defense is not None and defense.enabled and not client.poisoned:
        client = adversarial_augment(
            client, global_model, defense, derive_seed(seed, STREAM_AUGMENT, cid, round_idx)
        )
    try:
        delta = local_train(
            global_model, client, cfg.training, derive_seed(seed, STREAM_TRAIN, cid, round_idx)
        )
    except NumericError as e:
        raise NumericError(f"client {cid} diverged in round {round_idx}: {e}")
    clipped = clip_update(delta, cfg.privacy.clip_bound)
    logger.debug(
        f"round {round_idx} client {cid}: |delta|={delta.norm():.4f} |clipped|={clipped.norm():.4f}"
    )
    return add_gaussian(clipped, sigma_client, derive_seed(seed, STREAM_NOISE, cid, round_idx))


def run_round(
    global_model: ModelVector,
    shards: Sequence[ClientShard],
    cfg: FederationConfig,
    round_idx: int,
    accountant: AccountantState,
    test: Sequence[FeatureRecord],
    *,
    attack: Optional[AttackConfig] = None,
    defense: Optional[DefenseConfig] = None,
) -> Tuple[ModelVector, RoundReport]:
    if accountant.remaining_rounds(cfg.privacy) <= 0:
        raise BudgetError(f"no privacy budget left for round {round_idx}")

    sigma_eff = spec_sigma_eff(cfg.privacy)
    sigma_client = client_noise_sigma(sigma_eff, cfg.n_clients)
    participants = _draw_participants(shards, cfg, round_idx)

    def update_for(client: ClientShard) -> ModelVector:
        return _client_update(global_model, client, cfg, round_idx, sigma_client, defense)

    if cfg.workers > 1 and len(participants) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
            updates = list(executor.map(update_for, participants))
    else:
        updates = [update_for(client) for client in participants]

    weights = [len(s.records) for s in participants] if cfg.weighted_aggregation else None
    aggregate_update = aggregate(updates, weights)

    topup_sigma = adaptive_topup(len(participants), cfg.n_clients, sigma_eff)
    if topup_sigma > 0:
        logger.info(
            f"round {round_idx}: {len(participants)}/{cfg.n_clients} clients reported, "
            f"adding server noise sigma={topup_sigma:.6f}"
        )
        aggregate_update = add_gaussian(
            aggregate_update, topup_sigma, derive_seed(cfg.master_seed, STREAM_TOPUP, round_idx)
        )

    new_global = global_model + aggregate_update
    if not new_global.is_finite():
        raise NumericError(f"global model became non-finite in round {round_idx}")
    accountant_after = charge_round(accountant, cfg.privacy)

    asr = None
    if attack is not None and attack.enabled:
        asr = attack_success_rate(new_global, test, attack)

    participating_ids = tuple(s.client_id for s in participants)
    report = RoundReport(
        round_index=round_idx,
        participating=participating_ids,
        dropped=tuple(s.client_id for s in shards if s.client_id not in participating_ids),
        aggregate_update=aggregate_update,
        applied_topup_sigma=topup_sigma,
        test_accuracy=accuracy(new_global, test),
        test_hinge_loss=hinge_loss(new_global, test, cfg.training.regularization),
        accountant_after=accountant_after,
        global_after=new_global,
        asr=asr,
    )
    return new_global, report


def run_training(
    cfg: FederationConfig,
    shards: Sequence[ClientShard],
    test: Sequence[FeatureRecord],
    *,
    attack: Optional[AttackConfig] = None,
    defense: Optional[DefenseConfig] = None,
) -> List[RoundReport]:
    """Train from the zero model for cfg.rounds rounds; one report per round"""
    if cfg.rounds == 0:
        return []
    cfg.validate()
    if len(shards) != cfg.n_clients:
        raise ConfigError(f"expected {cfg.n_clients} shards, got {len(shards)}")
    if cfg.privacy.is_private and cfg.privacy.epsilon_round > CLASSICAL_EPSILON_LIMIT:
        logger.warning(
            f"per-round epsilon {cfg.privacy.epsilon_round:.4f} exceeds 1; the Gaussian "
            "calibration is applied outside its classical guarantee"
        )
    if cfg.weighted_aggregation and cfg.privacy.is_private:
        logger.warning(
            "weighted aggregation: the 2C/n sensitivity bound assumes uniform weights, "
            "clients with large shards weigh more than the calibration accounts for"
        )

    global_model = ModelVector.zeros()
    accountant = new_accountant()
    reports = []
    for round_idx in range(1, cfg.rounds + 1):
        global_model, report = run_round(
            global_model,
            shards,
            cfg,
            round_idx,
            accountant,
            test,
            attack=attack,
            defense=defense,
        )
        accountant = report.accountant_after
        reports.append(report)
        logger.info(
            f"round {round_idx}/{cfg.rounds}: accuracy={report.test_accuracy:.4f} "
            f"loss={report.test_hinge_loss:.4f} spent_epsilon={accountant.spent_epsilon:.4f}"
        )
    return reports


def prepare_shards(
    train: Sequence[FeatureRecord],
    n_clients: int,
    seed: int,
    *,
    mode: str = "iid",
    alpha: float = 1.0,
    attack: Optional[AttackConfig] = None,
) -> List[ClientShard]:
    shards = shard(train, n_clients, mode, seed, alpha)
    if attack is not None and attack.enabled:
        shards = poison_clients(shards, attack, seed)
    return shards
