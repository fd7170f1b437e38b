"""Backdoor poisoning of client shards and the adversarial-training defense."""

import logging
from typing import List, NamedTuple, Sequence

import numpy as np

from fedclinic.constants import LABEL_BENIGN, LABEL_MALIGNANT, N_FEATURES
from fedclinic.dataset import ClientShard, FeatureRecord, to_arrays
from fedclinic.svm import ModelVector, predict_all
from fedclinic.util import STREAM_POISON, ConfigError, derive_seed

logger = logging.getLogger(__name__)

MITOSES_INDEX = 8


class AttackConfig(NamedTuple):
    enabled: bool = False
    poisoned_client_fraction: float = 0.25
    poison_rate_within_client: float = 0.5
    feature_index: int = MITOSES_INDEX
    trigger_value: float = 1.0
    target_label: int = LABEL_BENIGN

    def validate(self) -> "AttackConfig":
        if not 0 <= self.poisoned_client_fraction <= 1:
            raise ConfigError(
                f"poisoned_client_fraction must lie in [0, 1], got {self.poisoned_client_fraction}"
            )
        if not 0 < self.poison_rate_within_client <= 1:
            raise ConfigError(
                f"poison_rate_within_client must lie in (0, 1], got {self.poison_rate_within_client}"
            )
        if not 0 <= self.feature_index < N_FEATURES:
            raise ConfigError(f"feature_index must lie in [0, {N_FEATURES - 1}]")
        if not 0 <= self.trigger_value <= 1:
            raise ConfigError(f"trigger_value must lie in [0, 1], got {self.trigger_value}")
        if self.target_label not in (LABEL_BENIGN, LABEL_MALIGNANT):
            raise ConfigError(f"target_label must be -1 or +1, got {self.target_label}")
        return self


class DefenseConfig(NamedTuple):
    enabled: bool = False
    augment_fraction: float = 0.5
    perturbation_magnitude: float = 0.1

    def validate(self) -> "DefenseConfig":
        if not 0 <= self.augment_fraction <= 1:
            raise ConfigError(f"augment_fraction must lie in [0, 1], got {self.augment_fraction}")
        if not self.perturbation_magnitude >= 0:
            raise ConfigError(
                f"perturbation_magnitude must be non-negative, got {self.perturbation_magnitude}"
            )
        return self


def apply_trigger(x: FeatureRecord, atk: AttackConfig) -> FeatureRecord:
    features = list(x.features)
    features[atk.feature_index] = atk.trigger_value
    return FeatureRecord(tuple(features), x.label)


def poison_shard(shard: ClientShard, atk: AttackConfig, seed: int) -> ClientShard:
    """Stamp the trigger on a seeded subset of records and flip them to the target label"""
    if not atk.enabled:
        raise ValueError("poison_shard called with a disabled attack")
    n_records = len(shard.records)
    n_poison = min(n_records, max(1, int(round(atk.poison_rate_within_client * n_records))))
    rng = np.random.default_rng(seed)
    chosen = set(rng.permutation(n_records)[:n_poison].tolist())

    records = tuple(
        FeatureRecord(apply_trigger(r, atk).features, atk.target_label) if i in chosen else r
        for i, r in enumerate(shard.records)
    )
    logger.debug(f"client {shard.client_id}: poisoned {n_poison} of {n_records} records")
    return ClientShard(shard.client_id, records, poisoned=True)


def poison_clients(
    shards: Sequence[ClientShard], atk: AttackConfig, seed: int
) -> List[ClientShard]:
    """Poison round(fraction·n) clients, at least one when the fraction is positive"""
    if not atk.enabled or atk.poisoned_client_fraction == 0:
        return list(shards)
    n_clients = len(shards)
    n_attackers = min(n_clients, max(1, int(round(atk.poisoned_client_fraction * n_clients))))
    rng = np.random.default_rng(derive_seed(seed, STREAM_POISON))
    attackers = sorted(rng.permutation(n_clients)[:n_attackers].tolist())
    logger.info(f"poisoning clients {attackers}")

    attacker_set = set(attackers)
    return [
        poison_shard(s, atk, derive_seed(seed, STREAM_POISON, s.client_id)) if i in attacker_set else s
        for i, s in enumerate(shards)
    ]


def attack_success_rate(
    model: ModelVector, test: Sequence[FeatureRecord], atk: AttackConfig
) -> float:
    eligible = [r for r in test if r.label != atk.target_label]
    if not eligible:
        raise ValueError("no test record has a label different from the target label")
    X, _ = to_arrays([apply_trigger(r, atk) for r in eligible])
    return float(np.mean(predict_all(model, X) == atk.target_label))


def adversarial_augment(
    shard: ClientShard, model: ModelVector, defense: DefenseConfig, seed: int
) -> ClientShard:
    """Append gradient-sign perturbed copies of a ρ-fraction of the records.

    For the linear hinge loss ∂loss/∂x is −y·w when the margin is below 1 and
    zero otherwise; zero-gradient records are copied unperturbed.
    """
    if not defense.enabled:
        raise ValueError("adversarial_augment called with a disabled defense")
    n_records = len(shard.records)
    n_augment = int(round(defense.augment_fraction * n_records))
    if n_augment == 0:
        return shard

    rng = np.random.default_rng(seed)
    chosen = sorted(rng.permutation(n_records)[:n_augment].tolist())
    copies = []
    for i in chosen:
        record = shard.records[i]
        x = np.asarray(record.features, dtype=np.float64)
        if record.label * (np.dot(model.weights, x) + model.bias) < 1.0:
            grad_x = -record.label * model.weights
            x = np.clip(x + defense.perturbation_magnitude * np.sign(grad_x), 0.0, 1.0)
        copies.append(FeatureRecord(tuple(x.tolist()), record.label))

    return ClientShard(shard.client_id, shard.records + tuple(copies), shard.poisoned)
