"""Experiment configuration file (JSON) and its strict validation.

Every key is documented with its default below; unknown keys are rejected and
all defaults are materialized in the parsed object, so nothing downstream
relies on implicit defaults.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from fedclinic.adversary import AttackConfig, DefenseConfig
from fedclinic.constants import (
    DEFAULT_BACKDOOR_OUTPUT_PATH,
    DEFAULT_CLIENT_GRID,
    DEFAULT_CLIP_BOUND,
    DEFAULT_DELTA_TOTAL,
    DEFAULT_EPSILON_GRID,
    DEFAULT_LEARNING_RATE,
    DEFAULT_LOCAL_EPOCHS,
    DEFAULT_OUTPUT_PATH,
    DEFAULT_REGULARIZATION,
    DEFAULT_ROUNDS,
    DEFAULT_SEEDS,
    DEFAULT_TEST_FRACTION,
    LABEL_BENIGN,
    N_FEATURES,
)
from fedclinic.federation import FederationConfig
from fedclinic.privacy import PrivacySpec
from fedclinic.svm import TrainSpec
from fedclinic.util import ConfigError

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ShardingSection(_Section):
    mode: Literal["iid", "label-skew"] = "iid"
    alpha: float = Field(1.0, gt=0)


class PrivacySection(_Section):
    delta_total: float = Field(DEFAULT_DELTA_TOTAL, gt=0, lt=1)
    clip_bound: float = Field(DEFAULT_CLIP_BOUND, gt=0)


class TrainingSection(_Section):
    learning_rate: float = Field(DEFAULT_LEARNING_RATE, gt=0)
    regularization: float = Field(DEFAULT_REGULARIZATION, ge=0)
    local_epochs: int = Field(DEFAULT_LOCAL_EPOCHS, ge=1)
    batch_mode: Literal["full", "single-pass-shuffled"] = "single-pass-shuffled"

    def to_train_spec(self) -> TrainSpec:
        return TrainSpec(
            learning_rate=self.learning_rate,
            regularization=self.regularization,
            local_epochs=self.local_epochs,
            batch_mode=self.batch_mode,
        )


class FederationSection(_Section):
    rounds: int = Field(DEFAULT_ROUNDS, ge=1)
    dropout_probability: float = Field(0.0, ge=0, lt=1)
    master_seed: int = Field(0, ge=0)
    weighted_aggregation: bool = False
    workers: int = Field(1, ge=1)
    privacy: PrivacySection = PrivacySection()
    training: TrainingSection = TrainingSection()


class AttackSection(_Section):
    enabled: bool = False
    poisoned_client_fraction: float = Field(0.25, ge=0, le=1)
    poison_rate_within_client: float = Field(0.5, gt=0, le=1)
    feature_index: int = Field(8, ge=0, le=N_FEATURES - 1)
    trigger_value: float = Field(1.0, ge=0, le=1)
    target_label: Literal[-1, 1] = LABEL_BENIGN

    def to_attack_config(self) -> AttackConfig:
        return AttackConfig(**self.model_dump())


class DefenseSection(_Section):
    enabled: bool = False
    augment_fraction: float = Field(0.5, ge=0, le=1)
    perturbation_magnitude: float = Field(0.1, ge=0)

    def to_defense_config(self) -> DefenseConfig:
        return DefenseConfig(**self.model_dump())


class ExperimentConfig(_Section):
    dataset_path: Path
    output_path: Path = Path(DEFAULT_OUTPUT_PATH)
    backdoor_output_path: Path = Path(DEFAULT_BACKDOOR_OUTPUT_PATH)
    test_fraction: float = Field(DEFAULT_TEST_FRACTION, gt=0, lt=1)
    sharding: ShardingSection = ShardingSection()
    federation: FederationSection = FederationSection()
    attack: AttackSection = AttackSection()
    defense: DefenseSection = DefenseSection()
    epsilon_grid: Tuple[float, ...] = Field(DEFAULT_EPSILON_GRID, min_length=1)
    client_grid: Tuple[int, ...] = Field(DEFAULT_CLIENT_GRID, min_length=1)
    seeds: Tuple[int, ...] = Field(DEFAULT_SEEDS, min_length=1)

    @field_validator("epsilon_grid")
    @classmethod
    def _positive_epsilons(cls, values: Tuple[float, ...]) -> Tuple[float, ...]:
        for eps in values:
            if not eps > 0:
                raise ValueError(f"epsilon values must be positive, got {eps}")
        return values

    @field_validator("client_grid")
    @classmethod
    def _positive_clients(cls, values: Tuple[int, ...]) -> Tuple[int, ...]:
        for n in values:
            if n < 1:
                raise ValueError(f"client counts must be at least 1, got {n}")
        return values

    @field_validator("seeds")
    @classmethod
    def _non_negative_seeds(cls, values: Tuple[int, ...]) -> Tuple[int, ...]:
        for seed in values:
            if seed < 0:
                raise ValueError(f"seeds must be non-negative, got {seed}")
        return values

    def federation_config(
        self, epsilon: float, n_clients: int, master_seed: Optional[int] = None
    ) -> FederationConfig:
        """FederationConfig for one sweep point; epsilon may be inf for the reference run"""
        fed = self.federation
        privacy = PrivacySpec(
            epsilon_total=epsilon,
            delta_total=fed.privacy.delta_total,
            clip_bound=fed.privacy.clip_bound,
            rounds=fed.rounds,
            n_clients=n_clients,
        )
        return FederationConfig(
            n_clients=n_clients,
            rounds=fed.rounds,
            privacy=privacy,
            training=fed.training.to_train_spec(),
            dropout_probability=fed.dropout_probability,
            master_seed=fed.master_seed if master_seed is None else master_seed,
            weighted_aggregation=fed.weighted_aggregation,
            workers=fed.workers,
        ).validate()

    def attack_config(self) -> AttackConfig:
        return self.attack.to_attack_config()

    def defense_config(self) -> DefenseConfig:
        return self.defense.to_defense_config()

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        return self.model_copy(update={k: v for k, v in overrides.items() if v is not None})


def _error_path(error: Dict[str, Any]) -> str:
    return ".".join(str(part) for part in error["loc"]) or "<root>"


def _format_validation_error(path: Path, exc: ValidationError) -> str:
    problems = []
    for error in exc.errors():
        if error["type"] == "extra_forbidden":
            problems.append(f"{_error_path(error)}: unknown key")
        else:
            problems.append(f"{_error_path(error)}: {error['msg']}")
    return f"Invalid config {path}:\n    " + "\n    ".join(problems)


def config_from_dict(data: Dict[str, Any], source: Path = Path("<dict>")) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(source, e), wrap_message=False)


def parse_config(path: Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as config_fh:
            data = json.load(config_fh)
    except OSError as e:
        raise ConfigError(f"Unable to read config {path}: {e.strerror or e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config {path} is not valid JSON: line {e.lineno}: {e.msg}")
    if not isinstance(data, dict):
        raise ConfigError(f"Config {path} must contain a JSON object")

    config = config_from_dict(data, path)
    if not config.dataset_path.is_absolute():
        config = config.model_copy(update={"dataset_path": path.parent / config.dataset_path})
    logger.debug(f"parsed config {path}: {config.model_dump_json()}")
    return config

