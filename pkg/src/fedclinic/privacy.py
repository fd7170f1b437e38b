"""Update clipping, Gaussian noise calibration and the (ε, δ) accountant.

Neighbouring datasets differ in one whole client (replace-one), so the L2
sensitivity of the averaged update is 2C/n. Every client adds its own share
of noise such that the server-side average carries the full calibrated
standard deviation. Rounds compose by basic composition.
"""

import logging
import math
from typing import NamedTuple

import numpy as np

from fedclinic.colors import yellow
from fedclinic.constants import DEFAULT_CLIP_BOUND, DEFAULT_DELTA_TOTAL, DEFAULT_ROUNDS
from fedclinic.svm import ModelVector
from fedclinic.util import BudgetError, ConfigError, NumericError, format_real

logger = logging.getLogger(__name__)

CLASSICAL_EPSILON_LIMIT = 1.0


class PrivacySpec(NamedTuple):
    epsilon_total: float
    delta_total: float = DEFAULT_DELTA_TOTAL
    clip_bound: float = DEFAULT_CLIP_BOUND
    rounds: int = DEFAULT_ROUNDS
    n_clients: int = 1

    @property
    def epsilon_round(self) -> float:
        return self.epsilon_total / self.rounds

    @property
    def delta_round(self) -> float:
        return self.delta_total / self.rounds

    @property
    def is_private(self) -> bool:
        return not math.isinf(self.epsilon_total)

    def validate(self) -> "PrivacySpec":
        if not self.epsilon_total > 0:
            raise ConfigError(f"epsilon_total must be positive, got {self.epsilon_total}")
        if not 0 < self.delta_total < 1:
            raise ConfigError(f"delta_total must lie in (0, 1), got {self.delta_total}")
        if not self.clip_bound > 0:
            raise ConfigError(f"clip_bound must be positive, got {self.clip_bound}")
        if self.rounds < 1:
            raise ConfigError(f"rounds must be at least 1, got {self.rounds}")
        if self.n_clients < 1:
            raise ConfigError(f"n_clients must be at least 1, got {self.n_clients}")
        return self


class AccountantState(NamedTuple):
    spent_epsilon: float = 0.0
    spent_delta: float = 0.0
    rounds_charged: int = 0

    def remaining_rounds(self, spec: PrivacySpec) -> int:
        return spec.rounds - self.rounds_charged


def new_accountant() -> AccountantState:
    return AccountantState()


def charge_round(state: AccountantState, spec: PrivacySpec) -> AccountantState:
    if state.rounds_charged >= spec.rounds:
        raise BudgetError(
            f"privacy budget exhausted: all {spec.rounds} rounds of "
            f"epsilon={spec.epsilon_total} have been charged"
        )
    rounds_charged = state.rounds_charged + 1
    return AccountantState(
        spent_epsilon=rounds_charged * spec.epsilon_total / spec.rounds,
        spent_delta=rounds_charged * spec.delta_total / spec.rounds,
        rounds_charged=rounds_charged,
    )


def clip_update(update: ModelVector, clip_bound: float) -> ModelVector:
    """Scale the update so that its joint (weights, bias) L2 norm is at most C"""
    if not clip_bound > 0:
        raise ConfigError(f"clip_bound must be positive, got {clip_bound}")
    if not update.is_finite():
        raise NumericError("cannot clip an update with non-finite entries")

    norm = update.norm()
    if norm <= clip_bound:
        return update

    factor = clip_bound / norm
    clipped = update.scaled(factor)
    # rounding can leave the norm a hair above C
    while clipped.norm() > clip_bound:
        factor = float(np.nextafter(factor, 0.0))
        clipped = update.scaled(factor)
    return clipped


def sensitivity(clip_bound: float, n: int) -> float:
    return 2.0 * clip_bound / n


def calibrate_sigma_eff(
    clip_bound: float, n: int, eps_round: float, delta_round: float
) -> float:
    """Gaussian-mechanism std the averaged update needs for (ε_r, δ_r)-DP per round"""
    if not eps_round > 0:
        raise ConfigError(f"per-round epsilon must be positive, got {eps_round}")
    if not 0 < delta_round < 1:
        raise ConfigError(f"per-round delta must lie in (0, 1), got {delta_round}")
    if not clip_bound > 0:
        raise ConfigError(f"clip_bound must be positive, got {clip_bound}")
    if n < 1:
        raise ConfigError(f"number of clients must be at least 1, got {n}")
    if math.isinf(eps_round):
        return 0.0
    return sensitivity(clip_bound, n) * math.sqrt(2.0 * math.log(1.25 / delta_round)) / eps_round


def client_noise_sigma(sigma_eff: float, n: int) -> float:
    """Per-client std whose n-way average has std sigma_eff"""
    if sigma_eff < 0:
        raise ValueError(f"sigma_eff must be non-negative, got {sigma_eff}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    return sigma_eff * math.sqrt(n)


def spec_sigma_eff(spec: PrivacySpec) -> float:
    return calibrate_sigma_eff(
        spec.clip_bound, spec.n_clients, spec.epsilon_round, spec.delta_round
    )


def add_gaussian(v: ModelVector, sigma: float, seed: int) -> ModelVector:
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return v
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=v.dim + 1)
    return ModelVector.from_array(v.to_array() + noise)


def budget_report(spec: PrivacySpec) -> str:
    spec.validate()
    sigma_eff = spec_sigma_eff(spec)
    lines = [
        f"privacy budget for {spec.n_clients} clients over {spec.rounds} rounds",
        f"    epsilon_total   {format_real(spec.epsilon_total)}",
        f"    delta_total     {spec.delta_total:.3e}",
        f"    epsilon_round   {format_real(spec.epsilon_round)}",
        f"    delta_round     {spec.delta_round:.3e}",
        f"    clip_bound      {format_real(spec.clip_bound)}",
        f"    sensitivity     {format_real(sensitivity(spec.clip_bound, spec.n_clients))}",
        f"    sigma_eff       {format_real(sigma_eff)}",
        f"    sigma_client    {format_real(client_noise_sigma(sigma_eff, spec.n_clients))}",
        "    composition     basic (epsilon_total = rounds x epsilon_round)",
    ]
    if not spec.is_private:
        lines.append("    non-private reference: no noise is added")
    elif spec.epsilon_round > CLASSICAL_EPSILON_LIMIT:
        lines.append(
            yellow(
                f"    caveat: epsilon_round = {format_real(spec.epsilon_round)} exceeds 1; the "
                "classical Gaussian-mechanism proof assumes epsilon <= 1 and the same "
                "calibration is applied without that guarantee"
            )
        )
    return "\n".join(lines)
