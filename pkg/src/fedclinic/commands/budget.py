from fedclinic.constants import EXIT_CODE_OK, ExitCode
from fedclinic.privacy import PrivacySpec, budget_report


def budget(
    epsilon: float, rounds: int, clients: int, delta: float, clip_bound: float
) -> ExitCode:
    """Print the per-round budget and noise calibration for one configuration"""
    spec = PrivacySpec(
        epsilon_total=epsilon,
        delta_total=delta,
        clip_bound=clip_bound,
        rounds=rounds,
        n_clients=clients,
    )
    print(budget_report(spec))
    return EXIT_CODE_OK
