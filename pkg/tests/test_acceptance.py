"""Statistical runs over the real UCI file; enable with --run-slow."""

import numpy as np
import pytest  # type: ignore

from fedclinic.commands.backdoor import backdoor_frame, backdoor_study
from fedclinic.commands.common import metrics_frame
from fedclinic.commands.run import sweep_put
from fedclinic.dataset import load_dataset, stratified_split
from fedclinic.experiment_config import config_from_dict
from fedclinic.svm import TrainSpec, accuracy, train_centralized

pytestmark = pytest.mark.slow

SEEDS = list(range(10))
PUT_GRID = [1.0, 5.0, 10.0, 20.0, 28.0, 30.0, 50.0]


@pytest.fixture(scope="module")
def records(canonical_bcwd_path):
    return load_dataset(canonical_bcwd_path)


def final_accuracy_by(frame, key):
    last = frame[frame["round"] == frame["round"].max()]
    return last.groupby(key)["test_accuracy"].mean()


def test_centralized_baseline(records):
    spec = TrainSpec(learning_rate=0.05, regularization=0.001, local_epochs=200)
    scores = []
    for seed in SEEDS:
        train, test = stratified_split(records, 0.2, seed)
        scores.append(accuracy(train_centralized(train, spec, seed), test))
    assert np.mean(scores) >= 0.95


@pytest.fixture(scope="module")
def put_sweep(records, canonical_bcwd_path):
    config = config_from_dict(
        {
            "dataset_path": str(canonical_bcwd_path),
            "epsilon_grid": PUT_GRID,
            "client_grid": [5, 10, 20],
            "seeds": SEEDS,
        }
    )
    return metrics_frame(sweep_put(config, records))


def test_put_saturation(put_sweep):
    means = final_accuracy_by(put_sweep[put_sweep["n_clients"] == 20], "epsilon")
    assert abs(means[28.0] - means[50.0]) <= 0.02


def test_put_monotone_trend(put_sweep):
    for n_clients in (5, 10, 20):
        means = final_accuracy_by(put_sweep[put_sweep["n_clients"] == n_clients], "epsilon")
        drops = [means[hi] - means[lo] for lo, hi in zip(PUT_GRID, PUT_GRID[1:])]
        violations = [d for d in drops if d < 0]
        assert len(violations) <= 1, (n_clients, drops)
        assert all(d >= -0.01 for d in violations), (n_clients, drops)


@pytest.mark.parametrize("epsilon", [20.0, 30.0])
def test_more_clients_help(put_sweep, epsilon):
    means = final_accuracy_by(put_sweep[put_sweep["epsilon"] == epsilon], "n_clients")
    assert means[20] >= means[10] - 0.005
    assert means[10] >= means[5] - 0.005


def test_backdoor_study(records, canonical_bcwd_path):
    config = config_from_dict(
        {
            "dataset_path": str(canonical_bcwd_path),
            "client_grid": [20],
            "seeds": SEEDS,
        }
    )
    frame = backdoor_frame(backdoor_study(config, records=records))
    by_arm = frame.groupby("arm", observed=True)[["test_accuracy", "asr"]].mean()

    assert by_arm.loc["attacked", "asr"] >= 0.8
    assert by_arm.loc["clean", "test_accuracy"] - by_arm.loc["attacked", "test_accuracy"] <= 0.03
    assert by_arm.loc["clean", "test_accuracy"] - by_arm.loc["defended", "test_accuracy"] <= 0.02
    assert by_arm.loc["defended", "asr"] < by_arm.loc["attacked", "asr"]
