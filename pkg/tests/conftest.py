import os
from pathlib import Path

import pytest  # type: ignore

from fedclinic import constants
from helpers import write_synthetic_bcwd

TESTS_DIR = Path(__file__).parent
CANONICAL_DATASET = TESTS_DIR / "testdata" / constants.DATASET_FILENAME

# read before the autouse fixture clears it for every test
_USER_DATASET = os.environ.get(constants.DATASET_ENV_VAR)


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow",
        action="store_true",
        dest="run_slow",
        default=False,
        help="Also run the slow statistical acceptance runs on the canonical dataset.",
    )


def pytest_configure(config):
    markexpr = getattr(config.option, "markexpr", "")

    if not config.option.run_slow:
        config.option.markexpr = (f"{markexpr} and " if markexpr else "") + "not slow"


@pytest.fixture(autouse=True)
def fedclinic_temp_env(tmp_path, monkeypatch):
    """Points log and data directories at tmp_path and unsets the dataset override"""
    monkeypatch.setattr(constants, "FEDCLINIC_LOG_DIR", tmp_path / "logs")
    monkeypatch.setattr(constants, "FEDCLINIC_DATA_DIR", tmp_path / "data")
    monkeypatch.delenv(constants.DATASET_ENV_VAR, raising=False)


@pytest.fixture(scope="session")
def bcwd_path(tmp_path_factory):
    """Synthetic 699-line file in the UCI format"""
    return write_synthetic_bcwd(tmp_path_factory.mktemp("bcwd") / constants.DATASET_FILENAME)


@pytest.fixture(scope="session")
def canonical_bcwd_path():
    """The real UCI file, from $FEDCLINIC_DATASET or tests/testdata"""
    if _USER_DATASET and Path(_USER_DATASET).is_file():
        return Path(_USER_DATASET)
    if CANONICAL_DATASET.is_file():
        return CANONICAL_DATASET
    pytest.skip(f"canonical dataset not found; set ${constants.DATASET_ENV_VAR}")
