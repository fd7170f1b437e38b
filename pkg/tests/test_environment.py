from fedclinic import constants
from helpers import run_fedclinic_cli


def test_cli(capsys):
    assert not run_fedclinic_cli(["environment"])
    captured = capsys.readouterr()
    assert "FEDCLINIC_DATASET" in captured.out
    assert "FEDCLINIC_LOG_DIR" in captured.out
    assert "FEDCLINIC_DATA_DIR" in captured.out
    assert "Environment variables (set by user):" in captured.out
    assert "Derived values (computed by fedclinic):" in captured.out


def test_cli_with_args(capsys):
    assert not run_fedclinic_cli(["environment", "--value", "FEDCLINIC_LOG_DIR"])
    assert not run_fedclinic_cli(["environment", "--value", "FEDCLINIC_DATA_DIR"])
    assert not run_fedclinic_cli(["environment", "--value", "FEDCLINIC_DATASET"])
    captured = capsys.readouterr()
    lines = captured.out.splitlines()
    assert lines[0] == str(constants.FEDCLINIC_LOG_DIR)
    assert lines[1] == str(constants.FEDCLINIC_DATA_DIR)
    assert lines[2] == str(constants.FEDCLINIC_DATA_DIR / constants.DATASET_FILENAME)

    assert run_fedclinic_cli(["environment", "--value", "SSS"])
    captured = capsys.readouterr()
    assert "Variable not found." in captured.err


def test_dataset_variable_follows_environment(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv(constants.DATASET_ENV_VAR, str(tmp_path / "mine.data"))
    assert not run_fedclinic_cli(["environment", "--value", "FEDCLINIC_DATASET"])
    assert capsys.readouterr().out.strip() == str(tmp_path / "mine.data")
