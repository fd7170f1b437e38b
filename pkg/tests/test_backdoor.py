import pandas as pd
import pytest  # type: ignore

from fedclinic.adversary import AttackConfig
from fedclinic.commands.backdoor import ARMS, arm_configs, backdoor_frame, backdoor_study
from fedclinic.experiment_config import config_from_dict, parse_config
from helpers import FAST_EXPERIMENT, run_fedclinic_cli, write_config


def backdoor_config(tmp_path, bcwd_path, **overrides):
    base = dict(FAST_EXPERIMENT, seeds=[0], federation={"rounds": 5, "training": {"local_epochs": 2}})
    return write_config(tmp_path / "config.json", bcwd_path, base=base, **overrides)


def test_arm_configs_force_attack_and_defense(tmp_path, bcwd_path):
    config = parse_config(backdoor_config(tmp_path, bcwd_path))
    clean_attack, clean_defense = arm_configs(config, "clean")
    attacked, attacked_defense = arm_configs(config, "attacked")
    defended_attack, defended = arm_configs(config, "defended")
    assert not clean_attack.enabled and not clean_defense.enabled
    assert attacked == AttackConfig(enabled=True) and not attacked_defense.enabled
    assert defended_attack.enabled and defended.enabled


def test_backdoor_study_rows(tmp_path, bcwd_path):
    config = parse_config(backdoor_config(tmp_path, bcwd_path))
    rows = backdoor_study(config)
    assert [r.arm for r in rows] == list(ARMS)
    by_arm = {r.arm: r for r in rows}
    assert all(0.0 <= r.asr <= 1.0 for r in rows)
    assert by_arm["attacked"].asr >= by_arm["clean"].asr


def test_backdoor_cli_writes_csv(tmp_path, bcwd_path, capsys):
    config = backdoor_config(tmp_path, bcwd_path, seeds=[0, 1])
    output = tmp_path / "backdoor.csv"
    assert not run_fedclinic_cli(
        ["backdoor", "--config", str(config), "--output", str(output), "--epsilon", "50"]
    )
    lines = output.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "n_clients,seed,arm,test_accuracy,asr"
    frame = pd.read_csv(output)
    assert list(frame["arm"]) == ["clean", "attacked", "defended"] * 2
    assert list(frame["seed"]) == [0, 0, 0, 1, 1, 1]
    assert "wrote 6 rows" in capsys.readouterr().out


def test_backdoor_cli_is_deterministic(tmp_path, bcwd_path):
    config = backdoor_config(tmp_path, bcwd_path)
    outputs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for output in outputs:
        assert not run_fedclinic_cli(["backdoor", "--config", str(config), "--output", str(output)])
    assert outputs[0].read_bytes() == outputs[1].read_bytes()


def test_backdoor_cli_default_output(tmp_path, bcwd_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    config = backdoor_config(tmp_path, bcwd_path)
    assert not run_fedclinic_cli(["backdoor", "--config", str(config)])
    assert (tmp_path / "backdoor_study.csv").exists()


def test_backdoor_cli_uses_its_own_output_key(tmp_path, bcwd_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    config = backdoor_config(
        tmp_path, bcwd_path, output_path="sweep.csv", backdoor_output_path="study.csv"
    )
    assert not run_fedclinic_cli(["backdoor", "--config", str(config)])
    assert (tmp_path / "study.csv").exists()
    assert not (tmp_path / "sweep.csv").exists()
    assert not (tmp_path / "backdoor_study.csv").exists()


def test_backdoor_cli_rejects_bad_epsilon(tmp_path, bcwd_path, capsys):
    config = backdoor_config(tmp_path, bcwd_path)
    with pytest.raises(SystemExit) as excinfo:
        run_fedclinic_cli(["backdoor", "--config", str(config), "--epsilon", "-3"])
    assert excinfo.value.code == 2
    assert "epsilon must be positive" in capsys.readouterr().err


def test_defense_lowers_attack_success_on_synthetic_data(bcwd_path):
    config = config_from_dict(
        {"dataset_path": str(bcwd_path), "client_grid": [10], "seeds": list(range(10))}
    )
    frame = backdoor_frame(backdoor_study(config))
    by_arm = frame.groupby("arm", observed=True)[["test_accuracy", "asr"]].mean()

    assert by_arm.loc["clean", "asr"] < by_arm.loc["attacked", "asr"]
    assert by_arm.loc["defended", "asr"] < by_arm.loc["attacked", "asr"]
    assert by_arm.loc["clean", "test_accuracy"] - by_arm.loc["defended", "test_accuracy"] <= 0.02
