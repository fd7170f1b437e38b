import importlib
import io
import urllib.error

from fedclinic import constants
from helpers import SYNTHETIC_CLEAN, SYNTHETIC_LINES, run_fedclinic_cli, synthetic_bcwd_lines

# fedclinic.commands re-exports the `fetch` function, which shadows the submodule attribute.
fetch_module = importlib.import_module("fedclinic.commands.fetch")


def fake_urlopen(content):
    def urlopen(url):
        return io.BytesIO(content)

    return urlopen


def test_fetch_into_data_dir(monkeypatch, capsys):
    content = ("\n".join(synthetic_bcwd_lines()) + "\n").encode()
    monkeypatch.setattr(fetch_module.urllib.request, "urlopen", fake_urlopen(content))
    assert not run_fedclinic_cli(["fetch"])
    target = constants.FEDCLINIC_DATA_DIR / constants.DATASET_FILENAME
    assert target.read_bytes() == content
    out = capsys.readouterr().out
    assert f"{SYNTHETIC_LINES} records" in out
    assert f"{SYNTHETIC_CLEAN} without missing values" in out


def test_fetch_into_dest(monkeypatch, tmp_path):
    content = b"1000025,5,1,1,1,2,1,3,1,1,2\n"
    monkeypatch.setattr(fetch_module.urllib.request, "urlopen", fake_urlopen(content))
    dest = tmp_path / "elsewhere"
    assert not run_fedclinic_cli(["fetch", "--dest", str(dest), "--url", "http://example.invalid/x"])
    assert (dest / constants.DATASET_FILENAME).read_bytes() == content


def test_fetch_network_failure_is_data_error(monkeypatch, capsys):
    def urlopen(url):
        raise urllib.error.URLError("offline")

    monkeypatch.setattr(fetch_module.urllib.request, "urlopen", urlopen)
    assert run_fedclinic_cli(["fetch"]) == 2
    assert "Unable to download" in capsys.readouterr().err


def test_fetch_rejects_garbage(monkeypatch):
    monkeypatch.setattr(fetch_module.urllib.request, "urlopen", fake_urlopen(b"<html>gone</html>\n"))
    assert run_fedclinic_cli(["fetch"]) == 2
