import json
import re
import subprocess
import sys
from pathlib import Path

import pytest

from risisac import __version__
from risisac.cli import EXIT_FAILED, EXIT_INVALID, EXIT_OK, main
from risisac.channels import ChannelSet

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def fast_config(tmp_path):
    text = (CONFIGS / "desk.yaml").read_text()
    if "max_outer" in text:
        text = re.sub(r"max_outer: .*", "max_outer: 5", text)
    else:
        text = text.replace("system:\n", "system:\n  max_outer: 5\n", 1)
    path = tmp_path / "fast.yaml"
    path.write_text(text)
    return path


def test_run_prints_report(capsys, fast_config, tmp_path):
    dump = tmp_path / "channels.npz"
    assert main(["run", "--config", str(fast_config), "--seed", "3", "--dump-channels", str(dump)]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["method"] == "proposed"
    assert report["termination"] in ("converged", "max-iters")
    assert report["channel_digest"] == ChannelSet.load(dump).digest()


def test_run_writes_out_file(fast_config, tmp_path):
    out = tmp_path / "report.json"
    assert main(["run", "--config", str(fast_config), "--method", "no-ris", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["method"] == "no-ris"


def test_run_infeasible_exit_code(capsys, fast_config, tmp_path):
    text = re.sub(r"radar_snr_db: .*", "radar_snr_db: 150.0", fast_config.read_text())
    path = tmp_path / "hard.yaml"
    path.write_text(text)
    assert main(["run", "--config", str(path)]) == EXIT_FAILED
    assert json.loads(capsys.readouterr().out)["termination"] == "infeasible"


def test_invalid_config_exit_code(capsys, tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(re.sub(r"power_w: .*", "power_w: 0.0", (CONFIGS / "desk.yaml").read_text()))
    assert main(["run", "--config", str(path)]) == EXIT_INVALID
    assert "power budget must be positive" in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == EXIT_INVALID


@pytest.mark.parametrize("argv", [
    ["sweep", "x.yaml", "--method", "proposed,oracle"],
    ["sweep", "x.yaml", "--trials", "0"],
    ["run", "--seed", "-1"],
    ["frobnicate"],
])
def test_usage_errors_exit_one(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == EXIT_INVALID


def test_sweep_to_csv(fast_config, tmp_path):
    spec = tmp_path / "spec.yaml"
    spec.write_text(f"param: power\nvalues: [5, 25]\ntrials: 2\nbase: {fast_config.name}\n")
    out = tmp_path / "out.csv"
    assert main(["sweep", str(spec), "--method", "proposed,no-ris", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("method,param,value")
    assert len(lines) == 5


def test_sweep_overrides(capsys, fast_config, tmp_path):
    spec = tmp_path / "spec.yaml"
    spec.write_text("param: power\nvalues: [5]\ntrials: 4\n")
    assert main(["sweep", str(spec), "--config", str(fast_config), "--trials", "1", "--seed", "2",
                 "--method", "no-ris"]) == EXIT_OK
    rows = capsys.readouterr().out.splitlines()
    assert rows[1].split(",")[5] == "1"


def test_sweep_all_failed_exit_code(fast_config, tmp_path):
    spec = tmp_path / "spec.yaml"
    spec.write_text(f"param: radar_snr\nvalues: [150]\ntrials: 2\nmethods: [no-ris]\nbase: {fast_config.name}\n")
    assert main(["sweep", str(spec)]) == EXIT_FAILED


def test_sweep_invalid_spec(tmp_path):
    spec = tmp_path / "spec.yaml"
    spec.write_text("param: power\nvalues: [15, 5]\n")
    assert main(["sweep", str(spec)]) == EXIT_INVALID


def test_check_passes(capsys):
    assert main(["check", "--seed", "0"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8 and all(line.startswith("PASS") for line in lines)


def test_module_entry_point_version():
    out = subprocess.run([sys.executable, "-m", "risisac", "--version"], capture_output=True, text=True, check=True)
    assert __version__ in out.stdout
