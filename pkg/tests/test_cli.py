"""CLI subcommands, exit codes, and console-script wiring."""

import json
import shutil
import subprocess
import sys

import pytest

from featgate.cli import main
from featgate.ingest import export_csv, load_aligned_csv
from featgate.synth import planted_signal_dataset

CFG = """\
split:
  train_end: 358
  test_len: 200
ga:
  generations: 3
  population: 6
  parents_kept: 2
experiment:
  runs: 2
  base_seed: 5
  pfi_repeats: 3
"""


@pytest.fixture(scope="module")
def aligned_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "aligned.csv"
    export_csv(planted_signal_dataset(7), path)
    return path


@pytest.fixture(scope="module")
def cfg_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "cfg.yaml"
    path.write_text(CFG)
    return path


@pytest.fixture(scope="module")
def results(aligned_csv, cfg_file, tmp_path_factory):
    out = tmp_path_factory.mktemp("results")
    code = main(["run", "--config", str(cfg_file), "--data", str(aligned_csv),
                 "--out", str(out)])
    assert code == 0
    return out


# -- ingest ------------------------------------------------------------------

def test_ingest_fixture_csvs(fixtures_dir, tmp_path, capsys):
    code = main(["ingest",
                 "--prices", str(fixtures_dir / "btc_prices.csv"),
                 "--covid", str(fixtures_dir / "covid_indicators.csv"),
                 "--out", str(tmp_path)])
    assert code == 0
    d = load_aligned_csv(tmp_path / "aligned.csv")
    assert len(d) == 558
    assert len(d.series) == 48  # 3 base series + 45 indicators
    assert "wrote" in capsys.readouterr().out


def test_ingest_prices_only(fixtures_dir, tmp_path):
    code = main(["ingest",
                 "--prices", str(fixtures_dir / "btc_prices.csv"),
                 "--out", str(tmp_path)])
    assert code == 0
    assert len(load_aligned_csv(tmp_path / "aligned.csv").series) == 3


def test_ingest_without_prices_is_config_error(tmp_path, capsys):
    assert main(["ingest", "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_ingest_missing_file_is_io_error(tmp_path, capsys):
    code = main(["ingest", "--prices", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path)])
    assert code == 4
    assert "io error" in capsys.readouterr().err


def test_malformed_yaml_is_config_error(fixtures_dir, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("data: [unclosed\n")
    code = main(["ingest", "--config", str(bad),
                 "--prices", str(fixtures_dir / "btc_prices.csv"),
                 "--out", str(tmp_path)])
    assert code == 2


# -- run ---------------------------------------------------------------------

def test_run_writes_report_and_plots(results, capsys):
    assert (results / "report.json").exists()
    assert (results / "hist_r2.svg").exists()
    assert len(list((results / "runs").glob("*.json"))) == 4
    assert len(list((results / "models").glob("*.json"))) == 4


def test_run_single_arm_skips_report(aligned_csv, cfg_file, tmp_path, capsys):
    code = main(["run", "--config", str(cfg_file), "--data", str(aligned_csv),
                 "--arm", "Baseline", "--out", str(tmp_path)])
    assert code == 0
    assert not (tmp_path / "report.json").exists()
    out = capsys.readouterr().out
    assert "Baseline champion" in out and "Augmented" not in out


def test_run_with_holdout(aligned_csv, cfg_file, tmp_path):
    code = main(["run", "--config", str(cfg_file), "--data", str(aligned_csv),
                 "--holdout", "100", "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["config"]["holdout"] == 100


def test_run_rejects_bad_holdout(aligned_csv, cfg_file, tmp_path):
    code = main(["run", "--config", str(cfg_file), "--data", str(aligned_csv),
                 "--holdout", "0", "--out", str(tmp_path)])
    assert code == 2


def test_run_overrides_runs_and_seed(aligned_csv, cfg_file, tmp_path):
    code = main(["run", "--config", str(cfg_file), "--data", str(aligned_csv),
                 "--runs", "2", "--seed", "9", "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "runs" / "Baseline_00.json").read_text())
    assert doc["seed"] == 9


def test_run_bad_split_is_data_error(aligned_csv, tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("split:\n  train_end: 9000\n")
    code = main(["run", "--config", str(cfg), "--data", str(aligned_csv),
                 "--out", str(tmp_path)])
    assert code == 3


# -- report ------------------------------------------------------------------

def test_report_rebuild_is_byte_identical(results, tmp_path, capsys):
    code = main(["report", "--in", str(results), "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "report.json").read_bytes() == \
        (results / "report.json").read_bytes()
    assert len(list((tmp_path / "models").glob("*.json"))) == 4
    assert (tmp_path / "hist_rmse.svg").exists()


def test_report_without_runs_is_data_error(tmp_path, capsys):
    assert main(["report", "--in", str(tmp_path), "--out", str(tmp_path)]) == 3


# -- pfi ---------------------------------------------------------------------

def test_pfi_uses_sidecar_record(results, aligned_csv, capsys):
    model = results / "models" / "Baseline_00.json"
    code = main(["pfi", "--model", str(model), "--data", str(aligned_csv)])
    assert code == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0].split() == ["feature", "r2_drop"]
    n_feats = len(json.loads(model.read_text())["feature_names"])
    assert len(lines) == 1 + n_feats


def test_pfi_explicit_features(results, aligned_csv, capsys):
    model = results / "models" / "Baseline_00.json"
    doc = json.loads((results / "runs" / "Baseline_00.json").read_text())
    feats = ",".join(doc["optim"]["decoded_features"])
    code = main(["pfi", "--model", str(model), "--data", str(aligned_csv),
                 "--features", feats, "--repeats", "2"])
    assert code == 0


def test_pfi_without_sidecar_is_config_error(results, aligned_csv, tmp_path,
                                             capsys):
    orphan = tmp_path / "model.json"
    shutil.copy(results / "models" / "Baseline_00.json", orphan)
    code = main(["pfi", "--model", str(orphan), "--data", str(aligned_csv)])
    assert code == 2
    assert "--features" in capsys.readouterr().err


def test_pfi_wrong_features_is_data_error(results, aligned_csv, capsys):
    model = results / "models" / "Baseline_00.json"
    code = main(["pfi", "--model", str(model), "--data", str(aligned_csv),
                 "--features", "Returns|0|7|15,DOY_cos|3|3|4"])
    assert code == 3


# -- wiring ------------------------------------------------------------------

def test_bad_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "featgate.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "ingest" in proc.stdout and "pfi" in proc.stdout


def test_console_script_installed():
    exe = shutil.which("featgate")
    assert exe, "featgate console script not on PATH"
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
