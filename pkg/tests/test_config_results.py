import math

import pytest

from src import config as run_config
from src.cli import build_parser
from src.errors import ParameterError
from src.results import BENCH_COLUMNS, METRIC_COLUMNS, ResultStore, summarize


def parse(*argv):
    return build_parser().parse_args(list(argv))


def test_task_defaults_follow_the_command():
    cfg = run_config.build_run_config(parse("denoise", "--input", "a.png", "--output", "b.png"))
    assert cfg.params.eta == 20.0 and cfg.params.p == 2 and cfg.params.tensor.mode == "edge"

    cfg = run_config.build_run_config(parse("denoise", "--input", "a.png", "--output", "b.png", "--p", "1"))
    assert cfg.params.eta == 2.0 and cfg.params.p == 1

    cfg = run_config.build_run_config(parse("inpaint", "--input", "a.png", "--output", "b.png", "--mask", "m.png"))
    assert cfg.params.eta == 1000.0 and cfg.params.tensor.mode == "coherence"


def test_flags_override_file_which_overrides_defaults(tmp_path):
    toml = tmp_path / "run.toml"
    toml.write_text('[solver]\neta = 5.0\ntheta1 = 3.0\n\n[tensor]\nmode = "coherence"\n\n[bench]\nworkers = 4\n')
    args = parse("denoise", "--input", "a.png", "--output", "b.png", "--config", str(toml), "--eta", "7")
    cfg = run_config.build_run_config(args)
    assert cfg.params.eta == 7.0
    assert cfg.params.theta1 == 3.0
    assert cfg.params.theta2 == 10.0
    assert cfg.params.tensor.mode == "coherence"
    assert cfg.bench["workers"] == 4
    assert cfg.bench["saltpepper"] == [0.2, 0.4, 0.6, 0.8, 0.9]


@pytest.mark.parametrize(
    "text",
    ['[solver]\nlambda = 1.0\n', '[output]\npath = "x"\n', "[solver\neta = 1\n"],
)
def test_bad_config_files(tmp_path, text):
    toml = tmp_path / "bad.toml"
    toml.write_text(text)
    with pytest.raises(ParameterError):
        run_config.load_config_file(toml)


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("TWSO_SEED", "1234")
    assert run_config.build_run_config(parse("synth", "stripe")).seed == 1234
    assert run_config.build_run_config(parse("synth", "stripe", "--seed", "5")).seed == 5
    monkeypatch.setenv("TWSO_SEED", "abc")
    with pytest.raises(ParameterError):
        run_config.default_seed()


def test_param_row_covers_param_columns():
    cfg = run_config.build_run_config(parse("denoise", "--input", "a", "--output", "b"))
    row = cfg.param_row()
    assert set(row) <= set(METRIC_COLUMNS)
    assert row["tensor_mode"] == "edge" and row["contrast"] is None


def test_store_writes_one_header(tmp_path):
    store = ResultStore(tmp_path / "deep" / "metrics.csv")
    store.append_row({"command": "denoise", "psnr": 31.25, "ssim": 0.875, "iterations": 12})
    store.append_row({"command": "inpaint", "psnr": math.inf})
    lines = store.path.read_text().splitlines()
    assert lines[0].split(",") == METRIC_COLUMNS
    assert len(lines) == 3
    rows = store.read_rows()
    assert rows[0]["psnr"] == "31.25"
    assert rows[1]["psnr"] == "inf"
    assert rows[1]["ssim"] == ""


def test_store_rejects_unknown_columns(tmp_path):
    store = ResultStore(tmp_path / "metrics.csv")
    with pytest.raises(ValueError, match="colour"):
        store.append_row({"command": "denoise", "colour": "red"})
    assert store.read_rows() == []


def test_store_path_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("TWSO_METRICS_CSV", str(tmp_path / "env.csv"))
    assert ResultStore().path == tmp_path / "env.csv"
    assert ResultStore(tmp_path / "flag.csv").path == tmp_path / "flag.csv"


def test_summary_rows():
    rows = [
        {"method": "twso", "setting": "noise", "level": 0.01, "psnr": 30.0, "ssim": 0.8, "iterations": 10},
        {"method": "twso", "setting": "noise", "level": 0.01, "psnr": 32.0, "ssim": 0.9, "iterations": 20},
        {"method": "twso", "setting": "noise", "level": 0.02, "psnr": 28.0, "ssim": 0.7, "iterations": 30},
    ]
    summary = summarize(rows)
    assert len(summary) == 2
    first = summary[0]
    assert first["row_type"] == "summary" and first["level"] == 0.01
    assert first["psnr"] == pytest.approx(31.0)
    assert first["psnr_sd"] == pytest.approx(math.sqrt(2.0))
    assert first["ssim"] == pytest.approx(0.85)
    assert first["iterations"] == 15.0
    assert summary[1]["psnr_sd"] == 0.0
    assert set(first) <= set(BENCH_COLUMNS)
