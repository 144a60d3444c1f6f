import csv
import json

import numpy as np
import pytest

from gofbt.cli import main, read_pit_csv
from gofbt.diagnostics import cov_curve


@pytest.fixture(autouse=True)
def cache_dir(tmp_path_factory, monkeypatch):
    monkeypatch.setenv("GOFBT_CACHE_DIR", str(tmp_path_factory.getbasetemp() / "cli_cache"))
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")


def data_rows(path):
    with open(path) as fh:
        return list(csv.reader(ln for ln in fh if not ln.startswith("#")))


def test_fig1_matches_library(tmp_path):
    assert main(["experiment", "fig1", "--out-dir", str(tmp_path)]) == 0
    rows = data_rows(tmp_path / "fig1.csv")
    expected = cov_curve(1, 200)
    assert len(rows) - 1 == len(expected)
    for row, (n, c) in zip(rows[1:], expected):
        assert int(row[0]) == n and float(row[1]) == pytest.approx(c, rel=1e-12)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest["outputs"]) >= {"fig1.csv", "fig1.svg", "fig1_files.json"}
    assert manifest["seed"] is not None
    assert f"seed: {manifest['seed']}" in (tmp_path / "fig1.csv").read_text()
    assert str(manifest["seed"]) in (tmp_path / "fig1.svg").read_text()


def test_table3_matrix(tmp_path, capsys):
    assert main(["experiment", "table3", "--out-dir", str(tmp_path)]) == 0
    verdicts = {}
    for row in data_rows(tmp_path / "table3.csv")[1:]:
        verdicts.setdefault(row[0], []).append(row[4][0].upper())
    assert verdicts == {"ad": list("RRRAA"), "ad_asym": list("RRRRA"), "ks": list("RRRAA")}


def test_unknown_figure_lists_valid_ids(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["experiment", "fig6", "--out-dir", str(tmp_path)])
    assert info.value.code == 2
    err = capsys.readouterr().err
    assert "fig1" in err and "table3" in err


def test_malformed_pit_csv(tmp_path, capsys):
    path = tmp_path / "p.csv"
    path.write_text("pit\n0.2\nabc\n")
    assert main(["stat", str(path)]) == 2
    assert "line 3" in capsys.readouterr().err
    path.write_text("0.2\n1.0\n")
    assert main(["stat", str(path)]) == 2


def test_read_pit_csv_comments(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("# generated\npit\n\n0.25\n0.75\n")
    np.testing.assert_array_equal(read_pit_csv(str(path)), [0.25, 0.75])


def test_stat_single_value(tmp_path, capsys):
    path = tmp_path / "p.csv"
    path.write_text("0.5\n")
    assert main(["stat", str(path), "--test", "ks"]) == 0
    out = capsys.readouterr().out
    assert "threshold=0.975" in out and "ACCEPT" in out.upper()


def test_stat_near_uniform_accepts(tmp_path, capsys):
    path = tmp_path / "p.csv"
    path.write_text("\n".join(f"{(i + 0.5) / 20}" for i in range(20)) + "\n")
    assert main(["stat", str(path), "--test", "ad", "--confidence", "0.001", "--null-trials", "20000"]) == 0
    assert "ACCEPT" in capsys.readouterr().out.upper()


def test_stat_table_and_out_dir(tmp_path, capsys):
    path = tmp_path / "p.csv"
    path.write_text("0.01\n0.02\n0.99\n")
    out = tmp_path / "out"
    assert main(["stat", str(path), "--table", "--out-dir", str(out)]) == 0
    report = json.loads((out / "stat.json").read_text())
    assert report["tests"]["ad"]["source"] == "asymptotic AD table"
    assert report["cov"]["warn"] is True
    assert main(["stat", str(path), "--table", "--test", "ks"]) == 2


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 5, "n": 10}))
    out = tmp_path / "o"
    assert main(["cov", "--config", str(cfg), "--n", "30", "--out-dir", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["n"] == 30 and manifest["config_sources"]["n"] == "flag"
    assert manifest["config"]["seed"] == 5 and manifest["config_sources"]["seed"] == "config"
    assert manifest["config_sources"]["confidence"] == "default"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["cov", "--config", str(cfg), "--out-dir", str(out)]) == 2


def test_rerun_is_byte_identical(tmp_path):
    args = ["experiment", "fig3", "--trials", "1000", "--null-trials", "5000"]
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--out-dir", str(tmp_path / "b")]) == 0
    for name in ("fig3a.csv", "fig3b.csv", "fig3a.svg", "fig3b.svg", "fig3_files.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    a, b = (json.loads((tmp_path / d / "manifest.json").read_text()) for d in "ab")
    for m in (a, b):
        m["config"].pop("out_dir")
    assert a == b


def test_backtest_and_simulate(tmp_path):
    assert main(["backtest", "--scenarios", "500", "--out-dir", str(tmp_path / "bt")]) == 0
    summary = json.loads((tmp_path / "bt" / "backtest.json").read_text())
    assert summary["n"] >= 2 and summary["metadata"]["seed"] == 0
    assert main(["simulate", "--n", "10", "--horizon", "0.1", "--out-dir", str(tmp_path / "sim")]) == 0
    rows = data_rows(tmp_path / "sim" / "simulate.csv")
    assert len(rows) > 1


def test_failed_run_leaves_no_partial_output(tmp_path):
    out = tmp_path / "o"
    assert main(["backtest", "--dates", "1990-01-05", "--out-dir", str(out)]) != 0
    assert not (out / "manifest.json").exists()
    assert not any(p.suffix == ".csv" for p in out.rglob("*"))


def test_stat_on_fixture_pits_rejects(tmp_path, capsys):
    from gofbt.backtest import BacktestConfig, run_backtest
    from gofbt.fixtures import FORECAST_DATES, load_euribor_fixture
    out = run_backtest(load_euribor_fixture(), BacktestConfig(backtest_dates=FORECAST_DATES))
    path = tmp_path / "pits.csv"
    path.write_text("pit\n" + "\n".join(repr(float(p)) for p in out.pits) + "\n")
    assert main(["stat", str(path), "--test", "ad"]) == 0
    assert "REJECT" in capsys.readouterr().out.upper()


def test_table3_on_user_data(tmp_path):
    from gofbt.fixtures import FORECAST_DATES, load_euribor_fixture
    data = tmp_path / "euribor.csv"
    load_euribor_fixture().to_csv(data)
    assert main(["experiment", "table3", "--data", str(data), "--dates", ",".join(FORECAST_DATES),
                 "--out-dir", str(tmp_path / "o")]) == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert str(data) in manifest["inputs"]
    rows = data_rows(tmp_path / "o" / "table3.csv")[1:]
    assert [r[4][0].upper() for r in rows if r[0] == "ad_asym"] == list("RRRRA")


def test_every_output_carries_seed(tmp_path):
    out = tmp_path / "o"
    assert main(["experiment", "fig8", "--trials", "1000", "--scenarios", "200", "--seed", "77",
                 "--null-trials", "5000", "--out-dir", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 77
    for name in manifest["outputs"]:
        text = (out / name).read_text()
        assert "77" in text, name
