import csv
import json
from importlib import resources

import numpy as np
import pytest

from misspec.cli import (EXIT_CONFIG, EXIT_IO, EXIT_NONCONVERGED, EXIT_OK, ENV_OUT, RESULT_COLUMNS,
                         TABLE1_REFERENCE, csv_text, main, replay)
from misspec.config import COMMANDS, ConfigError, RunConfig, RunManifest, format_config, parse_config
from misspec.plotdata import PlotSeries, emit_plotdata, parse_plotdata, render


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_minimal_config_fills_defaults():
    c = parse_config("command = capacity\nn = 100\n")
    assert c.command == "capacity" and c.n == 100
    assert c.grid is None and c.grid_size() == 1001
    assert c.lam is None and c.eps is None
    assert c.family == "bernoulli" and c.seed == 0


def test_sections_comments_and_auto():
    text = """# comment
[run]
command = misspecified-online   # trailing
[model]
grid = 201
[solver]
lambda = 2.5
eps = auto
n_list = 10, 20
"""
    c = parse_config(text)
    assert c.grid == 201 and c.lam == 2.5 and c.eps is None and c.n_list == (10, 20)


@pytest.mark.parametrize("text,needle", [
    ("command = capacity\nbogus = 1\n", "line 2"),
    ("command = capacity\n[solver]\nfamily = bernoulli\n", "line 3"),
    ("command = capacity\n[nowhere]\n", "line 2"),
    ("command = capacity\nn 5\n", "line 2"),
    ("command = capacity\nn = 5\nn = 6\n", "line 3"),
    ("command = capacity\nn = 2.5\n", "line 2"),
    ("command = capacity\n[solver\n", "line 2"),
])
def test_syntax_errors_carry_line_numbers(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(text)


@pytest.mark.parametrize("text,needle", [
    ("command = capacity\nn = -5\n", "n must be a positive integer"),
    ("command = teleport\n", "command must be one of"),
    ("command = capacity\ntheta_lo = 0.9\n", "phi_lo <= theta_lo < theta_hi"),
    ("command = capacity\nlambda = 0\n", "lambda must be positive"),
    ("n = 5\n", "missing required key 'command'"),
    ("command = capacity\nfamily = multinomial(9)\n", "dimension"),
])
def test_semantic_errors_name_precondition(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(text)


def test_overrides_win():
    c = parse_config("command = capacity\nn = 100\n", {"n": "7", "lambda": "3"})
    assert c.n == 7 and c.lam == 3.0
    with pytest.raises(ConfigError, match="--nope"):
        parse_config("command = capacity\n", {"nope": "1"})


def test_format_config_round_trip():
    c = RunConfig("combined", seed=4, grid=301, lam=2.0, n_list=(5, 6), theta_support=(0, 1),
                  family="multinomial(2)", phi_lo=0.0, phi_hi=1.0)
    assert parse_config(format_config(c)) == c
    assert RunConfig.from_dict(json.loads(json.dumps(c.to_dict()))) == c


def test_manifest_round_trip():
    m = RunManifest(config=RunConfig("nml").to_dict(), version="0.1.0", timestamp="2020-01-01T00:00:00+00:00",
                    rng={"algorithm": "x", "seed": 3}, results=[{"a": 1.5, "b": None}],
                    diagnostics={"k": [1, 2]}, artifacts=["results.csv"])
    assert RunManifest.parse(m.serialize()) == m
    with pytest.raises(ValueError):
        RunManifest.parse('{"junk": 1}')


def test_golden_config_dispatches_misspecified_batch():
    text = resources.files("misspec").joinpath("data/table1_row.cfg").read_text()
    c = parse_config(text)
    assert c.command == "misspecified-batch"
    assert (c.phi_lo, c.phi_hi, c.theta_lo, c.theta_hi, c.n) == (0.0, 1.0, 0.25, 0.75, 1000)


@pytest.mark.slow
def test_golden_config_run(tmp_path):
    cfg = tmp_path / "row.cfg"
    cfg.write_text(resources.files("misspec").joinpath("data/table1_row.cfg").read_text())
    assert main(["misspecified-batch", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    row = _rows(tmp_path / "o" / "results.csv")[0]
    assert abs(float(row["coeff_2n"]) - TABLE1_REFERENCE[1000][1]) <= 0.03


def test_negative_n_exits_2(tmp_path, capsys):
    assert main(["capacity", "--n", "-5", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "n must be a positive integer" in capsys.readouterr().err
    assert not any(tmp_path.iterdir())


def test_unknown_command_and_flag_exit_2(tmp_path):
    assert main(["bogus", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["capacity", "--wat", "1"]) == EXIT_CONFIG


def test_missing_config_file_is_io(tmp_path):
    assert main(["capacity", "--config", str(tmp_path / "none.cfg")]) == EXIT_IO


def test_nonconvergence_exit_3_still_writes(tmp_path):
    out = tmp_path / "o"
    code = main(["misspecified-online", "--n", "20", "--grid", "51", "--max_iter", "1", "--out", str(out)])
    assert code == EXIT_NONCONVERGED
    row = _rows(out / "results.csv")[0]
    assert row["converged"] == "false" and row["iterations"] == "1"


def test_unwritable_output_exits_4(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["nml", "--n", "10", "--out", str(blocker / "sub")]) == EXIT_IO


def test_env_out_default(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_OUT, str(tmp_path / "env"))
    assert main(["nml", "--n", "10"]) == EXIT_OK
    assert (tmp_path / "env" / "results.csv").exists()


def test_results_csv_header_and_format(tmp_path):
    assert main(["capacity", "--n", "10", "--grid", "21", "--out", str(tmp_path)]) == EXIT_OK
    raw = (tmp_path / "results.csv").read_bytes()
    assert b"\r\n" not in raw
    header = raw.decode().splitlines()[0].split(",")
    assert tuple(header[-len(RESULT_COLUMNS):]) == RESULT_COLUMNS
    prior = _rows(tmp_path / "prior.csv") if (tmp_path / "prior.csv").exists() else None
    assert prior is not None and abs(sum(float(r["weight"]) for r in prior) - 1) < 1e-9
    m = RunManifest.parse((tmp_path / "manifest.json").read_text())
    assert set(m.artifacts) == {p.name for p in tmp_path.iterdir()}
    assert not any(p.name.startswith(".") for p in tmp_path.iterdir())


def test_simulate_byte_identical(tmp_path):
    args = ["simulate", "--seed", "1", "--trials", "10", "--n", "20", "--grid", "41", "--mode", "batch"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    for name in ("results.csv",):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_manifest_identical_with_fixed_epoch(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    for d in ("a", "b"):
        assert main(["pnml", "--n", "12", "--out", str(tmp_path / d)]) == EXIT_OK
    a, b = tmp_path / "a", tmp_path / "b"
    for p in a.iterdir():
        if p.name != "manifest.json":
            assert p.read_bytes() == (b / p.name).read_bytes()
    # manifests differ only in the echoed output directory
    ma, mb = (RunManifest.parse((d / "manifest.json").read_text()) for d in (a, b))
    assert ma.config.pop("out") != mb.config.pop("out")
    assert ma == mb


@pytest.mark.parametrize("argv", [
    ["capacity", "--n", "12", "--grid", "31"],
    ["misspecified-batch", "--n", "12", "--grid", "31"],
    ["simulate", "--n", "12", "--grid", "31", "--trials", "50", "--seed", "9", "--mode", "batch"],
    ["add-beta", "--n", "12", "--grid", "101"],
    ["asymptotic", "--n", "500"],
])
def test_replay_recomputes_every_csv(tmp_path, argv):
    first = tmp_path / "first"
    assert main(argv + ["--out", str(first)]) == EXIT_OK
    second = tmp_path / "second"
    assert replay(first / "manifest.json", second) == EXIT_OK
    csvs = sorted(p.name for p in first.glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (first / name).read_bytes() == (second / name).read_bytes()
    # every numeric result appears in the manifest
    m = RunManifest.parse((first / "manifest.json").read_text())
    rows = _rows(first / "results.csv")
    assert len(m.results) == len(rows)
    for mr, cr in zip(m.results, rows):
        if mr["regret_bits"] is not None:
            assert float(cr["regret_bits"]) == mr["regret_bits"]


@pytest.mark.parametrize("command", COMMANDS)
def test_every_command_accepts_small_config(tmp_path, command):
    argv = [command, "--n", "12", "--grid", "31", "--trials", "20", "--out", str(tmp_path)]
    if command == "reproduce-table1":
        pytest.skip("covered by the acceptance suite")
    if command == "combined":
        argv += ["--l", "3"]
    if command == "add-beta":
        # the scenarios need 0.01 and 0.99 on the grid
        argv[argv.index("31")] = "101"
    assert main(argv) in (EXIT_OK, EXIT_NONCONVERGED)
    assert (tmp_path / "results.csv").exists() and (tmp_path / "manifest.json").exists()


def test_table1_rejects_unknown_n(tmp_path):
    assert main(["reproduce-table1", "--n_list", "50", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_csv_text_conventions():
    text = csv_text(("a", "b", "c", "d"), [[0.1, float("nan"), True, None]])
    assert text == "a,b,c,d\n0.1,,true,\n"


def test_plotdata_render_parse_and_empty(tmp_path):
    s = PlotSeries("curve", "regret against n", ("n", "bits"), np.array([[1, 0.5], [2, float("nan")]]))
    title, cols, rows = parse_plotdata(render(s))
    assert title == "regret against n" and cols == ("n", "bits")
    assert rows[0, 1] == 0.5 and np.isnan(rows[1, 1])
    assert emit_plotdata([], tmp_path / "none") == []
    assert not (tmp_path / "none").exists()
    paths = emit_plotdata([s], tmp_path)
    assert [p.name for p in paths] == ["curve.dat"]
    with pytest.raises(ValueError):
        PlotSeries("bad", "t", ("x",), np.ones((2, 2)))


def test_constrained_and_add_beta_plot_files(tmp_path):
    assert main(["constrained", "--n_list", "10, 20", "--grid", "41", "--out", str(tmp_path / "c")]) in (
        EXIT_OK, EXIT_NONCONVERGED)
    title, cols, rows = parse_plotdata((tmp_path / "c" / "regret_vs_n.dat").read_text())
    assert rows.shape[0] == 2 and cols[0] == "n"
    assert main(["add-beta", "--n", "12", "--grid", "101", "--out", str(tmp_path / "b")]) == EXIT_OK
    beta = _rows(tmp_path / "b" / "beta.csv")
    assert len(beta) > 0
    for s in ("a", "b", "c"):
        assert (tmp_path / "b" / f"prior_{s}.dat").exists()
