import json

import pytest

from meyer_ns.cli import build_parser, main
from meyer_ns.config import ConfigError, RunConfig, default_config, load_config, parse_config


def test_defaults_match_dataclass():
    assert default_config() == RunConfig()


def test_parse_overrides_and_header():
    cfg = parse_config("M = 64\nm = 2  # inline comment\nlambda = 2\n")
    assert (cfg.M, cfg.m, cfg.lam) == (64, 2.0, 2)
    assert parse_config("[run]\nM = 32\n").M == 32


def test_keys_are_case_sensitive():
    cfg = parse_config("M = 64\n")
    assert cfg.M == 64 and cfg.m == 1.0
    assert parse_config("m = 3\n").M == 128


@pytest.mark.parametrize("text, fragment", [
    ("M = 8\n", "cfg:1: M must"),
    ("M = 96\n", "power of two"),
    ("n = 2\np = 2\n", "cfg:2: p = 2.0 must exceed"),
    ("\n\nbogus = 1\n", "cfg:3"),
    ("n = 2\nM = abc\n", "cfg:2"),
    ("n = 2\nthis line has no separator\n", "cfg:2"),
    ("ramp = cubic\n", "ramp"),
    ("lambda = 3\n", "lambda"),
])
def test_bad_config_lines(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text, "cfg")


def test_load_config_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("M = 64\nseed = 4\n")
    cfg = load_config(path, seed=9, M=None)
    assert (cfg.M, cfg.seed) == (64, 9)
    with pytest.raises(ConfigError, match="command line"):
        load_config(path, M=12)


def test_parser_rejects_unknown_choices(capsys):
    ap = build_parser()
    with pytest.raises(SystemExit) as exc:
        ap.parse_args(["verify-estimates", "--estimate", "nope"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        ap.parse_args(["solve", "--preset", "vortex"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        ap.parse_args([])


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("M = 8\n")
    assert main(["verify-basis", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["verify-basis", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_verify_basis_reports_are_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify-basis", "--resolution", "32", "--out", str(a)]) == 0
    assert main(["verify-basis", "--resolution", "32", "--out", str(b)]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "checks.csv").read_bytes() == (b / "checks.csv").read_bytes()
    report = json.loads((a / "report.json").read_text())
    assert report["passed"] and report["config"]["M"] == 32


def test_broken_ramp_fails(tmp_path):
    cfg = tmp_path / "square.cfg"
    cfg.write_text("ramp = square\nM = 32\n")
    assert main(["verify-basis", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    failed = {r["check"] for r in report["rows"] if not r["passed"]}
    assert "ramp_symmetry" in failed and any(c.startswith("gram") for c in failed)


def test_solve_writes_tables(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("M = 32\nsamples_per_shell = 4\n")
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--out", str(out), "--lambda", "2"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["checks"]["converged"] and report["checks"]["scaling_ok"]
    inc = (out / "increments.csv").read_text().splitlines()
    assert inc[0] == "iteration,increment,ratio" and len(inc) == 1 + len(report["state"]["increments"])
    assert (out / "blocks.csv").read_text().startswith("block,shell,level,value")


def test_verify_single_estimate(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("M = 32\nembedding_count = 2\n")
    out = tmp_path / "o"
    code = main(["verify-estimates", "--config", str(cfg), "--estimate", "low-frequency",
                 "--out", str(out)])
    report = json.loads((out / "report.json").read_text())
    assert [r["estimate"] for r in report["rows"]] == ["low-frequency"]
    assert code == (0 if report["passed"] else 1)
    assert (out / "estimates.csv").read_text().startswith("estimate,kind,constant")
