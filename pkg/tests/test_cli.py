import json
import math
import shutil
import subprocess
import sys
import time

import pytest

from cosmoent import __version__
from cosmoent.cli import ConfigError, build_fit_config, example_config_path, main, parse_config_lines
from cosmoent.entanglement import report_for


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_report(text):
    values = {}
    for line in text.splitlines():
        if line.startswith("#"):
            continue
        key, value = (p.strip() for p in line.split("=", 1))
        values[key] = value
    return values


# -- report ----------------------------------------------------------------------


def test_report_text_matches_library(capsys):
    code, out, _ = run(capsys, "report")
    assert code == 0
    values = parse_report(out)
    want = report_for(1.0, 1.0, 1.0, 1.0, 1.0)
    assert float(values["e_ab"]) == want.e_ab
    assert float(values["residual"]) == want.residual
    assert values["ab_clamped"] == "False"


def test_report_json(capsys):
    code, out, _ = run(capsys, "report", "--k", "0.5", "--m", "2", "--sigma", "3", "--s", "0.2", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["e_a_abar"] == report_for(0.5, 2.0, 1.0, 3.0, 0.2).e_a_abar


def test_report_massless_and_tiny_expansion(capsys):
    code, out, _ = run(capsys, "report", "--mass", "0", "--json")
    assert code == 0 and json.loads(out)["e_a_abar"] == 0.0
    code, out, _ = run(capsys, "report", "--epsilon", "1e-9", "--json")
    assert code == 0
    assert json.loads(out)["e_ab"] == pytest.approx(math.log(math.cosh(2.0)), abs=1e-12)


def test_report_invalid_parameter_is_usage_error(capsys):
    code, _, err = run(capsys, "report", "--epsilon", "-1")
    assert code == 1 and "epsilon" in err
    code, _, _ = run(capsys, "report", "--k", "abc")
    assert code == 1


def test_version_and_help(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0 and __version__ in out
    code, out, _ = run(capsys, "--help")
    assert code == 0 and "selftest" in out


# -- figure ------------------------------------------------------------------------


def test_figure_to_file(capsys, tmp_path):
    target = tmp_path / "fig.csv"
    code, out, _ = run(capsys, "--out", str(target), "figure", "fig1a", "--count", "4")
    assert code == 0 and out == ""
    raw = target.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().split("\n")
    assert lines[0].startswith("# cosmoent")
    assert lines[1].startswith("sigma_rate,e_ab[k=0.5]")
    assert len(lines) == 2 + 4 + 1


def test_figure_quick_tsv_and_curves(capsys):
    code, out, _ = run(capsys, "--quick", "--format", "tsv", "figure", "fig2a", "--curves", "1,2")
    assert code == 0
    lines = out.split("\n")
    assert lines[1] == "sigma_rate\te_a_abar[k=1.0]\te_a_abar[k=2.0]"
    assert len(lines) == 2 + 8 + 1


def test_figure_errors(capsys):
    assert run(capsys, "figure", "fig9z")[0] == 1
    assert run(capsys, "figure", "fig3c", "--curves", "1")[0] == 1
    assert run(capsys, "figure", "fig1a", "--curves", "a,b")[0] == 1
    assert run(capsys, "figure", "fig1a", "--count", "1")[0] == 1


# -- fit ----------------------------------------------------------------------------


def test_fit_example_recovers_truth(capsys):
    code, out, _ = run(capsys, "fit", "--example")
    assert code == 0
    summary, table = out.split("\n\n")
    values = parse_report(summary)
    assert float(values["epsilon"].split()[0]) == pytest.approx(1.7, rel=1e-3)
    assert float(values["sigma_rate"].split()[0]) == pytest.approx(0.8, rel=1e-3)
    assert values["converged"] == "True" and values["degenerate"] == "False"
    rows = table.strip().split("\n")
    assert rows[0] == "quantity,k,observed,model,residual,weight" and len(rows) == 7


def test_fit_overrides_and_out_file(capsys, tmp_path):
    target = tmp_path / "res.tsv"
    code, out, _ = run(
        capsys, "--out", str(target), "--format", "tsv", "fit", "--example", "--set", "unknown.epsilon=0.5, 5"
    )
    assert code == 0
    assert "rss" in out and "quantity" not in out
    assert target.read_text().startswith("quantity\tk\t")


def test_fit_config_file(capsys, tmp_path):
    cfg = tmp_path / "fit.cfg"
    cfg.write_text(example_config_path().read_text() + "\ngrid = 16\n")
    assert run(capsys, "fit", str(cfg))[0] == 0


def test_fit_unknown_key_is_named(capsys, tmp_path):
    code, _, err = run(capsys, "fit", "--example", "--set", "unknwon.sigma=0.1,10")
    assert code == 1 and "unknwon.sigma" in err


def test_fit_without_observations(capsys, tmp_path):
    cfg = tmp_path / "empty.cfg"
    cfg.write_text("known.mass = 1\nknown.s = 1\nunknown.epsilon = 0.1, 10\nunknown.sigma = 0.1, 10\n")
    code, _, err = run(capsys, "fit", str(cfg))
    assert code == 1 and "no observations" in err


def test_fit_underdetermined_exits_3(capsys, tmp_path):
    cfg = tmp_path / "one.cfg"
    cfg.write_text(
        "known.mass = 1\nknown.s = 1\nunknown.epsilon = 0.1, 10\nunknown.sigma = 0.1, 10\nobs.a = E_AAbar, 1, 1.958e-4\n"
    )
    code, out, err = run(capsys, "fit", str(cfg))
    assert code == 3 and "degenerate" in err


def test_fit_argument_errors(capsys, tmp_path):
    assert run(capsys, "fit")[0] == 1
    assert run(capsys, "fit", str(tmp_path / "missing.cfg"))[0] == 1


def test_config_parsing():
    entries = parse_config_lines(["a = 1  # comment", "", "# only comment", "b=2"], ["a=3"])
    assert entries == {"a": "3", "b": "2"}
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_lines(["no equals sign"])
    with pytest.raises(ConfigError, match="weighting"):
        build_fit_config({"weighting": "loud", "obs.1": "E_AB, 1, 1"})
    with pytest.raises(ConfigError, match="obs.1"):
        build_fit_config({"obs.1": "E_AB, 1"})
    with pytest.raises(ConfigError, match="unknown"):
        build_fit_config({"obs.1": "E_AB, 1, 1"})
    with pytest.raises(ConfigError, match="neither"):
        build_fit_config({"obs.1": "E_AB, 1, 1", "unknown.eps": "0.1, 10"})


def test_relative_weighting_from_config():
    cfg = build_fit_config(
        parse_config_lines(
            ["weighting = relative", "known.m=1", "known.s=1", "known.eps=1", "unknown.sigma=0.1,10", "obs.1 = E_AA, 1, 0.5"]
        )
    )
    assert cfg.problem.observations[0].weight == pytest.approx(4.0)


# -- selftest -----------------------------------------------------------------------


def test_selftest_quick_passes(capsys):
    t0 = time.perf_counter()
    code, out, _ = run(capsys, "--quick", "selftest")
    assert code == 0
    assert time.perf_counter() - t0 < 10.0
    assert "FAIL" not in out and out.strip().endswith("suites passed")


def test_selftest_injected_fault_is_caught(capsys):
    code, out, _ = run(capsys, "--quick", "selftest", "--inject-fault")
    assert code == 2
    assert "FAIL monogamy" in out


def test_selftest_single_suite(capsys):
    code, out, _ = run(capsys, "--quick", "selftest", "--suite", "fock")
    assert code == 0 and "1/1 suites passed" in out


# -- console script ------------------------------------------------------------------


def test_console_script_smoke():
    exe = shutil.which("cosmoent")
    cmd = [exe] if exe else [sys.executable, "-m", "cosmoent.cli"]
    proc = subprocess.run(cmd + ["report", "--json"], capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["k"] == 1.0
    proc = subprocess.run(cmd + ["report", "--sigma", "0"], capture_output=True, text=True, timeout=60)
    assert proc.returncode == 1
