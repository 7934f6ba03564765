import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracldg.cli import EXIT_CONFIG, EXIT_INVARIANT, EXIT_NONCONVERGED, EXIT_OK, main
from fracldg.config import ConfigError, RunConfig, parse_config, serialize_config
from fracldg.mms import parse_table
from fracldg.riesz import read_riesz_dump


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# {{{ configuration


def test_minimal_example1_defaults():
    cfg = parse_config("[run]\ncase = example1\n[problem]\nbeta = 1.8\n[space]\nk = 1\nN = 40\n")
    assert cfg.beta == 1.8 and cfg.N == 40 and cfg.k == 1
    assert cfg.dt == pytest.approx(1.0 / 500) and cfg.p == pytest.approx(1 / 50)
    assert cfg.alpha is None and cfg.command == "solve"


def test_range_errors_are_all_reported():
    with pytest.raises(ConfigError) as info:
        parse_config("beta = 2.5\nk = 0\nM_q = 0\n")
    text = str(info.value)
    assert "(1, 2)" in text and "k = 0" in text and "projection" in text and "M_q" in text
    assert len(info.value.problems) == 3


@pytest.mark.parametrize("text, fragment", [
    ("colour = red\n", "unknown key 'colour'"),
    ("[mesh]\nN = 4\n", "unknown section"),
    ("[time]\nN = 4\n", "belongs in [space]"),
    ("N = 4\nN = 8\n", "duplicate key"),
    ("N = four\n", "bad value for N"),
    ("N = 4.5\n", "bad value for N"),
    ("just words\n", "expected 'key = value'"),
    ("dt = 0.3\n", "whole number of steps"),
    ("dt = 0.1\nM_t = 10\n", "either dt or M_t"),
    ("p = 0.3\n", "1/M_q"),
    ("case = example3\nN = 10\n", "multiple of 4"),
    ("command = converge\nlevels = 10\n", "at least two levels"),
    ("command = converge\ncase = custom\n", "manufactured case"),
    ("alpha = 1.5\n", "alpha"),
    ("domain = 1, 0\n", "left < right"),
])
def test_config_errors(text, fragment):
    with pytest.raises(ConfigError, match=None) as info:
        parse_config(text)
    assert fragment in str(info.value)


def test_alternative_step_keys():
    cfg = parse_config("case = example3\ndt = 0.005\np = 0.025\nN = 8\n")
    assert cfg.M_t == 100 and cfg.M_q == 40 and cfg.final_time == 0.5
    assert parse_config("alpha = 0.4\n").alpha == 0.4
    assert parse_config("alpha = distributed\n").alpha is None
    assert parse_config("# comment only\n\nN = 4  # trailing\n").N == 4


configs = st.builds(
    RunConfig,
    command=st.sampled_from(["solve", "stability", "kernels"]),
    case=st.sampled_from(["example1", "example2", "custom"]),
    beta=st.floats(1.01, 1.99),
    b=st.floats(0, 5),
    T=st.one_of(st.none(), st.floats(0.01, 3)),
    M_t=st.integers(1, 1000),
    alpha=st.one_of(st.none(), st.floats(0.01, 1.0)),
    M_q=st.integers(1, 200),
    N=st.integers(2, 200),
    k=st.integers(1, 4),
    sigma=st.floats(0, 10),
    levels=st.lists(st.integers(1, 500), min_size=2, max_size=5).map(tuple),
    gnuplot=st.one_of(st.none(), st.just("plot.dat")),
)


@settings(max_examples=60)
@given(configs)
def test_serialize_round_trip(cfg):
    assert parse_config(serialize_config(cfg)) == cfg


# }}}

# {{{ command line


def test_bad_config_exit_code_and_no_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main([write(tmp_path, "beta = 2.5\ncoefficients = sol.csv\n"), "--outdir", str(out)])
    assert rc == EXIT_CONFIG
    assert "beta" in capsys.readouterr().err
    assert not out.exists()
    assert main([str(tmp_path / "missing.cfg")]) == EXIT_CONFIG


def test_kernels_l1(tmp_path, capsys):
    rc = main([write(tmp_path, "[run]\ncommand = kernels\n[kernels]\nkernel = l1\nn = 3\n[time]\nalpha = 0.5\n")])
    assert rc == EXIT_OK
    assert capsys.readouterr().out.strip() == "1, 0.41421356, 0.31783725"


def test_kernels_lambda(tmp_path, capsys):
    rc = main([write(tmp_path, "command = kernels\nkernel = lambda\nM_q = 2\nM_t = 10\n")])
    assert rc == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "alpha,lambda,w" and len(lines) == 3
    a, lam, w = map(float, lines[1].split(","))
    assert a == 0.25 and lam == pytest.approx(0.5168, abs=5e-5) and w == pytest.approx(0.5 / lam)


@pytest.mark.parametrize("fmt", ["csv", "binary"])
def test_kernels_riesz_dump(tmp_path, fmt):
    cfg = f"command = kernels\nkernel = riesz\nriesz_format = {fmt}\nN = 4\nk = 2\nbeta = 1.3\nriesz_dump = A.out\n"
    assert main([write(tmp_path, cfg), "--outdir", str(tmp_path)]) == EXIT_OK
    N, k, beta, A = read_riesz_dump(tmp_path / "A.out")
    assert (N, k, beta) == (4, 2, 1.3) and A.shape == (12, 12)
    assert not list(tmp_path.glob(".*partial"))


def test_converge_example2(tmp_path, capsys):
    cfg = """
[run]
command = converge
case = example2
[problem]
beta = 1.2
[time]
M_t = 40
M_q = 10
time_term = discrete
[space]
k = 1
[study]
axis = h
levels = 10, 20, 40, 80
[output]
table = conv.csv
gnuplot = conv.dat
"""
    assert main([write(tmp_path, cfg), "--outdir", str(tmp_path)]) == EXIT_OK
    table = parse_table((tmp_path / "conv.csv").read_text())
    assert table.resolutions == (10, 20, 40, 80)
    assert all(1.7 <= o <= 2.3 for o in table.orders[1:])
    assert len((tmp_path / "conv.dat").read_text().splitlines()) == 5
    assert "| N | E_h | order |" in capsys.readouterr().out


def test_solve_writes_coefficients_and_diagnostics(tmp_path, capsys):
    cfg = "case = example1\nbeta = 1.5\nN = 8\nk = 2\nM_t = 10\nM_q = 5\ncoefficients = c.csv\ndiagnostics = d.txt\n"
    assert main([write(tmp_path, cfg), "--outdir", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0].startswith("# N=8, k=2") and lines[1] == "element,c0,c1,c2" and len(lines) == 10
    assert len((tmp_path / "d.txt").read_text().splitlines()) == 10
    assert "L2 error" in capsys.readouterr().out


def test_stability_zero_data(tmp_path, capsys):
    cfg = "command = stability\ncase = custom\ninitial = zero\nN = 6\nM_t = 20\n"
    assert main([write(tmp_path, cfg), "--outdir", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "norms.csv").read_text().splitlines()
    assert rows[0] == "step,t,norm" and len(rows) == 22
    assert all(float(r.split(",")[2]) == 0.0 for r in rows[1:])


def test_stability_bump_is_monotone(tmp_path):
    cfg = "command = stability\ncase = custom\ninitial = bump\ndomain = -2, 2\nN = 16\nM_t = 50\nT = 0.5\n"
    assert main([write(tmp_path, cfg), "--outdir", str(tmp_path)]) == EXIT_OK
    norms = np.loadtxt(tmp_path / "norms.csv", delimiter=",", skiprows=1)[:, 2]
    assert np.all(np.diff(norms) <= 1e-10 * norms[:-1])


def test_nonconvergence_exit_code(tmp_path):
    cfg = ("case = custom\ninitial = bump\ndomain = -2, 2\nN = 8\nM_t = 5\nT = 0.1\n"
           "picard_max_iters = 1\npicard_tol = 1e-15\ndiagnostics = none\n")
    assert main([write(tmp_path, cfg), "--outdir", str(tmp_path)]) == EXIT_NONCONVERGED
    assert not (tmp_path / "solution.csv").exists()


def test_invariant_exit_code(tmp_path, monkeypatch):
    import fracldg.cli as cli
    from fracldg.march import StabilityResult

    monkeypatch.setattr(cli, "stability_run", lambda *a, **k: StabilityResult(np.array([1.0, 2.0]), 1.0, 1e-10))
    cfg = "command = stability\ncase = custom\nN = 4\nM_t = 1\n"
    assert main([write(tmp_path, cfg), "--outdir", str(tmp_path)]) == EXIT_INVARIANT


def test_module_entry_point_reads_stdin(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fracldg", "-"], input="command = kernels\nn = 2\n",
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 0 and proc.stdout.strip() == "1, 0.41421356"


# }}}
