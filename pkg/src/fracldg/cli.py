"""Command-line front end: ``fracldg CONFIG [--outdir DIR]``.

Exit status: 0 success, 2 configuration error, 3 nonlinear solver did not
converge, 4 invariant violation (a stability run whose norm grew).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .basis import Mesh1D
from .config import ConfigError, RunConfig, parse_config
from .fractional import l1_coefficients, single_order_rule, distributed_rule
from .ldg import PDEProblem
from .march import NonconvergenceError, Solver, SolverConfig, stability_run
from .mms import (
    StudySettings,
    case_library,
    convergence_study,
    derive_source,
    emit_table,
    gnuplot_data,
)
from .riesz import assemble_riesz_matrix, write_riesz_binary, write_riesz_csv

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_INVARIANT = 0, 2, 3, 4

log = logging.getLogger("fracldg")

_FLUX = {
    "burgers": (lambda v: 0.5 * v**2, lambda v: v),
    "quartic": (lambda v: 0.5 * v**4 + v, lambda v: 2.0 * v**3 + 1.0),
    "linear": (lambda v: 1.0 * v, lambda v: np.ones_like(v)),
    "none": (lambda v: np.zeros_like(v), lambda v: np.zeros_like(v)),
}


def _initial(name: str, a: float, b: float):
    if name == "zero":
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    if name == "bump":
        return lambda x: np.where(np.abs(x) <= 1.0, (1.0 - np.asarray(x) ** 2) ** 4 / 10.0, 0.0)
    return lambda x: np.sin(np.pi * (np.asarray(x) - a) / (b - a))


def custom_problem(cfg: RunConfig) -> PDEProblem:
    F, dF = _FLUX[cfg.flux]
    s = 1.0 if cfg.diffusion == "linear" else 0.0
    a, b = cfg.domain
    return PDEProblem(
        mesh=Mesh1D(a, b, cfg.N), F=F, dF=dF,
        S=lambda v: np.full_like(np.asarray(v, dtype=float), s),
        b=cfg.b, beta=cfg.beta, g=None, V0=_initial(cfg.initial, a, b),
        phi=lambda v: s * np.asarray(v, dtype=float),
        sqrt_S=lambda v: np.full_like(np.asarray(v, dtype=float), s),
    )


def solver_config(cfg: RunConfig, diagnostics: Path | None = None) -> SolverConfig:
    return SolverConfig.create(
        cfg.final_time, cfg.M_t, alpha=cfg.alpha, M_q=cfg.M_q, sigma=cfg.sigma,
        quad_points=cfg.quad_points, picard_tol=cfg.picard_tol,
        picard_max_iters=cfg.picard_max_iters, diagnostics_path=diagnostics,
    )


def atomic_write(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode() if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_kernel_values(values) -> str:
    return ", ".join(f"{v:.8f}".rstrip("0").rstrip(".") for v in values)


def _problem_for(cfg: RunConfig, with_source: bool, sc: SolverConfig):
    if cfg.case == "custom":
        return custom_problem(cfg), None
    case = case_library()[cfg.case]
    g = derive_source(case, cfg.beta, sc.rule, cfg.time_term, sc.grid) if with_source else None
    return case.problem(cfg.beta, cfg.N, g), case


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    diag = out / cfg.diagnostics if cfg.diagnostics else None
    tmp_diag = None
    if diag:
        diag.parent.mkdir(parents=True, exist_ok=True)
        tmp_diag = diag.with_name(f".{diag.name}.partial")
    sc = solver_config(cfg, tmp_diag)
    problem, case = _problem_for(cfg, True, sc)
    traj = Solver(problem, sc, k=cfg.k).run()
    if tmp_diag:
        os.replace(tmp_diag, diag)
    lines = [f"# N={cfg.N}, k={cfg.k}, T={cfg.final_time!r}, case={cfg.case}, beta={cfg.beta!r}",
             "element," + ",".join(f"c{p}" for p in range(cfg.k + 1))]
    lines += [f"{s}," + ",".join(repr(float(c)) for c in row) for s, row in enumerate(traj.final.coeffs)]
    atomic_write(out / cfg.coefficients, "\n".join(lines) + "\n")
    print(f"final norm {traj.norms[-1]:.6e}, max Picard iterations {traj.max_iterations}")
    if case is not None:
        print(f"L2 error at T={cfg.final_time}: {traj.error(case.exact):.3e}")
    return EXIT_OK


def cmd_converge(cfg: RunConfig, out: Path) -> int:
    case = case_library()[cfg.case]
    settings = StudySettings(N=cfg.N, k=cfg.k, M_t=cfg.M_t, M_q=cfg.M_q, alpha=cfg.alpha,
                             time_term=cfg.time_term, sigma=cfg.sigma, picard_tol=cfg.picard_tol)
    table = convergence_study(case, cfg.beta, cfg.k, cfg.axis, list(cfg.levels), settings)
    atomic_write(out / cfg.table, emit_table(table, "csv"))
    if cfg.gnuplot:
        atomic_write(out / cfg.gnuplot, gnuplot_data(table))
    print(emit_table(table, "markdown"), end="")
    return EXIT_OK


def cmd_stability(cfg: RunConfig, out: Path) -> int:
    sc = solver_config(cfg)
    problem, _ = _problem_for(cfg, False, sc)
    res = stability_run(problem, sc, cfg.k)
    rows = ["step,t,norm"] + [f"{n},{float(t)!r},{float(v)!r}"
                              for n, (t, v) in enumerate(zip(sc.grid.times, res.norms))]
    atomic_write(out / cfg.norms, "\n".join(rows) + "\n")
    print(f"max relative norm increase {res.max_relative_increase:.3e}")
    if not res.monotone:
        print("stability violated: the discrete L2 norm increased", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_kernels(cfg: RunConfig, out: Path) -> int:
    if cfg.kernel == "l1":
        alpha = cfg.alpha if cfg.alpha is not None else 0.5
        print(_format_kernel_values(l1_coefficients(alpha, cfg.n)))
    elif cfg.kernel == "lambda":
        rule = (single_order_rule(cfg.alpha, cfg.dt) if cfg.alpha is not None
                else distributed_rule(cfg.M_q, dt=cfg.dt))
        print("alpha,lambda,w")
        for a, lam, w in zip(rule.nodes, rule.lambdas, rule.effective_weights):
            print(f"{float(a)!r},{float(lam)!r},{float(w)!r}")
    else:
        mesh = Mesh1D(cfg.domain[0], cfg.domain[1], cfg.N) if cfg.case == "custom" \
            else case_library()[cfg.case].mesh(cfg.N)
        op = assemble_riesz_matrix(mesh, cfg.k, cfg.beta)
        path = out / cfg.riesz_dump
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(f".{path.name}.partial")
        (write_riesz_csv if cfg.riesz_format == "csv" else write_riesz_binary)(op, tmp)
        os.replace(tmp, path)
        print(f"Riesz matrix {op.matrix.shape[0]}x{op.matrix.shape[1]} written to {path}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "converge": cmd_converge, "stability": cmd_stability, "kernels": cmd_kernels}


def dispatch(cfg: RunConfig, outdir: str | Path = ".") -> int:
    out = Path(outdir)
    try:
        return COMMANDS[cfg.command](cfg, out)
    except NonconvergenceError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NONCONVERGED


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="fracldg", description=__doc__.splitlines()[0])
    ap.add_argument("config", help="configuration file, or '-' for stdin")
    ap.add_argument("--outdir", default=".", help="directory for output files")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        text = sys.stdin.read() if args.config == "-" else Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    return dispatch(cfg, args.outdir)


if __name__ == "__main__":
    sys.exit(main())
