"""Run configuration: ``key = value`` lines grouped under ``[section]`` headers.

Keys are unique across sections, so a key may also appear before the
first header.  Parsing collects every violation before failing.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Callable

COMMANDS = ("solve", "converge", "stability", "kernels")
CASES = ("example1", "example2", "example3", "custom")
FLUX_PRESETS = ("burgers", "quartic", "linear", "none")
DIFFUSION_PRESETS = ("none", "linear")
INITIAL_PRESETS = ("zero", "bump", "sine")
AXES = ("h", "dt", "p")
KERNELS = ("l1", "lambda", "riesz")
TIME_TERMS = ("continuous", "l1", "discrete")
_CASE_T = {"example1": 1.0, "example2": 1.0, "example3": 0.5, "custom": 1.0}


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class RunConfig:
    command: str = "solve"
    case: str = "example1"
    beta: float = 1.5
    # custom problems only
    flux: str = "burgers"
    diffusion: str = "none"
    b: float = 1.0
    domain: tuple[float, float] = (-1.0, 1.0)
    initial: str = "bump"
    # time
    T: float | None = None
    M_t: int = 500
    alpha: float | None = None  # None: distributed order
    M_q: int = 50
    weight: str = "uniform"
    time_term: str = "continuous"
    # space
    N: int = 40
    k: int = 1
    sigma: float = 1.0
    quad_points: int | None = None
    picard_tol: float = 1e-10
    picard_max_iters: int = 50
    # studies and kernels
    axis: str = "h"
    levels: tuple[int, ...] = (10, 20, 40, 80)
    kernel: str = "l1"
    n: int = 3
    riesz_format: str = "csv"
    # outputs
    coefficients: str = "solution.csv"
    diagnostics: str | None = "diagnostics.txt"
    table: str = "convergence.csv"
    gnuplot: str | None = None
    norms: str = "norms.csv"
    riesz_dump: str = "riesz.csv"

    @property
    def final_time(self) -> float:
        return self.T if self.T is not None else _CASE_T[self.case]

    @property
    def dt(self) -> float:
        return self.final_time / self.M_t

    @property
    def p(self) -> float:
        return 1.0 / self.M_q


# key -> (section, parser)
def _float(s: str) -> float:
    return float(s)


def _int(s: str) -> int:
    v = float(s)
    if v != int(v):
        raise ValueError(f"{s!r} is not an integer")
    return int(v)


def _opt(parser: Callable) -> Callable:
    return lambda s: None if s.strip().lower() in ("none", "") else parser(s)


def _alpha(s: str):
    return None if s.strip().lower() == "distributed" else float(s)


def _pair(s: str) -> tuple[float, float]:
    a, b = (float(x) for x in s.split(","))
    return (a, b)


def _ints(s: str) -> tuple[int, ...]:
    return tuple(_int(x) for x in s.split(",") if x.strip())


_SCHEMA: dict[str, tuple[str, Callable]] = {
    "command": ("run", str), "case": ("run", str),
    "beta": ("problem", _float), "flux": ("problem", str), "diffusion": ("problem", str),
    "b": ("problem", _float), "domain": ("problem", _pair), "initial": ("problem", str),
    "T": ("time", _opt(_float)), "M_t": ("time", _int), "dt": ("time", _float),
    "alpha": ("time", _alpha), "M_q": ("time", _int), "p": ("time", _float),
    "weight": ("time", str), "time_term": ("time", str),
    "N": ("space", _int), "k": ("space", _int), "sigma": ("space", _float),
    "quad_points": ("space", _opt(_int)),
    "picard_tol": ("solver", _float), "picard_max_iters": ("solver", _int),
    "axis": ("study", str), "levels": ("study", _ints),
    "kernel": ("kernels", str), "n": ("kernels", _int), "riesz_format": ("kernels", str),
    "coefficients": ("output", str), "diagnostics": ("output", _opt(str)), "table": ("output", str),
    "gnuplot": ("output", _opt(str)), "norms": ("output", str), "riesz_dump": ("output", str),
}
SECTIONS = sorted({s for s, _ in _SCHEMA.values()})


def _validate(cfg: RunConfig) -> list[str]:
    errs = []

    def choice(name, options):
        if getattr(cfg, name) not in options:
            errs.append(f"{name} = {getattr(cfg, name)!r}: expected one of {', '.join(options)}")

    choice("command", COMMANDS)
    choice("case", CASES)
    choice("flux", FLUX_PRESETS)
    choice("diffusion", DIFFUSION_PRESETS)
    choice("initial", INITIAL_PRESETS)
    choice("axis", AXES)
    choice("kernel", KERNELS)
    choice("time_term", TIME_TERMS)
    choice("weight", ("uniform",))
    choice("riesz_format", ("csv", "binary"))
    if not 1.0 < cfg.beta < 2.0:
        errs.append(f"beta = {cfg.beta}: must lie in the open interval (1, 2)")
    if cfg.alpha is not None and not 0.0 < cfg.alpha <= 1.0:
        errs.append(f"alpha = {cfg.alpha}: must lie in (0, 1]")
    if cfg.N < 2:
        errs.append(f"N = {cfg.N}: need at least 2 elements")
    if not 1 <= cfg.k <= 4:
        errs.append(f"k = {cfg.k}: must lie in [1, 4] (the Gauss-Radau projection "
                    "behind the scheme needs k >= 1)")
    if cfg.T is not None and not cfg.T > 0:
        errs.append(f"T = {cfg.T}: final time must be positive")
    if cfg.M_t < 1:
        errs.append(f"M_t = {cfg.M_t}: need at least one time step")
    if cfg.M_q < 1:
        errs.append(f"M_q = {cfg.M_q}: need at least one order node")
    if cfg.sigma < 0:
        errs.append(f"sigma = {cfg.sigma}: penalty must be >= 0")
    if cfg.b < 0:
        errs.append(f"b = {cfg.b}: must be >= 0")
    if not cfg.domain[1] > cfg.domain[0]:
        errs.append(f"domain = {cfg.domain}: need left < right")
    if cfg.quad_points is not None and cfg.quad_points < 1:
        errs.append(f"quad_points = {cfg.quad_points}: must be >= 1")
    if not cfg.picard_tol > 0:
        errs.append(f"picard_tol = {cfg.picard_tol}: must be positive")
    if cfg.picard_max_iters < 1:
        errs.append(f"picard_max_iters = {cfg.picard_max_iters}: must be >= 1")
    if cfg.n < 1:
        errs.append(f"n = {cfg.n}: must be >= 1")
    if cfg.command == "converge":
        if len(cfg.levels) < 2:
            errs.append("levels: a convergence study needs at least two levels")
        if cfg.case == "custom":
            errs.append("case = custom: convergence studies need a manufactured case")
    if cfg.case == "example3" and cfg.N % 4:
        errs.append(f"N = {cfg.N}: example3 needs a multiple of 4 so that x = +-1 are vertices")
    return errs


def parse_config(text: str) -> RunConfig:
    values: dict[str, Any] = {}
    errs: list[str] = []
    section = None
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SECTIONS:
                errs.append(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            errs.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA:
            errs.append(f"line {lineno}: unknown key {key!r}")
            continue
        home, parser = _SCHEMA[key]
        if section is not None and section in SECTIONS and section != home:
            errs.append(f"line {lineno}: key {key!r} belongs in [{home}], not [{section}]")
            continue
        if key in seen:
            errs.append(f"line {lineno}: duplicate key {key!r}")
            continue
        seen.add(key)
        try:
            values[key] = parser(val)
        except ValueError as exc:
            errs.append(f"line {lineno}: bad value for {key}: {val!r} ({exc})")

    T = values.get("T") or _CASE_T.get(values.get("case", "example1"), 1.0)
    if "dt" in values:
        if "M_t" in values:
            errs.append("give either dt or M_t, not both")
        else:
            steps = T / values["dt"] if values["dt"] > 0 else -1
            if steps < 1 or abs(steps - round(steps)) > 1e-9 * steps:
                errs.append(f"dt = {values['dt']}: must divide T = {T} into a whole number of steps")
            else:
                values["M_t"] = int(round(steps))
        values.pop("dt")
    if "p" in values:
        if "M_q" in values:
            errs.append("give either p or M_q, not both")
        else:
            m = 1.0 / values["p"] if values["p"] > 0 else -1
            if m < 1 or abs(m - round(m)) > 1e-9 * m:
                errs.append(f"p = {values['p']}: must be 1/M_q for a whole number M_q")
            else:
                values["M_q"] = int(round(m))
        values.pop("p")

    cfg = RunConfig(**{k: v for k, v in values.items() if k in _FIELDS})
    errs.extend(_validate(cfg))
    if errs:
        raise ConfigError(errs)
    return cfg


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(repr(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(cfg: RunConfig) -> str:
    out = []
    for sec in SECTIONS:
        keys = [k for k, (s, _) in _SCHEMA.items() if s == sec and k in _FIELDS]
        out.append(f"[{sec}]")
        for key in keys:
            val = getattr(cfg, key)
            out.append(f"{key} = {'distributed' if key == 'alpha' and val is None else _fmt(val)}")
        out.append("")
    return "\n".join(out)
