"""Experiment configuration: an INI file with fixed sections.

Grammar (``#`` or ``;`` start comments; unknown keys are errors)::

    [marginals]
    family = gaussian_example | mixture_example | gaussian | perturbed_gaussian | snapshot
    mean0, var0, mean1, var1 = ...      ; gaussian and perturbed_gaussian
    amplitude, frequency = ...          ; perturbed_gaussian (phase drawn from the seed)
    rho0, rho1 = <path>                 ; snapshot (relative to the config file)

    [grid]      lo, hi, npts, dim
    [solver]    epsilon, tol, max_iter
    [bridge]    M
    [certify]   checks, C, tail_k, tail_radii, dual_radii, moment_order,
                hessian_slack, tol_bb, inject_perturbation
    [output]    dir (relative to the working directory), plots
    [run]       seed

Every error names the file and, where one exists, the offending line.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BridgeError
from .grid import Field, Grid, normalize_density, read_field
from .oracle import EXAMPLES

FAMILIES = ("gaussian_example", "mixture_example", "gaussian", "perturbed_gaussian", "snapshot")
CHECKS = (
    "bb_identity",
    "hessian_sandwich",
    "gradient_growth",
    "gaussian_tail",
    "tail_ode",
    "polynomial_moments",
    "fp_weak",
    "hjb",
    "duality",
)

_SCHEMA = {
    "marginals": {"family", "mean0", "var0", "mean1", "var1", "amplitude", "frequency", "rho0", "rho1"},
    "grid": {"lo", "hi", "npts", "dim"},
    "solver": {"epsilon", "tol", "max_iter"},
    "bridge": {"m"},
    "certify": {
        "checks", "c", "tail_k", "tail_radii", "dual_radii", "moment_order",
        "hessian_slack", "tol_bb", "inject_perturbation",
    },
    "output": {"dir", "plots"},
    "run": {"seed"},
}


class ConfigError(BridgeError, ValueError):
    def __init__(self, message: str, path=None, line: int | None = None):
        where = "" if path is None else f"{path}:" + ("" if line is None else f"{line}:")
        super().__init__(f"{where} {message}" if where else message)
        self.path = path
        self.line = line


@dataclass
class MarginalSpec:
    family: str
    mean0: float = 1.0
    var0: float = 1.0
    mean1: float = 2.0
    var1: float = 2.0
    amplitude: float = 0.1
    frequency: float = 1.0
    rho0: Path | None = None
    rho1: Path | None = None


@dataclass
class ExperimentConfig:
    marginals: MarginalSpec
    lo: float = -14.0
    hi: float = 16.0
    npts: int = 1024
    dim: int = 1
    epsilon: float = 1.0
    tol: float = 1e-12
    max_iter: int = 10_000
    M: int = 64
    checks: list[str] = field(default_factory=lambda: list(CHECKS))
    C: float = 2.0
    tail_k: float | None = None
    tail_radii: list[float] = field(default_factory=lambda: [4.0, 6.0, 8.0])
    dual_radii: list[float] = field(default_factory=lambda: [4.0, 8.0, 16.0])
    moment_order: int = 8
    hessian_slack: float | None = None
    tol_bb: float = 1e-3
    inject_perturbation: float = 0.0
    out_dir: Path = Path("out")
    plots: bool = False
    seed: int = 0
    source: Path | None = None

    @property
    def k(self) -> float:
        return 1.0 / (4.0 * self.C) if self.tail_k is None else self.tail_k

    def grid(self) -> Grid:
        return Grid.uniform(self.lo, self.hi, self.npts, self.dim)


def _line_of(text: str, section: str, key: str) -> int | None:
    """1-based line of ``key`` inside ``[section]``, if present."""
    current = None
    key_re = re.compile(rf"^\s*{re.escape(key)}\s*[=:]", re.IGNORECASE)
    for n, line in enumerate(text.splitlines(), start=1):
        head = re.match(r"^\s*\[([^\]]+)\]", line)
        if head:
            current = head.group(1).strip().lower()
        elif current == section and key_re.match(line):
            return n
    return None


class _Reader:
    def __init__(self, parser, text, path):
        self.parser = parser
        self.text = text
        self.path = path

    def fail(self, section, key, message):
        raise ConfigError(message, self.path, _line_of(self.text, section, key))

    def raw(self, section, key):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        return None

    def get(self, section, key, cast, default):
        raw = self.raw(section, key)
        if raw is None or raw == "":
            return default
        try:
            return cast(raw)
        except ValueError:
            self.fail(section, key, f"[{section}] {key} = {raw!r} is not a valid {cast.__name__}")

    def floats(self, section, key, default):
        raw = self.raw(section, key)
        if raw is None:
            return default
        try:
            return [float(v) for v in raw.replace(",", " ").split()]
        except ValueError:
            self.fail(section, key, f"[{section}] {key} must be a list of numbers, got {raw!r}")


def _boolean(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


_boolean.__name__ = "boolean"


def parse_config(text: str, path=None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path) if path else "<config>")
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", path, exc.lineno) from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", path, exc.lineno) from exc
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("content before the first [section] header", path, exc.lineno) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line (expected 'key = value')", path, line) from exc

    r = _Reader(parser, text, path)
    for section in parser.sections():
        if section not in _SCHEMA:
            line = next(
                (n for n, s in enumerate(text.splitlines(), 1) if s.strip().lower() == f"[{section}]"),
                None,
            )
            raise ConfigError(f"unknown section [{section}]; expected one of {sorted(_SCHEMA)}", path, line)
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                r.fail(section, key, f"unknown key {key!r} in [{section}]")

    if not parser.has_section("marginals"):
        raise ConfigError("missing [marginals] section", path)
    family = r.get("marginals", "family", str, None)
    if family not in FAMILIES:
        r.fail("marginals", "family", f"family must be one of {', '.join(FAMILIES)}, got {family!r}")
    base = Path(path).parent if path else Path(".")
    spec = MarginalSpec(
        family=family,
        mean0=r.get("marginals", "mean0", float, 1.0),
        var0=r.get("marginals", "var0", float, 1.0),
        mean1=r.get("marginals", "mean1", float, 2.0),
        var1=r.get("marginals", "var1", float, 2.0),
        amplitude=r.get("marginals", "amplitude", float, 0.1),
        frequency=r.get("marginals", "frequency", float, 1.0),
    )
    if family == "snapshot":
        for key in ("rho0", "rho1"):
            raw = r.raw("marginals", key)
            if not raw:
                r.fail("marginals", "family", f"snapshot family needs [marginals] {key}")
            p = (base / raw).resolve()
            if not p.is_file():
                r.fail("marginals", key, f"snapshot file not found: {p}")
            setattr(spec, key, p)
    for key in ("var0", "var1"):
        if not getattr(spec, key) > 0:
            r.fail("marginals", key, f"{key} must be positive")

    cfg = ExperimentConfig(marginals=spec, source=Path(path) if path else None)
    cfg.lo = r.get("grid", "lo", float, cfg.lo)
    cfg.hi = r.get("grid", "hi", float, cfg.hi)
    cfg.npts = r.get("grid", "npts", int, cfg.npts)
    cfg.dim = r.get("grid", "dim", int, cfg.dim)
    if cfg.dim not in (1, 2):
        r.fail("grid", "dim", f"dim must be 1 or 2, got {cfg.dim}")
    if not cfg.hi > cfg.lo:
        r.fail("grid", "hi", "need hi > lo")
    if cfg.npts < 8:
        r.fail("grid", "npts", "npts must be at least 8")
    if family in ("gaussian_example", "mixture_example") and cfg.dim != 1:
        r.fail("grid", "dim", f"{family} is one-dimensional")

    cfg.epsilon = r.get("solver", "epsilon", float, cfg.epsilon)
    cfg.tol = r.get("solver", "tol", float, cfg.tol)
    cfg.max_iter = r.get("solver", "max_iter", int, cfg.max_iter)
    if not cfg.epsilon > 0:
        r.fail("solver", "epsilon", "epsilon must be positive")
    if not cfg.tol > 0:
        r.fail("solver", "tol", "tol must be positive")
    if cfg.max_iter < 1:
        r.fail("solver", "max_iter", "max_iter must be at least 1")

    cfg.M = r.get("bridge", "m", int, cfg.M)

    raw_checks = r.raw("certify", "checks")
    if raw_checks:
        names = [c for c in re.split(r"[,\s]+", raw_checks) if c]
        bad = [c for c in names if c not in CHECKS]
        if bad:
            r.fail("certify", "checks", f"unknown check(s) {', '.join(bad)}; valid names: {', '.join(CHECKS)}")
        cfg.checks = names
    cfg.C = r.get("certify", "c", float, cfg.C)
    cfg.tail_k = r.get("certify", "tail_k", float, None)
    cfg.tail_radii = r.floats("certify", "tail_radii", cfg.tail_radii)
    cfg.dual_radii = r.floats("certify", "dual_radii", cfg.dual_radii)
    cfg.moment_order = r.get("certify", "moment_order", int, cfg.moment_order)
    cfg.hessian_slack = r.get("certify", "hessian_slack", float, None)
    cfg.tol_bb = r.get("certify", "tol_bb", float, cfg.tol_bb)
    cfg.inject_perturbation = r.get("certify", "inject_perturbation", float, 0.0)
    if cfg.C < 1:
        r.fail("certify", "c", "C must be at least 1")

    out = r.get("output", "dir", str, None)
    cfg.out_dir = Path(out) if out else Path("out")
    cfg.plots = r.get("output", "plots", _boolean, False)
    cfg.seed = r.get("run", "seed", int, 0)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from exc
    return parse_config(text, path)


# -- marginal construction ----------------------------------------------------


def _gaussian_log_density(points, mean, var):
    d = points - mean
    return -np.sum(d ** 2, axis=-1) / (2.0 * var)


def build_marginals(cfg: ExperimentConfig, seed: int | None = None) -> tuple[Field, Field]:
    """Sample the configured marginals on the configured grid (unit mass)."""
    spec = cfg.marginals
    if spec.family == "snapshot":
        rho0 = read_field(spec.rho0, kind="density")
        rho1 = read_field(spec.rho1, kind="density")
        if rho0.grid != rho1.grid:
            raise ConfigError("snapshot marginals live on different grids", cfg.source)
        return normalize_density(rho0), normalize_density(rho1)

    grid = cfg.grid()
    if spec.family in EXAMPLES:
        cf = EXAMPLES[spec.family]()
        return (normalize_density(Field.from_function(grid, cf.rho0, "density")),
                normalize_density(Field.from_function(grid, cf.rho1, "density")))

    pts = grid.points()
    log0 = _gaussian_log_density(pts, spec.mean0, spec.var0)
    log1 = _gaussian_log_density(pts, spec.mean1, spec.var1)
    if spec.family == "perturbed_gaussian":
        rng = np.random.default_rng(cfg.seed if seed is None else seed)
        phase = rng.uniform(0.0, 2.0 * np.pi, size=2)
        x = pts[..., 0]
        log0 = log0 - spec.amplitude * np.sin(spec.frequency * x + phase[0])
        log1 = log1 - spec.amplitude * np.sin(spec.frequency * x + phase[1])
    rho0 = Field(grid, np.exp(log0 - log0.max()), "density")
    rho1 = Field(grid, np.exp(log1 - log1.max()), "density")
    return normalize_density(rho0), normalize_density(rho1)
