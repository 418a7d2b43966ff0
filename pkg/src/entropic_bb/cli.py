"""Command line entry point: ``entropic-bb solve|bridge|certify --config FILE``.

Artifacts live in one output directory::

    rho0.field rho1.field log_f.field log_g.field potentials.ini sinkhorn_report.csv   (solve)
    bridge/ bridge_summary.csv                                                        (bridge)
    certificates.csv [*.svg]                                                          (certify)

Exit codes: 0 success, 1 usage or config error, 2 Sinkhorn did not converge,
3 upstream artifacts missing or unusable, 4 at least one certificate failed.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .bridge import BridgePath, build_path, kinetic_energy, load_path, perturb_path, save_path
from .certify import bounds, checks, identity, residuals
from .certify.report import CertificateReport, write_reports_csv
from .config import ConfigError, ExperimentConfig, build_marginals, load_config
from .errors import BridgeError, TooFewSlices
from .grid import Field, quadrature, read_field, write_field
from .schrodinger import PotentialPair, SinkhornReport, sinkhorn_solve, unit_mass_gauge

log = logging.getLogger("entropic_bb")

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_MISSING, EXIT_CERT_FAILED = 0, 1, 2, 3, 4

SOLVE_FILES = ("rho0.field", "rho1.field", "log_f.field", "log_g.field", "potentials.ini")


class MissingArtifacts(BridgeError):
    pass


# -- solve --------------------------------------------------------------------


def _write_potentials_ini(path: Path, pp: PotentialPair, report: SinkhornReport, tol: float):
    cp = configparser.ConfigParser()
    cp["potentials"] = {
        "epsilon": repr(pp.epsilon),
        "normalization": repr(pp.normalization),
        "gauge": "int log_f rho0 = 0",
        "log_f": "log_f.field",
        "log_g": "log_g.field",
    }
    cp["sinkhorn"] = {
        "tol": repr(float(tol)),
        "iterations": str(report.iterations),
        "final_error": repr(report.final_error),
        "converged": "true" if report.converged else "false",
    }
    with path.open("w") as fh:
        cp.write(fh)


def cmd_solve(cfg: ExperimentConfig) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    rho0, rho1 = build_marginals(cfg)
    pp, report = sinkhorn_solve(rho0, rho1, cfg.epsilon, cfg.tol, cfg.max_iter)
    write_field(out / "rho0.field", rho0)
    write_field(out / "rho1.field", rho1)
    write_field(out / "log_f.field", pp.log_f)
    write_field(out / "log_g.field", pp.log_g)
    _write_potentials_ini(out / "potentials.ini", pp, report, cfg.tol)
    report.to_csv(out / "sinkhorn_report.csv")
    if not report.converged:
        log.error("Sinkhorn did not converge: error %.3g after %d iterations",
                  report.final_error, report.iterations)
        return EXIT_NOT_CONVERGED
    log.info("Sinkhorn converged in %d iterations (error %.3g)", report.iterations, report.final_error)
    return EXIT_OK


def load_solution(out: Path):
    """Read back ``(pp, rho0, rho1, sinkhorn_tol)`` written by :func:`cmd_solve`."""
    missing = [name for name in SOLVE_FILES if not (out / name).is_file()]
    if missing:
        raise MissingArtifacts(f"missing solve artifacts in {out}: {', '.join(missing)}; run 'solve' first")
    cp = configparser.ConfigParser()
    cp.read(out / "potentials.ini")
    eps = cp.getfloat("potentials", "epsilon")
    pp = PotentialPair(
        eps, read_field(out / "log_f.field"), read_field(out / "log_g.field"),
        cp.getfloat("potentials", "normalization"),
    )
    if not cp.getboolean("sinkhorn", "converged"):
        raise MissingArtifacts(f"{out}/potentials.ini records a non-converged solve")
    rho0 = read_field(out / "rho0.field", kind="density")
    rho1 = read_field(out / "rho1.field", kind="density")
    return pp, rho0, rho1, cp.getfloat("sinkhorn", "tol")


# -- bridge -------------------------------------------------------------------


def write_bridge_summary(path: Path, bp: BridgePath) -> Path:
    r2 = bp.grid.radius() ** 2
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "mass", "second_moment", "kinetic_integrand"])
        for s in bp.slices:
            second = quadrature(Field(s.grid, r2 * s.rho_t.values))
            w.writerow([repr(s.t), repr(s.mass()), repr(second), repr(s.kinetic_integrand())])
    return path


def cmd_bridge(cfg: ExperimentConfig) -> int:
    out = cfg.out_dir
    pp, _, _, _ = load_solution(out)
    if cfg.M < 4 or cfg.M % 2:
        raise TooFewSlices(f"bridge needs an even M >= 4 for Simpson time integration, got M={cfg.M}")
    bp = build_path(pp, cfg.M)
    save_path(bp, out / "bridge")
    write_bridge_summary(out / "bridge_summary.csv", bp)
    log.info("wrote %d slices to %s", len(bp), out / "bridge")
    return EXIT_OK


# -- certify ------------------------------------------------------------------


def _certificate_jobs(cfg, pp, rho0, rho1, bp, sinkhorn_tol):
    hb = bounds.hessian_bounds_endpoint(cfg.C, pp.epsilon)
    slack = checks.hessian_slack(bp.grid, sinkhorn_tol) if cfg.hessian_slack is None else cfg.hessian_slack

    def bb():
        path = perturb_path(bp, cfg.inject_perturbation) if cfg.inject_perturbation else bp
        return [identity.bb_identity_from_path(pp, rho0, rho1, path, cfg.tol_bb)]

    def tails():
        env = checks.envelope_for_path(bp, hb, cfg.k)
        return checks.check_gaussian_tail(bp, env, cfg.tail_radii)

    def ode():
        env = bounds.tail_envelope(cfg.k, float(checks.envelope_for_path(bp, hb, cfg.k).A), pp.epsilon)
        return [checks.check_tail_ode(env)]

    def duality():
        f1 = unit_mass_gauge(pp).psi1()
        return residuals.check_duality(f1, pp.epsilon, cfg.dual_radii, rho0, rho1, kinetic_energy(bp))

    return {
        "bb_identity": bb,
        "hessian_sandwich": lambda: [checks.check_hessian_sandwich_path(bp, hb, slack)],
        "gradient_growth": lambda: [checks.check_gradient_growth_path(bp, hb)],
        "gaussian_tail": tails,
        "tail_ode": ode,
        "polynomial_moments": lambda: [checks.check_polynomial_moments(bp, cfg.moment_order)],
        "fp_weak": lambda: residuals.fp_weak_residual(bp),
        "hjb": lambda: [residuals.hjb_residual(bp)],
        "duality": duality,
    }


def run_certificates(cfg: ExperimentConfig) -> list[CertificateReport]:
    out = cfg.out_dir
    pp, rho0, rho1, sinkhorn_tol = load_solution(out)
    if not (out / "bridge" / "index.csv").is_file():
        raise MissingArtifacts(f"missing bridge artifacts in {out / 'bridge'}; run 'bridge' first")
    bp = load_path(out / "bridge")
    jobs = _certificate_jobs(cfg, pp, rho0, rho1, bp, sinkhorn_tol)
    # independent pure computations; results are merged in the configured order
    with ThreadPoolExecutor() as pool:
        futures = [pool.submit(jobs[name]) for name in cfg.checks]
        reports = [r for fut in futures for r in fut.result()]
    for r in reports:
        r.metadata.setdefault("npts", bp.grid.size)
        r.metadata.setdefault("M", len(bp) - 1)
        r.metadata.setdefault("epsilon", bp.epsilon)
    return reports


def cmd_certify(cfg: ExperimentConfig) -> int:
    reports = run_certificates(cfg)
    write_reports_csv(cfg.out_dir / "certificates.csv", reports)
    for r in reports:
        log.info(r.summary())
    if cfg.plots:
        from . import plots

        plots.write_certificate_plots(cfg, reports)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CERT_FAILED


COMMANDS = {"solve": cmd_solve, "bridge": cmd_bridge, "certify": cmd_certify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="entropic-bb", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, type=Path, help="experiment INI file")
    p.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
    p.add_argument("--plots", action="store_true", help="write SVG plots next to certificates.csv")
    p.add_argument("--seed", type=int, help="random seed (overrides [run] seed)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out is not None:
        cfg.out_dir = args.out
    if args.plots:
        cfg.plots = True
    if args.seed is not None:
        cfg.seed = args.seed
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingArtifacts, TooFewSlices) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING


if __name__ == "__main__":
    sys.exit(main())
