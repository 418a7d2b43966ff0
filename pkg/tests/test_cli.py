import csv
import filecmp

import pytest

from entropic_bb.cli import main

BASE = """
[marginals]
family = {family}

[grid]
lo = -20
hi = 20
npts = {npts}

[solver]
epsilon = 1.0
tol = {tol}
max_iter = {max_iter}

[bridge]
M = {M}

[certify]
{certify}
"""


def write_config(tmp_path, name="exp.ini", family="gaussian_example", npts=512, tol=1e-12,
                 max_iter=10000, M=16, certify="C = 2"):
    p = tmp_path / name
    p.write_text(BASE.format(family=family, npts=npts, tol=tol, max_iter=max_iter, M=M, certify=certify))
    return p


def run_all(cfg, out):
    return [main([cmd, "--config", str(cfg), "--out", str(out)]) for cmd in ("solve", "bridge", "certify")]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_full_pipeline_gaussian(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert run_all(cfg, out) == [0, 0, 0]
    for name in ("log_f.field", "log_g.field", "potentials.ini", "sinkhorn_report.csv",
                 "bridge/index.csv", "bridge_summary.csv", "certificates.csv"):
        assert (out / name).is_file(), name
    summary = read_rows(out / "bridge_summary.csv")
    assert len(summary) == 17
    assert all(abs(float(r["mass"]) - 1.0) < 1e-4 for r in summary)
    # second moment of N(1 + t, 1 + t)
    last = summary[-1]
    assert float(last["second_moment"]) == pytest.approx(6.0, abs=1e-4)
    rows = read_rows(out / "certificates.csv")
    assert list(rows[0]) == ["name", "lhs", "rhs", "gap", "tolerance", "passed", "npts", "M", "epsilon"]
    assert all(r["passed"] == "true" for r in rows)


def test_mixture_suite_and_summary(tmp_path):
    checks = "checks = bb_identity, gradient_growth, gaussian_tail, tail_ode, polynomial_moments, fp_weak, hjb, duality"
    cfg = write_config(tmp_path, family="mixture_example", npts=1024, M=16, certify=f"C = 20\n{checks}")
    out = tmp_path / "out"
    assert run_all(cfg, out) == [0, 0, 0]
    for r in read_rows(out / "bridge_summary.csv"):
        t = float(r["t"])
        # second moment of the mixture: var + mean^2 = (1 + t) + (1 + t)^2
        assert float(r["second_moment"]) == pytest.approx((1 + t) + (1 + t) ** 2, abs=1e-4)


def test_bb_only_single_row(tmp_path):
    cfg = write_config(tmp_path, certify="checks = bb_identity")
    out = tmp_path / "out"
    run_all(cfg, out)
    rows = read_rows(out / "certificates.csv")
    assert len(rows) == 1 and rows[0]["name"] == "bb_identity"
    assert abs(float(rows[0]["gap"])) <= 1e-3


def test_injected_perturbation_fails(tmp_path):
    cfg = write_config(tmp_path, certify="checks = bb_identity\ninject_perturbation = 0.01")
    assert run_all(cfg, tmp_path / "out")[-1] == 4


def test_non_convergence_exit_2(tmp_path):
    cfg = write_config(tmp_path, tol=1e-15, max_iter=5)
    out = tmp_path / "out"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 2
    assert len(read_rows(out / "sinkhorn_report.csv")) == 5
    # a non-converged solve is not a usable upstream artifact
    assert main(["bridge", "--config", str(cfg), "--out", str(out)]) == 3


def test_missing_artifacts_exit_3(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["bridge", "--config", str(cfg), "--out", str(tmp_path / "none")]) == 3
    assert main(["certify", "--config", str(cfg), "--out", str(tmp_path / "none")]) == 3


def test_too_few_slices_exit_3(tmp_path):
    cfg = write_config(tmp_path, M=2)
    out = tmp_path / "out"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["bridge", "--config", str(cfg), "--out", str(out)]) == 3


def test_config_errors_exit_1(tmp_path, capsys):
    cfg = write_config(tmp_path, certify="checks = nonsense")
    assert main(["certify", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "nonsense" in err and "bb_identity" in err and "exp.ini:" in err
    assert main(["solve", "--config", str(tmp_path / "missing.ini")]) == 1
    assert main(["explode", "--config", str(cfg)]) == 1


def test_missing_snapshot_exit_1(tmp_path, capsys):
    p = tmp_path / "snap.ini"
    p.write_text("[marginals]\nfamily = snapshot\nrho0 = gone0.field\nrho1 = gone1.field\n")
    assert main(["solve", "--config", str(p)]) == 1
    assert "gone0.field" in capsys.readouterr().err


def test_determinism_and_idempotence(tmp_path):
    cfg = write_config(tmp_path, family="mixture_example", npts=256, M=8, certify="C = 20\nchecks = bb_identity, hjb, fp_weak")
    a, b = tmp_path / "a", tmp_path / "b"
    run_all(cfg, a)
    run_all(cfg, b)
    for name in ("sinkhorn_report.csv", "bridge_summary.csv", "certificates.csv", "log_g.field",
                 "bridge/index.csv", "bridge/slice_0004_psi.field"):
        assert filecmp.cmp(a / name, b / name, shallow=False), name
    first = (a / "certificates.csv").read_bytes()
    main(["certify", "--config", str(cfg), "--out", str(a)])
    assert (a / "certificates.csv").read_bytes() == first


def test_plots_flag(tmp_path):
    pytest.importorskip("matplotlib")
    cfg = write_config(tmp_path, certify="checks = bb_identity, gaussian_tail\ntail_radii = 2, 4")
    out = tmp_path / "out"
    run_all(cfg, out)
    assert not list(out.glob("*.svg"))
    assert main(["certify", "--config", str(cfg), "--out", str(out), "--plots"]) == 0
    svgs = sorted(p.name for p in out.glob("*.svg"))
    assert svgs == ["bb_gap_vs_resolution.svg", "hessian_field.svg", "tail_mass_vs_radius.svg"]
    for p in out.glob("*.svg"):
        assert p.read_text().lstrip().startswith("<?xml")


def test_seed_flag(tmp_path):
    p = tmp_path / "pg.ini"
    p.write_text("[marginals]\nfamily = perturbed_gaussian\nmean0 = 0\nmean1 = 1\n[grid]\nnpts = 256\n")
    main(["solve", "--config", str(p), "--out", str(tmp_path / "s1"), "--seed", "1"])
    main(["solve", "--config", str(p), "--out", str(tmp_path / "s2"), "--seed", "2"])
    assert (tmp_path / "s1/rho0.field").read_text() != (tmp_path / "s2/rho0.field").read_text()
