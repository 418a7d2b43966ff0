import numpy as np
import pytest

from entropic_bb.config import CHECKS, ConfigError, build_marginals, load_config, parse_config
from entropic_bb.grid import quadrature, write_field


def test_defaults():
    cfg = parse_config("[marginals]\nfamily = gaussian_example\n")
    assert cfg.npts == 1024 and cfg.M == 64 and cfg.epsilon == 1.0
    assert cfg.checks == list(CHECKS)
    assert cfg.k == pytest.approx(1 / 8)


def test_full_parse():
    cfg = parse_config(
        "[marginals]\nfamily = gaussian\nmean0 = 0.5\n"
        "[grid]\nlo = -5\nhi = 5\nnpts = 64  # inline comment\ndim = 2\n"
        "[solver]\nepsilon = 0.5\ntol = 1e-8\nmax_iter = 20\n"
        "[bridge]\nM = 8\n"
        "[certify]\nchecks = hjb, fp_weak\nC = 3\ntail_radii = 1, 2\ntail_k = 0.01\n"
        "[output]\ndir = somewhere\nplots = yes\n[run]\nseed = 9\n"
    )
    assert cfg.dim == 2 and cfg.npts == 64 and cfg.M == 8
    assert cfg.checks == ["hjb", "fp_weak"] and cfg.C == 3.0
    assert cfg.tail_radii == [1.0, 2.0] and cfg.k == 0.01
    assert cfg.plots and cfg.seed == 9 and str(cfg.out_dir) == "somewhere"


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("[marginals]\nfamily = gaussian_example\n[grid]\nnpts = many\n", 4, "npts"),
        ("[marginals]\nfamily = nope\n", 2, "family"),
        ("[marginals]\nfamily = gaussian_example\n[certify]\n\nchecks = hjb, bogus\n", 5, "bogus"),
        ("[marginals]\nfamily = gaussian_example\n[solver]\nepsilon = -1\n", 4, "epsilon"),
        ("[marginals]\nfamily = gaussian_example\ncolour = red\n", 3, "colour"),
        ("[marginals]\nfamily = gaussian_example\nfamily = mixture_example\n", 3, "duplicate"),
        ("family = gaussian_example\n", 1, "section"),
        ("[marginals]\nfamily = gaussian_example\n[extra]\n", 3, "unknown section"),
        ("[marginals]\nfamily = gaussian_example\n[grid]\ndim = 2\n", 4, "one-dimensional"),
    ],
)
def test_errors_are_line_anchored(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "exp.ini")
    assert info.value.line == line
    assert f"exp.ini:{line}:" in str(info.value)
    assert fragment in str(info.value)


def test_unknown_check_lists_valid_names():
    with pytest.raises(ConfigError) as info:
        parse_config("[marginals]\nfamily = gaussian_example\n[certify]\nchecks = wat\n")
    for name in CHECKS:
        assert name in str(info.value)


def test_missing_snapshot_names_path(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text("[marginals]\nfamily = snapshot\nrho0 = a.field\nrho1 = b.field\n")
    with pytest.raises(ConfigError) as info:
        load_config(p)
    assert "a.field" in str(info.value) and info.value.line == 3


def test_snapshot_marginals(tmp_path, gauss):
    write_field(tmp_path / "a.field", gauss.rho0)
    write_field(tmp_path / "b.field", gauss.rho1)
    p = tmp_path / "exp.ini"
    p.write_text("[marginals]\nfamily = snapshot\nrho0 = a.field\nrho1 = b.field\n")
    r0, r1 = build_marginals(load_config(p))
    assert np.allclose(r0.values, gauss.rho0.values, rtol=1e-12)
    assert quadrature(r1) == pytest.approx(1.0)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_perturbed_marginals_seeded():
    text = "[marginals]\nfamily = perturbed_gaussian\namplitude = 0.3\n[grid]\nnpts = 128\n"
    cfg = parse_config(text)
    a, _ = build_marginals(cfg, seed=1)
    b, _ = build_marginals(cfg, seed=1)
    c, _ = build_marginals(cfg, seed=2)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_gaussian_2d_marginals():
    cfg = parse_config("[marginals]\nfamily = gaussian\n[grid]\nlo=-8\nhi=10\nnpts=48\ndim=2\n")
    r0, r1 = build_marginals(cfg)
    assert r0.grid.dim == 2 and quadrature(r0) == pytest.approx(1.0)
