"""Optional SVG figures for ``certify --plots`` (needs matplotlib)."""

from __future__ import annotations

import numpy as np

from .bridge import load_path
from .grid import hessian_quadratic_form, probe_directions


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "entropic-bb"
    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def write_certificate_plots(cfg, reports) -> list:
    """Gap vs time resolution, tail mass vs radius and a Hessian heat map."""
    from .bridge import kinetic_energy
    from .cli import load_solution
    from .schrodinger import relative_entropy_lebesgue, static_entropic_cost

    plt = _pyplot()
    out = cfg.out_dir
    written = []
    pp, rho0, rho1, _ = load_solution(out)
    bp = load_path(out / "bridge")

    lhs = pp.epsilon * static_entropic_cost(pp, rho0, rho1)
    h0 = pp.epsilon * relative_entropy_lebesgue(rho0)
    panels, gaps = [], []
    step = 1
    while (len(bp) - 1) % (2 * step) == 0 and (len(bp) - 1) // step >= 2:
        sub = bp.subsample(step)
        panels.append(len(sub) - 1)
        gaps.append(abs(lhs - h0 - kinetic_energy(sub)) + 1e-17)
        step *= 2
    fig, ax = plt.subplots()
    ax.loglog(panels, gaps, "o-")
    ax.set_xlabel("time panels M")
    ax.set_ylabel("|identity gap|")
    _save(fig, out / "bb_gap_vs_resolution.svg")
    plt.close(fig)
    written.append(out / "bb_gap_vs_resolution.svg")

    tails = [r for r in reports if r.name.startswith("gaussian_tail")]
    if tails:
        fig, ax = plt.subplots()
        radii = [r.metadata["R"] for r in tails]
        ax.semilogy(radii, [r.lhs for r in tails], "o-", label="max_t tail mass")
        ax.semilogy(radii, [r.rhs for r in tails], "s--", label="I exp(-W(1) R^2)")
        ax.set_xlabel("R")
        ax.legend()
        _save(fig, out / "tail_mass_vs_radius.svg")
        plt.close(fig)
        written.append(out / "tail_mass_vs_radius.svg")

    if bp.grid.dim == 1:
        xi = probe_directions(1)[0]
        field = np.array([hessian_quadratic_form(s.psi_t, xi).values for s in bp.slices])
        fig, ax = plt.subplots()
        x = bp.grid.axes[0]
        im = ax.imshow(field, aspect="auto", origin="lower",
                       extent=[x[0], x[-1], bp.times[0], bp.times[-1]], cmap="viridis")
        fig.colorbar(im, ax=ax, label="D^2 psi_t")
        ax.set_xlabel("x")
        ax.set_ylabel("t")
        _save(fig, out / "hessian_field.svg")
        plt.close(fig)
        written.append(out / "hessian_field.svg")
    return written
