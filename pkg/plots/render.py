#!/usr/bin/env python3
"""Render publication-style figures from the simulation CSV outputs.

Pure view layer: reads the CSV/JSON files written by the `pulse-jcm`
pipelines and never recomputes any physics.  Kept apart from the core
package so the simulation library and its acceptance suite run without a
plotting stack.

Usage:
    plots/render.py --figure fig3 --input out/fig3 --out fig3.png
    plots/render.py --figure fig4 --input out/fig4 --out fig4.png
"""

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


class RenderError(Exception):
    """Input files are missing, empty, or lack required columns."""


def read_csv_columns(path, required=()):
    """Load a CSV as float column arrays, insisting on ``required`` names."""
    path = Path(path)
    if not path.exists():
        raise RenderError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows) < 2:
        raise RenderError(f"{path} is empty (header plus at least one row needed)")
    header = rows[0]
    missing = [name for name in required if name not in header]
    if missing:
        raise RenderError(
            f"{path} is missing required column(s): {', '.join(missing)}"
        )
    data = np.array([[float(x) for x in row] for row in rows[1:]])
    return {name: data[:, k] for k, name in enumerate(header)}


@dataclass
class FigureRecipe:
    """What to draw: input files, panel layout and styling."""

    input_dir: Path
    out_path: Path
    figsize: tuple = (12.0, 3.6)
    dpi: int = 150
    left_color: str = "#b4231f"
    right_color: str = "#1f4eb4"
    extra_styles: dict = field(default_factory=dict)


TIMESERIES_PANELS = (
    # (title, [(csv stem, column, axis side, label, style)...])
    ("single cavity mode", [
        ("fig3a_undamped", "P_e", "left", "P_e (unitary)", {"ls": "-"}),
        ("fig3a_damped", "P_e", "left", "P_e (damped)", {"ls": "--"}),
        ("fig3a_undamped", "n_u", "right", "photons (unitary)", {"ls": "-"}),
        ("fig3a_damped", "n_u", "right", "photons (damped)", {"ls": "--"}),
    ]),
    ("traveling pulse, cascaded cavities", [
        ("fig3b_jcm1", "P_e", "left", "P_e", {"ls": "-"}),
        ("fig3b_jcm1", "n_u", "right", "input cavity", {"ls": "-"}),
        ("fig3b_jcm2", "n_v", "right", "pick-up cavity", {"ls": "--"}),
    ]),
    ("traveling pulse, rotated frame", [
        ("fig3c_jcm3", "P_e", "left", "P_e", {"ls": "-"}),
        ("fig3c_jcm3", "n_u", "right", "pulse mode", {"ls": "-."}),
        ("fig3c_jcm3", "n_v", "right", "ancilla mode", {"ls": ":"}),
    ]),
)


def render_timeseries(recipe):
    """Three-panel emitter/photon-number time series with dual y-axes.

    Returns (out_path, info) where info counts the curves per panel.
    """
    panels = []
    for title, series in TIMESERIES_PANELS:
        loaded = []
        for stem, column, side, label, style in series:
            cols = read_csv_columns(recipe.input_dir / f"{stem}.csv",
                                    required=("t", column))
            loaded.append((cols["t"], cols[column], side, label, style))
        panels.append((title, loaded))

    fig, axes = plt.subplots(1, 3, figsize=recipe.figsize, constrained_layout=True)
    info = {"panels": []}
    for ax, (title, series) in zip(axes, panels):
        twin = ax.twinx()
        n_curves = 0
        for t, values, side, label, style in series:
            target = ax if side == "left" else twin
            color = recipe.left_color if side == "left" else recipe.right_color
            target.plot(t, values, label=label, color=color, lw=1.1, **style)
            n_curves += 1
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("time (units of inverse decay rate)", fontsize=8)
        ax.set_ylabel("emitter excitation", color=recipe.left_color, fontsize=8)
        twin.set_ylabel("oscillator quanta", color=recipe.right_color, fontsize=8)
        ax.set_ylim(0.0, 1.0)
        twin.set_ylim(bottom=0.0)
        ax.tick_params(labelsize=7)
        twin.tick_params(labelsize=7)
        handles1, labels1 = ax.get_legend_handles_labels()
        handles2, labels2 = twin.get_legend_handles_labels()
        ax.legend(handles1 + handles2, labels1 + labels2, fontsize=6, loc="upper left")
        info["panels"].append({"title": title, "curves": n_curves})
    fig.savefig(recipe.out_path, dpi=recipe.dpi)
    plt.close(fig)
    return recipe.out_path, info


def _check_sweep_grid(tau, gamma):
    """The sweep must cover the full (tau, gamma) product grid."""
    taus = np.unique(tau)
    gammas = np.unique(gamma)
    missing = []
    pairs = {(round(a, 12), round(g, 12)) for a, g in zip(tau, gamma)}
    for g in gammas:
        for a in taus:
            if (round(a, 12), round(g, 12)) not in pairs:
                missing.append(f"(tau={a:g}, gamma_refl={g:g})")
    if missing:
        raise RenderError("sweep grid has gaps: " + ", ".join(missing))
    return taus, gammas


def render_fidelity_sweep(recipe, dynamics=True):
    """Subtraction study: dynamics panel with mode inset, fidelity curves.

    One labeled curve per reflection rate with its optimum marked; the
    fidelity axis is clipped to [0, 1].  Single-point grids draw markers
    only.  Returns (out_path, info).
    """
    sweep = read_csv_columns(recipe.input_dir / "fig4_sweep.csv",
                             required=("tau", "gamma_refl", "fidelity"))
    taus, gammas = _check_sweep_grid(sweep["tau"], sweep["gamma_refl"])

    n_panels = 2 if dynamics else 1
    fig, axes = plt.subplots(1, n_panels, figsize=(5.2 * n_panels, 3.8),
                             constrained_layout=True)
    axes = np.atleast_1d(axes)
    info = {"curves": 0, "markers_only": len(taus) == 1}

    if dynamics:
        ax = axes[0]
        dyn = read_csv_columns(recipe.input_dir / "fig4_dynamics.csv",
                               required=("t", "P_e", "n_u", "n_total"))
        twin = ax.twinx()
        ax.plot(dyn["t"], dyn["P_e"], color=recipe.left_color, lw=1.1,
                label="emitter excitation")
        twin.plot(dyn["t"], dyn["n_u"], color="k", lw=1.2, label="pulse mode")
        emitted = dyn["n_total"][0] - dyn["n_total"]
        twin.plot(dyn["t"], emitted, color=recipe.right_color, ls=":",
                  lw=1.4, label="emitted quanta")
        ax.set_xlabel("time (units of inverse decay rate)", fontsize=8)
        ax.set_ylabel("emitter excitation", color=recipe.left_color, fontsize=8)
        twin.set_ylabel("quanta", fontsize=8)
        ax.set_ylim(0, 1)
        twin.set_ylim(bottom=0)
        handles1, labels1 = ax.get_legend_handles_labels()
        handles2, labels2 = twin.get_legend_handles_labels()
        ax.legend(handles1 + handles2, labels1 + labels2, fontsize=6,
                  loc="center left")
        ax.set_title("two-photon pulse at the optimum width", fontsize=9)
        modes_path = recipe.input_dir / "fig4_modes.csv"
        if modes_path.exists():
            modes = read_csv_columns(modes_path, required=("t", "u", "v2"))
            inset = ax.inset_axes([0.58, 0.55, 0.4, 0.4])
            inset.plot(modes["t"], modes["u"], color="k", lw=0.9, label="input")
            inset.plot(modes["t"], modes["v2"], color=recipe.right_color,
                       ls=":", lw=1.1, label="emitted")
            inset.set_xticks([])
            inset.set_yticks([])
            inset.set_title("temporal modes", fontsize=6)
            inset.legend(fontsize=5)
            info["inset"] = True

    ax = axes[-1]
    for g in gammas:
        mask = np.isclose(sweep["gamma_refl"], g)
        tau_g = sweep["tau"][mask]
        fid_g = sweep["fidelity"][mask]
        order = np.argsort(tau_g)
        tau_g, fid_g = tau_g[order], fid_g[order]
        style = "o" if info["markers_only"] else "-"
        line, = ax.plot(tau_g, fid_g, style, lw=1.1, ms=3,
                        label=f"reflection rate {g:g}")
        best = np.argmax(fid_g)
        ax.plot(tau_g[best], fid_g[best], "*", ms=9, color=line.get_color())
        info["curves"] += 1
    ax.set_xlabel("pulse width (units of inverse decay rate)", fontsize=8)
    ax.set_ylabel("subtraction fidelity", fontsize=8)
    ax.set_ylim(0.0, 1.0)
    ax.legend(fontsize=6)
    ax.set_title("single-photon subtraction fidelity", fontsize=9)

    fig.savefig(recipe.out_path, dpi=recipe.dpi)
    plt.close(fig)
    return recipe.out_path, info


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--figure", choices=("fig3", "fig4"), required=True)
    parser.add_argument("--input", required=True, help="directory of pipeline CSVs")
    parser.add_argument("--out", required=True, help="output image file")
    args = parser.parse_args(argv)
    recipe = FigureRecipe(input_dir=Path(args.input), out_path=Path(args.out))
    try:
        if args.figure == "fig3":
            _, info = render_timeseries(recipe)
        else:
            _, info = render_fidelity_sweep(recipe)
    except RenderError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out} ({info})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
