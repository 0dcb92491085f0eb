"""Delimited outputs and figure rendering for experiment runs.

CSV payloads are byte-deterministic for a fixed manifest and seed: floats
are written with repr (shortest round-trip form) and rows in a canonical
order. Figures are rendered headless to PNG next to the tables.
"""

from __future__ import annotations

import csv
import io
import time

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


class RunReport:
    """Stage-timed pass/fail report rendered as structured text."""

    def __init__(self, subcommand: str, manifest_path: str, seed: int):
        self.subcommand = subcommand
        self.manifest_path = manifest_path
        self.seed = seed
        self.stages = []
        self.checks = []
        self.notes = []
        self._t0 = time.perf_counter()
        self._stage_start = self._t0

    def stage(self, name: str):
        now = time.perf_counter()
        self.stages.append((name, now - self._stage_start))
        self._stage_start = now

    def check(self, name: str, passed: bool, detail: str = ""):
        self.checks.append((name, bool(passed), detail))

    def note(self, text: str):
        self.notes.append(text)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def render(self) -> str:
        out = io.StringIO()
        out.write(f"subcommand: {self.subcommand}\n")
        out.write(f"manifest: {self.manifest_path}\n")
        out.write(f"seed: {self.seed}\n")
        out.write(f"status: {'pass' if self.passed else 'FAIL'}\n")
        out.write("checks:\n")
        for name, ok, detail in self.checks:
            mark = "pass" if ok else "FAIL"
            suffix = f"  ({detail})" if detail else ""
            out.write(f"  [{mark}] {name}{suffix}\n")
        for text in self.notes:
            out.write(f"note: {text}\n")
        out.write("wall-clock:\n")
        for name, dt in self.stages:
            out.write(f"  {name}: {dt:.3f} s\n")
        out.write(f"  total: {time.perf_counter() - self._t0:.3f} s\n")
        return out.getvalue()

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.render())


# ---- figures -----------------------------------------------------------


def _new_axes(title: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.set_title(title)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_convergence_figure(rows, path, title="estimator convergence"):
    """rows: (estimator, span, component_index, value)."""
    fig, ax = _new_axes(title)
    series = {}
    for est, span, comp, val in rows:
        series.setdefault((est, comp), []).append((span, val))
    for (est, comp), pts in sorted(series.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                marker=".", label=f"{est}[{comp}]")
    ax.set_xscale("log")
    ax.set_xlabel("horizon span t - s")
    ax.set_ylabel("class estimate")
    ax.legend(fontsize=7, ncol=2)
    _save(fig, path)


def render_torus_loops_figure(solenoid, path, title="branch cores on the torus"):
    fig, ax = _new_axes(title)
    from .plgeom import split_to_cells, vertices_to_segments
    colors = plt.cm.tab10.colors
    for k in range(solenoid.n_branches):
        pieces = split_to_cells(vertices_to_segments(solenoid.branch_loop(k)))
        col = colors[k % len(colors)]
        for p0, p1 in pieces:
            ax.plot([p0[0], p1[0]], [p0[1], p1[1]], color=col, lw=1.4)
        ax.plot([], [], color=col,
                label=f"branch {k}: class {tuple(int(c) for c in solenoid.branch_class(k))}, "
                      f"weight {solenoid.branch_weight(k):.3g}")
    c = np.mod(solenoid.base_center(), 1.0)
    r = solenoid.library.base_radius
    ax.add_patch(plt.Rectangle((c[0] - r, c[1] - r), 2 * r, 2 * r,
                               fill=False, ls="--", color="k", lw=0.8))
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_aspect("equal")
    ax.legend(fontsize=7)
    _save(fig, path)


def render_cluster_figure(cluster, path, title="Schwartzman cluster estimates"):
    fig, ax = _new_axes(title)
    groups = [("full", cluster.full, "o"), ("positive", cluster.positive, "^"),
              ("negative", cluster.negative, "v"), ("balanced", cluster.balanced, "s")]
    for name, pts, mark in groups:
        if pts:
            arr = np.asarray(pts)
            ax.scatter(arr[:, 0], arr[:, 1], marker=mark, s=28, label=name, alpha=0.75)
    ax.axhline(0, color="k", lw=0.5)
    ax.axvline(0, color="k", lw=0.5)
    ax.set_xlabel("component 1")
    ax.set_ylabel("component 2")
    ax.legend(fontsize=8)
    _save(fig, path)


def render_crossings_figure(report, path, title="crossing families"):
    fig, ax = _new_axes(title)
    pos = [r.point for r in report.records if r.sign > 0]
    neg = [r.point for r in report.records if r.sign < 0]
    if pos:
        arr = np.asarray(pos)
        ax.scatter(arr[:, 0], arr[:, 1], color="tab:blue", marker="+", label="+1")
    if neg:
        arr = np.asarray(neg)
        ax.scatter(arr[:, 0], arr[:, 1], color="tab:red", marker="x", label="-1")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(fontsize=8)
    _save(fig, path)


def render_gridform_figure(grid, path, title="rastered dual form"):
    fig, axes = plt.subplots(1, 2, figsize=(8.4, 4.0))
    for ax, comp, name in ((axes[0], grid.eta1, "eta1"), (axes[1], grid.eta2, "eta2")):
        im = ax.imshow(comp.T, origin="lower", extent=(0, 1, 0, 1), cmap="RdBu_r")
        ax.set_title(f"{name} (n={grid.n})")
        fig.colorbar(im, ax=ax, shrink=0.8)
    fig.suptitle(title)
    _save(fig, path)


def render_norm_figure(series, path, title="stable norm sequences"):
    """series: {class label: list of l(n a)/n}."""
    fig, ax = _new_axes(title)
    for label, seq in sorted(series.items()):
        ax.plot(np.arange(1, len(seq) + 1), seq, marker=".", label=label)
    ax.set_xlabel("n")
    ax.set_ylabel("l(n a)/n")
    ax.legend(fontsize=8)
    _save(fig, path)


def render_denjoy_figure(dmap, path, title="Denjoy coordinate change"):
    fig, axes = plt.subplots(1, 2, figsize=(8.4, 4.0))
    ys = np.linspace(0.0, 1.0, 2001)
    axes[0].plot(ys, dmap.new_from_base(ys), lw=0.8)
    axes[0].set_xlabel("base circle y")
    axes[0].set_ylabel("new circle Psi(y)")
    axes[0].set_title("Psi (gap insertion)")
    idx = np.argsort(np.abs(dmap._gap_index))
    axes[1].semilogy(np.abs(dmap._gap_index[idx]), dmap._gap_len[idx], ".", ms=2)
    axes[1].set_xlabel("|orbit index n|")
    axes[1].set_ylabel("gap length")
    axes[1].set_title("gap schedule")
    fig.suptitle(title)
    _save(fig, path)
