"""Asymptotic cycle estimators for parametrized curves on flat tori.

Five routes to the same limit, each normalizing by the parameter span:
closing by short geodesics, calibrating-function increments, integration of
closed 1-forms, lifts of circle-valued maps, and signed crossings of level
hypersurfaces. On the flat torus the constant part of a closed form
integrates to the lift displacement exactly, and signed level crossings
telescope to floor differences, so every estimator reduces to exact
endpoint arithmetic plus an O(1/(t-s)) term that distinguishes the routes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .forms import TestForm, TrigPolynomial
from .homology import CalibratingFunction, ClosingStrategy, PLPath

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class CircleValuedMap:
    """Map T^n -> T of the form x -> <m, x> + g(x) with g periodic."""

    def __init__(self, integer_class, trig: TrigPolynomial | None = None):
        self.integer_class = np.asarray(integer_class, dtype=float)
        if np.any(self.integer_class != np.round(self.integer_class)):
            raise ValueError("circle map class must be integral")
        self.trig = trig

    def lift_along(self, lift_points) -> np.ndarray:
        x = np.asarray(lift_points, dtype=float)
        out = x @ self.integer_class
        if self.trig is not None and self.trig.terms:
            out = out + self.trig(x)
        return out


# ---- curve sources -----------------------------------------------------


class LinearFlowCurve:
    """Orbit of a constant flow: lift(t) = x0 + t v, defined for all t."""

    def __init__(self, x0, velocity):
        self.x0 = np.asarray(x0, dtype=float)
        self.v = np.asarray(velocity, dtype=float)
        self.t_min = -math.inf
        self.t_max = math.inf

    @property
    def dim(self) -> int:
        return self.x0.size

    def lift_at(self, t):
        t = np.asarray(t, dtype=float)
        return self.x0 + t[..., None] * self.v if t.ndim else self.x0 + t * self.v

    def interior_vertex_lifts(self, s: float, t: float) -> np.ndarray:
        return np.empty((0, self.dim))


class SampledCurve:
    """Curve backed by a PLPath (a leaf trace or an explicit fixture)."""

    def __init__(self, path: PLPath):
        self.path = path
        self.t_min = path.t_min
        self.t_max = path.t_max

    @property
    def dim(self) -> int:
        return self.path.dim

    def lift_at(self, t):
        return self.path.lift_at(t)

    def interior_vertex_lifts(self, s: float, t: float) -> np.ndarray:
        sel = (self.path.params > s) & (self.path.params < t)
        return self.path.vertices[sel]


def curve_from_trace(trace) -> SampledCurve:
    return SampledCurve(trace.path)


# ---- estimates ---------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticEstimate:
    s: float
    t: float
    value: tuple          # vector estimate, or 1-tuple for scalar estimators
    estimator: str

    @property
    def span(self) -> float:
        return self.t - self.s

    def array(self) -> np.ndarray:
        return np.asarray(self.value, dtype=float)


@dataclass
class EstimatorRun:
    estimates: list
    converged: bool
    limit: tuple | None
    estimator: str
    note: str = ""

    def values(self) -> np.ndarray:
        return np.stack([e.array() for e in self.estimates])


def _declare(estimates, tol: float, window: int = 5) -> EstimatorRun:
    tag = estimates[0].estimator if estimates else "?"
    if len(estimates) < window:
        return EstimatorRun(estimates, False, None, tag, "horizon schedule too short")
    tail = np.stack([e.array() for e in estimates[-window:]])
    spread = np.max(np.linalg.norm(tail - tail.mean(axis=0), axis=1))
    if spread <= tol:
        return EstimatorRun(estimates, True, tuple(estimates[-1].array()), tag)
    return EstimatorRun(estimates, False, None, tag,
                        f"Cauchy window spread {spread:.3e} above {tol:.3e}")


def symmetric_horizons(t_min: float = 10.0, t_max: float = 1e4, count: int = 25):
    ts = np.geomspace(t_min, t_max, count)
    return [(-t, t) for t in ts]


def one_sided_horizons(t_min: float, t_max: float, count: int = 25,
                       anchor: float = 0.0):
    ts = np.geomspace(t_min, t_max, count)
    return [(anchor, anchor + t) for t in ts]


def asymptotic_class_closing(curve, horizons, tol: float = 0.01,
                             strategy: ClosingStrategy | None = None) -> EstimatorRun:
    strategy = strategy or ClosingStrategy()
    ests = []
    for s, t in horizons:
        ps, pt = curve.lift_at(s), curve.lift_at(t)
        d = strategy.displacement(ps - pt)
        cls = (pt - ps) + d
        ests.append(AsymptoticEstimate(s, t, tuple(cls / (t - s)), "closing"))
    return _declare(ests, tol)


def asymptotic_class_calibrating(curve, phi: CalibratingFunction, horizons,
                                 tol: float = 0.01) -> EstimatorRun:
    ests = []
    for s, t in horizons:
        val = (phi(curve.lift_at(t)) - phi(curve.lift_at(s))) / (t - s)
        ests.append(AsymptoticEstimate(s, t, tuple(val), "calibrating"))
    return _declare(ests, tol)


def form_integral(curve, form: TestForm, s: float, t: float) -> float:
    """Exact integral of the closed form along c|[s,t]."""
    a = form.constant_array()
    ps, pt = curve.lift_at(s), curve.lift_at(t)
    val = float(a @ (pt - ps))
    if form.has_exact():
        val += float(form.potential(pt) - form.potential(ps))
    return val


def asymptotic_class_form(curve, horizons, forms=None, tol: float = 0.01) -> EstimatorRun:
    """Vector estimate from the basis forms dx_j (each optionally plus d phi)."""
    dim = curve.dim
    if forms is None:
        forms = [TestForm(tuple(np.eye(dim)[j])) for j in range(dim)]
    if len(forms) != dim:
        raise ValueError("need one form per coordinate for a vector estimate")
    ests = []
    for s, t in horizons:
        vals = [form_integral(curve, f, s, t) / (t - s) for f in forms]
        ests.append(AsymptoticEstimate(s, t, tuple(vals), "form"))
    return _declare(ests, tol)


def asymptotic_class_circle_map(curve, cmap: CircleValuedMap, horizons,
                                tol: float = 0.01) -> EstimatorRun:
    """Scalar estimate: lift-displacement rate of f o c; limit <m, [c]>."""
    ests = []
    for s, t in horizons:
        val = (cmap.lift_along(curve.lift_at(t)) - cmap.lift_along(curve.lift_at(s))) / (t - s)
        ests.append(AsymptoticEstimate(s, t, (float(val),), "circle-map"))
    return _declare(ests, tol)


def circle_map_class_vector(curve, horizons, trig: TrigPolynomial | None = None,
                            tol: float = 0.01) -> EstimatorRun:
    """Vector estimate from the coordinate projections as circle-valued maps."""
    dim = curve.dim
    runs = []
    for j in range(dim):
        cmap = CircleValuedMap(np.eye(dim)[j], trig)
        runs.append(asymptotic_class_circle_map(curve, cmap, horizons, tol))
    ests = []
    for k in range(len(horizons)):
        s, t = horizons[k]
        vec = tuple(r.estimates[k].value[0] for r in runs)
        ests.append(AsymptoticEstimate(s, t, vec, "circle-map"))
    return _declare(ests, tol)


class TangentCrossing(Exception):
    pass


LOW_DISCREPANCY_SEED = 0.5


def _level_sequence(m: int) -> float:
    return float(np.mod(LOW_DISCREPANCY_SEED + m * GOLDEN, 1.0))


def crossing_rate(curve, horizons, axis: int | None = None, tol: float = 0.01,
                  max_retries: int = 16) -> EstimatorRun:
    """Signed crossings of the level hypersurfaces {x_j = c} per unit parameter.

    Signed crossings of a continuous coordinate path with all translates of a
    level telescope to a floor difference, so only tangencies need care:
    levels are drawn from a fixed low-discrepancy sequence and resampled when
    a curve vertex lies on the hypersurface.
    """
    dim = curve.dim
    axes = range(dim) if axis is None else [axis]
    values = {}
    for j in axes:
        for retry in range(max_retries):
            c = _level_sequence(retry)
            try:
                values[j] = [_signed_crossings(curve, j, c, s, t) for s, t in horizons]
                break
            except TangentCrossing:
                continue
        else:
            raise RuntimeError(f"no regular level found for axis {j}")
    ests = []
    for k, (s, t) in enumerate(horizons):
        vec = tuple(values[j][k] / (t - s) for j in axes)
        ests.append(AsymptoticEstimate(s, t, vec, "crossing"))
    return _declare(ests, tol)


def _signed_crossings(curve, j: int, c: float, s: float, t: float,
                      tangent_tol: float = 1e-9) -> float:
    ends = np.stack([curve.lift_at(s), curve.lift_at(t)])
    pts = np.vstack([ends, curve.interior_vertex_lifts(s, t)])
    rel = pts[:, j] - c
    if np.any(np.abs(rel - np.round(rel)) < tangent_tol):
        raise TangentCrossing()
    return float(math.floor(ends[1, j] - c) - math.floor(ends[0, j] - c))


def five_estimator_table(curve, horizons, phi: CalibratingFunction | None = None,
                         trig: TrigPolynomial | None = None, tol: float = 0.01):
    """All five estimators on one curve; returns {name: EstimatorRun}."""
    dim = curve.dim
    phi = phi or CalibratingFunction(dim, kind="identity")
    forms = None
    if trig is not None:
        forms = [TestForm(tuple(np.eye(dim)[j]), trig) for j in range(dim)]
    return {
        "closing": asymptotic_class_closing(curve, horizons, tol),
        "calibrating": asymptotic_class_calibrating(curve, phi, horizons, tol),
        "form": asymptotic_class_form(curve, horizons, forms, tol),
        "circle-map": circle_map_class_vector(curve, horizons, trig, tol),
        "crossing": crossing_rate(curve, horizons, None, tol),
    }


def pairwise_agreement(table: dict) -> float:
    """Largest pairwise distance between declared limits at the final horizon."""
    finals = {name: run.estimates[-1].array() for name, run in table.items()}
    names = list(finals)
    worst = 0.0
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            worst = max(worst, float(np.max(np.abs(finals[names[i]] - finals[names[j]]))))
    return worst


# ---- cluster sets ------------------------------------------------------


@dataclass
class ClusterEstimate:
    full: list
    positive: list
    negative: list
    balanced: list

    def direction_set(self, norm_floor: float = 0.05) -> np.ndarray:
        pts = [np.asarray(p) for p in self.full + self.positive + self.negative]
        dirs = [p / np.linalg.norm(p) for p in pts if np.linalg.norm(p) > norm_floor]
        return np.asarray(dirs) if dirs else np.empty((0, 2))


def _greedy_cluster(points, radius: float):
    reps = []
    for p in points:
        for k, (q, cnt) in enumerate(reps):
            if np.linalg.norm(p - q) <= radius:
                reps[k] = ((q * cnt + p) / (cnt + 1), cnt + 1)
                break
        else:
            reps.append((np.asarray(p, dtype=float), 1))
    return [tuple(q) for q, _ in reps]


def cluster_estimate(curve, horizon_grid, ratio_grid=(0.3, 0.5, 0.7),
                     radius: float = 0.02, tail_fraction: float = 0.5,
                     anchor: float = 0.0,
                     strategy: ClosingStrategy | None = None) -> ClusterEstimate:
    """Finite approximation of the Schwartzman cluster sets over a grid.

    Two-sided values use (s, t) = (anchor - (1-r) h, anchor + r h) clipped to
    the curve domain; one-sided clusters use the anchored tails. Accumulation
    points are approximated by greedy clustering of the values in the top
    ``tail_fraction`` of horizons.
    """
    strategy = strategy or ClosingStrategy()
    hs = np.asarray(sorted(horizon_grid), dtype=float)
    tail_cut = hs[int(len(hs) * (1.0 - tail_fraction))] if len(hs) > 1 else hs[0]

    def closing_value(s, t):
        ps, pt = curve.lift_at(s), curve.lift_at(t)
        return (pt - ps + strategy.displacement(ps - pt)) / (t - s)

    full, pos, neg = [], [], []
    pos_seq, neg_seq = [], []
    for h in hs:
        t_pos = min(anchor + h, curve.t_max)
        s_neg = max(anchor - h, curve.t_min)
        if t_pos > anchor:
            v = closing_value(anchor, t_pos)
            pos_seq.append((h, v))
            if h >= tail_cut:
                pos.append(v)
        if s_neg < anchor:
            v = closing_value(s_neg, anchor)
            neg_seq.append((h, v))
            if h >= tail_cut:
                neg.append(v)
        for r in ratio_grid:
            t = min(anchor + r * h, curve.t_max)
            s = max(anchor - (1.0 - r) * h, curve.t_min)
            if t > s and h >= tail_cut:
                full.append(closing_value(s, t))

    balanced = []
    if pos and neg:
        pos_tail = np.stack(pos)
        neg_tail = np.stack(neg)
        if (np.max(np.linalg.norm(pos_tail - pos_tail.mean(axis=0), axis=1)) <= radius
                and np.max(np.linalg.norm(neg_tail - neg_tail.mean(axis=0), axis=1)) <= radius):
            a = pos_tail.mean(axis=0)
            b = neg_tail.mean(axis=0)
            for tau in np.linspace(0.0, 1.0, 5):
                balanced.append(tau * a + (1.0 - tau) * b)

    return ClusterEstimate(
        full=_greedy_cluster(full, radius),
        positive=_greedy_cluster(pos, radius),
        negative=_greedy_cluster(neg, radius),
        balanced=_greedy_cluster(balanced, radius),
    )


# ---- fixtures ----------------------------------------------------------


def two_ray_oscillator(n_excursions: int = 14, growth: float = 1.8,
                       base=(0.11, 0.13), first_leg: float = 1.0) -> SampledCurve:
    """Axis-hugging oscillator: alternating out-and-back excursions along the
    positive x and y axes with geometrically growing lengths, unbounded for
    t -> +infinity and bounded (a small loop) for t -> -infinity. Its cluster
    directions accumulate on both coordinate axes.
    """
    b = np.asarray(base, dtype=float)
    verts = [b.copy()]
    for k in range(n_excursions):
        ax = k % 2
        leg = first_leg * growth ** k
        tip = verts[-1].copy()
        tip[ax] += leg
        verts.append(tip)
        back = verts[-1].copy()
        back[ax] -= leg
        verts.append(back)
    pos_verts = np.asarray(verts)
    # bounded negative-time tail: repeat a small square loop
    side = 0.04
    square = [b]
    for k in range(12):
        p = square[-1].copy()
        p[[0, 1][k % 2]] += side * (1 if (k // 2) % 2 == 0 else -1)
        square.append(p)
    neg_verts = np.asarray(square[::-1])
    allverts = np.vstack([neg_verts[:-1], pos_verts])
    lens = np.linalg.norm(np.diff(allverts, axis=0), axis=1)
    params = np.concatenate([[0.0], np.cumsum(lens)])
    params = params - params[len(neg_verts) - 1]   # anchor 0 at the junction
    path = PLPath(allverts, mode="time", params=params)
    return SampledCurve(path)
