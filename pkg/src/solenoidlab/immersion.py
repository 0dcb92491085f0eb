"""Realization of H_1(T^n, R) by immersed measured Denjoy suspensions.

A target class a is decomposed as a positive combination over a library of
integer cycles through a common base box. The Cantor set of a Denjoy base is
partitioned with matching masses, and the leaf through a point of K_i
traverses a translate of the i-th loop per return, re-entering the base box
through a short junction. Branch leaves ride parallel to the branch core,
offset by the Cantor coordinate times the ribbon half-width, so crossing
measures factor as products of arc measures.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .circle import (
    CantorPartition,
    DenjoyMap,
    MorseSmaleMap,
    RotationNumber,
    denjoy_build,
    frac,
    partition_by_weights,
)
from .homology import HomologyVector, PLPath
from .plgeom import loop_crossings
from .suspension import AtomicTransversalMeasure, SuspensionSolenoid, TransversalMeasure


def smoothstep_profile(t, c: float = 0.1):
    """Isotopy profile: rho(0)=1, rho(c)=0, rho' < 0 on (0, c)."""
    u = np.clip(np.asarray(t, dtype=float) / c, 0.0, 1.0)
    return 1.0 - (3.0 * u * u - 2.0 * u ** 3)


def loop_vertices_for_class(cls: np.ndarray, basepoint: np.ndarray,
                            drift: float = 0.02) -> np.ndarray:
    """Deterministic PL loop through ``basepoint`` with the given integer class.

    Primitive classes get the straight lattice geodesic (one segment). A
    class d*c0 with d > 1 runs d near-parallel segments with a small
    transverse sawtooth drift so consecutive wraps cross transversally
    instead of overlapping.
    """
    cls = np.asarray(cls, dtype=float)
    ints = cls.astype(int)
    if np.any(cls != ints) or np.all(ints == 0):
        raise ValueError("loop class must be a nonzero integer vector")
    d = int(np.gcd.reduce(np.abs(ints)[np.abs(ints) > 0]))
    c0 = ints / d
    if d == 1:
        return np.stack([basepoint, basepoint + cls])
    # transverse unit vector in the plane of the first two nonzero axes
    normal = np.zeros_like(cls)
    if len(cls) >= 2:
        normal[0], normal[1] = -c0[1], c0[0]
        nn = np.linalg.norm(normal)
        if nn == 0.0:
            normal[0], normal[1] = 1.0, 0.0
            nn = 1.0
        normal /= nn
    verts = [basepoint + k * c0 + drift * math.sin(math.pi * k / d) * normal
             for k in range(d + 1)]
    return np.asarray(verts)


@dataclass(frozen=True)
class CycleLibrary:
    """Loops gamma_1..gamma_r through a common base box with integer classes."""

    classes: tuple                      # tuple of integer class tuples
    base_center: tuple = (0.5, 0.5)
    base_radius: float = 0.12
    lane_spread: float = 0.05
    mode: str = "immerse"               # "immerse" (n=2) or "embed" (n>=3)

    def __post_init__(self):
        if len(self.classes) == 0:
            raise ValueError("library needs at least one cycle")
        dim = len(self.classes[0])
        if any(len(c) != dim for c in self.classes):
            raise ValueError("all classes must share one dimension")
        if self.mode == "embed" and dim < 3:
            raise ValueError("embed mode needs ambient dimension >= 3")
        if self.lane_spread >= self.base_radius:
            raise ValueError("lanes must stay inside the base box")

    @property
    def dim(self) -> int:
        return len(self.classes[0])

    @property
    def size(self) -> int:
        return len(self.classes)

    def lane_offset(self, i: int) -> np.ndarray:
        # distinct lanes on a diagonal through the box; deterministic
        r = self.size
        off = (i - (r - 1) / 2.0) / max(r - 1, 1) * 2.0 * self.lane_spread if r > 1 else 0.0
        v = np.zeros(self.dim)
        v[-1] = off
        if self.dim >= 3:
            v[-2] = off / 3.0
        return v

    def basepoint(self, i: int) -> np.ndarray:
        return np.asarray(self.base_center, float) + self.lane_offset(i)

    def loop(self, i: int, orientation: int = 1) -> np.ndarray:
        cls = orientation * np.asarray(self.classes[i], dtype=float)
        return loop_vertices_for_class(cls, self.basepoint(i))


@dataclass
class Decomposition:
    """Positive decomposition a = scale * sum lambda_i * (sign_i * C_i)."""

    indices: tuple
    orientations: tuple
    weights: tuple
    scale: float

    def classes(self, library: CycleLibrary):
        return [self.orientations[k] * np.asarray(library.classes[i], float)
                for k, i in enumerate(self.indices)]


def positive_decomposition(a, library: CycleLibrary, tol: float = 1e-9) -> Decomposition:
    """Coefficients over the library, allowing orientation flips, all positive."""
    a = np.asarray(a, dtype=float)
    if a.size != library.dim:
        raise ValueError("class dimension does not match the library")
    if np.allclose(a, 0.0):
        raise ValueError("cannot realize the zero class")
    cols = np.asarray(library.classes, dtype=float).T
    r = cols.shape[1]
    if r == a.size and abs(np.linalg.det(cols)) > tol:
        x = np.linalg.solve(cols, a)
    else:
        # allow flips by doubling the column set, then nonnegative least squares
        doubled = np.hstack([cols, -cols])
        sol, resid = nnls(doubled, a)
        if resid > 1e-8 * max(1.0, np.linalg.norm(a)):
            raise ValueError("no positive decomposition over the library")
        x = sol[:r] - sol[r:]
    keep = np.abs(x) > tol
    if not np.any(keep):
        raise ValueError("no positive decomposition over the library")
    idx = tuple(int(i) for i in np.nonzero(keep)[0])
    orient = tuple(1 if x[i] > 0 else -1 for i in idx)
    mags = np.array([abs(x[i]) for i in idx])
    scale = float(mags.sum())
    return Decomposition(indices=idx, orientations=orient,
                         weights=tuple(mags / scale), scale=scale)


class ImmersedSolenoid:
    """Measured Denjoy (or Morse-Smale) suspension immersed in T^n."""

    def __init__(self, suspension: SuspensionSolenoid, partition: CantorPartition,
                 library: CycleLibrary, decomposition: Decomposition,
                 ribbon_halfwidth: float = 0.01, junction_window: float = 0.1,
                 measure_scale: float = 1.0, translation=None):
        self.suspension = suspension
        self.partition = partition
        self.library = library
        self.decomposition = decomposition
        self.ribbon_halfwidth = float(ribbon_halfwidth)
        self.junction_window = float(junction_window)
        self.measure_scale = float(measure_scale)
        self.translation = np.zeros(library.dim) if translation is None else np.asarray(translation, float)
        if len(partition.weights) != len(decomposition.indices):
            raise ValueError("partition and decomposition sizes differ")
        max_lane = max(np.max(np.abs(library.lane_offset(i))) for i in decomposition.indices)
        if max_lane + ribbon_halfwidth >= library.base_radius:
            raise ValueError("ribbon exceeds the base box; shrink lanes or ribbon width")
        self._branch_loops = [
            library.loop(i, o) + self.translation
            for i, o in zip(decomposition.indices, decomposition.orientations)
        ]
        self._branch_classes = [np.round(v[-1] - v[0]).astype(float)
                                for v in self._branch_loops]
        if library.mode == "embed":
            self._check_embedded_disjoint()

    # ---- basic structure -------------------------------------------

    def isotopy_profile(self, t):
        """Blend profile for the junction window: 1 at 0, 0 at the window end."""
        return smoothstep_profile(t, self.junction_window)

    @property
    def trapping_epsilon(self) -> float:
        """Half-width of the time window around returns that stays in the base box."""
        max_lane = max(float(np.max(np.abs(self.library.lane_offset(i))))
                       for i in self.decomposition.indices)
        clearance = self.library.base_radius - max_lane - self.ribbon_halfwidth
        max_len = max(float(np.linalg.norm(np.diff(L, axis=0), axis=1).sum())
                      for L in self._branch_loops)
        exit_time = (1.0 - self.junction_window) * clearance / max_len
        return min(self.junction_window, exit_time)

    @property
    def dim(self) -> int:
        return self.library.dim

    @property
    def n_branches(self) -> int:
        return len(self._branch_loops)

    @property
    def base_map(self):
        return self.suspension.base_map

    def branch_loop(self, k: int) -> np.ndarray:
        """Lift vertices of the k-th branch core loop."""
        return self._branch_loops[k]

    def branch_class(self, k: int) -> np.ndarray:
        return self._branch_classes[k]

    def branch_weight(self, k: int) -> float:
        return self.partition.weights[k]

    def branch_measure(self, k: int) -> float:
        """Transversal measure carried by branch k (scaled)."""
        return self.measure_scale * self.partition.weights[k]

    def weighted_class_sum(self) -> HomologyVector:
        total = sum(self.branch_measure(k) * self.branch_class(k)
                    for k in range(self.n_branches))
        return HomologyVector(tuple(total))

    def base_center(self) -> np.ndarray:
        return np.asarray(self.library.base_center, float) + self.translation

    def in_base_box(self, pts, slack: float = 1e-9) -> np.ndarray:
        rel = frac(np.atleast_2d(pts) - self.base_center() + 0.5) - 0.5
        return np.all(np.abs(rel) <= self.library.base_radius + slack, axis=1)

    def translate(self, v) -> "ImmersedSolenoid":
        """Translate the immersion; a homotopy, so the current is unchanged."""
        return ImmersedSolenoid(
            self.suspension, self.partition, self.library, self.decomposition,
            ribbon_halfwidth=self.ribbon_halfwidth,
            junction_window=self.junction_window,
            measure_scale=self.measure_scale,
            translation=self.translation + np.asarray(v, float),
        )

    def _check_embedded_disjoint(self):
        pts = 64
        for a in range(self.n_branches):
            for b in range(a + 1, self.n_branches):
                va, vb = self._branch_loops[a], self._branch_loops[b]
                sa = np.concatenate([np.linspace(va[i], va[i + 1], pts)
                                     for i in range(len(va) - 1)])
                sb = np.concatenate([np.linspace(vb[i], vb[i + 1], pts)
                                     for i in range(len(vb) - 1)])
                diff = frac(sa[:, None, :] - sb[None, :, :] + 0.5) - 0.5
                d = np.linalg.norm(diff, axis=2)
                outside = ~self.in_base_box(np.mod(sa, 1.0))
                if np.any(d[outside] < 2.0 * self.ribbon_halfwidth):
                    raise ValueError("branch ribbons come closer than the ribbon width outside the base box")

    # ---- leaf dynamics ----------------------------------------------

    def branch_itinerary(self, x0: float, n_returns: int) -> np.ndarray:
        """Branch index visited at each of the first n returns of the leaf."""
        ys = self.base_map.orbit_base(x0, n_returns)
        return self.partition.member_index_base(ys)

    def increments(self, x0: float, n_returns: int) -> np.ndarray:
        it = self.branch_itinerary(x0, n_returns)
        return np.asarray([self._branch_classes[k] for k in it])

    def trace_leaf(self, x0: float, n_returns: int, mode: str = "time") -> "LeafTrace":
        """PL trace of the leaf through transversal point x0 over n returns.

        Return k occupies parameter window [k, k+1): the branch loop is
        traversed on [k, k+1-w] at constant speed and the junction segment
        back into the base box fills [k+1-w, k+1], w the junction window.
        """
        if n_returns < 1:
            raise ValueError("need at least one return")
        base = self.base_map
        if isinstance(base, DenjoyMap) and base.gap_containing(x0) is not None:
            raise ValueError("leaf basepoint lies in a gap, not on the Cantor set")
        it = self.branch_itinerary(x0, n_returns + 1)
        # ribbon offsets from the transversal coordinate of each return point
        if isinstance(base, DenjoyMap):
            us = base.new_from_base(base.orbit_base(x0, n_returns + 1))
        else:
            us = base.orbit_base(x0, n_returns + 1)
        delta = self.ribbon_halfwidth
        w = self.junction_window
        verts = []
        times = []
        lam = np.zeros(self.dim)
        incs = np.empty((n_returns, self.dim))
        for k in range(n_returns):
            i = int(it[k])
            seg = self._branch_loops[i] + lam + us[k] * delta * self._branch_normal(i)
            t_loop = np.concatenate(
                [[0.0], np.cumsum(np.linalg.norm(np.diff(seg, axis=0), axis=1))])
            verts.extend(seg)
            times.extend(k + (1.0 - w) * t_loop / t_loop[-1])
            incs[k] = self._branch_classes[i]
            lam = lam + self._branch_classes[i]
        # final transversal crossing closes the last junction
        i_end = int(it[n_returns])
        verts.append(self._branch_loops[i_end][0] + lam
                     + us[n_returns] * delta * self._branch_normal(i_end))
        times.append(float(n_returns))
        verts = np.asarray(verts)
        times = np.asarray(times)
        keep = np.concatenate(
            [[True], np.linalg.norm(np.diff(verts, axis=0), axis=1) > 1e-12])
        verts = verts[keep]
        times = times[keep]
        if mode == "time":
            path = PLPath(verts, mode="time", params=times)
        elif mode == "arclength":
            path = PLPath(verts, mode="arclength")
        else:
            raise ValueError(f"unknown trace mode {mode!r}")
        return LeafTrace(path=path, increments=incs, mode=mode,
                         basepoint=float(x0), solenoid=self)

    def _branch_normal(self, i: int) -> np.ndarray:
        loop = self._branch_loops[i]
        d = loop[1] - loop[0]
        n = np.zeros_like(d)
        if self.dim >= 2:
            n[0], n[1] = -d[1], d[0]
        nn = np.linalg.norm(n)
        if nn == 0.0:
            n[0] = 1.0
            nn = 1.0
        return n / nn

    def _leaf_arrays(self, x0: float, n_returns: int):
        """Vectorized itinerary, crossing positions and per-return lengths."""
        base = self.base_map
        it = self.branch_itinerary(x0, n_returns + 1)
        if isinstance(base, DenjoyMap):
            us = base.new_from_base(base.orbit_base(x0, n_returns + 1))
        else:
            us = base.orbit_base(x0, n_returns + 1)
        basepts = np.stack([self._branch_loops[k][0] for k in range(self.n_branches)])
        normals = np.stack([self._branch_normal(k) for k in range(self.n_branches)])
        classes = np.stack(self._branch_classes)
        q = basepts[it] + us[:, None] * self.ribbon_halfwidth * normals[it]
        loop_len = np.asarray([np.linalg.norm(np.diff(L, axis=0), axis=1).sum()
                               for L in self._branch_loops])
        junction = np.linalg.norm(q[1:] - q[:-1], axis=1)
        lengths = loop_len[it[:-1]] + junction
        return it, q, classes, lengths

    def leaf_horizon_classes(self, x0: float, horizons, mode: str = "time"):
        """Normalized classes [c_{0,T_N}]/T_N at return-indexed horizons.

        Equivalent to closing the traced leaf at each horizon, but computed
        from the itinerary without building the PL trace.
        """
        horizons = np.asarray(horizons, dtype=int)
        n = int(horizons.max())
        it, q, classes, lengths = self._leaf_arrays(x0, n)
        cum_cls = np.vstack([np.zeros(self.dim), np.cumsum(classes[it[:-1]], axis=0)])
        lift = q + cum_cls
        disp = lift[horizons] - lift[0]
        cls = np.round(disp)   # closing by the minimal torus geodesic
        if mode == "time":
            spans = horizons.astype(float)
        elif mode == "arclength":
            cumlen = np.concatenate([[0.0], np.cumsum(lengths)])
            spans = cumlen[horizons]
        else:
            raise ValueError(f"unknown mode {mode!r}")
        return cls / spans[:, None]

    def mean_return_length(self, x0: float | None = None, n_returns: int = 20000) -> float:
        """Measured mean arc length of one return along a leaf."""
        if x0 is None:
            x0 = self.partition.boundaries[0] + 1e-3
            if isinstance(self.base_map, DenjoyMap):
                x0 = float(self.base_map.new_from_base(
                    frac(self.partition.base_boundaries[0] + 1e-4)))
        _, _, _, lengths = self._leaf_arrays(x0, n_returns)
        return float(lengths.mean())

    # ---- crossings ---------------------------------------------------

    def crossing_inventory(self):
        """Self and pairwise transverse crossing families of the branch cores."""
        if self.dim != 2:
            return []
        from .intersection import CrossingRecord  # local import to avoid cycle
        out = []
        for a in range(self.n_branches):
            for b in range(a, self.n_branches):
                skip_shared = a == b
                loops_a = self._branch_loops[a]
                loops_b = self._branch_loops[b]
                if a == b:
                    hits = _self_crossings(loops_a)
                else:
                    hits = loop_crossings(loops_a, loops_b)
                for c in hits:
                    out.append(CrossingRecord(
                        branch_a=a, branch_b=b, point=c.point, sign=c.sign,
                        sin_angle=c.sin_angle,
                        measure_a=self.branch_measure(a),
                        measure_b=self.branch_measure(b),
                    ))
        return out

    # ---- serialization -----------------------------------------------

    def manifest_dict(self) -> dict:
        base = self.base_map
        if isinstance(base, DenjoyMap):
            base_spec = {"type": "denjoy", "alpha": base.alpha,
                         "gap_c": base.gaps.c, "gap_n_max": base.gaps.n_max}
        elif isinstance(base, MorseSmaleMap):
            base_spec = {"type": "morse_smale",
                         "fixed_points": [[p, k] for p, k in zip(base.fixed_points, base.kinds)]}
        else:
            base_spec = {"type": "rotation", "alpha": base.alpha}
        return {
            "base_map": base_spec,
            "classes": [list(map(int, c)) for c in self.library.classes],
            "base_center": list(self.library.base_center),
            "base_radius": self.library.base_radius,
            "lane_spread": self.library.lane_spread,
            "mode": self.library.mode,
            "decomposition": {
                "indices": list(self.decomposition.indices),
                "orientations": list(self.decomposition.orientations),
                "weights": list(self.decomposition.weights),
                "scale": self.decomposition.scale,
            },
            "weights": list(self.partition.weights),
            "ribbon_halfwidth": self.ribbon_halfwidth,
            "junction_window": self.junction_window,
            "measure_scale": self.measure_scale,
            "translation": list(self.translation),
        }

    def manifest_text(self) -> str:
        return json.dumps(self.manifest_dict(), indent=2, sort_keys=True)


def _self_crossings(loop: np.ndarray):
    out = []
    n = len(loop) - 1
    for i in range(n):
        for j in range(i + 1, n):
            out.extend(loop_crossings(loop[i:i + 2], loop[j:j + 2],
                                      skip_shared_endpoints=True))
    return out


@dataclass
class LeafTrace:
    """PL leaf trace with its lift and per-return homology increments."""

    path: PLPath
    increments: np.ndarray
    mode: str
    basepoint: float
    solenoid: ImmersedSolenoid = field(repr=False)

    def increment_sum(self) -> np.ndarray:
        return self.increments.sum(axis=0)

    def lift_defect(self) -> float:
        """|lift displacement - sum of increments|; bounded by box + loop size."""
        disp = self.path.vertices[-1] - self.path.vertices[0]
        return float(np.linalg.norm(disp - self.increment_sum()))


def realize(a, library: CycleLibrary, base_map: DenjoyMap | None = None,
            ribbon_halfwidth: float = 0.01,
            junction_window: float = 0.1) -> ImmersedSolenoid:
    """Realize a real 1-homology class as a measured immersed Denjoy suspension.

    The returned solenoid carries transversal measure ``scale`` times the
    probability measure, so its generalized current equals ``a`` on the nose.
    """
    a = np.asarray(a, dtype=float)
    dec = positive_decomposition(a, library)
    if base_map is None:
        base_map = denjoy_build(RotationNumber.golden())
    part = partition_by_weights(base_map, dec.weights)
    susp = SuspensionSolenoid(base_map, TransversalMeasure(base_map))
    return ImmersedSolenoid(susp, part, library, dec,
                            ribbon_halfwidth=ribbon_halfwidth,
                            junction_window=junction_window,
                            measure_scale=dec.scale)


def immersed_from_atoms(ms_map: MorseSmaleMap, atoms, library: CycleLibrary,
                        ribbon_halfwidth: float = 0.01) -> ImmersedSolenoid:
    """Morse-Smale fixture: atoms (point, weight, library index, orientation)."""
    pts = [p for p, _, _, _ in atoms]
    ws = np.asarray([w for _, w, _, _ in atoms], dtype=float)
    total = ws.sum()
    idx = tuple(int(i) for _, _, i, _ in atoms)
    orient = tuple(int(o) for _, _, _, o in atoms)
    dec = Decomposition(indices=idx, orientations=orient,
                        weights=tuple(ws / total), scale=float(total))
    # partition the circle into arcs around each atom, in cyclic order
    order = np.argsort(pts)
    bounds = []
    r = len(pts)
    for k in range(r):
        p = pts[order[k]]
        q = pts[order[(k + 1) % r]]
        bounds.append(frac(p + 0.5 * frac(q - p)))
    starts = [bounds[k - 1] for k in range(r)]
    inv = np.argsort(order)
    part = CantorPartition(
        boundaries=tuple(float(starts[inv[k]]) for k in range(r)),
        base_boundaries=tuple(float(starts[inv[k]]) for k in range(r)),
        weights=tuple(float(w / total) for w in ws))
    meas = AtomicTransversalMeasure(ms_map, [(p, w / total) for p, w in zip(pts, ws)])
    susp = SuspensionSolenoid(ms_map, meas)
    return ImmersedSolenoid(susp, part, library, dec,
                            ribbon_halfwidth=ribbon_halfwidth,
                            measure_scale=float(total))
