"""Base circle dynamics: rigid rotations, Denjoy counterexamples, Morse-Smale maps.

The Denjoy map is built by blowing up the orbit {n*alpha} of a rigid rotation
into gaps of summable lengths. The model is truncated at |n| <= n_max and is
exactly self-consistent at that truncation: the coordinate change Psi, its
inverse pi (the semiconjugacy collapsing gaps), and all arc measures are
computed in closed form, so invariant-measure arithmetic is exact to machine
precision. The truncation only perturbs the map itself by at most the stored
tail bound.

Circle arcs are given as (start, span) with span in (0, 1]; span 1 is the
full circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0


def frac(x):
    return np.mod(x, 1.0)


def arc_span(a: float, b: float) -> float:
    """Span of the positively oriented arc from a to b; b == a means full circle."""
    s = float(frac(b - a))
    return s if s > 0.0 else 1.0


def continued_fraction(x: float, depth: int = 20):
    """Continued fraction digits and convergents p/q of x in (0,1)."""
    cf = []
    conv = []
    p0, q0, p1, q1 = 1, 0, int(math.floor(x)), 1
    y = x
    for _ in range(depth):
        y = y - math.floor(y)
        if y < 1e-15:
            break
        y = 1.0 / y
        a = int(math.floor(y))
        cf.append(a)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        conv.append((p1, q1))
        if q1 > 10 ** 12:
            break
    return cf, conv


@dataclass(frozen=True)
class RotationNumber:
    """Irrational rotation number with its continued-fraction convergents.

    Rationality is not assumed: convergents violating |x - p/q| > 1/q^3 are
    flagged so callers can see when the working precision stops resolving
    the irrationality.
    """

    value: float
    convergents: tuple = ()
    diophantine_flags: tuple = ()

    @classmethod
    def from_value(cls, value: float, depth: int = 20) -> "RotationNumber":
        if not 0.0 < value < 1.0:
            raise ValueError("rotation number must lie in (0,1)")
        _, conv = continued_fraction(value, depth)
        flags = tuple(abs(value - p / q) > 1.0 / q ** 3 for p, q in conv)
        return cls(value=value, convergents=tuple(conv), diophantine_flags=flags)

    @classmethod
    def golden(cls) -> "RotationNumber":
        return cls.from_value(GOLDEN_MEAN)


@dataclass(frozen=True)
class GapSchedule:
    """Summable gap lengths l_n = c / (1 + n^2), truncated at |n| <= n_max.

    The full series sums to c * pi * coth(pi); the closed-form bound
    tau(N) = 2 c arctan(1/N) dominates the omitted tail mass.
    """

    c: float
    n_max: int

    @classmethod
    def unit_total(cls, n_max: int = 2000) -> "GapSchedule":
        s = math.pi / math.tanh(math.pi)
        return cls(c=1.0 / s, n_max=n_max)

    def length(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return self.c / (1.0 + n ** 2)

    @property
    def total(self) -> float:
        return self.c * math.pi / math.tanh(math.pi)

    def tail_bound(self, n_max: int | None = None) -> float:
        n = self.n_max if n_max is None else n_max
        return 2.0 * self.c * math.atan(1.0 / n)


class RigidRotation:
    """z -> z + alpha mod 1."""

    def __init__(self, alpha):
        self.alpha = alpha.value if isinstance(alpha, RotationNumber) else float(alpha)

    def __call__(self, z):
        return frac(np.asarray(z, dtype=float) + self.alpha)

    def inverse(self, z):
        return frac(np.asarray(z, dtype=float) - self.alpha)

    def lift_displacement(self, z):
        return np.broadcast_to(self.alpha, np.shape(np.asarray(z))).copy()

    def orbit_base(self, z0: float, n: int) -> np.ndarray:
        return frac(float(z0) + self.alpha * np.arange(n))

    def to_base(self, z):
        return np.asarray(z, dtype=float)

    def from_base(self, y):
        return np.asarray(y, dtype=float)

    def invariant_arc_measure(self, start: float, span: float) -> float:
        return float(span)


def _hermite(u, y1, m0, m1, h):
    """Monotone cubic on [0,1] from 0 to y1 with end slopes m0, m1, input scale h."""
    u2 = u * u
    u3 = u2 * u
    return (y1 * (-2 * u3 + 3 * u2) + h * m0 * (u3 - 2 * u2 + u) + h * m1 * (u3 - u2))


class DenjoyMap:
    """Circle homeomorphism with irrational rotation number and Cantor minimal set.

    Gaps sit at the rotation orbit points {n alpha}, |n| <= n_max, with
    lengths from the schedule, normalized so the new circle has length one.
    On the Cantor set the map is Psi o R_alpha o pi; on each gap I_n it is a
    monotone cubic (Hermite, unit end slopes) onto I_{n+1}. The Hermite choice
    is monotone because consecutive gap-length ratios stay within [1/2, 2].
    """

    def __init__(self, alpha, gaps: GapSchedule, tail_tolerance: float = 1e-3):
        self.alpha_obj = alpha if isinstance(alpha, RotationNumber) else RotationNumber.from_value(float(alpha))
        self.alpha = self.alpha_obj.value
        self.gaps = gaps
        if gaps.tail_bound() > tail_tolerance:
            raise ValueError(
                f"gap tail bound {gaps.tail_bound():.3e} exceeds tolerance {tail_tolerance:.3e}; "
                "increase n_max")
        ns = np.arange(-gaps.n_max, gaps.n_max + 1)
        pos = frac(ns * self.alpha)
        order = np.argsort(pos)
        self._gap_index = ns[order]
        self._gap_pos = pos[order]
        lengths = gaps.length(self._gap_index)   # already in sorted-position order
        self._L = float(lengths.sum())
        self._scale = 1.0 / (1.0 + self._L)
        self._gap_len = lengths * self._scale
        cum = np.cumsum(self._gap_len)
        self._cum_incl = cum                          # gap mass up to and including gap j
        self._cum_before = cum - self._gap_len       # gap mass strictly before gap j
        self._gap_lo = self._gap_pos * self._scale + self._cum_before
        self._gap_hi = self._gap_lo + self._gap_len
        self._index_of = {int(n): j for j, n in enumerate(self._gap_index)}
        self.tail_bound = gaps.tail_bound()

    # ---- coordinate change ----------------------------------------

    def new_from_base(self, y):
        """Psi: base circle -> new circle (monotone, jumps across gaps)."""
        y = np.asarray(y, dtype=float)
        single = y.ndim == 0
        ys = frac(np.atleast_1d(y))
        j = np.searchsorted(self._gap_pos, ys, side="right")
        mass = np.concatenate([[0.0], self._cum_incl])[j]
        out = ys * self._scale + mass
        return float(out[0]) if single else out

    def base_from_new(self, z):
        """pi: new circle -> base circle, collapsing gaps (the semiconjugacy)."""
        z = np.asarray(z, dtype=float)
        single = z.ndim == 0
        zs = frac(np.atleast_1d(z))
        j = np.searchsorted(self._gap_lo, zs, side="right") - 1
        jc = np.maximum(j, 0)
        in_gap = (j >= 0) & (zs < self._gap_hi[jc])
        out = np.empty_like(zs)
        out[in_gap] = self._gap_pos[jc[in_gap]]
        free = ~in_gap
        mass = np.where(j >= 0, self._cum_incl[jc], 0.0)
        out[free] = (zs[free] - mass[free]) / self._scale
        out = frac(out)
        return float(out[0]) if single else out

    def gap_interval(self, n: int):
        """New-circle endpoints (lo, hi) of gap I_n, or None outside the model."""
        j = self._index_of.get(int(n))
        if j is None:
            return None
        return float(self._gap_lo[j]), float(self._gap_hi[j])

    def gap_containing(self, z: float):
        z = float(frac(z))
        j = int(np.searchsorted(self._gap_lo, z, side="right")) - 1
        if j >= 0 and z < self._gap_hi[j]:
            return int(self._gap_index[j])
        return None

    def _pos_of(self, n: int) -> float:
        return float(frac(n * self.alpha))

    # ---- the map ----------------------------------------------------

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        single = z.ndim == 0
        zs = frac(np.atleast_1d(z)).astype(float)
        out = np.empty_like(zs)
        for i, zi in enumerate(zs):
            n = self.gap_containing(zi)
            if n is None:
                out[i] = self.new_from_base(self.base_from_new(zi) + self.alpha)
            else:
                out[i] = self._gap_image(float(zi), n)
        return float(out[0]) if single else out

    def _gap_image(self, z: float, n: int) -> float:
        lo, hi = self.gap_interval(n)
        nxt = self.gap_interval(n + 1)
        if nxt is None:
            # image gap beyond the truncation collapses to a point;
            # defect below the tail bound
            return float(self.new_from_base(frac(self._pos_of(n) + self.alpha)))
        LO, HI = nxt
        span_in = hi - lo
        span_out = HI - LO
        u = (z - lo) / span_in
        val = _hermite(u, span_out, 1.0, 1.0, span_in)
        val = min(max(val, 0.0), span_out)
        return float(frac(LO + val))

    def inverse(self, z):
        z = np.asarray(z, dtype=float)
        single = z.ndim == 0
        zs = frac(np.atleast_1d(z)).astype(float)
        out = np.empty_like(zs)
        for i, zi in enumerate(zs):
            n = self.gap_containing(zi)
            if n is None:
                out[i] = self.new_from_base(self.base_from_new(zi) - self.alpha)
            else:
                out[i] = self._gap_preimage(float(zi), n)
        return float(out[0]) if single else out

    def _gap_preimage(self, z: float, n: int) -> float:
        prev = self.gap_interval(n - 1)
        lo, hi = self.gap_interval(n)
        if prev is None:
            return float(self.new_from_base(frac(self._pos_of(n) - self.alpha)))
        LO, HI = prev
        span_in = HI - LO
        span_out = hi - lo
        target = z - lo
        a, b = 0.0, 1.0
        for _ in range(60):
            m = 0.5 * (a + b)
            if _hermite(m, span_out, 1.0, 1.0, span_in) < target:
                a = m
            else:
                b = m
        return float(frac(LO + 0.5 * (a + b) * span_in))

    def lift_displacement(self, z):
        return frac(self(z) - np.asarray(z, dtype=float))

    # ---- orbits and measure via the semiconjugacy -------------------

    def orbit_base(self, z0, n: int) -> np.ndarray:
        """Base coordinates of the forward orbit of a point (gaps collapsed)."""
        y0 = float(self.base_from_new(float(z0)))
        return frac(y0 + self.alpha * np.arange(n))

    def to_base(self, z):
        return self.base_from_new(z)

    def from_base(self, y):
        return self.new_from_base(y)

    def invariant_arc_measure(self, start: float, span: float) -> float:
        """mu_K of the new-circle arc [start, start+span). Exact."""
        if span <= 0.0:
            return 0.0
        if span >= 1.0:
            return 1.0
        a = float(frac(start))
        end = a + span
        wraps = math.floor(end)
        pa = float(self.base_from_new(a))
        pb = float(self.base_from_new(frac(end)))
        # lift of pi is monotone of degree one
        val = (pb + wraps) - pa
        # gap edges round-trip to within a few ulp of an exact 0 or 1
        if abs(val) < 5e-14:
            return 0.0
        if abs(val - 1.0) < 5e-14:
            return 1.0
        return float(min(max(val, 0.0), 1.0))


class MorseSmaleMap:
    """Circle map with alternating attracting and repelling fixed points.

    Built from (position, kind) pairs, kind in {"attract", "repel"}. The
    displacement vanishes C^1 at the fixed points and drifts toward the
    attracting endpoint on each complementary interval. Invariant
    probability measures are exactly the convex hull of the point masses at
    the fixed points.
    """

    def __init__(self, fixed_points, strength: float = 0.5):
        pts = sorted((float(frac(p)), str(kind)) for p, kind in fixed_points)
        if len(pts) < 2 or len(pts) % 2 != 0:
            raise ValueError("need an even number of fixed points")
        kinds = [k for _, k in pts]
        for k, k_next in zip(kinds, kinds[1:] + kinds[:1]):
            if k not in ("attract", "repel") or k == k_next:
                raise ValueError("fixed point kinds must alternate attract/repel")
        if not 0.0 < strength < 1.0:
            raise ValueError("strength must be in (0,1)")
        self.fixed_points = np.asarray([p for p, _ in pts], dtype=float)
        self.kinds = tuple(kinds)
        self.strength = float(strength)
        self.attractors = np.asarray([p for p, k in pts if k == "attract"])
        self.repellers = np.asarray([p for p, k in pts if k == "repel"])

    def _displacement(self, z):
        z = frac(np.asarray(z, dtype=float))
        pts = self.fixed_points
        r = len(pts)
        k = np.searchsorted(pts, z, side="right") - 1
        k = np.mod(k, r)
        left = pts[k]
        width = frac(pts[np.mod(k + 1, r)] - left)
        width = np.where(width == 0.0, 1.0, width)
        u = frac(z - left) / width
        hump = (width / math.pi) * np.sin(math.pi * u) * self.strength
        right_attracts = np.asarray(
            [self.kinds[(i + 1) % r] == "attract" for i in range(r)])
        sign = np.where(right_attracts[k], 1.0, -1.0)
        return sign * hump

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return frac(z + self._displacement(z))

    def inverse(self, z, iters: int = 80):
        z = np.asarray(z, dtype=float)
        w = np.array(z, dtype=float)
        for _ in range(iters):
            w = z - self._displacement(w)
        return frac(w)

    def lift_displacement(self, z):
        return self._displacement(z)

    def orbit_base(self, z0, n: int) -> np.ndarray:
        out = np.empty(n, dtype=float)
        z = float(frac(float(z0)))
        for k in range(n):
            out[k] = z
            z = float(self(z))
        return out

    def to_base(self, z):
        return np.asarray(z, dtype=float)

    def from_base(self, y):
        return np.asarray(y, dtype=float)


def denjoy_build(alpha, gaps: GapSchedule | None = None,
                 tail_tolerance: float = 1e-3) -> DenjoyMap:
    """Construct the Denjoy counterexample for the given rotation number."""
    gaps = gaps or GapSchedule.unit_total()
    return DenjoyMap(alpha, gaps, tail_tolerance=tail_tolerance)


def rotation_number_estimate(circle_map, x0: float, n: int) -> float:
    """(lift^N(x) - x)/N; within 1/N of the rotation number at every N >= 1."""
    if n < 1:
        raise ValueError("need at least one iterate")
    if isinstance(circle_map, RigidRotation):
        return circle_map.alpha
    if isinstance(circle_map, DenjoyMap):
        return float(rotation_number_estimates_all(circle_map, x0, n, only_last=True))
    z = float(frac(x0))
    total = 0.0
    for _ in range(n):
        d = float(circle_map.lift_displacement(z))
        total += d
        z = float(frac(z + d))
    return total / n


def rotation_number_estimates_all(map_: DenjoyMap, x0: float, n: int,
                                  only_last: bool = False):
    """Estimates at every horizon 1..n for a Denjoy map, via exact Psi lifts."""
    y0 = float(map_.base_from_new(float(x0)))
    lift0 = float(map_.new_from_base(y0))
    ks = np.arange(n, n + 1, dtype=float) if only_last else np.arange(1, n + 1, dtype=float)
    ys = y0 + ks * map_.alpha
    lifts = np.floor(ys) + map_.new_from_base(frac(ys))
    est = (lifts - lift0) / ks
    return est[-1] if only_last else est


def invariant_measure_arc(map_: DenjoyMap, start: float, span: float) -> float:
    """mu_K of the arc [start, start+span) on the new circle."""
    return map_.invariant_arc_measure(start, span)


class CantorMeasure:
    """Invariant probability measure of a Denjoy map, evaluated exactly."""

    def __init__(self, map_: DenjoyMap):
        self.map = map_

    def arc(self, start: float, span: float) -> float:
        return self.map.invariant_arc_measure(start, span)

    def circle(self) -> float:
        return 1.0


@dataclass(frozen=True)
class CantorPartition:
    """Cyclic partition of the Cantor set by arcs with prescribed masses."""

    boundaries: tuple          # new-circle boundary points, cyclic order
    base_boundaries: tuple     # their base-circle preimages
    weights: tuple

    @property
    def size(self) -> int:
        return len(self.weights)

    def arcs(self):
        """(start, span) pairs on the new circle."""
        b = self.boundaries
        r = len(b)
        if r == 1:
            return [(b[0], 1.0)]
        return [(b[i], arc_span(b[i], b[(i + 1) % r])) for i in range(r)]

    def base_arcs(self):
        b = self.base_boundaries
        r = len(b)
        if r == 1:
            return [(b[0], 1.0)]
        return [(b[i], arc_span(b[i], b[(i + 1) % r])) for i in range(r)]

    def member_index_base(self, y) -> np.ndarray:
        """Partition index of base-circle points (vectorized)."""
        y = frac(np.asarray(y, dtype=float))
        b = np.asarray(self.base_boundaries)
        order = np.argsort(b)
        sb = b[order]
        j = np.searchsorted(sb, y, side="right") - 1
        j = np.mod(j, len(sb))
        return np.asarray(order)[j]


def partition_by_weights(map_: DenjoyMap, weights,
                         base_point: float = 0.7071067811865476,
                         max_retries: int = 32) -> CantorPartition:
    """Partition K into cyclically ordered pieces with mu_K(K_i) = weights[i].

    Boundary points are Psi-images of base-circle points off the blown-up
    orbit, so each piece is a Cantor arc and the masses are exact.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0.0) or np.any(w >= 1.0 + 1e-12):
        raise ValueError("weights must lie in (0,1]")
    if not np.isclose(w.sum(), 1.0, atol=1e-12):
        raise ValueError("weights must sum to 1")
    y0 = float(frac(base_point))
    for attempt in range(max_retries):
        ys = frac(y0 + np.concatenate([[0.0], np.cumsum(w)[:-1]]))
        dist = np.min(np.abs(ys[:, None] - map_._gap_pos[None, :]), axis=1)
        if np.all(dist > 1e-12):
            cs = np.atleast_1d(map_.new_from_base(ys))
            return CantorPartition(boundaries=tuple(float(c) for c in cs),
                                   base_boundaries=tuple(float(y) for y in ys),
                                   weights=tuple(float(x) for x in w))
        y0 = float(frac(y0 + math.e / (97.0 + attempt)))
    raise RuntimeError("could not place partition boundaries off the gap orbit")


def birkhoff_average(circle_map, observable, x0: float, n: int):
    """Time average (1/N) sum obs(h^k x0) along the orbit.

    ``observable`` maps arrays of base-circle coordinates to values; Denjoy
    orbits are evaluated exactly through the semiconjugacy.
    """
    if n < 1:
        raise ValueError("need at least one iterate")
    ys = circle_map.orbit_base(x0, n)
    vals = np.asarray(observable(ys), dtype=float)
    return vals.mean(axis=0)


def birkhoff_average_sweep(circle_map, observable, starts, n: int):
    """Birkhoff averages over several starting points with the worst spread.

    For uniquely ergodic maps the spread bounds the distance to the space
    average uniformly in the starting point.
    """
    avgs = np.asarray([birkhoff_average(circle_map, observable, x0, n)
                       for x0 in starts], dtype=float)
    spread = float(np.max(avgs) - np.min(avgs)) if len(avgs) else 0.0
    return avgs, spread


def arc_indicator_base(start: float, span: float):
    """Indicator of the base-circle arc [start, start+span)."""
    a = float(frac(start))
    s = float(span)

    def obs(y):
        return (frac(np.asarray(y) - a) < s).astype(float)

    return obs
