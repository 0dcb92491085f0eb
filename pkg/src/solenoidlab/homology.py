"""Homology arithmetic on the flat torus T^n = R^n / Z^n.

Everything here is exact lattice geometry: geodesics are straight lines,
H^1 is spanned by the constant forms dx_i, and the identity map of the
universal cover is a calibrating function. Curve classes live in the
basis e_1..e_n of H_1(T^n, Z) tensored with R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INT_TOL = 1e-9


@dataclass(frozen=True)
class HomologyVector:
    """Element of H_1(T^n, R) ~ R^n in the lattice basis."""

    components: tuple

    def __post_init__(self):
        comps = tuple(float(c) for c in self.components)
        if not all(math.isfinite(c) for c in comps):
            raise ValueError("homology vector entries must be finite")
        object.__setattr__(self, "components", comps)

    @classmethod
    def of(cls, *comps) -> "HomologyVector":
        if len(comps) == 1 and np.ndim(comps[0]) == 1:
            comps = tuple(comps[0])
        return cls(tuple(comps))

    @property
    def dim(self) -> int:
        return len(self.components)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.components, dtype=float)

    def is_integral(self, tol: float = INT_TOL) -> bool:
        a = self.as_array()
        return bool(np.all(np.abs(a - np.round(a)) <= tol))

    def rounded(self) -> "HomologyVector":
        return HomologyVector(tuple(float(r) for r in np.round(self.as_array())))

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def __add__(self, other):
        return HomologyVector(tuple(self.as_array() + _arr(other)))

    def __sub__(self, other):
        return HomologyVector(tuple(self.as_array() - _arr(other)))

    def __mul__(self, c):
        return HomologyVector(tuple(c * self.as_array()))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return HomologyVector(tuple(self.as_array() / c))

    def __neg__(self):
        return HomologyVector(tuple(-self.as_array()))

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i):
        return self.components[i]


def _arr(v) -> np.ndarray:
    if isinstance(v, HomologyVector):
        return v.as_array()
    return np.asarray(v, dtype=float)


class PLPath:
    """Piecewise linear path given by lift vertices in R^n.

    Parametrization is either ``time`` (caller-supplied strictly increasing
    parameter values, one per vertex) or ``arclength`` (values are the
    cumulative Euclidean lengths, computed here).
    """

    def __init__(self, vertices, mode: str = "arclength", params=None):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("need at least two vertices")
        seglen = np.linalg.norm(np.diff(v, axis=0), axis=1)
        if np.any(seglen == 0.0):
            raise ValueError("consecutive vertices must be distinct")
        if mode == "arclength":
            params = np.concatenate([[0.0], np.cumsum(seglen)])
        elif mode == "time":
            if params is None:
                params = np.arange(v.shape[0], dtype=float)
            params = np.asarray(params, dtype=float)
            if params.shape != (v.shape[0],) or np.any(np.diff(params) <= 0):
                raise ValueError("time parameters must be strictly increasing, one per vertex")
        else:
            raise ValueError(f"unknown parametrization mode {mode!r}")
        self.vertices = v
        self.mode = mode
        self.params = params
        self.seg_lengths = seglen

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def t_min(self) -> float:
        return float(self.params[0])

    @property
    def t_max(self) -> float:
        return float(self.params[-1])

    def length(self) -> float:
        return float(self.seg_lengths.sum())

    def lift_at(self, t):
        """Lift point(s) at parameter t, by linear interpolation per coordinate."""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.params[0] - 1e-12) or np.any(t > self.params[-1] + 1e-12):
            raise ValueError("parameter out of range")
        out = np.stack(
            [np.interp(t, self.params, self.vertices[:, j]) for j in range(self.dim)],
            axis=-1,
        )
        return out

    def point_at(self, t):
        return np.mod(self.lift_at(t), 1.0)

    def segments_between(self, s: float, t: float):
        """Linear pieces (t0, t1, p0, p1) covering parameter range [s, t]."""
        if not (self.params[0] - 1e-12 <= s < t <= self.params[-1] + 1e-12):
            raise ValueError("parameters out of range")
        i0 = int(np.searchsorted(self.params, s, side="right"))
        i1 = int(np.searchsorted(self.params, t, side="left"))
        cuts = np.concatenate([[s], self.params[i0:i1], [t]])
        pts = self.lift_at(cuts)
        return [
            (float(cuts[k]), float(cuts[k + 1]), pts[k], pts[k + 1])
            for k in range(len(cuts) - 1)
        ]

    def is_loop(self, tol: float = INT_TOL) -> bool:
        d = self.vertices[-1] - self.vertices[0]
        return bool(np.all(np.abs(d - np.round(d)) <= tol))


@dataclass(frozen=True)
class ClosingStrategy:
    """Rule for closing a curve piece by a short torus geodesic.

    ``nearest`` picks the minimal-length closing displacement, with ties
    broken lexicographically; ``lex_in_ball`` picks the lexicographically
    smallest displacement among all with |d| <= sqrt(n)/2. Both satisfy the
    admissibility bound |d| <= sqrt(n)/2.
    """

    rule: str = "nearest"

    def displacement(self, delta: np.ndarray) -> np.ndarray:
        """Closing displacement d with d = delta (mod Z^n), |d| <= sqrt(n)/2."""
        delta = np.asarray(delta, dtype=float)
        if self.rule == "nearest":
            d = delta - np.round(delta)
            # round() breaks .5 ties to even; force the lex-smaller choice -0.5
            ties = np.isclose(np.abs(d), 0.5)
            d[ties] = -0.5
            return d
        if self.rule == "lex_in_ball":
            return _lex_smallest_in_ball(delta)
        raise ValueError(f"unknown closing rule {self.rule!r}")


def _lex_smallest_in_ball(delta: np.ndarray) -> np.ndarray:
    n = delta.size
    r2 = n / 4.0 + 1e-12
    base = delta - np.round(delta)
    cands = [base]
    for j in range(n):
        for shift in (-1.0, 1.0):
            c = base.copy()
            c[j] += shift
            cands.append(c)
    good = [c for c in cands if float(c @ c) <= r2]
    good.sort(key=lambda c: tuple(c))
    return good[0]


def close_curve(path: PLPath, s: float, t: float,
                strategy: ClosingStrategy | None = None) -> HomologyVector:
    """Integer class of the curve piece c|[s,t] closed by a short geodesic."""
    if not s < t:
        raise ValueError("need s < t")
    strategy = strategy or ClosingStrategy()
    ps, pt = path.lift_at(s), path.lift_at(t)
    if np.allclose(ps, pt) and abs(t - s) < 1e-15:
        raise ValueError("degenerate (zero length) piece")
    d = strategy.displacement(ps - pt)
    cls = (pt - ps) + d
    out = HomologyVector(tuple(cls))
    if not out.is_integral(1e-6):
        raise ArithmeticError("closing did not produce an integer class")
    return out.rounded()


class CalibratingFunction:
    """Equivariant map Phi: R^n -> H_1(T^n, R) with Phi(x+m) = Phi(x) + m.

    Two kinds. ``identity``: Phi(x) = x - x0, the canonical calibration of
    the flat torus. ``partition_of_unity``: Phi is assembled from lattice
    translates of a bump, Phi(x) = sum_m psi(x - m) m, with psi the bump
    normalized by its lattice sum. The bump is separable with 1-d profile
    supported on [-radius, radius]; translates of the positivity set cover
    the line only for radius > 1/2, which the constructor enforces by
    checking the normalizing denominator.
    """

    def __init__(self, dim: int, kind: str = "identity", base_lift=None,
                 support_radius: float = 0.75, smoothness: int = 2):
        self.dim = dim
        self.kind = kind
        self.support_radius = float(support_radius)
        self.smoothness = int(smoothness)
        self._base = np.zeros(dim) if base_lift is None else np.asarray(base_lift, float)
        if kind == "identity":
            self._offset = self._base.copy()
        elif kind == "partition_of_unity":
            if not self.support_radius > 0.5:
                raise ValueError("bump translates cannot cover: need support radius > 1/2")
            dmin = self._min_denominator()
            if dmin <= 1e-12:
                raise ValueError("translates of the bump support fail to cover the circle")
            self._offset = self._phi_raw(self._base)
        else:
            raise ValueError(f"unknown calibrating kind {kind!r}")

    def _profile(self, u: np.ndarray) -> np.ndarray:
        r = self.support_radius
        w = np.clip(1.0 - np.abs(u) / r, 0.0, None)
        if self.smoothness == 0:
            return w
        return np.clip(1.0 - (u / r) ** 2, 0.0, None) ** self.smoothness

    def _axis_sums(self, x: np.ndarray):
        # lattice translates within distance r of x; r <= 1 gives <= 3 terms
        ks = np.stack([np.floor(x) - 1.0, np.floor(x), np.floor(x) + 1.0, np.floor(x) + 2.0])
        w = self._profile(x[None, :] - ks)
        den = w.sum(axis=0)
        num = (w * ks).sum(axis=0)
        return num, den

    def _min_denominator(self) -> float:
        grid = np.linspace(0.0, 1.0, 2049)
        _, den = self._axis_sums(grid)
        return float(den.min())

    def _phi_raw(self, x: np.ndarray) -> np.ndarray:
        num, den = self._axis_sums(np.asarray(x, dtype=float))
        return num / den

    def __call__(self, lift_point) -> np.ndarray:
        x = np.asarray(lift_point, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        if self.kind == "identity":
            out = pts - self._offset
        else:
            out = np.stack([self._phi_raw(p) for p in pts]) - self._offset
        return out[0] if single else out

    def sup_deviation_from_lift(self, samples: int = 4096, seed: int = 0) -> float:
        """sup |Phi(x) - (x - Phi-anchor)| over a fundamental domain, sampled."""
        rng = np.random.default_rng(seed)
        pts = rng.random((samples, self.dim))
        vals = self(pts) - (pts - self._base + self(self._base))
        return float(np.max(np.linalg.norm(vals, axis=1)))

    def lipschitz_constant(self, samples: int = 4096) -> float:
        """Measured sup of the differential along each axis (finite differences)."""
        if self.kind == "identity":
            return 1.0
        grid = np.linspace(0.0, 1.0, samples)
        vals, den = self._axis_sums(grid)
        f = vals / den
        slopes = np.abs(np.diff(f) / np.diff(grid))
        return float(np.sqrt(self.dim) * slopes.max())


def calibrate(phi: CalibratingFunction, path: PLPath, s: float, t: float) -> HomologyVector:
    """Phi increment along c|[s,t]; equals the integer class exactly on loops."""
    if not s < t:
        raise ValueError("need s < t")
    val = phi(path.lift_at(t)) - phi(path.lift_at(s))
    return HomologyVector(tuple(val))


def build_calibrating_pou(dim: int, support_radius: float = 0.75,
                          smoothness: int = 2, base_lift=None) -> CalibratingFunction:
    """Partition-of-unity calibrating function anchored at ``base_lift``."""
    return CalibratingFunction(dim, kind="partition_of_unity", base_lift=base_lift,
                               support_radius=support_radius, smoothness=smoothness)


def minimal_loop_length(a) -> float:
    """Minimal length of a loop in the integer class a on the flat torus.

    Loops in class a have lift displacement a, so the straight lattice
    geodesic of length |a| is minimizing.
    """
    a = _arr(a)
    if np.any(np.abs(a - np.round(a)) > INT_TOL):
        raise ValueError("minimal loop length is defined for integer classes")
    return float(np.linalg.norm(a))


def stable_norm(a, n_max: int = 50):
    """Stable norm estimate lim l(n a)/n with the full sequence reported.

    Real classes are handled through their integer approximants round(n a);
    for integer classes the sequence is constant.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    a = _arr(a)
    seq = []
    for n in range(1, n_max + 1):
        m = np.round(n * a)
        seq.append(float(np.linalg.norm(m)) / n)
    return seq[-1], seq


def torus_diameter(dim: int) -> float:
    return math.sqrt(dim) / 2.0
