"""Generalized currents of measured solenoids immersed in flat tori.

The pairing with a closed 1-form is the flow-box sum over branches of the
leafwise integral against the transversal measure. With the canonical
branch cover the inner integral telescopes per return, and the measure
integral reduces to the exact return-transition masses between partition
pieces, so exactness (Stokes with empty boundary) cancels to float
roundoff: the transition matrix has equal row and column sums.

The Poincare dual on T^2 is rastered as a tube form around the branch
cores: a compactly supported polynomial bump with unit transverse integral,
weighted by the branch measures.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .circle import DenjoyMap, RigidRotation, frac
from .forms import TestForm
from .homology import HomologyVector
from .plgeom import split_to_cells, vertices_to_segments
from .suspension import AtomicTransversalMeasure


def _circular_overlap(a: float, sa: float, b: float, sb: float) -> float:
    """Length of the intersection of circle arcs [a, a+sa) and [b, b+sb)."""
    if sa >= 1.0 and sb >= 1.0:
        return 1.0
    if sa >= 1.0:
        return sb
    if sb >= 1.0:
        return sa
    a = float(frac(a))
    b = float(frac(b))
    total = 0.0
    for k in (-1.0, 0.0, 1.0):
        lo = max(a, b + k)
        hi = min(a + sa, b + k + sb)
        total += max(0.0, hi - lo)
    return total


def return_transition_matrix(sol) -> np.ndarray:
    """m[i, j] = probability transversal mass of K_i flowing into K_j per return.

    Exact: for rotation and Denjoy bases this is circular arc intersection in
    base coordinates, and for Morse-Smale atoms the matrix is diagonal. Rows
    sum to the branch weights; columns too, by invariance.
    """
    base = sol.base_map
    part = sol.partition
    r = part.size
    m = np.zeros((r, r))
    if isinstance(base, (DenjoyMap, RigidRotation)):
        alpha = base.alpha
        arcs = part.base_arcs()
        for i, (ai, si) in enumerate(arcs):
            for j, (aj, sj) in enumerate(arcs):
                m[i, j] = _circular_overlap(ai, si, aj - alpha, sj)
        return m
    if isinstance(sol.suspension.measure, AtomicTransversalMeasure):
        atoms = sol.suspension.measure.atoms
        idx = part.member_index_base(np.asarray([p for p, _ in atoms]))
        for (p, w), i in zip(atoms, idx):
            m[int(i), int(i)] += w
        return m
    raise TypeError("no exact transition matrix for this base map")


def _branch_crossing_points(sol) -> np.ndarray:
    """Transversal crossing position of each branch (its loop basepoint)."""
    return np.stack([sol.branch_loop(k)[0] for k in range(sol.n_branches)])


def pair_current_form(sol, form: TestForm) -> float:
    """< [f, S_mu], form > via the canonical flow-box cover. Exact arithmetic."""
    a = form.constant_array()
    if a.size != sol.dim:
        raise ValueError("form dimension mismatch")
    m = return_transition_matrix(sol)
    q = _branch_crossing_points(sol)
    classes = np.stack([sol.branch_class(k) for k in range(sol.n_branches)])
    row = m.sum(axis=1)
    total = float(row @ (classes @ a))
    # leafwise endpoint terms: a . (q_j - q_i) + phi(q_j) - phi(q_i)
    g = q @ a
    if form.has_exact():
        g = g + np.asarray([float(form.potential(qk)) for qk in q])
    total += float(m.sum(axis=0) @ g - m.sum(axis=1) @ g)
    return sol.measure_scale * total


def fundamental_class_pairing(sol, form: TestForm) -> float:
    """Integration map of the abstract solenoid against the pulled-back form.

    Independent route: the leaf integral per return is accumulated segment
    by segment along the branch loop and its junction, constant part by the
    segment displacements, exact part by endpoint evaluation per segment.
    """
    a = form.constant_array()
    m = return_transition_matrix(sol)
    q = _branch_crossing_points(sol)
    total = 0.0
    for i in range(sol.n_branches):
        loop = sol.branch_loop(i)
        for j in range(sol.n_branches):
            if m[i, j] == 0.0:
                continue
            # leaf path for this cell: loop of branch i, then junction to q_j
            cls_i = sol.branch_class(i)
            verts = np.vstack([loop, q[j] + cls_i])
            inner = 0.0
            for k in range(len(verts) - 1):
                inner += float(a @ (verts[k + 1] - verts[k]))
                if form.has_exact():
                    inner += float(form.potential(verts[k + 1]) - form.potential(verts[k]))
            total += m[i, j] * inner
    return sol.measure_scale * total


def generalized_current(sol) -> HomologyVector:
    """Real homology class of the measured immersed solenoid."""
    comps = [pair_current_form(sol, TestForm(tuple(np.eye(sol.dim)[j])))
             for j in range(sol.dim)]
    return HomologyVector(tuple(comps))


def ruelle_sullivan_map(sol, combination) -> HomologyVector:
    """Linear extension of mu -> [f, S_mu] over signed measure combinations.

    ``combination`` is a list of (coefficient, branch_weights). Each weight
    vector must describe a holonomy-invariant transversal measure: any
    nonnegative atom weights for a Morse-Smale base, but only multiples of
    the unique ergodic weight vector for Denjoy or rotation bases.
    """
    total = np.zeros(sol.dim)
    lam = np.asarray(sol.partition.weights, dtype=float)
    classes = np.stack([sol.branch_class(k) for k in range(sol.n_branches)])
    for coef, w in combination:
        w = np.asarray(w, dtype=float)
        if w.shape != (sol.n_branches,):
            raise ValueError("weight vector length must match branch count")
        if isinstance(sol.base_map, (DenjoyMap, RigidRotation)):
            if np.linalg.norm(w - w.sum() * lam) > 1e-9:
                raise ValueError("measure is not holonomy invariant: uniquely "
                                 "ergodic base admits only multiples of its "
                                 "ergodic weights")
        elif np.any(w < 0):
            raise ValueError("atom weights must be nonnegative")
        total = total + coef * (w @ classes)
    return HomologyVector(tuple(total))


# ---- rastered Poincare dual on T^2 ------------------------------------


def _bump(u: np.ndarray) -> np.ndarray:
    """C^3 kernel (315/256)(1-u^2)^4 on [-1,1]; unit integral."""
    w = np.clip(1.0 - u * u, 0.0, None)
    return (315.0 / 256.0) * w ** 4


@dataclass
class GridForm:
    """1-form on T^2 sampled on an N x N periodic grid (eta1, eta2)."""

    eta1: np.ndarray
    eta2: np.ndarray

    @property
    def n(self) -> int:
        return self.eta1.shape[0]

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    def pair_dx(self) -> tuple[float, float]:
        """(integral eta ^ dx1, integral eta ^ dx2) by the grid mean."""
        return (-float(self.eta2.mean()), float(self.eta1.mean()))

    def save(self, path):
        header = (f"gridform v1 n={self.n} spacing={self.spacing!r} "
                  f"components=eta1,eta2 dtype=float64\n").encode("ascii")
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(self.eta1.astype("<f8").tobytes())
            fh.write(self.eta2.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "GridForm":
        with open(path, "rb") as fh:
            header = fh.readline().decode("ascii").strip()
            fields = dict(kv.split("=", 1) for kv in header.split()[2:])
            n = int(fields["n"])
            raw = fh.read()
        flat = np.frombuffer(raw, dtype="<f8")
        if flat.size != 2 * n * n:
            raise ValueError("grid payload does not match the header")
        return cls(eta1=flat[: n * n].reshape(n, n).copy(),
                   eta2=flat[n * n:].reshape(n, n).copy())


def _min_parallel_core_separation(sol) -> float:
    """Smallest torus distance between parallel core segments of distinct branches."""
    best = np.inf
    for i in range(sol.n_branches):
        for j in range(sol.n_branches):
            if i == j:
                continue
            di = sol.branch_class(i)
            dj = sol.branch_class(j)
            if abs(di[0] * dj[1] - di[1] * dj[0]) > 1e-12:
                continue
            pi = sol.branch_loop(i)[0]
            pj = sol.branch_loop(j)[0]
            n = np.array([-di[1], di[0]])
            n = n / np.linalg.norm(n)
            gap = frac(float((pj - pi) @ n) + 0.5) - 0.5
            best = min(best, abs(float(gap)))
    return float(best)


def dual_form_raster(sol, eps: float, n_grid: int,
                     min_resolution: float = 8.0) -> GridForm:
    """Tube form around the weighted branch cores, dual to the current.

    Each core segment contributes (w / eps) b(d/eps) along its normal
    (tau_2, -tau_1), so that integral eta ^ dx_j recovers component j.
    The operating floor is n*eps >= 8 samples across the tube; radius
    halving audits may probe below it by passing a smaller floor.
    """
    if sol.dim != 2:
        raise ValueError("raster duals are for the 2-torus")
    if n_grid * eps < min_resolution:
        raise ValueError(
            f"grid too coarse to resolve the tube: need n*eps >= {min_resolution}")
    sep = _min_parallel_core_separation(sol)
    if 2.0 * eps >= sep:
        raise ValueError(
            f"tube radius {eps} overlaps distinct parallel ribbons (separation {sep:.4f})")
    xs = (np.arange(n_grid) + 0.5) / n_grid
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    eta1 = np.zeros((n_grid, n_grid))
    eta2 = np.zeros((n_grid, n_grid))
    for k in range(sol.n_branches):
        w = sol.branch_measure(k)
        pieces = split_to_cells(vertices_to_segments(sol.branch_loop(k)))
        for p0, p1 in pieces:
            d = p1 - p0
            seglen = float(np.hypot(*d))
            if seglen == 0.0:
                continue
            tau = d / seglen
            nx, ny = tau[1], -tau[0]
            for tx in (-1.0, 0.0, 1.0):
                for ty in (-1.0, 0.0, 1.0):
                    rx = gx + tx - p0[0]
                    ry = gy + ty - p0[1]
                    proj = (rx * d[0] + ry * d[1]) / (seglen * seglen)
                    inside = (proj >= 0.0) & (proj < 1.0)
                    perp = rx * (-tau[1]) + ry * tau[0]
                    close = np.abs(perp) < eps
                    mask = inside & close
                    if not np.any(mask):
                        continue
                    dens = (w / eps) * _bump(perp[mask] / eps)
                    eta1[mask] += dens * nx
                    eta2[mask] += dens * ny
    return GridForm(eta1=eta1, eta2=eta2)
