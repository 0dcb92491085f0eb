"""Planar PL geometry on the torus: transverse crossings of segment families.

Two methods are provided. ``segment_crossings_exact`` enumerates lattice
translates of one segment against another, which is exact and suits short
loops. ``count_crossings_bucketed`` reduces long segment families into unit
cells and uses a uniform grid hash, which scales to leaf traces with tens of
thousands of pieces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIN_ANGLE_MIN = 1e-6   # transversality threshold on |sin(angle)|


@dataclass(frozen=True)
class Crossing:
    point: tuple          # representative in [0,1)^2
    sign: int
    sin_angle: float
    params: tuple         # (u along segment a, v along segment b)


class DegenerateCrossing(Exception):
    """Segment pair is parallel-overlapping or meets below the angle threshold."""


def _seg_pair_crossing(p0, p1, q0, q1, eps: float = 1e-12):
    """Intersection of two planar segments; returns (u, v, sin_angle, sign) or None.

    Raises DegenerateCrossing for near-parallel overlapping configurations.
    """
    d1 = p1 - p0
    d2 = q1 - q0
    det = d1[0] * d2[1] - d1[1] * d2[0]
    n1 = np.hypot(*d1)
    n2 = np.hypot(*d2)
    sin_angle = abs(det) / (n1 * n2)
    rhs = q0 - p0
    if det == 0.0:
        # exactly parallel: degenerate only if collinear and overlapping
        cross = rhs[0] * d1[1] - rhs[1] * d1[0]
        if abs(cross) / n1 < 1e-9:
            t0 = (rhs @ d1) / (n1 * n1)
            t1 = ((q1 - p0) @ d1) / (n1 * n1)
            lo, hi = min(t0, t1), max(t0, t1)
            if hi > eps and lo < 1.0 - eps:
                raise DegenerateCrossing("parallel overlapping segments")
        return None
    u = (rhs[0] * d2[1] - rhs[1] * d2[0]) / det
    v = (rhs[0] * d1[1] - rhs[1] * d1[0]) / det
    if -eps < u < 1.0 + eps and -eps < v < 1.0 + eps:
        if sin_angle < SIN_ANGLE_MIN:
            raise DegenerateCrossing("crossing angle below threshold")
        return u, v, sin_angle, 1 if det > 0 else -1
    return None


def segment_crossings_exact(a0, a1, b0, b1):
    """All torus crossings of segment a with lattice translates of segment b."""
    a0 = np.asarray(a0, float)
    a1 = np.asarray(a1, float)
    b0 = np.asarray(b0, float)
    b1 = np.asarray(b1, float)
    out = []
    lo = np.floor(np.minimum(a0, a1) - np.maximum(b0, b1)) - 1
    hi = np.ceil(np.maximum(a0, a1) - np.minimum(b0, b1)) + 1
    for kx in range(int(lo[0]), int(hi[0]) + 1):
        for ky in range(int(lo[1]), int(hi[1]) + 1):
            k = np.array([kx, ky], dtype=float)
            hit = _seg_pair_crossing(a0, a1, b0 + k, b1 + k)
            if hit is not None:
                u, v, sa, sg = hit
                pt = np.mod(a0 + u * (a1 - a0), 1.0)
                out.append(Crossing(point=(float(pt[0]), float(pt[1])),
                                    sign=sg, sin_angle=float(sa), params=(float(u), float(v))))
    return out


def loop_crossings(loop_a, loop_b, skip_shared_endpoints: bool = False):
    """Transverse torus crossings between two PL vertex chains (lift coords).

    Crossings are deduplicated at piece junctions: a hit with parameter u = 1
    on one piece coincides with u = 0 on the next, so parameter-1 endpoint
    hits are dropped.
    """
    va = np.asarray(loop_a, float)
    vb = np.asarray(loop_b, float)
    out = []
    end_eps = 1e-9
    for i in range(len(va) - 1):
        for j in range(len(vb) - 1):
            for c in segment_crossings_exact(va[i], va[i + 1], vb[j], vb[j + 1]):
                u, v = c.params
                if u >= 1.0 - end_eps or v >= 1.0 - end_eps:
                    continue
                if skip_shared_endpoints and (u <= end_eps and v <= end_eps):
                    continue
                out.append(c)
    return out


def signed_crossing_total(loop_a, loop_b) -> int:
    """Sum of crossing signs; equals det of the two loop classes."""
    return sum(c.sign for c in loop_crossings(loop_a, loop_b))


# ---- bucketed counting for long traces --------------------------------


def split_to_cells(segments: np.ndarray) -> np.ndarray:
    """Cut lift segments at lattice lines and reduce each piece mod 1.

    ``segments`` has shape (M, 2, 2): piece endpoints in lift coordinates.
    Returns pieces of shape (P, 2, 2) with both endpoints in [0, 1]^2 and
    interiors inside a single cell.
    """
    pieces = []
    for p0, p1 in segments:
        cuts = {0.0, 1.0}
        d = p1 - p0
        for axis in range(2):
            if d[axis] != 0.0:
                lo = np.floor(min(p0[axis], p1[axis])) + 1.0
                hi = np.ceil(max(p0[axis], p1[axis])) - 1.0
                for k in np.arange(lo, hi + 0.5):
                    t = (k - p0[axis]) / d[axis]
                    if 1e-12 < t < 1.0 - 1e-12:
                        cuts.add(float(t))
        ts = np.array(sorted(cuts))
        pts = p0[None, :] + ts[:, None] * d[None, :]
        for a, b in zip(pts[:-1], pts[1:]):
            mid = 0.5 * (a + b)
            shift = np.floor(mid)
            pieces.append((a - shift, b - shift))
    return np.asarray(pieces)


def count_crossings_bucketed(segs_a: np.ndarray, segs_b: np.ndarray,
                             grid: int = 64) -> tuple[int, int]:
    """(signed total, unsigned count) of crossings between two families.

    Families are lift segment arrays of shape (M, 2, 2). Pieces are bucketed
    into a grid x grid hash over the unit cell, bucket-sharing pairs are
    deduplicated and solved in one vectorized batch. Pairs meeting below the
    transversality threshold are not counted; callers perturb upstream.
    """
    pa = split_to_cells(segs_a)
    pb = split_to_cells(segs_b)
    if len(pa) == 0 or len(pb) == 0:
        return 0, 0

    def bucket_ids(pieces):
        ids = {}
        for idx in range(len(pieces)):
            p0, p1 = pieces[idx]
            lo = np.floor(np.minimum(p0, p1) * grid).astype(int)
            hi = np.floor(np.maximum(p0, p1) * grid - 1e-12).astype(int)
            for gx in range(max(lo[0], 0), min(hi[0], grid - 1) + 1):
                for gy in range(max(lo[1], 0), min(hi[1], grid - 1) + 1):
                    ids.setdefault((gx, gy), []).append(idx)
        return ids

    ba = bucket_ids(pa)
    bb = bucket_ids(pb)
    chunks = []
    for key, ia in ba.items():
        jb = bb.get(key)
        if not jb:
            continue
        ia = np.asarray(ia, dtype=np.int64)
        jb = np.asarray(jb, dtype=np.int64)
        chunks.append((np.repeat(ia, len(jb)), np.tile(jb, len(ia))))
    if not chunks:
        return 0, 0
    ii = np.concatenate([c[0] for c in chunks])
    jj = np.concatenate([c[1] for c in chunks])
    code = np.unique(ii * len(pb) + jj)
    ii = code // len(pb)
    jj = code % len(pb)
    p0 = pa[ii, 0]
    d1 = pa[ii, 1] - p0
    q0 = pb[jj, 0]
    d2 = pb[jj, 1] - q0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    rhs = q0 - p0
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (rhs[:, 0] * d2[:, 1] - rhs[:, 1] * d2[:, 0]) / det
        v = (rhs[:, 0] * d1[:, 1] - rhs[:, 1] * d1[:, 0]) / det
    sin_angle = np.abs(det) / (np.hypot(d1[:, 0], d1[:, 1]) * np.hypot(d2[:, 0], d2[:, 1]))
    eps = 1e-12
    ok = ((det != 0.0) & (sin_angle >= SIN_ANGLE_MIN)
          & (u > -eps) & (u < 1.0 - 1e-9) & (v > -eps) & (v < 1.0 - 1e-9))
    signed = int(np.sum(np.sign(det[ok])))
    return signed, int(ok.sum())


def vertices_to_segments(vertices: np.ndarray) -> np.ndarray:
    v = np.asarray(vertices, float)
    return np.stack([v[:-1], v[1:]], axis=1)
