"""Suspension solenoids: mapping-torus structure, transversal and daval measures.

The suspension of a base circle map f is [0,1] x X glued by (0,x) ~ (1,f(x)),
with unit suspension time and the distinguished global transversal
T = {0} x X. Leaves are flow orbits; the Poincare return map of T is f
itself. Transversal measures are always induced from the base invariant
measure by first-impact transport, which makes holonomy invariance exact by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circle import DenjoyMap, RigidRotation, arc_span, frac


@dataclass(frozen=True)
class FlowBox:
    """Chart D^1 x K(U): a time window crossed with a transversal arc."""

    t0: float
    t1: float
    arc_start: float
    arc_span: float

    def __post_init__(self):
        if not 0.0 < self.t1 - self.t0 <= 1.0:
            raise ValueError("time length must lie in (0, 1]")
        if not 0.0 < self.arc_span <= 1.0:
            raise ValueError("arc span must lie in (0, 1]")

    @property
    def time_length(self) -> float:
        return self.t1 - self.t0


class TransversalMeasure:
    """Holonomy-invariant measure on time-slice transversal arcs.

    Arcs of any transversal {t} x X get the base invariant measure of their
    arc, transported by first impact on T = {0} x X; for time slices the
    transport is measure preserving, so the value does not depend on t.
    """

    def __init__(self, base_map, total: float = 1.0):
        self.base_map = base_map
        self.total = float(total)

    def arc(self, start: float, span: float, time_slice: float = 0.0) -> float:
        if isinstance(self.base_map, (DenjoyMap, RigidRotation)):
            return self.total * self.base_map.invariant_arc_measure(start, span)
        raise TypeError("base map has no canonical invariant arc measure")


class AtomicTransversalMeasure(TransversalMeasure):
    """Finite atoms on the transversal circle; the Morse-Smale case.

    Invariance under the return map requires every atom to sit on a fixed
    point (or periodic orbit) of the base map.
    """

    def __init__(self, base_map, atoms, validate: bool = True):
        super().__init__(base_map, total=float(sum(w for _, w in atoms)))
        self.atoms = tuple((float(frac(p)), float(w)) for p, w in atoms)
        if validate:
            for p, w in self.atoms:
                if w < 0:
                    raise ValueError("atom weights must be nonnegative")
                if abs(float(base_map(p)) - p) > 1e-9:
                    raise ValueError(f"atom at {p} is not invariant under the return map")

    def arc(self, start: float, span: float, time_slice: float = 0.0) -> float:
        a = float(frac(start))
        return sum(w for p, w in self.atoms if frac(p - a) < span or span >= 1.0)


class SuspensionSolenoid:
    """Mapping torus of a base circle map with unit suspension time."""

    def __init__(self, base_map, measure: TransversalMeasure | None = None):
        self.base_map = base_map
        if measure is None:
            measure = TransversalMeasure(base_map)
        self.measure = measure

    def return_map(self):
        """Poincare return map of the distinguished transversal; the base map."""
        return self.base_map

    def holonomy(self, m: int):
        """Holonomy of a leaf path crossing the fiber m times: R_T^m."""
        base = self.base_map

        def h(z):
            z = np.asarray(z, dtype=float)
            for _ in range(abs(m)):
                z = base(z) if m > 0 else base.inverse(z)
            return z

        return h

    def daval_measure(self, box: FlowBox) -> float:
        """Product formula: leaf length of the window times the arc measure."""
        return box.time_length * self.measure.arc(box.arc_start, box.arc_span)

    def schwartzman_measure_estimate(self, x0: float, n_returns: int, boxes):
        """Leaf-occupation fractions of each box, normalized to total mass 1.

        The exhaustion is indexed by returns: each return contributes leaf
        length 1, so occupation of a box is (time window) x (fraction of
        returns whose base point lies in the arc).
        """
        if n_returns < 1:
            raise ValueError("need at least one return")
        ys = self.base_map.orbit_base(x0, n_returns)
        out = np.empty(len(boxes))
        for i, b in enumerate(boxes):
            if isinstance(self.base_map, (DenjoyMap,)):
                # arcs given on the new circle; transport to base coordinates
                a0 = float(self.base_map.base_from_new(b.arc_start))
                a1 = float(self.base_map.base_from_new(frac(b.arc_start + b.arc_span)))
                span = arc_span(a0, a1) if b.arc_span < 1.0 else 1.0
                hits = frac(ys - a0) < span
            else:
                hits = frac(ys - b.arc_start) < b.arc_span
            out[i] = b.time_length * hits.mean()
        return out

    def ergodicity_probe(self, boxes, starting_points, n_returns: int,
                         cluster_gap: float = 0.05):
        """Dispersion of leaf averages across starting points. Report only."""
        rows = np.stack([
            self.schwartzman_measure_estimate(x0, n_returns, boxes)
            for x0 in starting_points
        ])
        dispersion = float(np.max(rows.max(axis=0) - rows.min(axis=0)))
        order = np.lexsort(rows.T[::-1])
        sorted_rows = rows[order]
        jumps = np.linalg.norm(np.diff(sorted_rows, axis=0), axis=1)
        n_clusters = 1 + int(np.sum(jumps > cluster_gap)) if len(rows) > 1 else 1
        return ErgodicityReport(
            leaf_averages=rows,
            dispersion=dispersion,
            n_clusters=n_clusters,
            empirically_uniquely_ergodic=dispersion <= cluster_gap,
        )


@dataclass(frozen=True)
class LeafSegment:
    """Piece of a leaf between two returns to the transversal."""

    start: float               # transversal point at return k0
    k0: int
    k1: int

    def __post_init__(self):
        if not self.k0 < self.k1:
            raise ValueError("need k0 < k1")

    @property
    def n_returns(self) -> int:
        return self.k1 - self.k0

    def return_points(self, base_map) -> np.ndarray:
        """Base coordinates of the returns k0..k1-1 along the segment."""
        ys = base_map.orbit_base(self.start, self.k1)
        return ys[self.k0:]


@dataclass
class ErgodicityReport:
    leaf_averages: np.ndarray
    dispersion: float
    n_clusters: int
    empirically_uniquely_ergodic: bool


def suspend(base_map, measure: TransversalMeasure | None = None) -> SuspensionSolenoid:
    return SuspensionSolenoid(base_map, measure)
