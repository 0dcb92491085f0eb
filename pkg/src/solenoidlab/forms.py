"""Closed test 1-forms on T^n: constant part plus an exact part d(phi).

The exact part is any periodic potential; trigonometric polynomials cover
the generic case and a smoothed-sawtooth potential produces cohomologous
representatives vanishing on a prescribed box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class TrigPolynomial:
    """Real trigonometric polynomial on T^n: sum of cos/sin of lattice modes."""

    def __init__(self, terms):
        # terms: iterable of (k_vector, amp_cos, amp_sin), k integer, nonzero
        self.terms = []
        for k, a, b in terms:
            k = np.asarray(k, dtype=float)
            if np.any(k != np.round(k)) or np.all(k == 0):
                raise ValueError("modes must be nonzero integer vectors")
            self.terms.append((k, float(a), float(b)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for k, a, b in self.terms:
            ph = 2.0 * math.pi * (x @ k)
            out = out + a * np.cos(ph) + b * np.sin(ph)
        return out

    def sup_bound(self) -> float:
        return sum(abs(a) + abs(b) for _, a, b in self.terms)

    @classmethod
    def random(cls, dim: int, rng, n_terms: int = 3, max_mode: int = 3,
               amp: float = 1.0) -> "TrigPolynomial":
        terms = []
        for _ in range(n_terms):
            k = rng.integers(-max_mode, max_mode + 1, size=dim)
            while np.all(k == 0):
                k = rng.integers(-max_mode, max_mode + 1, size=dim)
            terms.append((k, amp * rng.normal(), amp * rng.normal()))
        return cls(terms)

    @classmethod
    def zero(cls, dim: int) -> "TrigPolynomial":
        p = cls.__new__(cls)
        p.terms = []
        return p


class BoxCutoffPotential:
    """Periodic potential phi with d(phi) = -a . dx on a centered box.

    Adding d(phi) to the constant form a . dx yields a cohomologous closed
    form vanishing identically on the box. Per axis the potential is the
    identity on [-r, r] around the center, closed up periodically by a cubic
    with matching end slopes.
    """

    def __init__(self, constant, center, radius: float):
        self.a = np.asarray(constant, dtype=float)
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if not 0.0 < self.radius < 0.5:
            raise ValueError("box radius must lie in (0, 1/2)")

    def _sawtooth(self, u):
        """Periodic C^1 function with s(u) = u for |u| <= r."""
        r = self.radius
        u = np.mod(np.asarray(u, dtype=float) + 0.5, 1.0) - 0.5
        out = np.where(np.abs(u) <= r, u, 0.0)
        # descending stretch from (r, r) to (1 - r, -r) with end slopes 1,
        # wrapped to u in [-1/2, -r) or (r, 1/2]
        v = np.mod(u - r, 1.0)
        on_desc = (np.abs(u) > r)
        w = 1.0 - 2.0 * r
        x = v / w
        h00 = 2 * x ** 3 - 3 * x ** 2 + 1
        h10 = x ** 3 - 2 * x ** 2 + x
        h01 = -2 * x ** 3 + 3 * x ** 2
        h11 = x ** 3 - x ** 2
        desc = r * h00 + w * h10 + (-r) * h01 + w * h11
        return np.where(on_desc, desc, out)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        rel = x - self.center
        vals = self._sawtooth(rel)
        return -(vals @ self.a)

    @property
    def terms(self):
        # nonempty marker so callers treat the exact part as present
        return (("sawtooth", 0.0, 0.0),)

    def sup_bound(self) -> float:
        return float(np.sum(np.abs(self.a)) * (self.radius + 0.25))


@dataclass(frozen=True)
class TestForm:
    """Closed 1-form: (constant a) . dx + d(exact potential)."""

    constant: tuple
    exact: object = field(default_factory=lambda: TrigPolynomial.zero(0))

    def constant_array(self) -> np.ndarray:
        return np.asarray(self.constant, dtype=float)

    def has_exact(self) -> bool:
        return bool(getattr(self.exact, "terms", ()))

    def potential(self, x):
        return self.exact(x)

    def cutoff_on_box(self, center, radius: float) -> "TestForm":
        """Cohomologous representative vanishing on the given box.

        Only available for pure-constant forms; the exact part is replaced by
        the box cutoff potential.
        """
        if self.has_exact():
            raise ValueError("cutoff representative starts from a constant form")
        return TestForm(self.constant,
                        BoxCutoffPotential(self.constant, center, radius))
