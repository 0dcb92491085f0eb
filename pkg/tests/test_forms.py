import numpy as np
import pytest

from solenoidlab.forms import BoxCutoffPotential, TrigPolynomial
from solenoidlab.forms import TestForm as ClosedOneForm


def test_trig_polynomial_periodic():
    rng = np.random.default_rng(1)
    trig = TrigPolynomial.random(2, rng)
    x = rng.random((20, 2))
    m = rng.integers(-3, 4, size=(20, 2)).astype(float)
    assert np.allclose(trig(x + m), trig(x), atol=1e-12)


def test_trig_polynomial_sup_bound():
    trig = TrigPolynomial([((1, 0), 0.5, -0.25), ((0, 2), 1.0, 0.0)])
    xs = np.random.default_rng(2).random((500, 2))
    assert np.max(np.abs(trig(xs))) <= trig.sup_bound() + 1e-12


def test_trig_polynomial_rejects_zero_mode():
    with pytest.raises(ValueError):
        TrigPolynomial([((0, 0), 1.0, 0.0)])


def test_box_cutoff_is_periodic_and_continuous():
    pot = BoxCutoffPotential([1.0, -2.0], [0.5, 0.5], 0.12)
    rng = np.random.default_rng(3)
    x = rng.random((50, 2))
    m = rng.integers(-2, 3, size=(50, 2)).astype(float)
    assert np.allclose(pot(x + m), pot(x), atol=1e-12)
    # continuity across the descending stretch
    us = np.linspace(0.0, 1.0, 20001)
    vals = pot(np.stack([us, np.full_like(us, 0.5)], axis=1))
    assert np.max(np.abs(np.diff(vals))) < 2e-3


def test_box_cutoff_cancels_constant_on_box():
    a = np.array([0.8, -1.3])
    center = np.array([0.5, 0.5])
    r = 0.12
    form = ClosedOneForm(tuple(a)).cutoff_on_box(center, r)
    h = 1e-7
    rng = np.random.default_rng(5)
    for _ in range(10):
        p = center + rng.uniform(-r + 1e-3, r - 1e-3, size=2)
        for j in range(2):
            dp, dm = p.copy(), p.copy()
            dp[j] += h
            dm[j] -= h
            grad = (form.potential(dp) - form.potential(dm)) / (2 * h)
            # total form component: a_j + d(phi)_j = 0 on the box
            assert grad + a[j] == pytest.approx(0.0, abs=1e-6)


def test_cutoff_requires_constant_form():
    trig = TrigPolynomial([((1, 0), 1.0, 0.0)])
    f = ClosedOneForm((1.0, 0.0), trig)
    with pytest.raises(ValueError):
        f.cutoff_on_box([0.5, 0.5], 0.1)


def test_testform_exact_flags():
    f0 = ClosedOneForm((1.0, 0.0))
    assert not f0.has_exact()
    f1 = ClosedOneForm((1.0, 0.0), TrigPolynomial([((1, 1), 1.0, 0.0)]))
    assert f1.has_exact()
