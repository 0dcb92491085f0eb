import numpy as np
import pytest

from solenoidlab.circle import MorseSmaleMap, RotationNumber, denjoy_build
from solenoidlab.currents import (
    GridForm,
    dual_form_raster,
    fundamental_class_pairing,
    generalized_current,
    pair_current_form,
    return_transition_matrix,
    ruelle_sullivan_map,
)
from solenoidlab.forms import TestForm as ClosedOneForm
from solenoidlab.forms import TrigPolynomial
from solenoidlab.immersion import CycleLibrary, immersed_from_atoms, realize


@pytest.fixture(scope="module")
def dmap():
    return denjoy_build(RotationNumber.golden())


@pytest.fixture(scope="module")
def lib2():
    return CycleLibrary(classes=((1, 0), (0, 1)))


@pytest.fixture(scope="module")
def sol37(dmap, lib2):
    return realize([0.3, 0.7], lib2, dmap)


def test_transition_matrix_marginals(sol37):
    m = return_transition_matrix(sol37)
    lam = np.asarray(sol37.partition.weights)
    assert np.allclose(m.sum(axis=1), lam, atol=1e-14)
    assert np.allclose(m.sum(axis=0), lam, atol=1e-14)
    assert np.all(m >= -1e-15)


def test_generalized_current_realization(sol37):
    cur = generalized_current(sol37).as_array()
    assert np.allclose(cur, [0.3, 0.7], atol=1e-12)


def test_generalized_current_flip_scale(dmap, lib2):
    sol = realize([-1.0, 3.0], lib2, dmap)
    assert np.allclose(generalized_current(sol).as_array(), [-1.0, 3.0], atol=1e-12)


def test_generalized_current_morse_smale_atoms():
    ms = MorseSmaleMap([(0.2, "attract"), (0.45, "repel"), (0.7, "attract"), (0.95, "repel")])
    lib = CycleLibrary(classes=((1, 0), (0, 1)))
    sol = immersed_from_atoms(ms, [(0.2, 0.4, 0, 1), (0.7, 0.6, 1, 1)], lib)
    assert np.allclose(generalized_current(sol).as_array(), [0.4, 0.6], atol=1e-12)


def test_current_scales_with_measure(sol37):
    import copy
    scaled = copy.copy(sol37)
    scaled.measure_scale = 3.0 * sol37.measure_scale
    assert np.allclose(generalized_current(scaled).as_array(), [0.9, 2.1], atol=1e-12)


def test_pair_form_component_extraction(sol37):
    v = pair_current_form(sol37, ClosedOneForm((1.0, 0.0)))
    assert v == pytest.approx(0.3, abs=1e-12)


def test_exact_forms_annihilated(sol37):
    rng = np.random.default_rng(17)
    for _ in range(20):
        trig = TrigPolynomial.random(2, rng)
        val = pair_current_form(sol37, ClosedOneForm((0.0, 0.0), trig))
        assert abs(val) <= 1e-6


def test_representative_independence(sol37):
    rng = np.random.default_rng(19)
    trig = TrigPolynomial.random(2, rng)
    v0 = pair_current_form(sol37, ClosedOneForm((0.5, -0.25)))
    v1 = pair_current_form(sol37, ClosedOneForm((0.5, -0.25), trig))
    assert v1 == pytest.approx(v0, abs=1e-12)


def test_cutoff_representative_same_value(sol37):
    base = ClosedOneForm((1.0, 1.0))
    cut = base.cutoff_on_box(sol37.base_center(), sol37.library.base_radius)
    # the cutoff representative vanishes on the base box
    probe = sol37.base_center() + np.array([0.05, -0.03])
    rel = probe - sol37.base_center()
    h = 1e-6
    for j in range(2):
        dp = probe.copy()
        dp[j] += h
        dm = probe.copy()
        dm[j] -= h
        deriv = (cut.potential(dp) - cut.potential(dm)) / (2 * h)
        assert deriv + cut.constant_array()[j] == pytest.approx(0.0, abs=1e-6)
    v0 = pair_current_form(sol37, base)
    v1 = pair_current_form(sol37, cut)
    assert v1 == pytest.approx(v0, abs=1e-12)


def test_fundamental_class_pairing_agrees(sol37):
    rng = np.random.default_rng(23)
    for _ in range(5):
        trig = TrigPolynomial.random(2, rng)
        f = ClosedOneForm((rng.normal(), rng.normal()), trig)
        assert fundamental_class_pairing(sol37, f) == pytest.approx(
            pair_current_form(sol37, f), abs=1e-12)


def test_rs_map_scalar_homogeneity(sol37):
    lam = np.asarray(sol37.partition.weights)
    v = ruelle_sullivan_map(sol37, [(2.5, lam)]).as_array()
    assert np.allclose(v, 2.5 * np.array([0.3, 0.7]), atol=1e-12)


def test_rs_map_linearity_morse_smale():
    ms = MorseSmaleMap([(0.2, "attract"), (0.45, "repel"), (0.7, "attract"), (0.95, "repel")])
    lib = CycleLibrary(classes=((1, 0), (0, 1)))
    sol = immersed_from_atoms(ms, [(0.2, 0.5, 0, 1), (0.7, 0.5, 1, 1)], lib)
    mu1 = np.array([1.0, 0.0])
    mu2 = np.array([0.0, 1.0])
    v12 = ruelle_sullivan_map(sol, [(1.0, mu1), (1.0, mu2)]).as_array()
    v1 = ruelle_sullivan_map(sol, [(1.0, mu1)]).as_array()
    v2 = ruelle_sullivan_map(sol, [(1.0, mu2)]).as_array()
    assert np.allclose(v12, v1 + v2, atol=1e-14)
    # extremal atoms give the extremal currents of the registry polytope
    assert np.allclose(v1, [1.0, 0.0])
    assert np.allclose(v2, [0.0, 1.0])
    mixed = ruelle_sullivan_map(sol, [(1.0, np.array([0.25, 0.75]))]).as_array()
    assert np.all(mixed >= -1e-15)
    assert np.allclose(mixed, 0.25 * v1 + 0.75 * v2)


def test_rs_map_rejects_noninvariant(sol37):
    with pytest.raises(ValueError):
        ruelle_sullivan_map(sol37, [(1.0, np.array([0.5, 0.5]))])


def test_dual_raster_pairings(sol37):
    grid = dual_form_raster(sol37, eps=0.02, n_grid=512)
    p1, p2 = grid.pair_dx()
    assert p1 == pytest.approx(0.3, abs=0.01)
    assert p2 == pytest.approx(0.7, abs=0.01)


def test_dual_raster_eps_stability(sol37):
    g1 = dual_form_raster(sol37, eps=0.02, n_grid=512)
    g2 = dual_form_raster(sol37, eps=0.01, n_grid=512, min_resolution=4.0)
    p1 = np.asarray(g1.pair_dx())
    p2 = np.asarray(g2.pair_dx())
    assert np.max(np.abs(p1 - p2)) <= 0.01


def test_dual_raster_single_loop(dmap):
    lib = CycleLibrary(classes=((1, 0),))
    sol = realize([1.0, 0.0], lib, dmap)
    grid = dual_form_raster(sol, eps=0.02, n_grid=512)
    p1, p2 = grid.pair_dx()
    assert p1 == pytest.approx(1.0, abs=0.01)
    assert p2 == pytest.approx(0.0, abs=0.01)
    # mass concentrated on the tube
    mag = np.hypot(grid.eta1, grid.eta2)
    assert (mag > 0).mean() < 0.1


def test_dual_raster_rejects_bad_resolution(sol37):
    with pytest.raises(ValueError):
        dual_form_raster(sol37, eps=0.02, n_grid=128)


def test_gridform_save_load_roundtrip(tmp_path, sol37):
    grid = dual_form_raster(sol37, eps=0.15, n_grid=64)
    path = tmp_path / "form.grid"
    grid.save(path)
    back = GridForm.load(path)
    assert np.array_equal(back.eta1, grid.eta1)
    assert np.array_equal(back.eta2, grid.eta2)
