import json

import numpy as np
import pytest

from solenoidlab.circle import MorseSmaleMap, RotationNumber, denjoy_build, frac
from solenoidlab.immersion import (
    CycleLibrary,
    immersed_from_atoms,
    loop_vertices_for_class,
    positive_decomposition,
    realize,
    smoothstep_profile,
)


@pytest.fixture(scope="module")
def dmap():
    return denjoy_build(RotationNumber.golden())


@pytest.fixture(scope="module")
def lib2():
    return CycleLibrary(classes=((1, 0), (0, 1)))


def test_smoothstep_profile_properties():
    c = 0.1
    assert smoothstep_profile(0.0, c) == 1.0
    assert smoothstep_profile(c, c) == 0.0
    ts = np.linspace(1e-4, c - 1e-4, 50)
    vals = smoothstep_profile(ts, c)
    assert np.all(np.diff(vals) < 0)


def test_loop_vertices_primitive_is_single_segment():
    v = loop_vertices_for_class(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    assert v.shape == (2, 2)
    assert np.allclose(v[1] - v[0], [1.0, 0.0])


def test_loop_vertices_nonprimitive_drifts():
    v = loop_vertices_for_class(np.array([2.0, 2.0]), np.array([0.5, 0.5]))
    assert v.shape == (3, 2)
    assert np.allclose(v[-1] - v[0], [2.0, 2.0])
    # middle vertex leaves the straight geodesic
    mid = 0.5 * (v[0] + v[-1])
    assert np.linalg.norm(v[1] - mid) > 1e-3


def test_positive_decomposition_simple(lib2):
    dec = positive_decomposition([0.3, 0.7], lib2)
    assert dec.scale == pytest.approx(1.0)
    assert dec.weights == pytest.approx((0.3, 0.7))
    assert dec.orientations == (1, 1)


def test_positive_decomposition_single_cycle():
    lib = CycleLibrary(classes=((1, 0),))
    dec = positive_decomposition([2.0, 0.0], lib)
    assert dec.weights == pytest.approx((1.0,))
    assert dec.scale == pytest.approx(2.0)


def test_positive_decomposition_flip(lib2):
    dec = positive_decomposition([-1.0, 3.0], lib2)
    assert dec.scale == pytest.approx(4.0)
    assert dec.weights == pytest.approx((0.25, 0.75))
    assert dec.orientations == (-1, 1)


def test_positive_decomposition_rejects_zero(lib2):
    with pytest.raises(ValueError):
        positive_decomposition([0.0, 0.0], lib2)


def test_positive_decomposition_no_solution():
    lib = CycleLibrary(classes=((1, 0),))
    with pytest.raises(ValueError):
        positive_decomposition([1.0, 1.0], lib)


def test_realize_records_weights(dmap, lib2):
    sol = realize([0.3, 0.7], lib2, dmap)
    assert sol.partition.weights == pytest.approx((0.3, 0.7))
    assert sol.measure_scale == pytest.approx(1.0)
    assert np.allclose(sol.weighted_class_sum().as_array(), [0.3, 0.7])


def test_realize_flip_and_scale(dmap, lib2):
    sol = realize([-1.0, 3.0], lib2, dmap)
    assert np.allclose(sol.weighted_class_sum().as_array(), [-1.0, 3.0], atol=1e-12)
    assert sol.measure_scale == pytest.approx(4.0)


def test_trace_single_return_increment(dmap, lib2):
    sol = realize([0.3, 0.7], lib2, dmap)
    # a basepoint inside K_1 (weight 0.3 piece)
    y = frac(sol.partition.base_boundaries[0] + 0.1)
    x0 = float(dmap.new_from_base(y))
    tr = sol.trace_leaf(x0, 1)
    assert tr.increments.shape == (1, 2)
    assert np.allclose(tr.increments[0], [1.0, 0.0])


def test_trace_time_mode_unit_advance(dmap, lib2):
    sol = realize([0.5, 0.5], lib2, dmap)
    x0 = float(dmap.new_from_base(0.123))
    tr = sol.trace_leaf(x0, 5, mode="time")
    assert tr.path.t_min == 0.0
    assert tr.path.t_max == 5.0
    # integer times are hit exactly at transversal crossings
    for k in range(6):
        assert np.any(np.isclose(tr.path.params, k))


def test_trace_lift_defect_bounded(dmap, lib2):
    sol = realize([0.3, 0.7], lib2, dmap)
    x0 = float(dmap.new_from_base(0.271))
    for n in (10, 100, 400):
        tr = sol.trace_leaf(x0, n)
        # remainder stays below base box diameter plus one loop diameter
        assert tr.lift_defect() <= 2.0 * sol.library.base_radius + 1.5


def test_trace_increment_law(dmap, lib2):
    sol = realize([0.3, 0.7], lib2, dmap)
    x0 = float(dmap.new_from_base(0.41))
    n = 50
    tr = sol.trace_leaf(x0, n)
    it = sol.branch_itinerary(x0, n)
    ys = dmap.orbit_base(x0, n)
    # independently: membership of h^k(x0) in the partition pieces
    for k in range(n):
        i = int(it[k])
        a, s = sol.partition.base_arcs()[i]
        assert frac(ys[k] - a) < s
        assert np.allclose(tr.increments[k], sol.branch_class(i))


def test_trapping_window_inside_base_box(dmap, lib2):
    sol = realize([0.3, 0.7], lib2, dmap)
    x0 = float(dmap.new_from_base(0.19))
    tr = sol.trace_leaf(x0, 30, mode="time")
    eps = sol.trapping_epsilon
    assert eps > 0
    for k in range(1, 30):
        for t in (k - eps + 1e-9, k - eps / 2, k, k + eps / 2, k + eps - 1e-9):
            p = tr.path.point_at(t)
            assert sol.in_base_box(p)[0]


def test_isotopy_profile_on_solenoid(dmap, lib2):
    sol = realize([0.3, 0.7], lib2, dmap)
    c = sol.junction_window
    assert sol.isotopy_profile(0.0) == 1.0
    assert sol.isotopy_profile(c) == 0.0
    ts = np.linspace(1e-4, c - 1e-4, 20)
    assert np.all(np.diff(sol.isotopy_profile(ts)) < 0)


def test_leaf_horizon_classes_match_trace(dmap, lib2):
    sol = realize([0.3, 0.7], lib2, dmap)
    x0 = float(dmap.new_from_base(0.333))
    hs = np.array([10, 50, 200])
    fast = sol.leaf_horizon_classes(x0, hs, mode="time")
    from solenoidlab.homology import close_curve
    tr = sol.trace_leaf(x0, 200, mode="time")
    for h, row in zip(hs, fast):
        cc = close_curve(tr.path, 0.0, float(h)).as_array() / h
        assert np.allclose(row, cc, atol=1e-12)


def test_crossing_inventory_unit_library(dmap, lib2):
    sol = realize([0.3, 0.7], lib2, dmap)
    recs = sol.crossing_inventory()
    cross = [r for r in recs if r.branch_a != r.branch_b]
    assert len(cross) == 1
    assert cross[0].sign == 1
    assert cross[0].measure_a == pytest.approx(0.3)
    assert cross[0].measure_b == pytest.approx(0.7)
    # no self crossings for the straight unit loops
    assert all(r.branch_a != r.branch_b for r in recs)


def test_crossing_inventory_embed_empty(dmap):
    lib3 = CycleLibrary(classes=((1, 0, 0), (0, 1, 0)), mode="embed",
                        base_center=(0.5, 0.5, 0.5))
    sol = realize([0.4, 0.6, 0.0], lib3, dmap)
    assert sol.crossing_inventory() == []


def test_parallel_class_self_crossings_cancel(dmap):
    # figure-crossing representative: class (2,0) with drift crosses a parallel
    # translate of itself with equal numbers of + and - crossings (det = 0)
    from solenoidlab.plgeom import loop_crossings
    lib = CycleLibrary(classes=((2, 0), (0, 1)))
    sol = realize([1.0, 0.5], lib, dmap)
    other = sol.translate([0.11, 0.005])
    hits = loop_crossings(sol.branch_loop(0), other.branch_loop(0))
    signs = [c.sign for c in hits]
    assert len(signs) > 0
    assert signs.count(1) == signs.count(-1)
    # the kinked core also crosses itself transversally (the inventory reports it)
    recs = [r for r in sol.crossing_inventory() if r.branch_a == r.branch_b == 0]
    assert len(recs) == 1


def test_mean_return_length(dmap, lib2):
    sol = realize([0.3, 0.7], lib2, dmap)
    lbar = sol.mean_return_length(n_returns=5000)
    # loops have length 1 plus small junction moves
    assert 1.0 <= lbar < 1.2


def test_manifest_roundtrip_text(dmap, lib2):
    sol = realize([0.3, 0.7], lib2, dmap)
    d = json.loads(sol.manifest_text())
    assert d["decomposition"]["scale"] == pytest.approx(1.0)
    assert d["base_map"]["type"] == "denjoy"
    assert d["weights"] == [0.3, 0.7]


def test_immersed_from_atoms_morse_smale():
    ms = MorseSmaleMap([(0.2, "attract"), (0.45, "repel"), (0.7, "attract"), (0.95, "repel")])
    lib = CycleLibrary(classes=((1, 0), (0, 1)))
    sol = immersed_from_atoms(ms, [(0.2, 0.4, 0, 1), (0.7, 0.6, 1, 1)], lib)
    assert np.allclose(sol.weighted_class_sum().as_array(), [0.4, 0.6])
    assert sol.measure_scale == pytest.approx(1.0)


def test_reject_x0_in_gap(dmap, lib2):
    sol = realize([0.3, 0.7], lib2, dmap)
    lo, hi = dmap.gap_interval(0)
    with pytest.raises(ValueError):
        sol.trace_leaf(0.5 * (lo + hi), 10)


def test_translate_preserves_class(dmap, lib2):
    sol = realize([0.3, 0.7], lib2, dmap)
    moved = sol.translate([0.13, 0.31])
    assert np.allclose(moved.weighted_class_sum().as_array(), [0.3, 0.7])
    assert np.allclose(moved.branch_loop(0)[0] - sol.branch_loop(0)[0], [0.13, 0.31])


def test_embed_mode_rejects_overlapping_ribbons(dmap):
    # branches (1,0,0) and (1,0,1) pass close together away from the base box
    # when the lanes are narrow; ribbons wider than that gap must be refused
    lib3 = CycleLibrary(classes=((1, 0, 0), (1, 0, 1)), mode="embed",
                        base_center=(0.5, 0.5, 0.5), base_radius=0.05,
                        lane_spread=0.03)
    with pytest.raises(ValueError, match="ribbons"):
        realize([1.0, 0.0, 0.6], lib3, dmap, ribbon_halfwidth=0.015)
    # the same library embeds fine with a thin ribbon
    sol = realize([1.0, 0.0, 0.6], lib3, dmap, ribbon_halfwidth=0.002)
    assert sol.crossing_inventory() == []
