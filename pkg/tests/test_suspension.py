import numpy as np
import pytest

from solenoidlab.circle import (
    GOLDEN_MEAN,
    MorseSmaleMap,
    RigidRotation,
    RotationNumber,
    denjoy_build,
    frac,
)
from solenoidlab.suspension import (
    AtomicTransversalMeasure,
    FlowBox,
    SuspensionSolenoid,
    suspend,
)


@pytest.fixture(scope="module")
def dmap():
    return denjoy_build(RotationNumber.golden())


def test_return_map_is_base(dmap):
    rot = RigidRotation(GOLDEN_MEAN)
    assert suspend(rot).return_map() is rot
    assert suspend(dmap).return_map() is dmap


def test_holonomy_power(dmap):
    s = suspend(dmap)
    h3 = s.holonomy(3)
    z = float(dmap.new_from_base(0.21))
    expect = float(dmap(dmap(dmap(z))))
    assert float(h3(z)) == pytest.approx(expect, abs=1e-9)
    hm1 = s.holonomy(-1)
    assert float(dmap(hm1(z))) == pytest.approx(z, abs=1e-9)


def test_daval_product_formula(dmap):
    s = suspend(dmap)
    # arc with mu = 0.3 via the semiconjugacy
    a = float(dmap.new_from_base(0.12))
    b = float(dmap.new_from_base(0.42))
    box = FlowBox(0.1, 0.5, a, frac(b - a))
    assert s.daval_measure(box) == pytest.approx(0.4 * 0.3, abs=1e-12)


def test_daval_whole_solenoid(dmap):
    s = suspend(dmap)
    box = FlowBox(0.0, 1.0, 0.0, 1.0)
    assert s.daval_measure(box) == pytest.approx(1.0, abs=1e-12)


def test_daval_additive_partition(dmap):
    s = suspend(dmap)
    a = float(dmap.new_from_base(0.05))
    m = float(dmap.new_from_base(0.55))
    whole = FlowBox(0.2, 0.8, a, 1.0)
    left = FlowBox(0.2, 0.8, a, frac(m - a))
    right = FlowBox(0.2, 0.8, m, frac(a - m))
    assert s.daval_measure(left) + s.daval_measure(right) == pytest.approx(
        s.daval_measure(whole), abs=1e-12)
    # split in time instead
    t1 = FlowBox(0.2, 0.5, a, 1.0)
    t2 = FlowBox(0.5, 0.8, a, 1.0)
    assert s.daval_measure(t1) + s.daval_measure(t2) == pytest.approx(
        s.daval_measure(whole), abs=1e-12)


def test_schwartzman_estimate_matches_daval(dmap):
    s = suspend(dmap)
    a = float(dmap.new_from_base(0.12))
    boxes = [FlowBox(0.0, 0.4, a, frac(float(dmap.new_from_base(0.42)) - a)),
             FlowBox(0.3, 0.9, float(dmap.new_from_base(0.5)), 0.2)]
    z0 = float(dmap.new_from_base(0.77))
    est = s.schwartzman_measure_estimate(z0, 100000, boxes)
    exact = np.array([s.daval_measure(b) for b in boxes])
    assert np.max(np.abs(est - exact)) <= 0.01


def test_schwartzman_estimate_single_box_total(dmap):
    s = suspend(dmap)
    est = s.schwartzman_measure_estimate(0.3, 100, [FlowBox(0.0, 1.0, 0.0, 1.0)])
    assert est[0] == pytest.approx(1.0, abs=1e-12)


def test_schwartzman_estimate_morse_smale_atom():
    ms = MorseSmaleMap([(0.25, "attract"), (0.75, "repel")])
    s = SuspensionSolenoid(ms, AtomicTransversalMeasure(ms, [(0.25, 1.0)]))
    # leaf in the basin of the attractor concentrates on a window around it
    near = FlowBox(0.0, 1.0, 0.2, 0.1)
    far = FlowBox(0.0, 1.0, 0.5, 0.2)
    est = s.schwartzman_measure_estimate(0.6, 4000, [near, far])
    assert est[0] > 0.95
    assert est[1] < 0.05


def test_schwartzman_convergence_trend(dmap):
    s = suspend(dmap)
    a = float(dmap.new_from_base(0.3))
    box = FlowBox(0.0, 1.0, a, frac(float(dmap.new_from_base(0.6)) - a))
    exact = s.daval_measure(box)
    z0 = float(dmap.new_from_base(0.911))
    devs = []
    for n in (1000, 2000, 4000, 8000):
        est = s.schwartzman_measure_estimate(z0, n, [box])[0]
        devs.append(abs(est - exact))
    for d1, d2 in zip(devs, devs[1:]):
        assert d2 <= d1 + 0.005


def test_ergodicity_probe_denjoy(dmap):
    s = suspend(dmap)
    a = float(dmap.new_from_base(0.12))
    boxes = [FlowBox(0.0, 1.0, a, 0.3), FlowBox(0.0, 1.0, frac(a + 0.5), 0.2)]
    pts = [float(dmap.new_from_base(y)) for y in np.linspace(0.05, 0.95, 12)]
    rep = s.ergodicity_probe(boxes, pts, 20000)
    assert rep.empirically_uniquely_ergodic
    assert rep.n_clusters == 1


def test_ergodicity_probe_morse_smale_two_attractors():
    ms = MorseSmaleMap([(0.1, "attract"), (0.35, "repel"), (0.6, "attract"), (0.85, "repel")])
    s = SuspensionSolenoid(ms, AtomicTransversalMeasure(ms, [(0.1, 0.5), (0.6, 0.5)]))
    boxes = [FlowBox(0.0, 1.0, 0.05, 0.1), FlowBox(0.0, 1.0, 0.55, 0.1)]
    pts = list(np.linspace(0.12, 0.34, 4)) + list(np.linspace(0.62, 0.84, 4))
    rep = s.ergodicity_probe(boxes, pts, 3000)
    assert not rep.empirically_uniquely_ergodic
    assert rep.n_clusters == 2


def test_ergodicity_probe_rotation():
    s = suspend(RigidRotation(GOLDEN_MEAN))
    boxes = [FlowBox(0.0, 1.0, 0.2, 0.3)]
    rep = s.ergodicity_probe(boxes, np.linspace(0.0, 0.9, 10), 20000)
    assert rep.empirically_uniquely_ergodic


def test_flowbox_validation():
    with pytest.raises(ValueError):
        FlowBox(0.0, 1.5, 0.0, 0.5)
    with pytest.raises(ValueError):
        FlowBox(0.0, 0.5, 0.0, 0.0)


def test_atomic_measure_rejects_noninvariant():
    ms = MorseSmaleMap([(0.25, "attract"), (0.75, "repel")])
    with pytest.raises(ValueError):
        AtomicTransversalMeasure(ms, [(0.3, 1.0)])


def test_transversal_measure_holonomy_invariance(dmap):
    # measure(R_T^m(arc)) = measure(arc) for sampled arcs, |m| <= 3
    from solenoidlab.suspension import TransversalMeasure
    meas = TransversalMeasure(dmap)
    s = suspend(dmap, meas)
    arcs = [(float(dmap.new_from_base(a)), float(dmap.new_from_base(a + w)))
            for a, w in ((0.03, 0.21), (0.33, 0.4), (0.62, 0.17))]
    for a, b in arcs:
        span = float(np.mod(b - a, 1.0))
        base_val = meas.arc(a, span)
        for m in (-3, -2, -1, 1, 2, 3):
            h = s.holonomy(m)
            ia, ib = float(h(a)), float(h(b))
            ispan = float(np.mod(ib - ia, 1.0))
            assert meas.arc(ia, ispan) == pytest.approx(base_val, abs=dmap.tail_bound)


def test_leaf_segment_contract(dmap):
    from solenoidlab.suspension import LeafSegment
    seg = LeafSegment(start=float(dmap.new_from_base(0.2)), k0=2, k1=7)
    assert seg.n_returns == 5
    pts = seg.return_points(dmap)
    assert len(pts) == 5
    with pytest.raises(ValueError):
        LeafSegment(start=0.1, k0=3, k1=3)
