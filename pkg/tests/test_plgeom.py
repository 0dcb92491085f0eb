import numpy as np
import pytest

from solenoidlab.plgeom import (
    DegenerateCrossing,
    count_crossings_bucketed,
    loop_crossings,
    segment_crossings_exact,
    signed_crossing_total,
    split_to_cells,
    vertices_to_segments,
)


def straight_loop(cls, base):
    base = np.asarray(base, dtype=float)
    return np.stack([base, base + np.asarray(cls, dtype=float)])


def test_unit_axes_cross_once_positive():
    a = straight_loop([1, 0], [0.5, 0.45])
    b = straight_loop([0, 1], [0.5, 0.55])
    hits = loop_crossings(a, b)
    assert len(hits) == 1
    assert hits[0].sign == 1


def test_signed_total_equals_class_determinant():
    rng = np.random.default_rng(12)
    for _ in range(25):
        c1 = rng.integers(-3, 4, size=2)
        c2 = rng.integers(-3, 4, size=2)
        if np.all(c1 == 0) or np.all(c2 == 0):
            continue
        det = int(c1[0] * c2[1] - c1[1] * c2[0])
        if det == 0:
            continue
        a = straight_loop(c1, rng.random(2))
        b = straight_loop(c2, rng.random(2))
        try:
            total = signed_crossing_total(a, b)
        except DegenerateCrossing:
            continue
        assert total == det


def test_parallel_translates_do_not_cross():
    a = straight_loop([1, 0], [0.5, 0.25])
    b = straight_loop([1, 0], [0.5, 0.75])
    assert loop_crossings(a, b) == []


def test_parallel_overlap_is_degenerate():
    a = straight_loop([1, 0], [0.5, 0.25])
    with pytest.raises(DegenerateCrossing):
        loop_crossings(a, a)


def test_shallow_angle_is_degenerate():
    a = straight_loop([1, 0], [0.0, 0.5])
    b = np.array([[0.0, 0.5 - 1e-8], [1.0, 0.5 + 1e-8]])
    with pytest.raises(DegenerateCrossing):
        segment_crossings_exact(a[0], a[1], b[0], b[1])


def test_split_to_cells_preserves_length_and_stays_in_cell():
    rng = np.random.default_rng(4)
    segs = rng.normal(scale=2.0, size=(20, 2, 2))
    pieces = split_to_cells(segs)
    total_in = np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1).sum()
    total_out = np.linalg.norm(pieces[:, 1] - pieces[:, 0], axis=1).sum()
    assert total_out == pytest.approx(total_in, rel=1e-12)
    assert np.all(pieces >= -1e-9)
    assert np.all(pieces <= 1.0 + 1e-9)
    mids = 0.5 * (pieces[:, 0] + pieces[:, 1])
    assert np.all(np.floor(mids) == 0)


def test_bucketed_count_matches_exact_enumeration():
    rng = np.random.default_rng(9)
    for _ in range(10):
        va = np.cumsum(rng.normal(scale=0.8, size=(12, 2)), axis=0)
        vb = np.cumsum(rng.normal(scale=0.8, size=(12, 2)), axis=0) + rng.random(2)
        try:
            exact_hits = loop_crossings(va, vb)
        except DegenerateCrossing:
            continue
        exact_signed = sum(c.sign for c in exact_hits)
        signed, count = count_crossings_bucketed(
            vertices_to_segments(va), vertices_to_segments(vb))
        assert signed == exact_signed
        assert count == len(exact_hits)


def test_bucketed_empty_inputs():
    assert count_crossings_bucketed(np.empty((0, 2, 2)), np.empty((0, 2, 2))) == (0, 0)
