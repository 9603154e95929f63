import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from leftluggage.imgproc import (
    Blob,
    BoundingBox,
    absdiff_threshold,
    bbox_iou,
    connected_components,
    convex_hull_fill,
    crop,
    dilate,
    erode,
    expand_bbox,
    mask_and_not,
    to_grayscale,
)

from . import oracles


def masks(max_side=32):
    return st.tuples(st.integers(1, max_side), st.integers(1, max_side)).flatmap(
        lambda hw: arrays(np.bool_, hw)
    )


def boxes(limit=40):
    return st.builds(
        BoundingBox,
        st.integers(0, limit),
        st.integers(0, limit),
        st.integers(1, limit),
        st.integers(1, limit),
    )


def uniform(w, h, rgb):
    f = np.empty((h, w, 3), dtype=np.uint8)
    f[...] = rgb
    return f


# --- grayscale / differencing ----------------------------------------------


def test_grayscale_white_and_black():
    assert np.all(to_grayscale(uniform(4, 3, (255, 255, 255))) == 255)
    assert np.all(to_grayscale(uniform(4, 3, (0, 0, 0))) == 0)


def test_grayscale_pure_red():
    assert to_grayscale(uniform(1, 1, (255, 0, 0)))[0, 0] == 76


def test_grayscale_rounds_half_up():
    # 0.114 * 250 = 28.5 exactly
    assert to_grayscale(uniform(1, 1, (0, 0, 250)))[0, 0] == 29


@pytest.mark.parametrize("a,b,tau,expected", [(100, 150, 30, True), (100, 120, 30, False), (77, 77, 0, False)])
def test_absdiff_threshold(a, b, tau, expected):
    ga = np.full((2, 2), a, dtype=np.uint8)
    gb = np.full((2, 2), b, dtype=np.uint8)
    assert np.all(absdiff_threshold(ga, gb, tau) == expected)


def test_absdiff_dimension_mismatch():
    with pytest.raises(ValueError):
        absdiff_threshold(np.zeros((2, 2), np.uint8), np.zeros((2, 3), np.uint8), 1)


# --- morphology -------------------------------------------------------------


def test_erode_examples():
    assert not erode(np.zeros((5, 5), bool), 1).any()
    full = erode(np.ones((5, 5), bool), 1)
    expected = np.zeros((5, 5), bool)
    expected[1:4, 1:4] = True
    assert np.array_equal(full, expected)
    single = np.zeros((5, 5), bool)
    single[2, 2] = True
    assert not erode(single, 1).any()


def test_dilate_examples():
    assert not dilate(np.zeros((5, 5), bool), 1).any()
    assert dilate(np.ones((5, 5), bool), 1).all()
    single = np.zeros((5, 5), bool)
    single[2, 2] = True
    expected = np.zeros((5, 5), bool)
    expected[1:4, 1:4] = True
    assert np.array_equal(dilate(single, 1), expected)


def test_radius_must_be_positive():
    with pytest.raises(ValueError):
        erode(np.ones((3, 3), bool), 0)
    with pytest.raises(ValueError):
        dilate(np.ones((3, 3), bool), 0)


@settings(max_examples=150, deadline=None)
@given(masks(), st.integers(1, 3))
def test_morphology_matches_brute_force(m, r):
    assert erode(m, r).tolist() == oracles.erode(m.tolist(), r)
    assert dilate(m, r).tolist() == oracles.dilate(m.tolist(), r)


@settings(max_examples=150, deadline=None)
@given(masks(), st.integers(1, 3))
def test_erode_dilate_duality(m, r):
    # with out-of-bounds as unset, the complement side sees the border as set:
    # pad by r with the complement's border value to make the identity exact
    padded = np.pad(~m, r, constant_values=True)
    via_complement = ~dilate(padded, r)[r:-r, r:-r]
    assert np.array_equal(erode(m, r), via_complement)


@settings(max_examples=150, deadline=None)
@given(masks(), st.integers(1, 3))
def test_opening_closing_sandwich(m, r):
    opened = dilate(erode(m, r), r)
    closed = erode(dilate(m, r), r)
    assert not (opened & ~m).any()
    # closing drops set pixels within r of the border (erosion sees unset
    # padding there); everywhere else it is extensive
    h, w = m.shape
    inner = np.zeros_like(m)
    inner[r:h - r, r:w - r] = True
    assert not (m & ~closed & inner).any()


# --- connected components ---------------------------------------------------


def test_components_examples():
    assert connected_components(np.zeros((4, 4), bool)) == []
    diag = np.zeros((3, 3), bool)
    diag[0, 0] = diag[1, 1] = True
    assert len(connected_components(diag)) == 1
    two = np.zeros((8, 8), bool)
    two[0:2, 0:2] = True
    two[5:7, 5:7] = True
    blobs = connected_components(two)
    assert [b.bbox for b in blobs] == [BoundingBox(0, 0, 2, 2), BoundingBox(5, 5, 2, 2)]


@settings(max_examples=150, deadline=None)
@given(masks())
def test_components_match_flood_fill(m):
    got = [(sorted(b.pixel_set()), b.bbox.as_tuple()) for b in connected_components(m)]
    assert got == oracles.components(m.tolist())


@settings(max_examples=100, deadline=None)
@given(masks())
def test_components_partition_the_mask(m):
    blobs = connected_components(m)
    seen = set()
    for b in blobs:
        s = b.pixel_set()
        assert not (s & seen)
        seen |= s
    ys, xs = np.nonzero(m)
    assert seen == set(zip(xs.tolist(), ys.tolist()))


# --- convex hull fill -------------------------------------------------------


def test_hull_single_pixel():
    b = Blob.from_pixels([(3, 2)])
    assert convex_hull_fill(b, (10, 10)).pixel_set() == {(3, 2)}


def test_hull_vertical_segment():
    b = Blob.from_pixels([(0, 0), (0, 4)])
    assert convex_hull_fill(b, (5, 5)).pixel_set() == {(0, y) for y in range(5)}


def test_hull_square_corners():
    b = Blob.from_pixels([(0, 0), (2, 0), (0, 2), (2, 2)])
    assert convex_hull_fill(b, (3, 3)).pixel_set() == {(x, y) for x in range(3) for y in range(3)}


def test_hull_diagonal_segment_keeps_only_the_line():
    b = Blob.from_pixels([(0, 0), (3, 3)])
    assert convex_hull_fill(b, (4, 4)).pixel_set() == {(i, i) for i in range(4)}


point_sets = st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)), min_size=1, max_size=12)


@settings(max_examples=150, deadline=None)
@given(point_sets)
def test_hull_fill_matches_supporting_lines(points):
    got = sorted(convex_hull_fill(Blob.from_pixels(points), (16, 16)).pixel_set())
    assert got == oracles.hull_fill(points, 16, 16)


@settings(max_examples=100, deadline=None)
@given(point_sets)
def test_hull_fill_idempotent_superset(points):
    b = Blob.from_pixels(points)
    once = convex_hull_fill(b, (16, 16))
    twice = convex_hull_fill(once, (16, 16))
    assert b.pixel_set() <= once.pixel_set()
    assert once.pixel_set() == twice.pixel_set()


# --- mask algebra -----------------------------------------------------------


def test_mask_and_not_examples():
    rng = np.random.default_rng(5)
    a = rng.random((8, 8)) < 0.5
    b = rng.random((8, 8)) < 0.5
    assert np.array_equal(mask_and_not(a, np.zeros_like(a)), a)
    assert not mask_and_not(a, a).any()
    out = mask_and_not(a, b)
    for y in range(8):
        for x in range(8):
            assert out[y, x] == (bool(a[y, x]) and not bool(b[y, x]))


def test_mask_and_not_dimension_mismatch():
    with pytest.raises(ValueError):
        mask_and_not(np.zeros((2, 2), bool), np.zeros((3, 2), bool))


# --- box geometry -----------------------------------------------------------


def test_iou_examples():
    a = BoundingBox(0, 0, 10, 10)
    assert bbox_iou(a, a) == 1.0
    assert bbox_iou(a, BoundingBox(20, 20, 5, 5)) == 0.0
    assert bbox_iou(a, BoundingBox(5, 0, 10, 10)) == pytest.approx(50 / 150)


def test_touching_boxes_do_not_overlap():
    assert bbox_iou(BoundingBox(0, 0, 5, 5), BoundingBox(5, 0, 5, 5)) == 0.0


@settings(max_examples=200, deadline=None)
@given(boxes(12), boxes(12))
def test_iou_properties(a, b):
    v = bbox_iou(a, b)
    assert 0.0 <= v <= 1.0
    assert v == bbox_iou(b, a)
    assert bbox_iou(a, a) == 1.0
    assert v == pytest.approx(oracles.box_iou(a.as_tuple(), b.as_tuple()), abs=1e-12)


def test_expand_examples():
    assert expand_bbox(BoundingBox(30, 30, 10, 10), (100, 100)) == BoundingBox(20, 20, 30, 20)
    assert expand_bbox(BoundingBox(0, 0, 10, 10), (100, 100)) == BoundingBox(0, 0, 20, 10)
    assert expand_bbox(BoundingBox(0, 0, 100, 100), (100, 100)) == BoundingBox(0, 0, 100, 100)


@settings(max_examples=200, deadline=None)
@given(boxes(50), st.integers(1, 120), st.integers(1, 120))
def test_expand_stays_inside_and_bounded(b, w, h):
    if not b.inside(w, h):
        return
    e = expand_bbox(b, (w, h))
    assert e.inside(w, h)
    assert e.h <= 2 * b.h and e.w <= 3 * b.w
    # the original box is always part of its context
    assert e.x <= b.x and e.y <= b.y and e.x2 >= b.x2 and e.y2 == b.y2


def test_crop_examples():
    f = np.arange(10 * 12 * 3, dtype=np.int64).reshape(10, 12, 3).astype(np.uint8)
    assert np.array_equal(crop(f, BoundingBox(0, 0, 12, 10)), f)
    assert np.array_equal(crop(f, BoundingBox(4, 7, 1, 1))[0, 0], f[7, 4])
    region = crop(f, BoundingBox(2, 3, 4, 5))
    assert region.shape == (5, 4, 3)
    for y in range(5):
        for x in range(4):
            assert np.array_equal(region[y, x], f[3 + y, 2 + x])


def test_crop_out_of_bounds():
    with pytest.raises(ValueError):
        crop(np.zeros((5, 5, 3), np.uint8), BoundingBox(3, 3, 3, 3))


def test_box_rejects_empty_extent():
    with pytest.raises(ValueError):
        BoundingBox(0, 0, 0, 4)


def test_operations_are_pure():
    rng = np.random.default_rng(9)
    m = rng.random((20, 20)) < 0.4
    before = m.copy()
    assert np.array_equal(erode(m, 1), erode(m, 1))
    dilate(m, 2)
    connected_components(m)
    assert np.array_equal(m, before)
