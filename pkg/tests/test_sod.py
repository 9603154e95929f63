import numpy as np
import pytest

from leftluggage import synth
from leftluggage.config import BackgroundConfig, SodConfig
from leftluggage.imgproc import BoundingBox, bbox_iou, convex_hull_fill, Blob
from leftluggage.sod import (
    FrameRing,
    StaticObjectDetector,
    extract_static_candidates,
    motion_mask,
    sod_step,
    static_mask,
)


def flat(value=100, shape=(40, 40)):
    return np.full(shape, value, dtype=np.uint8)


def ring_of(frames, gap=5):
    ring = FrameRing(gap)
    for f in frames:
        ring.push(f)
    return ring


def test_ring_capacity_and_order():
    ring = ring_of([flat(v) for v in range(8)], gap=5)
    assert len(ring) == 6 and ring.primed
    assert ring.oldest[0, 0] == 2 and ring.newest[0, 0] == 7


def test_motion_empty_for_static_scene():
    assert not motion_mask(ring_of([flat()] * 6), 20).any()


def test_motion_empty_during_warm_up():
    frames = [flat(0), flat(255)]
    assert not motion_mask(ring_of(frames), 20).any()


def _ramp_square(x0, y0, side=10, shape=(40, 40)):
    f = flat(shape=shape)
    for x in range(x0, x0 + side):
        f[y0:y0 + side, x] = 30 + 20 * (x - x0)
    return f


def test_motion_of_translated_square_covers_both_positions():
    # a ramp-textured square: shifting it changes its interior as well as its edges
    a, b = _ramp_square(10, 10), _ramp_square(13, 10)
    mask = motion_mask(ring_of([a, flat(), flat(), flat(), flat(), b]), 20, 1, 3)
    assert mask[10:20, 10:23].all()
    ys, xs = np.nonzero(mask)
    assert xs.min() >= 10 - 3 and xs.max() <= 22 + 3
    assert ys.min() >= 10 - 3 and ys.max() <= 19 + 3


def test_motion_components_are_convex_filled():
    a, b = flat(), flat()
    # an L-shaped change; its hull fills the notch
    b[5:25, 5:10] = 250
    b[20:25, 5:25] = 250
    mask = motion_mask(ring_of([a] * 5 + [b]), 20, 1, 1)
    ys, xs = np.nonzero(mask)
    hull = convex_hull_fill(Blob.from_pixels(list(zip(xs, ys))), (40, 40))
    assert hull.pixel_set() == set(zip(xs.tolist(), ys.tolist()))
    assert mask[12, 15]  # inside the notch


def test_static_mask_identities():
    rng = np.random.default_rng(2)
    fg = rng.random((10, 10)) < 0.5
    assert np.array_equal(static_mask(fg, np.zeros_like(fg)), fg)
    assert not static_mask(fg, fg | (rng.random((10, 10)) < 0.5)).any()


def test_candidates_area_filter():
    frame = np.zeros((20, 20, 3), np.uint8)
    static = np.zeros((20, 20), bool)
    assert extract_static_candidates(static, frame, 25, 0) == []
    static[3, 3:5] = True
    assert extract_static_candidates(static, frame, 25, 0) == []
    static[10:16, 10:16] = True
    (c,) = extract_static_candidates(static, frame, 25, 4)
    assert c.bbox == BoundingBox(10, 10, 6, 6) and c.area == 36 and c.frame_index == 4
    assert c.crop.shape == (6, 6, 3)


def test_candidates_shape_mismatch():
    with pytest.raises(ValueError):
        extract_static_candidates(np.zeros((4, 4), bool), np.zeros((5, 4, 3), np.uint8), 1, 0)


def _run(script, n=None, det=None):
    det = det or StaticObjectDetector()
    out = []
    for i, frame in enumerate(synth.iter_frames(script)):
        if n is not None and i >= n:
            break
        out.append(sod_step(det, frame))
    return out


def test_first_frame_yields_nothing():
    det = StaticObjectDetector()
    assert det.step(np.zeros((10, 10, 3), np.uint8)) == []


def test_preexisting_object_absorbed_into_background():
    script = synth.parse_script(
        "scene width=80 height=60 duration=40 background=120\n"
        "object box kind=luggage w=12 h=10 color=200,30,30\n"
        "waypoint box 0 30 20\nwaypoint box 39 30 20\n"
    )
    assert all(c == [] for c in _run(script))


def test_dimension_change_rejected():
    det = StaticObjectDetector()
    det.step(np.zeros((10, 10, 3), np.uint8))
    with pytest.raises(ValueError):
        det.step(np.zeros((10, 12, 3), np.uint8))


def test_warm_up_lasts_until_ring_is_primed():
    rng = np.random.default_rng(0)
    det = StaticObjectDetector(BackgroundConfig(), SodConfig(min_area=1))
    frames = [rng.integers(0, 256, (16, 16, 3), dtype=np.uint8) for _ in range(6)]
    assert [len(det.step(f)) for f in frames[:5]] == [0] * 5


@pytest.fixture(scope="module")
def drop_candidates():
    script = synth.drop_scene()
    return script, _run(script, 400)


def test_drop_scene_candidate_tracks_the_bag(drop_candidates):
    script, per_frame = drop_candidates
    (truth,) = synth.scene_truth(script)
    first = next(i for i, c in enumerate(per_frame) if c)
    assert 300 <= first < 360
    for cands in per_frame[first:]:
        assert len(cands) == 1
        b = cands[0].bbox
        assert abs(b.x - truth.bbox.x) <= 2 and abs(b.y - truth.bbox.y) <= 2
        assert abs(b.x2 - truth.bbox.x2) <= 2 and abs(b.y2 - truth.bbox.y2) <= 2


def test_drop_scene_walker_never_a_candidate(drop_candidates):
    script, per_frame = drop_candidates
    (truth,) = synth.scene_truth(script)
    for cands in per_frame:
        for c in cands:
            assert bbox_iou(c.bbox, truth.bbox) > 0.5
