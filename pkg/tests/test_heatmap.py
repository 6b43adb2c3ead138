import numpy as np
import pytest

from posecast import heatmap_render as hr
from posecast import pose_data as pd


def _pose(rng, grid=None):
    if grid:
        return rng.integers(0, grid + 1, size=(14, 2)) / grid
    return rng.random((14, 2))


def test_heatmap_peak_location_and_value():
    rng = np.random.default_rng(0)
    frame = _pose(rng)
    spec = hr.HeatmapSpec()
    hm = hr.pose_to_heatmap(frame, spec)
    assert hm.shape == (128, 128, 14)
    px, py = hr.joint_pixels(frame, 128, 128)
    for j in range(14):
        flat = np.argmax(hm[:, :, j])
        yy, xx = np.unravel_index(flat, (128, 128))
        assert (yy, xx) == (py[j], px[j])
        assert hm[py[j], px[j], j] == 1.0


def test_heatmap_analytic_two_pixels():
    frame = np.full((14, 2), 0.5)
    spec = hr.HeatmapSpec(sigma=2.0)
    hm = hr.pose_to_heatmap(frame, spec)
    px, py = hr.joint_pixels(frame, 128, 128)
    val = hm[py[0] + 2, px[0], 0]
    assert val == pytest.approx(np.exp(-0.5), abs=1e-12)


def test_heatmap_values_bounded_and_max_one():
    rng = np.random.default_rng(1)
    for _ in range(5):
        hm = hr.pose_to_heatmap(_pose(rng))
        assert hm.min() >= 0.0 and hm.max() <= 1.0
        np.testing.assert_allclose(hm.reshape(-1, 14).max(axis=0), 1.0)


def test_heatmap_argmax_lipschitz_one_pixel():
    # moving a joint by one pixel moves that channel's argmax by at most one
    rng = np.random.default_rng(2)
    spec = hr.HeatmapSpec()
    step = 1.0 / (spec.width - 1)
    for _ in range(10):
        frame = _pose(rng) * 0.9 + 0.05
        moved = frame.copy()
        moved[3, 0] += step
        a = hr.pose_to_heatmap(frame, spec)[:, :, 3]
        b = hr.pose_to_heatmap(moved, spec)[:, :, 3]
        ya, xa = np.unravel_index(np.argmax(a), a.shape)
        yb, xb = np.unravel_index(np.argmax(b), b.shape)
        assert abs(ya - yb) <= 1 and abs(xa - xb) <= 1


def test_heatmap_spec_validation():
    with pytest.raises(ValueError):
        hr.HeatmapSpec(sigma=0.0)
    with pytest.raises(ValueError):
        hr.HeatmapSpec(height=0)


def test_person_mask_dilation_arithmetic():
    # joints spanning pixels (20,30)-(60,100) with margin 8 -> box (12,22)-(68,108)
    frame = np.zeros((14, 2))
    frame[:, 0] = 40 / 127.0
    frame[:, 1] = 60 / 127.0
    frame[0] = (20 / 127.0, 30 / 127.0)
    frame[1] = (60 / 127.0, 100 / 127.0)
    mask = hr.person_mask(frame, hr.HeatmapSpec(), margin=8)
    on = np.argwhere(mask == 1.0)
    assert on[:, 0].min() == 22 and on[:, 0].max() == 108
    assert on[:, 1].min() == 12 and on[:, 1].max() == 68
    assert mask.sum() == (108 - 22 + 1) * (68 - 12 + 1)


def test_person_mask_zero_margin_tight():
    frame = np.zeros((14, 2))
    frame[:, 0] = np.linspace(30, 50, 14) / 127.0
    frame[:, 1] = np.linspace(40, 90, 14) / 127.0
    mask = hr.person_mask(frame, margin=0)
    on = np.argwhere(mask == 1.0)
    assert on[:, 1].min() == 30 and on[:, 1].max() == 50
    assert on[:, 0].min() == 40 and on[:, 0].max() == 90


def test_person_mask_clips_at_corner():
    frame = np.zeros((14, 2))  # all joints at pixel (0, 0)
    mask = hr.person_mask(frame, margin=8)
    assert mask[0, 0] == 1.0
    assert mask[:9, :9].sum() == 81
    assert mask.sum() == 81


def test_person_mask_flip_mirror():
    rng = np.random.default_rng(3)
    frame = _pose(rng, grid=127)
    seq = pd.PoseSequence(frame[None])
    flipped = pd.horizontal_flip(seq).joints[0]
    m1 = hr.person_mask(frame)
    m2 = hr.person_mask(flipped)
    np.testing.assert_array_equal(m2, m1[:, ::-1])


def test_render_degenerate_pose_single_disc():
    frame = np.full((14, 2), 0.5)
    img = hr.render_skeleton(frame, 64)
    assert img.shape == (64, 64, 3)
    on = np.argwhere(img.max(axis=2) > 0)
    px, py = hr.joint_pixels(frame, 64, 64)
    # a single blob around the shared joint pixel
    assert len(on) > 0
    assert np.abs(on[:, 0] - py[0]).max() <= 3
    assert np.abs(on[:, 1] - px[0]).max() <= 3


def test_render_canvas_size():
    rng = np.random.default_rng(4)
    img = hr.render_skeleton(_pose(rng), 96)
    assert img.shape == (96, 96, 3)
    assert img.min() >= 0.0 and img.max() <= 1.0


def test_render_commutes_with_flip():
    rng = np.random.default_rng(5)
    assert hr.mirror_palette_check(hr.DEFAULT_BONE_COLORS)
    for _ in range(5):
        frame = _pose(rng, grid=127)
        seq = pd.PoseSequence(frame[None])
        flipped = pd.horizontal_flip(seq).joints[0]
        a = hr.render_skeleton(frame, 128)
        b = hr.render_skeleton(flipped, 128)
        np.testing.assert_array_equal(b, a[:, ::-1])
