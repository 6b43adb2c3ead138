import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from posecast import pose_data as pd


def _random_seq(rng, t=10, unit=True):
    joints = rng.random((t, 14, 2)) if unit else rng.random((t, 14, 2)) * 200
    return pd.PoseSequence(joints, frame_rate=30.0, source_id="test")


def _grid_seq(rng, t=10, grid=4096):
    joints = rng.integers(0, grid + 1, size=(t, 14, 2)) / grid
    return pd.PoseSequence(joints, source_id="grid")


# ---------------------------------------------------------------------------
# manifest / pose file loading


def _write_dataset(tmp_path, sequences):
    entries = []
    for i, joints in enumerate(sequences):
        name = f"seq{i}.csv"
        pd.write_pose_file(tmp_path / name, joints)
        entries.append((f"s{i}", name, 128, 25, None))
    pd.write_manifest(tmp_path / "manifest.csv", entries)
    return tmp_path / "manifest.csv"


def test_load_two_sequences(tmp_path):
    rng = np.random.default_rng(0)
    manifest = _write_dataset(tmp_path, [rng.random((5, 14, 2)), rng.random((7, 14, 2))])
    seqs = pd.load_pose_sequences(manifest)
    assert len(seqs) == 2
    assert [len(s) for s in seqs] == [5, 7]
    assert seqs[0].frame_size == 128
    assert seqs[1].frame_rate == 25


def test_load_round_trip_exact(tmp_path):
    rng = np.random.default_rng(1)
    joints = rng.random((6, 14, 2)) * 128
    manifest = _write_dataset(tmp_path, [joints])
    (seq,) = pd.load_pose_sequences(manifest)
    np.testing.assert_array_equal(seq.joints, joints)


def test_load_rejects_wrong_joint_count(tmp_path):
    path = tmp_path / "bad.csv"
    rows = [",".join(["0.5"] * 28), ",".join(["0.5"] * 26)]  # frame 1 has 13 joints
    path.write_text("\n".join(rows) + "\n")
    pd.write_manifest(tmp_path / "m.csv", [("bad", "bad.csv", 128, 30, None)])
    with pytest.raises(pd.PoseDataError, match="frame 1"):
        pd.load_pose_sequences(tmp_path / "m.csv")


def test_load_rejects_non_numeric(tmp_path):
    path = tmp_path / "bad.csv"
    row = ["0.5"] * 28
    row[3] = "oops"
    path.write_text(",".join(row) + "\n")
    pd.write_manifest(tmp_path / "m.csv", [("bad", "bad.csv", 128, 30, None)])
    with pytest.raises(pd.PoseDataError, match="non-numeric"):
        pd.load_pose_sequences(tmp_path / "m.csv")


def test_load_missing_file(tmp_path):
    pd.write_manifest(tmp_path / "m.csv", [("gone", "nope.csv", 128, 30, None)])
    with pytest.raises(pd.PoseDataError, match="missing pose file"):
        pd.load_pose_sequences(tmp_path / "m.csv")


def test_empty_manifest_gives_empty_list(tmp_path):
    (tmp_path / "m.csv").write_text("")
    assert pd.load_pose_sequences(tmp_path / "m.csv") == []


# ---------------------------------------------------------------------------
# normalize / subsample


def test_normalize_examples():
    joints = np.zeros((1, 14, 2))
    joints[0, 0] = (64, 64)
    joints[0, 1] = (0, 0)
    joints[0, 2] = (128, 96)
    out = pd.normalize(pd.PoseSequence(joints), 128)
    np.testing.assert_allclose(out.joints[0, 0], (0.5, 0.5))
    np.testing.assert_allclose(out.joints[0, 1], (0.0, 0.0))
    np.testing.assert_allclose(out.joints[0, 2], (1.0, 0.75))


def test_normalize_rejects_nonpositive():
    seq = _random_seq(np.random.default_rng(2))
    with pytest.raises(pd.PoseDataError):
        pd.normalize(seq, 0)


def test_normalize_round_trip():
    seq = _random_seq(np.random.default_rng(3), unit=False)
    back = pd.normalize(seq, 481.0).joints * 481.0
    np.testing.assert_allclose(back, seq.joints, atol=1e-12)


def test_subsample_512_by_4_gives_128():
    seq = _random_seq(np.random.default_rng(4), t=512)
    out = pd.subsample(seq, 4)
    assert len(out) == 128
    assert out.frame_rate == seq.frame_rate / 4
    np.testing.assert_array_equal(out.joints, seq.joints[::4])


def test_subsample_identity_and_boundary():
    seq = _random_seq(np.random.default_rng(5), t=3)
    same = pd.subsample(seq, 1)
    np.testing.assert_array_equal(same.joints, seq.joints)
    one = pd.subsample(seq, 4)
    assert len(one) == 1
    np.testing.assert_array_equal(one.joints[0], seq.joints[0])
    with pytest.raises(pd.PoseDataError):
        pd.subsample(seq, 0)


@given(a=st.integers(1, 5), b=st.integers(1, 5), t=st.integers(1, 100), seed=st.integers(0, 2**16))
@settings(max_examples=40, deadline=None)
def test_subsample_composition(a, b, t, seed):
    seq = _random_seq(np.random.default_rng(seed), t=t)
    lhs = pd.subsample(pd.subsample(seq, a), b)
    rhs = pd.subsample(seq, a * b)
    np.testing.assert_array_equal(lhs.joints, rhs.joints)
    assert lhs.frame_rate == pytest.approx(rhs.frame_rate)


# ---------------------------------------------------------------------------
# enclosing box / flip


def test_enclosing_box_degenerate_and_extremes():
    joints = np.full((1, 14, 2), 0.5)
    assert pd.enclosing_box(pd.PoseSequence(joints)) == (0.5, 0.5, 0.5, 0.5)
    joints = np.full((2, 14, 2), 0.5)
    joints[0, 0] = (0.1, 0.2)
    joints[1, 3] = (0.9, 0.8)
    assert pd.enclosing_box(pd.PoseSequence(joints)) == (0.1, 0.2, 0.9, 0.8)


def test_enclosing_box_brute_force_oracle():
    seq = _random_seq(np.random.default_rng(6), t=100)
    box = pd.enclosing_box(seq)
    # oracle: scan all 1400 joints one by one
    lo = [np.inf, np.inf]
    hi = [-np.inf, -np.inf]
    for t in range(100):
        for j in range(14):
            for axis in range(2):
                v = seq.joints[t, j, axis]
                lo[axis] = min(lo[axis], v)
                hi[axis] = max(hi[axis], v)
    assert box == (lo[0], lo[1], hi[0], hi[1])


def test_flip_mirrors_labels():
    joints = np.full((1, 14, 2), 0.5)
    joints[0, pd.JOINT_NAMES.index("right_wrist")] = (0.2, 0.4)
    out = pd.horizontal_flip(pd.PoseSequence(joints))
    np.testing.assert_allclose(out.joints[0, pd.JOINT_NAMES.index("left_wrist")], (0.8, 0.4))


def test_flip_involution_bitwise_on_grid():
    seq = _grid_seq(np.random.default_rng(7))
    twice = pd.horizontal_flip(pd.horizontal_flip(seq))
    np.testing.assert_array_equal(twice.joints, seq.joints)


@given(seed=st.integers(0, 2**16), t=st.integers(1, 20))
@settings(max_examples=25, deadline=None)
def test_flip_involution_property(seed, t):
    seq = _random_seq(np.random.default_rng(seed), t=t)
    twice = pd.horizontal_flip(pd.horizontal_flip(seq))
    np.testing.assert_allclose(twice.joints, seq.joints, atol=1e-15)


def test_flip_commutes_with_enclosing_box():
    seq = _random_seq(np.random.default_rng(8), t=20)
    min_x, min_y, max_x, max_y = pd.enclosing_box(seq)
    fbox = pd.enclosing_box(pd.horizontal_flip(seq))
    np.testing.assert_allclose(fbox, (1 - max_x, min_y, 1 - min_x, max_y), atol=1e-15)


def test_mirror_map_is_involution():
    assert (pd.MIRROR[pd.MIRROR] == np.arange(14)).all()
    assert pd.MIRROR[0] == 0 and pd.MIRROR[1] == 1


# ---------------------------------------------------------------------------
# pad/crop augmentation


def test_pad_crop_zero_offset_is_identity():
    seq = _random_seq(np.random.default_rng(9))
    out, _ = pd.pad_crop_augment(seq, offset=(0.0, 0.0))
    np.testing.assert_array_equal(out.joints, seq.joints)


def test_pad_crop_translates():
    joints = np.full((2, 14, 2), 0.4)
    seq = pd.PoseSequence(joints)
    out, _ = pd.pad_crop_augment(seq, offset=(0.1, 0.0))
    np.testing.assert_allclose(out.joints[..., 0], 0.5)
    np.testing.assert_allclose(out.joints[..., 1], 0.4)


def test_pad_crop_rejects_out_of_bounds():
    joints = np.full((1, 14, 2), 0.95)
    with pytest.raises(pd.PoseDataError, match="unit square"):
        pd.pad_crop_augment(pd.PoseSequence(joints), offset=(0.2, 0.0))


def test_pad_crop_shifts_frames_with_black_fill():
    joints = np.full((1, 14, 2), 0.5)
    clip = np.ones((1, 8, 8, 3))
    _, out = pd.pad_crop_augment(pd.PoseSequence(joints), clip=clip, offset=(0.25, 0.0))
    assert out.shape == clip.shape
    np.testing.assert_array_equal(out[0, :, :2], 0.0)  # new left margin is black
    np.testing.assert_array_equal(out[0, :, 2:], 1.0)


def test_pad_crop_random_offset_stays_valid():
    seq = _random_seq(np.random.default_rng(10))
    out, _ = pd.pad_crop_augment(seq, seed=123)
    box = pd.enclosing_box(out)
    assert box[0] >= -1e-9 and box[1] >= -1e-9 and box[2] <= 1 + 1e-9 and box[3] <= 1 + 1e-9
    again, _ = pd.pad_crop_augment(seq, seed=123)
    np.testing.assert_array_equal(out.joints, again.joints)


# ---------------------------------------------------------------------------
# windowing


def test_make_windows_counts():
    seq = _random_seq(np.random.default_rng(11), t=144)
    assert len(pd.make_windows(seq, hop=144)) == 1
    seq = _random_seq(np.random.default_rng(12), t=145)
    assert len(pd.make_windows(seq, hop=1)) == 2
    short = _random_seq(np.random.default_rng(13), t=143)
    assert pd.make_windows(short, hop=1) == []


def test_windows_are_contiguous():
    rng = np.random.default_rng(14)
    seq = pd.PoseSequence(rng.random((300, 14, 2)), frame_indices=np.arange(300))
    for pair in pd.make_windows(seq, hop=7):
        s = pair.start
        np.testing.assert_array_equal(pair.target.joints[0], seq.joints[s + 16])
        combined = np.concatenate([pair.input.joints, pair.target.joints])
        np.testing.assert_array_equal(combined, seq.joints[s : s + 144])
        assert pair.input.frame_indices[0] == s
        assert pair.target.frame_indices[-1] == s + 143


def test_window_pair_validates_lengths():
    seq = _random_seq(np.random.default_rng(15), t=144)
    with pytest.raises(pd.PoseDataError):
        pd.WindowPair(seq, seq)


# ---------------------------------------------------------------------------
# synthetic walker


def _line_spec(category=0, seed=0, length=160):
    return pd.SynthSpec(
        category=category,
        trajectory=pd.LineTrajectory((0.3, 0.45), (0.7, 0.55)),
        length=length,
        seed=seed,
    )


def test_synth_deterministic():
    a = pd.synth_dataset([_line_spec(seed=5)])[0]
    b = pd.synth_dataset([_line_spec(seed=5)])[0]
    np.testing.assert_array_equal(a.joints, b.joints)


def test_synth_waist_collinear_on_line():
    seq = pd.synth_dataset([_line_spec()])[0]
    mid = pd.waist_midpoint(seq.joints)
    d = mid[-1] - mid[0]
    d = d / np.linalg.norm(d)
    rel = mid - mid[0]
    cross = rel[:, 0] * d[1] - rel[:, 1] * d[0]  # line-fit residual oracle
    assert np.abs(cross).max() < 1e-6


def test_synth_categories_differ():
    a = pd.synth_dataset([_line_spec(category=0, seed=1)])[0]
    b = pd.synth_dataset([_line_spec(category=7, seed=1)])[0]
    mse = np.mean((a.joints - b.joints) ** 2, axis=(1, 2))
    assert (mse > 0).all()


def test_synth_in_unit_square_and_validates():
    seq = pd.synth_dataset([_line_spec(seed=9)])[0]
    assert seq.joints.min() >= 0.0 and seq.joints.max() <= 1.0
    with pytest.raises(pd.PoseDataError):
        pd.SynthSpec(category=0, trajectory=pd.LineTrajectory((0, 0), (1, 1)), length=100)
    with pytest.raises(pd.PoseDataError):
        pd.SynthSpec(category=-1, trajectory=pd.LineTrajectory((0, 0), (1, 1)), length=150)


def test_synth_gaits_distinct():
    gaits = {pd.category_gait(c) for c in range(15)}
    assert len(gaits) == 15


def test_circle_trajectory_points():
    traj = pd.CircleTrajectory((0.5, 0.5), 0.2, 0.0, np.pi)
    pts = traj.points(np.array([0.0, 1.0]))
    np.testing.assert_allclose(pts[0], (0.7, 0.5), atol=1e-12)
    np.testing.assert_allclose(pts[1], (0.3, 0.5), atol=1e-12)
