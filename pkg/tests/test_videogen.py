import math

import numpy as np
import pytest

from posecast import heatmap_render as hr
from posecast import pose_data as pd
from posecast import video_generator as vg

TINY = dict(
    enc_channels=(4, 4, 4, 4, 4, 4, 4, 4),
    dec_channels=(4, 4, 4, 4, 4, 4, 4),
    disc_channels=(4, 4, 4, 4),
)


def tiny_cfg(**kw):
    return vg.VideoGenConfig(**{**TINY, **kw})


def _pairs(n_seqs=2, seed=0):
    specs = [
        pd.SynthSpec(
            category=i % 15,
            trajectory=pd.LineTrajectory((0.3, 0.4), (0.7, 0.55)),
            length=150,
            seed=seed + i,
        )
        for i in range(n_seqs)
    ]
    return vg.skeleton_video_pairs(pd.synth_dataset(specs), seed=seed)


# ---------------------------------------------------------------------------
# generation contracts


def test_generate_frame_shape_determinism_bounds():
    cfg = tiny_cfg()
    gen, _ = vg.initial_video_networks(cfg)
    rng = np.random.default_rng(0)
    frame = rng.random((128, 128, 3))
    heat = rng.random((128, 128, 14))
    out = vg.generate_frame(gen, frame, heat)
    assert out.shape == (128, 128, 3)
    assert out.min() >= 0.0 and out.max() <= 1.0
    np.testing.assert_array_equal(out, vg.generate_frame(gen, frame, heat))
    with pytest.raises(ValueError):
        vg.generate_frame(gen, frame[:64], heat)
    with pytest.raises(ValueError):
        vg.generate_frame(gen, frame, heat[:, :, :5])


def test_generate_video_length_follows_poses():
    cfg = tiny_cfg()
    gen, _ = vg.initial_video_networks(cfg)
    rng = np.random.default_rng(1)
    frame = rng.random((128, 128, 3))
    for t in (1, 3, 17, 128):
        poses = rng.random((t, 28))
        clip = vg.generate_video(gen, frame, poses)
        assert len(clip) == t
        assert clip.frames.shape == (t, 128, 128, 3)


def test_generate_video_per_frame_independence():
    # frame i depends only on pose i, so permuting poses permutes frames
    cfg = tiny_cfg()
    gen, _ = vg.initial_video_networks(cfg)
    rng = np.random.default_rng(2)
    frame = rng.random((128, 128, 3))
    poses = rng.random((6, 28))
    perm = rng.permutation(6)
    a = vg.generate_video(gen, frame, poses)
    b = vg.generate_video(gen, frame, poses[perm])
    np.testing.assert_allclose(b.frames, a.frames[perm], atol=1e-6)


def test_generate_video_differs_for_different_poses():
    cfg = tiny_cfg()
    gen, _ = vg.initial_video_networks(cfg)
    rng = np.random.default_rng(3)
    frame = rng.random((128, 128, 3))
    a = vg.generate_video(gen, frame, rng.random((4, 28)))
    b = vg.generate_video(gen, frame, rng.random((4, 28)))
    assert not np.array_equal(a.frames, b.frames)


def test_videoclip_validation():
    with pytest.raises(ValueError):
        vg.VideoClip(np.zeros((2, 8, 8)))
    with pytest.raises(ValueError):
        vg.VideoClip(np.full((1, 4, 4, 3), 2.0))
    clip = vg.VideoClip(np.zeros((2, 4, 4, 3)))
    assert clip.pixels_per_frame == 16


def test_config_validation():
    with pytest.raises(ValueError):
        tiny_cfg(l1_weight=-1)
    with pytest.raises(ValueError):
        tiny_cfg(enc_channels=(4, 4))
    with pytest.raises(ValueError):
        tiny_cfg(image_size=64)
    with pytest.raises(ValueError):
        tiny_cfg(dtype="float16")
    with pytest.raises(ValueError):
        tiny_cfg(pos_offset=5, neg_offset=5)


# ---------------------------------------------------------------------------
# losses


def oracle_l1(real, fake):
    total = 0.0
    h, w, c = real.shape
    for i in range(h):
        for j in range(w):
            for ch in range(c):
                total += abs(real[i, j, ch] - fake[i, j, ch])
    return total / (h * w)


def oracle_triplet(anchor, pos, neg, margin):
    h, w, c = anchor.shape
    m = h * w
    dp = dn = 0.0
    for i in range(h):
        for j in range(w):
            for ch in range(c):
                dp += (anchor[i, j, ch] - pos[i, j, ch]) ** 2
                dn += (anchor[i, j, ch] - neg[i, j, ch]) ** 2
    return max(0.0, dp / m - dn / m + margin)


def test_l1_matches_oracle_100():
    rng = np.random.default_rng(4)
    for _ in range(100):
        real = rng.random((6, 5, 3))
        fake = rng.random((6, 5, 3))
        assert abs(vg.loss_l1(real, fake) - oracle_l1(real, fake)) < 1e-9


def test_l1_spot_values():
    rng = np.random.default_rng(5)
    img = rng.random((16, 16, 3)) * 0.5
    assert vg.loss_l1(img, img) == 0.0
    assert vg.loss_l1(img, img + 0.1) == pytest.approx(0.3, abs=1e-12)
    with pytest.raises(ValueError):
        vg.loss_l1(img, img[:8])


def test_triplet_matches_oracle_100():
    rng = np.random.default_rng(6)
    for _ in range(100):
        a, p, n = rng.random((3, 5, 4, 3))
        margin = float(rng.uniform(0, 0.3))
        assert abs(vg.loss_triplet(a, p, n, margin) - oracle_triplet(a, p, n, margin)) < 1e-9


def test_triplet_spot_values():
    rng = np.random.default_rng(7)
    anchor = rng.random((8, 8, 3))
    far = anchor + 0.5
    # satisfied triplet: positive identical, negative far beyond the margin
    assert vg.loss_triplet(anchor, anchor, far, 0.1) == 0.0
    # degenerate triplet: positive == negative leaves exactly the margin
    assert vg.loss_triplet(anchor, far, far, 0.1) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(ValueError):
        vg.loss_triplet(anchor, anchor, far[:4], 0.1)


def test_frame_adversarial_values():
    z = np.zeros(3)
    d_loss, g_loss = vg.loss_frame_adversarial(z, z)
    assert d_loss == pytest.approx(2 * math.log(2), abs=1e-9)
    assert g_loss == pytest.approx(math.log(2), abs=1e-9)
    d_loss, _ = vg.loss_frame_adversarial(np.full(3, 40.0), np.full(3, -40.0))
    assert d_loss == pytest.approx(0.0, abs=1e-9)


def test_total_frame_loss():
    cfg = tiny_cfg()
    assert vg.total_frame_loss(1.0, 1.0, 1.0, cfg) == pytest.approx(11001.0)
    assert vg.total_frame_loss(0.0, 0.0, 0.0, cfg) == 0.0
    free = tiny_cfg(l1_weight=0.0, triplet_weight=0.0)
    assert vg.total_frame_loss(0.25, 9.0, 9.0, free) == pytest.approx(0.25)


def _rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)


def _fd(f, x, h=1e-6):
    g = np.zeros_like(x)
    flat, gf = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gf[i] = (fp - fm) / (2 * h)
    return g


def test_l1_grad_matches_fd():
    rng = np.random.default_rng(8)
    for _ in range(10):
        real = rng.random((4, 3, 3))
        fake = rng.random((4, 3, 3))
        ana = vg.loss_l1_grad(real, fake)
        fd = _fd(lambda: vg.loss_l1(real, fake), fake)
        assert _rel(ana, fd) < 1e-4


def test_triplet_grads_match_fd():
    rng = np.random.default_rng(9)
    checked_active = 0
    for _ in range(10):
        a, p, n = rng.random((3, 4, 3, 3))
        margin = 0.05
        if vg.loss_triplet(a, p, n, margin) > 1e-3:
            checked_active += 1
        ga, gp, gn = vg.loss_triplet_grads(a, p, n, margin)
        fd_a = _fd(lambda: vg.loss_triplet(a, p, n, margin), a)
        fd_p = _fd(lambda: vg.loss_triplet(a, p, n, margin), p)
        fd_n = _fd(lambda: vg.loss_triplet(a, p, n, margin), n)
        assert _rel(ga, fd_a) < 1e-4 or (np.allclose(ga, 0) and np.allclose(fd_a, 0))
        assert _rel(gp, fd_p) < 1e-4 or (np.allclose(gp, 0) and np.allclose(fd_p, 0))
        assert _rel(gn, fd_n) < 1e-4 or (np.allclose(gn, 0) and np.allclose(fd_n, 0))
    assert checked_active >= 5  # the hinge must actually fire in this suite


def test_triplet_inactive_hinge_zero_grads():
    rng = np.random.default_rng(10)
    anchor = rng.random((4, 4, 3))
    ga, gp, gn = vg.loss_triplet_grads(anchor, anchor, anchor + 0.9, 0.05)
    assert np.all(ga == 0) and np.all(gp == 0) and np.all(gn == 0)


# ---------------------------------------------------------------------------
# whole-network gradient checks (float64 networks)


def test_unet_backward_matches_fd():
    cfg = tiny_cfg(dtype="float64")
    gen, _ = vg.initial_video_networks(cfg)
    rng = np.random.default_rng(11)
    for p in gen.params():
        p[...] = rng.normal(0.0, 0.2, p.shape)
    frames = rng.random((1, 128, 128, 3))
    heat = rng.random((1, 128, 128, 14))
    out, cache = gen.forward(frames, heat)
    probe = rng.standard_normal(out.shape) / out.size
    _, grads = gen.backward(probe, cache)

    def scalar():
        y, _ = gen.forward(frames, heat)
        return float(np.sum(y * probe))

    h = 1e-6
    params = gen.params()
    assert len(grads) == len(params)
    for p, g in zip(params, grads):
        flat = p.reshape(-1)
        for i in rng.choice(flat.size, size=min(2, flat.size), replace=False):
            orig = flat[i]
            flat[i] = orig + h
            fp = scalar()
            flat[i] = orig - h
            fm = scalar()
            flat[i] = orig
            fd = (fp - fm) / (2 * h)
            assert abs(fd - g.reshape(-1)[i]) < 3e-4 * max(1e-4, abs(fd))


def test_frame_disc_backward_matches_fd():
    cfg = tiny_cfg(dtype="float64")
    _, disc = vg.initial_video_networks(cfg)
    rng = np.random.default_rng(12)
    for p in disc.params():
        p[...] = rng.normal(0.0, 0.1, p.shape)
    cand = rng.random((1, 128, 128, 3))
    cond = rng.random((1, 128, 128, 17))
    mask = (rng.random((1, 128, 128)) > 0.3).astype(np.float64)
    scores, cache = disc.forward(cand, cond, mask)
    probe = rng.standard_normal(scores.shape)
    g_cand, grads = disc.backward(probe, cache)

    def scalar():
        s, _ = disc.forward(cand, cond, mask)
        return float(np.sum(s * probe))

    h = 1e-6
    for p, g in zip(disc.params(), grads):
        flat = p.reshape(-1)
        for i in rng.choice(flat.size, size=min(2, flat.size), replace=False):
            orig = flat[i]
            flat[i] = orig + h
            fp = scalar()
            flat[i] = orig - h
            fm = scalar()
            flat[i] = orig
            fd = (fp - fm) / (2 * h)
            assert abs(fd - g.reshape(-1)[i]) < 3e-4 * max(1e-4, abs(fd))
    # candidate-input gradient (the path that trains the generator)
    for _ in range(5):
        i, j = rng.integers(128), rng.integers(128)
        c = rng.integers(3)
        orig = cand[0, i, j, c]
        cand[0, i, j, c] = orig + h
        fp = scalar()
        cand[0, i, j, c] = orig - h
        fm = scalar()
        cand[0, i, j, c] = orig
        fd = (fp - fm) / (2 * h)
        assert abs(fd - g_cand[0, i, j, c]) < 3e-4 * max(1e-4, abs(fd))


def test_disc_masking_invariance():
    # pixels outside the person mask must not influence the score
    cfg = tiny_cfg()
    _, disc = vg.initial_video_networks(cfg)
    rng = np.random.default_rng(13)
    cand = rng.random((128, 128, 3))
    frame = rng.random((128, 128, 3))
    heat = rng.random((128, 128, 14))
    pose = rng.random((14, 2)) * 0.4 + 0.3
    mask = hr.person_mask(pose, hr.HeatmapSpec(), margin=8)
    s1 = disc.score(cand, frame, heat, mask)
    junk = rng.random(cand.shape) * 17.0 - 5.0
    outside = mask[:, :, None] == 0.0
    cand2 = np.where(outside, junk, cand)
    frame2 = np.where(outside, junk[:, :, ::-1], frame)
    s2 = disc.score(cand2, frame2, heat, mask)
    assert s1 == s2


# ---------------------------------------------------------------------------
# training


def test_train_step_changes_params_and_logs():
    cfg = tiny_cfg(seed=1)
    trainer = vg.VideoTrainer(_pairs(), cfg)
    before_g = [p.copy() for p in trainer.gen.params()]
    before_d = [p.copy() for p in trainer.disc.params()]
    row = trainer.train_step()
    assert set(row) == set(vg.VIDEO_LOG_COLUMNS)
    assert all(np.isfinite(v) for v in row.values())
    assert any(not np.array_equal(p, q) for p, q in zip(trainer.gen.params(), before_g))
    assert any(not np.array_equal(p, q) for p, q in zip(trainer.disc.params(), before_d))


def test_train_deterministic():
    pairs = _pairs()
    cfg = tiny_cfg(seed=3)
    _, _, log_a = vg.train_video_net(pairs, cfg, steps=2)
    _, _, log_b = vg.train_video_net(pairs, cfg, steps=2)
    assert log_a == log_b


def test_train_rejects_empty():
    with pytest.raises(ValueError):
        vg.VideoTrainer([], tiny_cfg())


def test_anchor_never_exceeds_window():
    cfg = tiny_cfg(seed=5)
    trainer = vg.VideoTrainer(_pairs(1), cfg)
    hi = trainer._anchor_range()
    assert hi + cfg.neg_offset == 128
    draws = [trainer._draw_item()[1] for _ in range(500)]
    assert max(draws) <= hi - 1 and min(draws) >= 0
    assert max(draws) + cfg.neg_offset <= 127


def test_video_checkpoint_resume(tmp_path):
    pairs = _pairs()
    cfg = tiny_cfg(seed=7)
    straight = vg.VideoTrainer(pairs, cfg)
    full = straight.run(4)

    first = vg.VideoTrainer(pairs, cfg)
    head = first.run(2)
    first.save(tmp_path / "v.npz")
    resumed = vg.VideoTrainer(pairs, cfg)
    resumed.load(tmp_path / "v.npz")
    tail = resumed.run(2)
    assert head + tail == full
    for p, q in zip(resumed.gen.params(), straight.gen.params()):
        np.testing.assert_array_equal(p, q)


def test_heldout_l1_runs():
    cfg = tiny_cfg()
    gen, _ = vg.initial_video_networks(cfg)
    val = vg.heldout_l1(gen, _pairs(1), anchors=(0, 60))
    assert np.isfinite(val) and val > 0
