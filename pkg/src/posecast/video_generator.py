"""Pose-conditioned future-frame synthesis.

An encoder-decoder generator with skip connections maps (last observed frame,
future-pose heatmap stack) to one future frame; repeating over all future
poses yields the video. A convolutional discriminator judges frames, with all
of its inputs masked to the area around the person so it focuses on the human
rather than the background.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .heatmap_render import DEFAULT_BONE_COLORS, HeatmapSpec, person_mask, pose_to_heatmap, render_skeleton
from .pose_data import N_JOINTS, PoseSequence, WindowPair
from .pose_forecaster import d_loss_term, d_loss_term_grads, g_loss_term, g_loss_term_grad


@dataclass
class VideoClip:
    """Frame sequence (T, H, W, 3) with values in [0, 1]."""

    frames: np.ndarray

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 4 or self.frames.shape[-1] != 3:
            raise ValueError(f"frames must have shape (T, H, W, 3), got {self.frames.shape}")
        if not np.isfinite(self.frames).all():
            raise ValueError("frames contain non-finite values")
        if self.frames.min() < 0.0 or self.frames.max() > 1.0:
            raise ValueError("frame values must lie in [0, 1]")

    def __len__(self):
        return len(self.frames)

    @property
    def pixels_per_frame(self):
        return self.frames.shape[1] * self.frames.shape[2]


@dataclass
class VideoGenConfig:
    """Hyperparameters of the frame synthesis network."""

    l1_weight: float = 10000.0
    triplet_weight: float = 1000.0
    triplet_margin: float = 0.1
    pos_offset: int = 1
    neg_offset: int = 5
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    seed: int = 0
    steps: int = 2000
    image_size: int = 128
    enc_channels: tuple = (8, 16, 24, 32, 48, 64, 64, 64)
    dec_channels: tuple = (64, 48, 48, 32, 24, 16, 12)
    disc_channels: tuple = (16, 32, 48, 64)
    mask_margin: int = 8
    # float32 halves memory traffic in the conv kernels; float64 is only
    # needed when finite-differencing through the whole network
    dtype: str = "float32"

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64

    def __post_init__(self):
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype!r}")
        if self.l1_weight < 0 or self.triplet_weight < 0 or self.triplet_margin < 0:
            raise ValueError("loss weights and margin must be >= 0")
        if len(self.enc_channels) != 8 or len(self.dec_channels) != 7:
            raise ValueError("expected 8 encoder and 7 decoder channel widths")
        if self.image_size != 2 ** (len(self.enc_channels) - 1):
            raise ValueError(
                f"image_size={self.image_size} incompatible with "
                f"{len(self.enc_channels) - 1} halving encoder layers"
            )
        if not 0 < self.pos_offset < self.neg_offset:
            raise ValueError("need 0 < pos_offset < neg_offset")


class FrameGenerator:
    """U-Net: 8 conv layers down, 8 up, with skip concatenation.

    First encoder and last decoder layer are kernel 3 / stride 1 / padding 1;
    all others kernel 4 / stride 2 / padding 1. Input is the channel
    concatenation of an RGB frame and an N-channel pose heatmap stack.
    """

    def __init__(self, rng, cfg):
        in_ch = 3 + N_JOINTS
        ec = cfg.enc_channels
        dc = cfg.dec_channels
        dt = cfg.np_dtype
        self.dtype = dt
        self.enc = [nn.Conv2d(rng, in_ch, ec[0], kernel=3, stride=1, pad=1, dtype=dt)]
        self.enc += [nn.Conv2d(rng, ec[i], ec[i + 1], dtype=dt) for i in range(7)]
        self.enc_act = [nn.LeakyReLU() for _ in range(8)]
        # decoder stage j upsamples and then concatenates encoder stage 6-j
        self.dec = [nn.ConvT2d(rng, ec[7], dc[0], dtype=dt)]
        self.dec += [nn.ConvT2d(rng, dc[j - 1] + ec[7 - j], dc[j], dtype=dt) for j in range(1, 7)]
        self.dec_act = [nn.ReLU() for _ in range(7)]
        self.out_conv = nn.Conv2d(rng, dc[6] + ec[0], 3, kernel=3, stride=1, pad=1, dtype=dt)
        self.out_tanh = nn.Tanh()
        self.out_scale = nn.ScaleShift(0.5, 0.5)
        self.dec_widths = dc

    def forward(self, frames, heatmaps):
        x = np.concatenate(
            [np.asarray(frames, dtype=self.dtype), np.asarray(heatmaps, dtype=self.dtype)],
            axis=3,
        )
        enc_caches, skips = [], []
        for conv, act in zip(self.enc, self.enc_act):
            x, cc = conv.forward(x)
            x, ac = act.forward(x)
            enc_caches.append((cc, ac))
            skips.append(x)
        y = skips[7]
        dec_caches = []
        for j, (convt, act) in enumerate(zip(self.dec, self.dec_act)):
            y, cc = convt.forward(y)
            y, ac = act.forward(y)
            dec_caches.append((cc, ac))
            y = np.concatenate([y, skips[6 - j]], axis=3)
        y, oc = self.out_conv.forward(y)
        y, ot = self.out_tanh.forward(y)
        y, _ = self.out_scale.forward(y)
        return y, (enc_caches, dec_caches, oc, ot)

    def backward(self, gy, cache):
        enc_caches, dec_caches, oc, ot = cache
        gy = np.asarray(gy, dtype=self.dtype)
        gy, _ = self.out_scale.backward(gy, None)
        gy, _ = self.out_tanh.backward(gy, ot)
        gy, out_grads = self.out_conv.backward(gy, oc)

        skip_grads = [None] * 8
        w = self.dec_widths[6]
        g_dec, skip_grads[0] = gy[..., :w], gy[..., w:]
        dec_grads = [None] * 7
        for j in range(6, -1, -1):
            cc, ac = dec_caches[j]
            g_dec, _ = self.dec_act[j].backward(g_dec, ac)
            g_in, grads = self.dec[j].backward(g_dec, cc)
            dec_grads[j] = grads
            if j > 0:
                w = self.dec_widths[j - 1]
                g_dec, skip_grads[7 - j] = g_in[..., :w], g_in[..., w:]
            else:
                skip_grads[7] = g_in

        enc_grads = [None] * 8
        g = skip_grads[7]
        for i in range(7, -1, -1):
            cc, ac = enc_caches[i]
            g, _ = self.enc_act[i].backward(g, ac)
            g, grads = self.enc[i].backward(g, cc, need_gx=(i > 0))
            enc_grads[i] = grads
            if i > 0 and skip_grads[i - 1] is not None:
                g = g + skip_grads[i - 1]

        flat = [g for grads in enc_grads for g in grads]
        flat += [g for grads in dec_grads for g in grads]
        flat += out_grads
        return g, flat

    def params(self):
        out = [p for layer in self.enc for p in layer.params()]
        out += [p for layer in self.dec for p in layer.params()]
        out += self.out_conv.params()
        return out

    def named_params(self, prefix="frame_gen/"):
        out = []
        for i, layer in enumerate(self.enc):
            out += [(f"{prefix}enc{i}.{n}", p) for n, p in zip(layer.param_names(), layer.params())]
        for j, layer in enumerate(self.dec):
            out += [(f"{prefix}dec{j}.{n}", p) for n, p in zip(layer.param_names(), layer.params())]
        out += [(f"{prefix}out.{n}", p) for n, p in zip(self.out_conv.param_names(), self.out_conv.params())]
        return out


class FrameDiscriminator:
    """Convolutional classifier over masked (candidate, last frame, heatmap)."""

    def __init__(self, rng, cfg):
        in_ch = 3 + 3 + N_JOINTS
        chans = [in_ch, *cfg.disc_channels]
        dt = cfg.np_dtype
        self.dtype = dt
        layers = []
        for c_in, c_out in zip(chans[:-1], chans[1:]):
            layers += [nn.Conv2d(rng, c_in, c_out, dtype=dt), nn.LeakyReLU()]
        layers.append(nn.Flatten())
        side = cfg.image_size // 2 ** len(cfg.disc_channels)
        layers.append(nn.Dense(rng, side * side * cfg.disc_channels[-1], 1, dtype=dt))
        self.net = nn.Sequential(layers)

    def forward(self, candidates, conds, masks):
        """candidates (B,H,W,3), conds (B,H,W,3+N), masks (B,H,W)."""
        x = np.concatenate(
            [np.asarray(candidates, dtype=self.dtype), np.asarray(conds, dtype=self.dtype)],
            axis=3,
        ) * np.asarray(masks, dtype=self.dtype)[..., None]
        scores, cache = self.net.forward(x)
        return scores[:, 0], (cache, np.asarray(masks, dtype=self.dtype))

    def backward(self, gscore, cache, need_candidate_grad=True):
        net_cache, masks = cache
        gscore = np.asarray(gscore, dtype=self.dtype)
        gx, grads = self.net.backward(
            gscore[:, None], net_cache, need_input_grad=need_candidate_grad
        )
        if not need_candidate_grad:
            return None, grads
        g_cand = gx[..., :3] * masks[..., None]
        return g_cand, grads

    def score(self, candidate, last_frame, heatmaps, mask):
        cond = np.concatenate([last_frame, heatmaps], axis=2)
        scores, _ = self.forward(candidate[None], cond[None], mask[None])
        return float(scores[0])

    def params(self):
        return self.net.params()

    def named_params(self, prefix="frame_disc/"):
        return self.net.named_params(prefix + "net.")


def initial_video_networks(cfg):
    rng = np.random.default_rng(cfg.seed)
    return FrameGenerator(rng, cfg), FrameDiscriminator(rng, cfg)


# ---------------------------------------------------------------------------
# generation


def generate_frame(gen, last_frame, heatmaps):
    """Synthesize one future frame from the last observed frame and one
    pose's heatmap stack. Output is (H, W, 3) in [0, 1]."""
    last_frame = np.asarray(last_frame, dtype=np.float64)
    heatmaps = np.asarray(heatmaps, dtype=np.float64)
    if last_frame.ndim != 3 or last_frame.shape[-1] != 3:
        raise ValueError(f"last_frame must be (H, W, 3), got {last_frame.shape}")
    if heatmaps.shape[:2] != last_frame.shape[:2] or heatmaps.shape[-1] != N_JOINTS:
        raise ValueError(
            f"heatmaps must be (H, W, {N_JOINTS}) matching the frame, got {heatmaps.shape}"
        )
    out, _ = gen.forward(last_frame[None], heatmaps[None])
    return out[0]


def generate_video(gen, last_frame, future, spec=None, chunk=8):
    """Generate one frame per future pose, each conditioned on the same
    observed frame; returns a VideoClip of the same length."""
    if spec is None:
        spec = HeatmapSpec(last_frame.shape[0], last_frame.shape[1])
    poses = future.joints if isinstance(future, PoseSequence) else np.asarray(future)
    poses = poses.reshape(len(poses), N_JOINTS, 2)
    frames = np.empty((len(poses), last_frame.shape[0], last_frame.shape[1], 3))
    last_b = np.asarray(last_frame, dtype=np.float64)[None]
    for lo in range(0, len(poses), chunk):
        hi = min(len(poses), lo + chunk)
        heat = np.stack([pose_to_heatmap(poses[i], spec) for i in range(lo, hi)])
        out, _ = gen.forward(np.repeat(last_b, hi - lo, axis=0), heat)
        frames[lo:hi] = out
    return VideoClip(np.clip(frames, 0.0, 1.0))


# ---------------------------------------------------------------------------
# losses


def loss_frame_adversarial(real_scores, fake_scores):
    """Log-loss GAN objective over masked frame triples; returns (d_loss,
    g_loss) with the non-saturating generator form."""
    return d_loss_term(real_scores, fake_scores), g_loss_term(fake_scores)


def loss_l1(real, fake):
    """Mean absolute error, normalized by pixel count (channels summed)."""
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    if real.shape != fake.shape:
        raise ValueError(f"shape mismatch: {real.shape} vs {fake.shape}")
    m = real.shape[0] * real.shape[1]
    return float(np.abs(real - fake).sum() / m)


def loss_l1_grad(real, fake):
    """Gradient w.r.t. the generated frame."""
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    m = real.shape[0] * real.shape[1]
    return np.sign(fake - real) / m


def loss_triplet(anchor, positive, negative, margin=0.1):
    """Temporal-continuity hinge: per-pixel mean squared distance to the next
    frame should undercut the distance to a farther frame by the margin."""
    anchor = np.asarray(anchor, dtype=np.float64)
    positive = np.asarray(positive, dtype=np.float64)
    negative = np.asarray(negative, dtype=np.float64)
    if anchor.shape != positive.shape or anchor.shape != negative.shape:
        raise ValueError("triplet frames must share one shape")
    m = anchor.shape[0] * anchor.shape[1]
    d_pos = np.sum((anchor - positive) ** 2) / m
    d_neg = np.sum((anchor - negative) ** 2) / m
    return float(max(0.0, d_pos - d_neg + margin))


def loss_triplet_grads(anchor, positive, negative, margin=0.1):
    """Gradients w.r.t. (anchor, positive, negative); zero when the hinge is
    inactive."""
    anchor = np.asarray(anchor, dtype=np.float64)
    positive = np.asarray(positive, dtype=np.float64)
    negative = np.asarray(negative, dtype=np.float64)
    m = anchor.shape[0] * anchor.shape[1]
    if loss_triplet(anchor, positive, negative, margin) <= 0.0:
        z = np.zeros_like(anchor)
        return z, z.copy(), z.copy()
    ga = 2.0 * (negative - positive) / m
    gp = 2.0 * (positive - anchor) / m
    gn = 2.0 * (anchor - negative) / m
    return ga, gp, gn


def total_frame_loss(g_adv, l1, triplet, cfg):
    """Weighted sum of the frame-generator loss terms."""
    return float(g_adv + cfg.l1_weight * l1 + cfg.triplet_weight * triplet)


# ---------------------------------------------------------------------------
# training data plumbing


class SkeletonFrameProvider:
    """Renders stick-figure frames on demand from a pose sequence."""

    def __init__(self, seq, size=128, palette=None):
        self.seq = seq
        self.size = size
        self.palette = DEFAULT_BONE_COLORS if palette is None else palette

    def get(self, index):
        return render_skeleton(self.seq.joints[index], self.size, self.palette)


class DirFrameProvider:
    """Reads zero-padded numbered PNG frames from a directory."""

    def __init__(self, directory, size=128):
        from pathlib import Path

        self.files = sorted(Path(directory).glob("*.png"))
        if not self.files:
            raise ValueError(f"no PNG frames found in {directory}")
        self.size = size

    def get(self, index):
        from PIL import Image

        img = Image.open(self.files[index]).convert("RGB")
        if img.size != (self.size, self.size):
            img = img.resize((self.size, self.size), Image.BILINEAR)
        return np.asarray(img, dtype=np.float64) / 255.0


@dataclass
class VideoPair:
    """A pose window plus access to its aligned source frames."""

    window: WindowPair
    provider: object

    def frame_at(self, source_index):
        return self.provider.get(int(source_index))

    @property
    def last_input_index(self):
        idx = self.window.input.frame_indices
        if idx is None:
            raise ValueError("video training windows need frame_indices")
        return int(idx[-1])

    def target_index(self, offset):
        return int(self.window.target.frame_indices[offset])


def palette_for_sequence(index, seed=0):
    """Per-sequence bone-color tint; used both when pre-rendering synthetic
    frame directories and when rendering on demand, so the two agree."""
    rng = np.random.default_rng((seed + 1) * 100003 + index)
    return DEFAULT_BONE_COLORS * rng.uniform(0.55, 1.0, size=3)


def skeleton_video_pairs(seqs, hop=16, size=128, seed=0):
    """Build render-on-demand (window, frames) training pairs with a
    per-sequence color tint so the last observed frame carries appearance
    information."""
    from .pose_data import make_windows

    pairs = []
    for i, seq in enumerate(seqs):
        provider = SkeletonFrameProvider(seq, size, palette_for_sequence(i, seed))
        for window in make_windows(seq, hop=hop):
            pairs.append(VideoPair(window, provider))
    return pairs


# ---------------------------------------------------------------------------
# training


VIDEO_LOG_COLUMNS = ("step", "d_loss", "g_adv", "l_l1", "l_tri", "total")


class VideoTrainer:
    """Alternating updates for the frame generator and discriminator.

    Per step: sample a clip and an anchor index t with t + neg_offset within
    the future window; generate the anchor/positive/negative frames; mask all
    discriminator inputs with the person mask of the anchor's target pose.
    """

    def __init__(self, dataset, cfg, heatmap_spec=None):
        if len(dataset) < 1:
            raise ValueError("video training dataset is empty")
        self.cfg = cfg
        self.pairs = list(dataset)
        self.spec = heatmap_spec or HeatmapSpec(cfg.image_size, cfg.image_size)
        self.gen, self.disc = initial_video_networks(cfg)
        self.opt_gen = nn.Adam(self.gen.params(), lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2)
        self.opt_disc = nn.Adam(self.disc.params(), lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2)
        self.rng = np.random.default_rng(cfg.seed + 1)
        self.step_count = 0
        self._x_last_cache = {}

    def _anchor_range(self):
        return 128 - self.cfg.neg_offset  # anchor in [0, 128 - neg_offset - 1]

    def _draw_item(self):
        i = int(self.rng.integers(0, len(self.pairs)))
        t = int(self.rng.integers(0, self._anchor_range()))
        return i, t

    def _x_last(self, i):
        if i not in self._x_last_cache:
            pair = self.pairs[i]
            self._x_last_cache[i] = pair.frame_at(pair.last_input_index)
        return self._x_last_cache[i]

    def _materialize(self, i, t, offsets):
        """Heatmaps and mask for pose t (+offsets), plus frames."""
        pair = self.pairs[i]
        poses = pair.window.target.joints
        heat = np.stack([pose_to_heatmap(poses[t + o], self.spec) for o in offsets])
        mask = person_mask(poses[t], self.spec, self.cfg.mask_margin)
        return heat, mask

    def train_step(self):
        cfg = self.cfg

        # discriminator update on the anchor frame
        i, t = self._draw_item()
        pair = self.pairs[i]
        x_last = self._x_last(i)
        heat, mask = self._materialize(i, t, offsets=(0,))
        real = pair.frame_at(pair.target_index(t))
        fake, _ = self.gen.forward(x_last[None], heat)
        cond = np.concatenate([x_last[None], heat], axis=3)
        cands = np.concatenate([real[None], fake], axis=0)
        scores, d_cache = self.disc.forward(
            cands, np.repeat(cond, 2, axis=0), np.repeat(mask[None], 2, axis=0)
        )
        r_s, f_s = scores[:1], scores[1:]
        d_loss = d_loss_term(r_s, f_s)
        g_r, g_f = d_loss_term_grads(r_s, f_s)
        _, d_grads = self.disc.backward(
            np.concatenate([g_r, g_f]), d_cache, need_candidate_grad=False
        )
        self.opt_disc.step(d_grads)

        # generator update on a fresh (clip, anchor) with the triplet frames
        i2, t2 = self._draw_item()
        pair2 = self.pairs[i2]
        x_last2 = self._x_last(i2)
        heat3, mask2 = self._materialize(i2, t2, offsets=(0, cfg.pos_offset, cfg.neg_offset))
        real2 = pair2.frame_at(pair2.target_index(t2))
        fakes, gen_cache = self.gen.forward(np.repeat(x_last2[None], 3, axis=0), heat3)
        f_a, f_p, f_n = fakes[0], fakes[1], fakes[2]
        cond2 = np.concatenate([x_last2, heat3[0]], axis=2)
        fs, g_cache = self.disc.forward(f_a[None], cond2[None], mask2[None])
        g_adv = g_loss_term(fs)
        l1 = loss_l1(real2, f_a)
        tri = loss_triplet(f_a, f_p, f_n, cfg.triplet_margin)

        g_cand, _ = self.disc.backward(g_loss_term_grad(fs), g_cache)
        ga, gp, gn = loss_triplet_grads(f_a, f_p, f_n, cfg.triplet_margin)
        gfakes = np.empty_like(fakes)
        gfakes[0] = g_cand[0] + cfg.l1_weight * loss_l1_grad(real2, f_a) + cfg.triplet_weight * ga
        gfakes[1] = cfg.triplet_weight * gp
        gfakes[2] = cfg.triplet_weight * gn
        _, gen_grads = self.gen.backward(gfakes, gen_cache)
        self.opt_gen.step(gen_grads)

        self.step_count += 1
        return {
            "step": self.step_count,
            "d_loss": d_loss,
            "g_adv": g_adv,
            "l_l1": l1,
            "l_tri": tri,
            "total": total_frame_loss(g_adv, l1, tri, cfg),
        }

    def run(self, steps):
        return [self.train_step() for _ in range(steps)]

    def named_params(self):
        return self.gen.named_params() + self.disc.named_params()

    def optimizers(self):
        return {"gen": self.opt_gen, "disc": self.opt_disc}

    def save(self, path):
        nn.save_checkpoint(
            path,
            self.named_params(),
            step=self.step_count,
            optimizers=self.optimizers(),
            rng_state=self.rng.bit_generator.state,
        )

    def load(self, path):
        step, rng_state = nn.load_checkpoint(path, self.named_params(), self.optimizers())
        self.step_count = step
        if rng_state is not None:
            self.rng.bit_generator.state = rng_state


def train_video_net(dataset, cfg, steps=None, heatmap_spec=None):
    """Train on (clip, ground-truth pose) pairs; returns (generator,
    discriminator, per-step loss log)."""
    trainer = VideoTrainer(dataset, cfg, heatmap_spec)
    log = trainer.run(cfg.steps if steps is None else steps)
    return trainer.gen, trainer.disc, log


def heldout_l1(gen, pairs, spec=None, anchors=(0, 40, 80, 122)):
    """Mean per-frame reconstruction L1 over fixed (pair, anchor) probes."""
    total, count = 0.0, 0
    for pair in pairs:
        x_last = pair.frame_at(pair.last_input_index)
        use_spec = spec or HeatmapSpec(x_last.shape[0], x_last.shape[1])
        for t in anchors:
            heat = pose_to_heatmap(pair.window.target.joints[t], use_spec)
            fake = generate_frame(gen, x_last, heat)
            real = pair.frame_at(pair.target_index(t))
            total += loss_l1(real, fake)
            count += 1
    return total / count
