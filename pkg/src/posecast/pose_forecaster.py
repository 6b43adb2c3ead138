"""Multi-future pose forecasting with a 1D-convolutional conditional GAN.

A generator maps (noise, behavior code, attraction point, observed poses) to
a 128-frame future pose sequence. Two discriminators score realism: a global
one over the whole future (conditioned on the observed poses) and a local one
over short 16-frame windows. The generator is additionally pulled toward the
attraction point, regularized for smooth velocity, and trained to keep the
behavior code recoverable from its output (mutual-information style, via a
classification head on the global discriminator).

Sequences flow through the networks as (batch, time, 28) arrays, i.e. the
flattened per-frame joint coordinates of :mod:`posecast.pose_data`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .pose_data import (
    COORDS_PER_FRAME,
    LEFT_WAIST,
    RIGHT_WAIST,
    PoseSequence,
    sequence_from_vectors,
)

EPS = 1e-8

# flattened coordinate columns of the two waist joints (x, y each)
_RW = (2 * RIGHT_WAIST, 2 * RIGHT_WAIST + 1)
_LW = (2 * LEFT_WAIST, 2 * LEFT_WAIST + 1)


@dataclass
class ForecastConfig:
    """Hyperparameters of the pose forecaster."""

    t_in: int = 16
    t_out: int = 128
    t_local: int = 16
    n_codes: int = 15
    noise_dim: int = 100
    code_weight: float = 10.0
    attract_weight: float = 50.0
    smooth_weight: float = 100.0
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    batch_size: int = 8
    seed: int = 0
    steps: int = 2000
    # diversity inputs can be frozen for ablations (mode-collapse studies)
    use_latent_code: bool = True
    use_attraction: bool = True
    attract_low: float = 0.1
    attract_high: float = 0.9
    # architecture widths
    cond_channels: tuple = (48, 96, 96, 96)
    gen_channels: tuple = (192, 128, 96, 64, 48, 32)
    disc_channels: tuple = (48, 96, 192)
    code_hidden: int = 128

    def __post_init__(self):
        if self.n_codes < 2:
            raise ValueError(f"n_codes must be >= 2, got {self.n_codes}")
        if self.t_local > self.t_out:
            raise ValueError(
                f"local window ({self.t_local}) cannot exceed forecast length ({self.t_out})"
            )
        for name in ("code_weight", "attract_weight", "smooth_weight"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.t_in != 2 ** len(self.cond_channels):
            raise ValueError(
                f"t_in={self.t_in} incompatible with {len(self.cond_channels)} "
                "halving condition-encoder layers"
            )
        if self.t_out != 2 ** (len(self.gen_channels) + 1):
            raise ValueError(
                f"t_out={self.t_out} incompatible with {len(self.gen_channels) + 1} "
                "doubling generator layers"
            )
        if not 0.0 <= self.attract_low <= self.attract_high <= 1.0:
            raise ValueError("attraction bounds must satisfy 0 <= low <= high <= 1")


def one_hot(index, n):
    v = np.zeros(n, dtype=np.float64)
    v[int(index)] = 1.0
    return v


def _check_code(code, n):
    code = np.asarray(code, dtype=np.float64)
    if code.shape != (n,) or not np.isclose(code.sum(), 1.0) or set(np.unique(code)) - {0.0, 1.0}:
        raise ValueError(f"code must be a one-hot vector of length {n}")
    return code


@dataclass
class FutureSample:
    """One generated future with the inputs that produced it."""

    poses: PoseSequence
    noise: np.ndarray
    code: np.ndarray
    attract: np.ndarray

    @property
    def code_index(self):
        return int(np.argmax(self.code))


# ---------------------------------------------------------------------------
# networks


class SequenceGenerator:
    """Condition encoder (strided 1D convs to length 1) + 7 transposed 1D
    convs (kernel 4, stride 2, padding 1) expanding 1 -> 128 time steps."""

    def __init__(self, rng, cfg):
        chans = [COORDS_PER_FRAME, *cfg.cond_channels]
        enc = []
        for c_in, c_out in zip(chans[:-1], chans[1:]):
            enc += [nn.Conv1d(rng, c_in, c_out), nn.LeakyReLU()]
        self.encoder = nn.Sequential(enc)
        self.feat_dim = cfg.cond_channels[-1]
        in_dim = self.feat_dim + cfg.noise_dim + cfg.n_codes + 2
        chans = [in_dim, *cfg.gen_channels]
        dec = []
        for c_in, c_out in zip(chans[:-1], chans[1:]):
            dec += [nn.ConvT1d(rng, c_in, c_out), nn.ReLU()]
        dec += [nn.ConvT1d(rng, chans[-1], COORDS_PER_FRAME), nn.Tanh(), nn.ScaleShift(0.5, 0.5)]
        self.decoder = nn.Sequential(dec)

    def forward(self, obs, noise, codes, attracts):
        feat, enc_cache = self.encoder.forward(obs)
        extra = np.concatenate([noise, codes, attracts], axis=1)[:, None, :]
        h = np.concatenate([feat, extra], axis=2)
        out, dec_cache = self.decoder.forward(h)
        return out, (enc_cache, dec_cache)

    def backward(self, gout, cache):
        enc_cache, dec_cache = cache
        gh, dec_grads = self.decoder.backward(gout, dec_cache)
        _, enc_grads = self.encoder.backward(
            gh[:, :, : self.feat_dim], enc_cache, need_input_grad=False
        )
        return enc_grads + dec_grads

    def params(self):
        return self.encoder.params() + self.decoder.params()

    def named_params(self, prefix="gen/"):
        return self.encoder.named_params(prefix + "enc.") + self.decoder.named_params(
            prefix + "dec."
        )


class GlobalDiscriminator:
    """Scores (observed, future) pairs concatenated along time; a second head
    reads the shared convolutional features to recover the behavior code."""

    def __init__(self, rng, cfg):
        chans = [COORDS_PER_FRAME, *cfg.disc_channels]
        trunk = []
        for c_in, c_out in zip(chans[:-1], chans[1:]):
            trunk += [nn.Conv1d(rng, c_in, c_out), nn.LeakyReLU()]
        trunk.append(nn.Flatten())
        self.trunk = nn.Sequential(trunk)
        t_cat = cfg.t_in + cfg.t_out
        feat = (t_cat // 2 ** len(cfg.disc_channels)) * cfg.disc_channels[-1]
        self.score_head = nn.Sequential([nn.Dense(rng, feat, 1)])
        self.code_head = nn.Sequential(
            [
                nn.Dense(rng, feat, cfg.code_hidden),
                nn.LeakyReLU(),
                nn.Dense(rng, cfg.code_hidden, cfg.n_codes),
            ]
        )
        self.t_in = cfg.t_in
        self.t_out = cfg.t_out

    def forward(self, obs, future):
        x = np.concatenate([obs, future], axis=1)
        feat, trunk_cache = self.trunk.forward(x)
        scores, score_cache = self.score_head.forward(feat)
        logits, code_cache = self.code_head.forward(feat)
        return scores[:, 0], logits, (trunk_cache, score_cache, code_cache)

    def backward(self, gscore, glogits, cache, need_input_grad=True):
        trunk_cache, score_cache, code_cache = cache
        gfeat_s, score_grads = self.score_head.backward(gscore[:, None], score_cache)
        gfeat_c, code_grads = self.code_head.backward(glogits, code_cache)
        gx, trunk_grads = self.trunk.backward(
            gfeat_s + gfeat_c, trunk_cache, need_input_grad=need_input_grad
        )
        gfut = gx[:, self.t_in :, :] if need_input_grad else None
        return gfut, trunk_grads + score_grads, code_grads

    def adv_params(self):
        return self.trunk.params() + self.score_head.params()

    def code_params(self):
        return self.code_head.params()

    def named_params(self, prefix="disc_global/"):
        return (
            self.trunk.named_params(prefix + "trunk.")
            + self.score_head.named_params(prefix + "score.")
            + self.code_head.named_params(prefix + "code.")
        )


class LocalDiscriminator:
    """Scores a short window of the future pose sequence (no conditioning)."""

    def __init__(self, rng, cfg):
        chans = [COORDS_PER_FRAME, *cfg.disc_channels]
        layers = []
        for c_in, c_out in zip(chans[:-1], chans[1:]):
            layers += [nn.Conv1d(rng, c_in, c_out), nn.LeakyReLU()]
        layers.append(nn.Flatten())
        feat = (cfg.t_local // 2 ** len(cfg.disc_channels)) * cfg.disc_channels[-1]
        layers.append(nn.Dense(rng, feat, 1))
        self.net = nn.Sequential(layers)
        self.t_local = cfg.t_local

    def forward(self, window):
        scores, cache = self.net.forward(window)
        return scores[:, 0], cache

    def backward(self, gscore, cache, need_input_grad=True):
        return self.net.backward(gscore[:, None], cache, need_input_grad=need_input_grad)

    def params(self):
        return self.net.params()

    def named_params(self, prefix="disc_local/"):
        return self.net.named_params(prefix + "net.")


def initial_networks(cfg):
    """Build (generator, global disc, local disc) from cfg.seed."""
    rng = np.random.default_rng(cfg.seed)
    return SequenceGenerator(rng, cfg), GlobalDiscriminator(rng, cfg), LocalDiscriminator(rng, cfg)


# ---------------------------------------------------------------------------
# public single-sample operations


def _as_vectors(seq, expect_len, what):
    if isinstance(seq, PoseSequence):
        vec = seq.vectorized()
    else:
        vec = np.asarray(seq, dtype=np.float64)
    if vec.ndim != 2 or vec.shape != (expect_len, COORDS_PER_FRAME):
        raise ValueError(
            f"{what} must be {expect_len} frames x {COORDS_PER_FRAME} coords, got {vec.shape}"
        )
    return vec


def generate(gen, obs, noise, code, attract, cfg=None):
    """Generate one future pose sequence from one observed sequence.

    Deterministic in (parameters, inputs). Returns a FutureSample whose pose
    array has shape (128, 28) reshaped into a PoseSequence.
    """
    n_codes = len(code) if cfg is None else cfg.n_codes
    t_in = 16 if cfg is None else cfg.t_in
    vec = _as_vectors(obs, t_in, "observed sequence")
    noise = np.asarray(noise, dtype=np.float64)
    if not np.isfinite(noise).all():
        raise ValueError("noise vector must be finite")
    code = _check_code(code, n_codes)
    attract = np.asarray(attract, dtype=np.float64)
    if attract.shape != (2,) or attract.min() < 0.0 or attract.max() > 1.0:
        raise ValueError("attraction point must be (x, y) inside the unit square")
    out, _ = gen.forward(vec[None], noise[None], code[None], attract[None])
    frame_rate = obs.frame_rate if isinstance(obs, PoseSequence) else 30.0
    poses = sequence_from_vectors(out[0], frame_rate=frame_rate, source_id="generated")
    return FutureSample(poses=poses, noise=noise.copy(), code=code, attract=attract.copy())


def disc_global(disc, obs, future):
    """Score one (observed, future) pair; also returns the code logits."""
    obs_v = _as_vectors(obs, disc.t_in, "observed sequence")
    fut_v = _as_vectors(future, disc.t_out, "future sequence")
    scores, logits, _ = disc.forward(obs_v[None], fut_v[None])
    return float(scores[0]), logits[0]


def disc_local(disc, window):
    """Score one short pose window."""
    win_v = _as_vectors(window, disc.t_local, "local window")
    scores, _ = disc.forward(win_v[None])
    return float(scores[0])


def sample_futures(gen, obs, k, seed, cfg):
    """Draw K futures with independently sampled (noise, code, attraction)."""
    if k < 1:
        raise ValueError(f"sample count must be >= 1, got {k}")
    rng = np.random.default_rng(seed)
    noise, codes, attracts = draw_conditions(rng, k, cfg)
    vec = _as_vectors(obs, cfg.t_in, "observed sequence")
    frame_rate = obs.frame_rate if isinstance(obs, PoseSequence) else 30.0
    samples = []
    for lo in range(0, k, 64):
        hi = min(k, lo + 64)
        out, _ = gen.forward(
            np.repeat(vec[None], hi - lo, axis=0), noise[lo:hi], codes[lo:hi], attracts[lo:hi]
        )
        for i in range(hi - lo):
            samples.append(
                FutureSample(
                    poses=sequence_from_vectors(
                        out[i], frame_rate=frame_rate, source_id=f"sample_{lo + i:04d}"
                    ),
                    noise=noise[lo + i].copy(),
                    code=codes[lo + i].copy(),
                    attract=attracts[lo + i].copy(),
                )
            )
    return samples


def draw_conditions(rng, n, cfg):
    """Sample (noise, codes, attractions) as during training; frozen inputs
    are replaced by constants when disabled in the config."""
    noise = rng.standard_normal((n, cfg.noise_dim))
    if cfg.use_latent_code:
        idx = rng.integers(0, cfg.n_codes, size=n)
    else:
        idx = np.zeros(n, dtype=np.int64)
    codes = np.zeros((n, cfg.n_codes))
    codes[np.arange(n), idx] = 1.0
    if cfg.use_attraction:
        attracts = rng.uniform(cfg.attract_low, cfg.attract_high, size=(n, 2))
    else:
        attracts = np.full((n, 2), 0.5)
    return noise, codes, attracts


# ---------------------------------------------------------------------------
# losses (values and hand-derived gradients; scores are pre-sigmoid)


def _clamped_log(p):
    return np.log(np.maximum(p, EPS))


def d_loss_term(real_scores, fake_scores):
    """Discriminator log-loss for one critic: -E[log D(real)] - E[log(1 - D(fake))]."""
    real_scores = np.asarray(real_scores, dtype=np.float64)
    fake_scores = np.asarray(fake_scores, dtype=np.float64)
    return float(
        -np.mean(_clamped_log(nn.sigmoid(real_scores)))
        - np.mean(_clamped_log(1.0 - nn.sigmoid(fake_scores)))
    )


def g_loss_term(fake_scores):
    """Non-saturating generator loss for one critic: -E[log D(fake)]."""
    fake_scores = np.asarray(fake_scores, dtype=np.float64)
    return float(-np.mean(_clamped_log(nn.sigmoid(fake_scores))))


def loss_adversarial(real_global, fake_global, real_local, fake_local):
    """Assemble the two-discriminator adversarial objective.

    Returns (d_loss, g_loss): the discriminators' summed log-loss and the
    generator's non-saturating counterpart.
    """
    d_loss = d_loss_term(real_global, fake_global) + d_loss_term(real_local, fake_local)
    g_loss = g_loss_term(fake_global) + g_loss_term(fake_local)
    return d_loss, g_loss


def d_loss_term_grads(real_scores, fake_scores):
    """Gradients of :func:`d_loss_term` w.r.t. the two score arrays."""
    real_scores = np.asarray(real_scores, dtype=np.float64)
    fake_scores = np.asarray(fake_scores, dtype=np.float64)
    sr, sf = nn.sigmoid(real_scores), nn.sigmoid(fake_scores)
    g_real = np.where(sr > EPS, -(1.0 - sr), 0.0) / real_scores.size
    g_fake = np.where(1.0 - sf > EPS, sf, 0.0) / fake_scores.size
    return g_real, g_fake


def g_loss_term_grad(fake_scores):
    fake_scores = np.asarray(fake_scores, dtype=np.float64)
    sf = nn.sigmoid(fake_scores)
    return np.where(sf > EPS, -(1.0 - sf), 0.0) / fake_scores.size


def loss_latent_code(code_logits, code):
    """Categorical cross-entropy between softmax(logits) and the one-hot code.

    Accepts a single (C,) pair or batched (..., C) arrays (mean over batch).
    """
    logits = np.asarray(code_logits, dtype=np.float64)
    code = np.asarray(code, dtype=np.float64)
    probs = nn.softmax(logits)
    per = -np.sum(code * _clamped_log(probs), axis=-1)
    return float(np.mean(per))


def loss_latent_code_grad(code_logits, code):
    """d loss / d logits: softmax(logits) - code (scaled by batch mean)."""
    logits = np.asarray(code_logits, dtype=np.float64)
    code = np.asarray(code, dtype=np.float64)
    probs = nn.softmax(logits)
    n = max(1, int(np.prod(logits.shape[:-1])))
    # chain rule through the clamp: picked-class prob below EPS stops the grad
    active = (np.sum(code * probs, axis=-1, keepdims=True) > EPS).astype(np.float64)
    return active * (probs - code) / n


def waist_trajectory(future):
    """Waist midpoint per frame of a flattened (T, 28) pose array."""
    future = np.asarray(future, dtype=np.float64)
    rw = future[:, [_RW[0], _RW[1]]]
    lw = future[:, [_LW[0], _LW[1]]]
    return 0.5 * (rw + lw)


def loss_attraction(future, attract):
    """Mean squared distance from the waist midpoint to the attraction point."""
    future = np.asarray(future, dtype=np.float64)
    attract = np.asarray(attract, dtype=np.float64)
    d = attract[None, :] - waist_trajectory(future)
    return float(np.mean(np.sum(d * d, axis=1)))


def loss_attraction_grad(future, attract):
    future = np.asarray(future, dtype=np.float64)
    attract = np.asarray(attract, dtype=np.float64)
    t = len(future)
    d = waist_trajectory(future) - attract[None, :]  # (T, 2)
    g = np.zeros_like(future)
    for axis in range(2):
        g[:, _RW[axis]] = d[:, axis] / t
        g[:, _LW[axis]] = d[:, axis] / t
    return g


def loss_smoothness(future):
    """Mean squared second difference over the sequence (speed-change penalty)."""
    future = np.asarray(future, dtype=np.float64)
    t = len(future)
    if t < 3:
        raise ValueError(f"smoothness loss needs at least 3 frames, got {t}")
    d2 = future[2:] - 2.0 * future[1:-1] + future[:-2]
    return float(np.sum(d2 * d2) / (t - 2))


def loss_smoothness_grad(future):
    future = np.asarray(future, dtype=np.float64)
    t = len(future)
    if t < 3:
        raise ValueError(f"smoothness loss needs at least 3 frames, got {t}")
    d2 = future[2:] - 2.0 * future[1:-1] + future[:-2]
    g = np.zeros_like(future)
    coeff = 2.0 * d2 / (t - 2)
    g[:-2] += coeff
    g[1:-1] -= 2.0 * coeff
    g[2:] += coeff
    return g


def total_generator_loss(g_adv, code_loss, attract_loss, smooth_loss, cfg):
    """Weighted sum of the generator-side loss terms."""
    return float(
        g_adv
        + cfg.code_weight * code_loss
        + cfg.attract_weight * attract_loss
        + cfg.smooth_weight * smooth_loss
    )


# ---------------------------------------------------------------------------
# training


LOG_COLUMNS = (
    "step",
    "d_loss_global",
    "d_loss_local",
    "g_adv",
    "l_code",
    "l_attract",
    "l_smooth",
    "total",
)


class ForecastTrainer:
    """Alternating discriminator/generator updates over a window dataset.

    The RNG draw order per step is fixed, and all state (parameters,
    optimizer moments, RNG) round-trips through checkpoints, so training
    logs are bitwise reproducible and resumable.
    """

    def __init__(self, dataset, cfg):
        if len(dataset) < 1:
            raise ValueError("training dataset is empty")
        self.cfg = cfg
        self.obs = np.stack([p.input.vectorized() for p in dataset])
        self.real = np.stack([p.target.vectorized() for p in dataset])
        self.gen, self.d_global, self.d_local = initial_networks(cfg)
        self.opt_gen = nn.Adam(
            self.gen.params() + self.d_global.code_params(),
            lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2,
        )
        self.opt_dg = nn.Adam(
            self.d_global.adv_params(), lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2
        )
        self.opt_dl = nn.Adam(
            self.d_local.params(), lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2
        )
        self.rng = np.random.default_rng(cfg.seed + 1)
        self.step_count = 0

    # -- sampling helpers (draw order defines the deterministic log) --

    def _draw_batch(self):
        idx = self.rng.integers(0, len(self.obs), size=self.cfg.batch_size)
        return self.obs[idx], self.real[idx]

    def _draw_windows(self, n):
        return self.rng.integers(0, self.cfg.t_out - self.cfg.t_local + 1, size=n)

    @staticmethod
    def _take_windows(seqs, starts, width):
        return np.stack([seqs[i, s : s + width] for i, s in enumerate(starts)])

    def train_step(self):
        cfg = self.cfg
        b = cfg.batch_size

        # discriminator update
        obs, real = self._draw_batch()
        noise, codes, attracts = draw_conditions(self.rng, b, cfg)
        fake, _ = self.gen.forward(obs, noise, codes, attracts)
        r_g, _, cache_rg = self.d_global.forward(obs, real)
        f_g, _, cache_fg = self.d_global.forward(obs, fake)
        real_w = self._take_windows(real, self._draw_windows(b), cfg.t_local)
        fake_w = self._take_windows(fake, self._draw_windows(b), cfg.t_local)
        r_l, cache_rl = self.d_local.forward(real_w)
        f_l, cache_fl = self.d_local.forward(fake_w)

        d_loss_global = d_loss_term(r_g, f_g)
        d_loss_local = d_loss_term(r_l, f_l)
        g_rg, g_fg = d_loss_term_grads(r_g, f_g)
        g_rl, g_fl = d_loss_term_grads(r_l, f_l)
        zeros_code = np.zeros((b, cfg.n_codes))
        _, dg_grads_r, _ = self.d_global.backward(g_rg, zeros_code, cache_rg, need_input_grad=False)
        _, dg_grads_f, _ = self.d_global.backward(g_fg, zeros_code, cache_fg, need_input_grad=False)
        _, dl_grads_r = self.d_local.backward(g_rl, cache_rl, need_input_grad=False)
        _, dl_grads_f = self.d_local.backward(g_fl, cache_fl, need_input_grad=False)
        self.opt_dg.step([a + b_ for a, b_ in zip(dg_grads_r, dg_grads_f)])
        self.opt_dl.step([a + b_ for a, b_ in zip(dl_grads_r, dl_grads_f)])

        # generator (+ code head) update
        obs2, _ = self._draw_batch()
        noise2, codes2, attracts2 = draw_conditions(self.rng, b, cfg)
        fake2, gen_cache = self.gen.forward(obs2, noise2, codes2, attracts2)
        f_g2, logits2, cache_g = self.d_global.forward(obs2, fake2)
        starts2 = self._draw_windows(b)
        fake_w2 = self._take_windows(fake2, starts2, cfg.t_local)
        f_l2, cache_l = self.d_local.forward(fake_w2)

        g_adv = g_loss_term(f_g2) + g_loss_term(f_l2)
        l_code = loss_latent_code(logits2, codes2)
        l_attract = float(
            np.mean([loss_attraction(fake2[i], attracts2[i]) for i in range(b)])
        )
        l_smooth = float(np.mean([loss_smoothness(fake2[i]) for i in range(b)]))

        code_w = cfg.code_weight if cfg.use_latent_code else 0.0
        attract_w = cfg.attract_weight if cfg.use_attraction else 0.0
        glogits = code_w * loss_latent_code_grad(logits2, codes2)
        gfut_dg, _, code_grads = self.d_global.backward(
            g_loss_term_grad(f_g2), glogits, cache_g
        )
        gwin, _ = self.d_local.backward(g_loss_term_grad(f_l2), cache_l)
        gfake = gfut_dg
        for i, s in enumerate(starts2):
            gfake[i, s : s + cfg.t_local] += gwin[i]
        for i in range(b):
            if attract_w > 0:
                gfake[i] += attract_w * loss_attraction_grad(fake2[i], attracts2[i]) / b
            gfake[i] += cfg.smooth_weight * loss_smoothness_grad(fake2[i]) / b
        gen_grads = self.gen.backward(gfake, gen_cache)
        self.opt_gen.step(gen_grads + code_grads)

        self.step_count += 1
        total = g_adv + code_w * l_code + attract_w * l_attract + cfg.smooth_weight * l_smooth
        return {
            "step": self.step_count,
            "d_loss_global": d_loss_global,
            "d_loss_local": d_loss_local,
            "g_adv": g_adv,
            "l_code": l_code,
            "l_attract": l_attract,
            "l_smooth": l_smooth,
            "total": total,
        }

    def run(self, steps):
        return [self.train_step() for _ in range(steps)]

    # -- checkpointing --

    def named_params(self):
        return (
            self.gen.named_params()
            + self.d_global.named_params()
            + self.d_local.named_params()
        )

    def optimizers(self):
        return {"gen": self.opt_gen, "disc_global": self.opt_dg, "disc_local": self.opt_dl}

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


def train_forecaster(dataset, cfg, steps=None):
    """Train on a list of WindowPairs; returns (generator, global disc,
    local disc, per-step loss log)."""
    trainer = ForecastTrainer(dataset, cfg)
    log = trainer.run(cfg.steps if steps is None else steps)
    return trainer.gen, trainer.d_global, trainer.d_local, log
