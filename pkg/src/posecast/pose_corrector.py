"""Autoencoder that repairs corrupted joint coordinates in single pose frames.

Upstream pose estimators drop or misplace joints; this module simulates that
failure mode (:func:`corrupt`) and trains a small denoising autoencoder to
undo it, frame by frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .pose_data import COORDS_PER_FRAME, N_JOINTS


@dataclass(frozen=True)
class CorruptionModel:
    """Per-joint dropout plus Gaussian jitter on the survivors."""

    drop_prob: float = 0.2
    jitter_sigma: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError(f"drop_prob must be in [0, 1], got {self.drop_prob}")
        if self.jitter_sigma < 0.0:
            raise ValueError(f"jitter_sigma must be >= 0, got {self.jitter_sigma}")


def corrupt(frame, model, rng=None):
    """Zero each joint with ``drop_prob``, jitter surviving coordinates.

    ``rng`` lets a caller stream corruption across many frames; by default a
    generator is seeded from the model's seed, so repeated calls with the
    same arguments give the same mask.
    """
    if rng is None:
        rng = np.random.default_rng(model.seed)
    frame = np.asarray(frame, dtype=np.float64)
    pts = frame.reshape(-1, N_JOINTS, 2)
    dropped = rng.random(pts.shape[:2]) < model.drop_prob
    jitter = rng.normal(0.0, model.jitter_sigma, size=pts.shape) if model.jitter_sigma > 0 else 0.0
    out = np.where(dropped[..., None], 0.0, pts + jitter)
    return out.reshape(frame.shape)


class CorrectorNet:
    """28 -> hidden -> bottleneck -> hidden -> 28, two dense layers per half."""

    def __init__(self, rng, hidden=128, bottleneck=32):
        self.encoder = nn.Sequential(
            [
                nn.Dense(rng, COORDS_PER_FRAME, hidden),
                nn.ReLU(),
                nn.Dense(rng, hidden, bottleneck),
            ]
        )
        self.decoder = nn.Sequential(
            [
                nn.Dense(rng, bottleneck, hidden),
                nn.ReLU(),
                nn.Dense(rng, hidden, COORDS_PER_FRAME),
            ]
        )

    def forward(self, x):
        z, enc_cache = self.encoder.forward(x)
        y, dec_cache = self.decoder.forward(z)
        return y, (enc_cache, dec_cache)

    def backward(self, gy, caches):
        enc_cache, dec_cache = caches
        gz, dec_grads = self.decoder.backward(gy, dec_cache)
        _, enc_grads = self.encoder.backward(gz, enc_cache, need_input_grad=False)
        return enc_grads + dec_grads

    def params(self):
        return self.encoder.params() + self.decoder.params()

    def named_params(self):
        return self.encoder.named_params("corrector/enc.") + self.decoder.named_params(
            "corrector/dec."
        )


def correct(net, frame):
    """Run a frame (or batch of frames) through the trained autoencoder."""
    arr = np.asarray(frame, dtype=np.float64)
    flat = arr.reshape(-1, COORDS_PER_FRAME)
    out, _ = net.forward(flat)
    return out.reshape(arr.shape)


def train_corrector(clean_frames, model, epochs=50, seed=0, batch_size=64, lr=1e-3):
    """Denoising training: minimize MSE(net(corrupt(p)), p).

    Returns (net, loss_log) where loss_log[0] is the pre-training MSE and
    loss_log[e] the mean minibatch loss of epoch e.
    """
    frames = np.asarray(clean_frames, dtype=np.float64).reshape(-1, COORDS_PER_FRAME)
    n = len(frames)
    if n < 1:
        raise ValueError("training set is empty")
    rng = np.random.default_rng(seed)
    net = CorrectorNet(rng)
    opt = nn.Adam(net.params(), lr=lr, beta1=0.9, beta2=0.999)

    def mse(pred, target):
        return float(np.mean((pred - target) ** 2))

    noisy0 = corrupt(frames, model, rng)
    out0, _ = net.forward(noisy0)
    log = [mse(out0, frames)]

    bs = min(batch_size, n)
    for _ in range(epochs):
        noisy = corrupt(frames, model, rng)
        order = rng.permutation(n)
        losses = []
        for lo in range(0, n, bs):
            idx = order[lo : lo + bs]
            x, target = noisy[idx], frames[idx]
            pred, caches = net.forward(x)
            diff = pred - target
            losses.append(mse(pred, target))
            grads = net.backward(2.0 * diff / diff.size, caches)
            opt.step(grads)
        log.append(float(np.mean(losses)))
    return net, log
