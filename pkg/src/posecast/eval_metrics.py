"""Diversity and accuracy metrics for generated futures.

Pose metrics work on coordinate arrays; video metrics compare clips through
a pluggable 5-stage feature extractor (the production choice would be a
pretrained classification network; tests use a deterministic
random-projection extractor with the same interface).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pose_data import COORDS_PER_FRAME, PoseSequence

N_FEATURE_STAGES = 5


def _pose_array(obj):
    if hasattr(obj, "poses"):  # FutureSample
        obj = obj.poses
    if isinstance(obj, PoseSequence):
        return obj.vectorized()
    arr = np.asarray(obj, dtype=np.float64)
    return arr.reshape(len(arr), COORDS_PER_FRAME)


def _clip_array(obj):
    if hasattr(obj, "frames"):
        return np.asarray(obj.frames, dtype=np.float64)
    return np.asarray(obj, dtype=np.float64)


def pose_mse(a, b):
    """Mean squared error over frames and the 28 coordinates."""
    a, b = _pose_array(a), _pose_array(b)
    if a.shape != b.shape:
        raise ValueError(f"sequence shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def pose_diversity(samples):
    """Mean pairwise pose MSE over all unordered pairs of samples.

    Zero signals mode collapse (all futures identical).
    """
    if len(samples) < 2:
        raise ValueError(f"diversity needs at least 2 samples, got {len(samples)}")
    arrays = [_pose_array(s) for s in samples]
    total, count = 0.0, 0
    for i in range(len(arrays)):
        for j in range(i + 1, len(arrays)):
            total += float(np.mean((arrays[i] - arrays[j]) ** 2))
            count += 1
    return total / count


class RandomProjectionExtractor:
    """Deterministic stand-in feature extractor: 5 pooling stages, each
    followed by a fixed Gaussian projection. Projection matrices depend only
    on (seed, stage, input size), so features are reproducible."""

    def __init__(self, seed=0, dim=64):
        self.seed = seed
        self.dim = dim
        self._mats = {}

    def _matrix(self, stage, flat_dim):
        key = (stage, flat_dim)
        if key not in self._mats:
            rng = np.random.default_rng(self.seed * 1000 + stage)
            self._mats[key] = rng.standard_normal((flat_dim, self.dim)) / np.sqrt(flat_dim)
        return self._mats[key]

    @staticmethod
    def _pool(image, factor):
        h = (image.shape[0] // factor) * factor
        w = (image.shape[1] // factor) * factor
        if h == 0 or w == 0:
            return image.mean(axis=(0, 1), keepdims=True)
        v = image[:h, :w].reshape(h // factor, factor, w // factor, factor, -1)
        return v.mean(axis=(1, 3))

    def extract(self, image):
        image = np.asarray(image, dtype=np.float64)
        out = []
        for stage in range(1, N_FEATURE_STAGES + 1):
            pooled = self._pool(image, 2**stage).reshape(-1)
            out.append(pooled @ self._matrix(stage, pooled.size))
        return out


class CallableExtractor:
    """Adapter wrapping any image -> list-of-5-vectors callable (e.g. a
    pretrained classification network's pooling stages)."""

    def __init__(self, fn):
        self.fn = fn

    def extract(self, image):
        stages = list(self.fn(image))
        if len(stages) != N_FEATURE_STAGES:
            raise ValueError(f"extractor must return {N_FEATURE_STAGES} stage vectors")
        return stages


def _cosine_distance(u, v):
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 and nv == 0.0:
        return 0.0
    if nu == 0.0 or nv == 0.0:
        return 1.0
    return float(1.0 - np.dot(u, v) / (nu * nv))


def video_cosine_distance(a, b, extractor):
    """Per-frame cosine distances of stage features, averaged over the 5
    stages and then over frames."""
    fa, fb = _clip_array(a), _clip_array(b)
    if len(fa) != len(fb):
        raise ValueError(f"clip length mismatch: {len(fa)} vs {len(fb)}")
    per_frame = []
    for t in range(len(fa)):
        sa = extractor.extract(fa[t])
        sb = extractor.extract(fb[t])
        per_frame.append(np.mean([_cosine_distance(u, v) for u, v in zip(sa, sb)]))
    return float(np.mean(per_frame))


def video_diversity(clips, extractor):
    """Mean pairwise cosine distance over all unordered clip pairs."""
    if len(clips) < 2:
        raise ValueError(f"diversity needs at least 2 clips, got {len(clips)}")
    total, count = 0.0, 0
    for i in range(len(clips)):
        for j in range(i + 1, len(clips)):
            total += video_cosine_distance(clips[i], clips[j], extractor)
            count += 1
    return total / count


PSNR_CAP = 100.0


def psnr(a, b):
    """10 * log10(1 / MSE) in dB for unit-range images; identical inputs
    return the documented 100 dB cap."""
    a = _clip_array(a)
    b = _clip_array(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(float(10.0 * np.log10(1.0 / mse)), PSNR_CAP)


def best_of_n(samples, ground_truth, metric, larger_is_better=False):
    """Extremal metric value against the ground truth over all samples.

    Returns (best_value, best_index); min for distances, max when
    ``larger_is_better`` (PSNR).
    """
    if len(samples) < 1:
        raise ValueError("best-of-N needs at least one sample")
    values = [metric(s, ground_truth) for s in samples]
    idx = int(np.argmax(values)) if larger_is_better else int(np.argmin(values))
    return values[idx], idx


@dataclass
class MetricReport:
    """One evaluation run's numbers; NaN marks metrics that were not run."""

    pose_diversity: float = float("nan")
    video_diversity: float = float("nan")
    best_mse: float = float("nan")
    best_psnr: float = float("nan")
    best_cosine: float = float("nan")
    n: int = 0

    FIELDS = ("pose_diversity", "video_diversity", "best_mse", "best_psnr", "best_cosine", "n")

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for name in self.FIELDS:
                fh.write(f"{name}={getattr(self, name)!r}\n")

    @classmethod
    def load(cls, path):
        kv = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                key, _, value = line.partition("=")
                if key not in cls.FIELDS:
                    raise ValueError(f"unknown metric report field {key!r}")
                kv[key] = int(value) if key == "n" else float(value)
        return cls(**kv)
