"""Pose-sequence dataset layer: parsing, validation, normalization,
augmentation, windowing and synthetic stick-figure generation.

Coordinate convention: each pose is 14 joints of (x, y) image coordinates,
x growing right and y growing down. Files store pixel units; everything
downstream of :func:`normalize` works in unit coordinates in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

N_JOINTS = 14
COORDS_PER_FRAME = 2 * N_JOINTS

JOINT_NAMES = (
    "head",
    "neck",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_waist",
    "right_knee",
    "right_foot",
    "left_waist",
    "left_knee",
    "left_foot",
)

# horizontal mirror partner of each joint (head/neck are their own partners)
MIRROR = np.array([0, 1, 5, 6, 7, 2, 3, 4, 11, 12, 13, 8, 9, 10])

# fixed skeleton topology used by the renderer: 13 bones forming a tree
SKELETON_EDGES = (
    (0, 1),  # head - neck
    (1, 2),  # neck - right shoulder
    (2, 3),
    (3, 4),
    (1, 5),  # neck - left shoulder
    (5, 6),
    (6, 7),
    (1, 8),  # neck - right waist
    (8, 9),
    (9, 10),
    (1, 11),  # neck - left waist
    (11, 12),
    (12, 13),
)

RIGHT_WAIST = JOINT_NAMES.index("right_waist")
LEFT_WAIST = JOINT_NAMES.index("left_waist")


class PoseDataError(ValueError):
    """Raised for malformed manifests, pose files, or invalid operations."""


@dataclass
class PoseSequence:
    """An ordered sequence of 14-joint poses.

    Attributes:
        joints: array (T, 14, 2) of coordinates.
        frame_rate: frames per second metadata.
        source_id: provenance string.
        frame_size: source frame size in pixels, recorded at load time.
        frames_dir: optional directory of matching video frames.
        frame_indices: indices into the source frame files, tracked through
            subsampling/windowing so clips stay aligned with poses.
    """

    joints: np.ndarray
    frame_rate: float = 30.0
    source_id: str = ""
    frame_size: float | None = None
    frames_dir: str | None = None
    frame_indices: np.ndarray | None = None

    def __post_init__(self):
        self.joints = np.asarray(self.joints, dtype=np.float64)
        if self.joints.ndim != 3 or self.joints.shape[1:] != (N_JOINTS, 2):
            raise PoseDataError(
                f"sequence {self.source_id!r}: joints must have shape (T, 14, 2), "
                f"got {self.joints.shape}"
            )
        if len(self.joints) < 1:
            raise PoseDataError(f"sequence {self.source_id!r}: empty sequence")
        if not np.isfinite(self.joints).all():
            raise PoseDataError(f"sequence {self.source_id!r}: non-finite coordinates")
        if self.frame_indices is not None:
            self.frame_indices = np.asarray(self.frame_indices, dtype=np.int64)
            if self.frame_indices.shape != (len(self.joints),):
                raise PoseDataError(
                    f"sequence {self.source_id!r}: frame_indices length mismatch"
                )

    def __len__(self):
        return len(self.joints)

    def vectorized(self):
        """Flattened (T, 28) view-copy: per joint x then y, joint order fixed."""
        return self.joints.reshape(len(self), COORDS_PER_FRAME).copy()


def sequence_from_vectors(vecs, frame_rate=30.0, source_id=""):
    vecs = np.asarray(vecs, dtype=np.float64)
    return PoseSequence(
        vecs.reshape(len(vecs), N_JOINTS, 2), frame_rate=frame_rate, source_id=source_id
    )


@dataclass
class WindowPair:
    """A (16-frame input, 128-frame target) training pair, contiguous in time."""

    input: PoseSequence
    target: PoseSequence
    start: int = 0

    def __post_init__(self):
        if len(self.input) != 16:
            raise PoseDataError(f"window input must be 16 frames, got {len(self.input)}")
        if len(self.target) != 128:
            raise PoseDataError(
                f"window target must be 128 frames, got {len(self.target)}"
            )


# ---------------------------------------------------------------------------
# file I/O


def _parse_pose_file(path, source_id):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != COORDS_PER_FRAME:
                raise PoseDataError(
                    f"sequence {source_id!r}, frame {lineno}: expected "
                    f"{COORDS_PER_FRAME} values ({N_JOINTS} joints), got {len(parts)}"
                )
            try:
                rows.append([float(v) for v in parts])
            except ValueError as exc:
                raise PoseDataError(
                    f"sequence {source_id!r}, frame {lineno}: non-numeric coordinate ({exc})"
                ) from None
    if not rows:
        raise PoseDataError(f"sequence {source_id!r}: pose file {path} has no frames")
    return np.asarray(rows, dtype=np.float64).reshape(-1, N_JOINTS, 2)


def load_pose_sequences(manifest_path):
    """Load every sequence referenced by a manifest file.

    Manifest line format: ``<id>,<pose_file>,<frame_size_px>,<fps>[,<frames_dir>]``.
    Relative paths are resolved against the manifest's directory. Coordinates
    are kept in file units (pixels); ``frame_size`` records the source size.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise PoseDataError(f"manifest not found: {manifest_path}")
    base = manifest_path.parent
    sequences = []
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) not in (4, 5):
                raise PoseDataError(
                    f"manifest line {lineno}: expected 4 or 5 fields, got {len(parts)}"
                )
            seq_id, pose_rel, size_s, fps_s = parts[:4]
            frames_dir = parts[4] if len(parts) == 5 and parts[4] else None
            try:
                frame_size = float(size_s)
                fps = float(fps_s)
            except ValueError:
                raise PoseDataError(
                    f"manifest line {lineno} ({seq_id!r}): bad frame size or fps"
                ) from None
            pose_path = base / pose_rel
            if not pose_path.exists():
                raise PoseDataError(f"sequence {seq_id!r}: missing pose file {pose_path}")
            joints = _parse_pose_file(pose_path, seq_id)
            if frames_dir is not None:
                frames_dir = str(base / frames_dir)
            sequences.append(
                PoseSequence(
                    joints,
                    frame_rate=fps,
                    source_id=seq_id,
                    frame_size=frame_size,
                    frames_dir=frames_dir,
                    frame_indices=np.arange(len(joints)),
                )
            )
    return sequences


def write_pose_file(path, joints):
    """Write (T, 14, 2) coordinates as 28 comma-separated floats per line.

    Uses repr() so that load -> write round-trips bit-exactly.
    """
    joints = np.asarray(joints, dtype=np.float64)
    flat = joints.reshape(len(joints), COORDS_PER_FRAME)
    with open(path, "w", encoding="utf-8") as fh:
        for row in flat:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def write_manifest(path, entries):
    """entries: iterable of (id, pose_file, frame_size, fps, frames_dir-or-None)."""
    with open(path, "w", encoding="utf-8") as fh:
        for seq_id, pose_file, frame_size, fps, frames_dir in entries:
            line = f"{seq_id},{pose_file},{frame_size:g},{fps:g}"
            if frames_dir:
                line += f",{frames_dir}"
            fh.write(line + "\n")


# ---------------------------------------------------------------------------
# transforms


def normalize(seq, frame_size):
    """Divide all coordinates by the frame size, yielding unit coordinates."""
    if frame_size <= 0:
        raise PoseDataError(f"frame_size must be positive, got {frame_size}")
    return replace(seq, joints=seq.joints / float(frame_size))


def subsample(seq, stride):
    """Keep frames 0, stride, 2*stride, ...; frame rate divides accordingly."""
    if stride < 1:
        raise PoseDataError(f"stride must be >= 1, got {stride}")
    idx = seq.frame_indices[::stride] if seq.frame_indices is not None else None
    return replace(
        seq,
        joints=seq.joints[::stride].copy(),
        frame_rate=seq.frame_rate / stride,
        frame_indices=idx,
    )


def enclosing_box(seq):
    """Tightest axis-aligned box over all joints of all frames."""
    if len(seq) < 1:
        raise PoseDataError("enclosing_box of empty sequence")
    mins = seq.joints.reshape(-1, 2).min(axis=0)
    maxs = seq.joints.reshape(-1, 2).max(axis=0)
    return float(mins[0]), float(mins[1]), float(maxs[0]), float(maxs[1])


def horizontal_flip(seq):
    """Mirror x -> 1 - x and swap left/right joint labels."""
    flipped = seq.joints[:, MIRROR, :].copy()
    flipped[:, :, 0] = 1.0 - flipped[:, :, 0]
    return replace(seq, joints=flipped)


def pad_crop_augment(seq, clip=None, offset=None, seed=0):
    """Translate a sequence (and optional paired frames) inside the unit square.

    Mimics padding the video with black pixels and re-cropping a same-size
    window: poses shift by (dx, dy) and frames shift by the equivalent pixel
    amount with black fill. When ``offset`` is None a uniformly random valid
    offset is drawn from ``seed``.
    """
    min_x, min_y, max_x, max_y = enclosing_box(seq)
    if offset is None:
        rng = np.random.default_rng(seed)
        dx = rng.uniform(-min_x, 1.0 - max_x)
        dy = rng.uniform(-min_y, 1.0 - max_y)
        offset = (dx, dy)
    dx, dy = float(offset[0]), float(offset[1])
    eps = 1e-9
    if min_x + dx < -eps or max_x + dx > 1.0 + eps or min_y + dy < -eps or max_y + dy > 1.0 + eps:
        raise PoseDataError(
            f"offset ({dx:g}, {dy:g}) pushes pose box "
            f"({min_x:g}, {min_y:g}, {max_x:g}, {max_y:g}) outside the unit square"
        )
    shifted = seq.joints.copy()
    shifted[:, :, 0] += dx
    shifted[:, :, 1] += dy
    out_seq = replace(seq, joints=shifted)
    if clip is None:
        return out_seq, None
    frames = np.asarray(clip)
    t, h, w = frames.shape[:3]
    px = int(round(dx * w))
    py = int(round(dy * h))
    out = np.zeros_like(frames)
    ys0, ys1 = max(0, -py), min(h, h - py)
    xs0, xs1 = max(0, -px), min(w, w - px)
    if ys1 > ys0 and xs1 > xs0:
        out[:, ys0 + py : ys1 + py, xs0 + px : xs1 + px] = frames[:, ys0:ys1, xs0:xs1]
    return out_seq, out


def make_windows(seq, t_in=16, t_out=128, hop=16):
    """All maximal (input, target) pairs at the given hop.

    Returns an empty list when the sequence is shorter than t_in + t_out.
    """
    if hop < 1:
        raise PoseDataError(f"hop must be >= 1, got {hop}")
    total = t_in + t_out
    pairs = []
    for start in range(0, len(seq) - total + 1, hop):
        def _slice(lo, hi):
            idx = (
                seq.frame_indices[lo:hi] if seq.frame_indices is not None else None
            )
            return PoseSequence(
                seq.joints[lo:hi].copy(),
                frame_rate=seq.frame_rate,
                source_id=seq.source_id,
                frame_size=seq.frame_size,
                frames_dir=seq.frames_dir,
                frame_indices=idx,
            )

        pairs.append(
            WindowPair(_slice(start, start + t_in), _slice(start + t_in, start + total), start)
        )
    return pairs


# ---------------------------------------------------------------------------
# synthetic data


@dataclass(frozen=True)
class LineTrajectory:
    start: tuple[float, float]
    end: tuple[float, float]

    def points(self, u):
        u = np.asarray(u, dtype=np.float64)[:, None]
        p0 = np.asarray(self.start, dtype=np.float64)
        p1 = np.asarray(self.end, dtype=np.float64)
        return p0 + u * (p1 - p0)


@dataclass(frozen=True)
class CircleTrajectory:
    center: tuple[float, float]
    radius: float
    theta0: float = 0.0
    theta1: float = 2.0 * np.pi

    def points(self, u):
        u = np.asarray(u, dtype=np.float64)
        th = self.theta0 + u * (self.theta1 - self.theta0)
        cx, cy = self.center
        return np.stack([cx + self.radius * np.cos(th), cy + self.radius * np.sin(th)], axis=1)


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic walker sequence."""

    category: int
    trajectory: object
    length: int
    seed: int = 0
    frame_rate: float = 30.0

    def __post_init__(self):
        if self.length < 144:
            raise PoseDataError(
                f"synthetic length must be >= 144 (16 input + 128 target), got {self.length}"
            )
        if self.category < 0:
            raise PoseDataError(f"category must be >= 0, got {self.category}")


# body segment lengths in unit coordinates (y grows downward)
_TORSO = 0.16
_HEAD = 0.05
_SHOULDER_HALF = 0.05
_HIP_HALF = 0.03
_UPPER_ARM = 0.07
_FORE_ARM = 0.07
_THIGH = 0.09
_SHIN = 0.09


def category_gait(category):
    """Deterministic gait parameters; distinct for every category in [0, 15)."""
    freq = 0.030 + 0.012 * (category % 5)
    amp_scale = (0.6, 1.0, 1.4)[(category // 5) % 3]
    return freq, 0.40 * amp_scale, 0.50 * amp_scale


def _walker_frames(spec):
    rng = np.random.default_rng(spec.seed)
    freq, arm_amp, leg_amp = category_gait(spec.category)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    scale = rng.uniform(0.9, 1.1)
    t = np.arange(spec.length, dtype=np.float64)
    u = t / max(spec.length - 1, 1)
    center = spec.trajectory.points(u)  # waist midpoint path, (T, 2)

    w = 2.0 * np.pi * freq
    swing = np.sin(w * t + phase)
    th_leg_r = leg_amp * swing
    th_leg_l = -th_leg_r
    th_arm_r = -arm_amp * swing
    th_arm_l = -th_arm_r

    def seg(base, length, theta):
        # theta measured from straight down
        return base + length * np.stack([np.sin(theta), np.cos(theta)], axis=1)

    joints = np.zeros((spec.length, N_JOINTS, 2))
    neck = center - np.array([0.0, _TORSO * scale])
    joints[:, 1] = neck
    joints[:, 0] = neck - np.array([0.0, _HEAD * scale])
    joints[:, 2] = neck + np.array([_SHOULDER_HALF * scale, 0.0])
    joints[:, 5] = neck - np.array([_SHOULDER_HALF * scale, 0.0])
    joints[:, 8] = center + np.array([_HIP_HALF * scale, 0.0])
    joints[:, 11] = center - np.array([_HIP_HALF * scale, 0.0])
    joints[:, 3] = seg(joints[:, 2], _UPPER_ARM * scale, th_arm_r)
    joints[:, 4] = seg(joints[:, 3], _FORE_ARM * scale, 1.2 * th_arm_r)
    joints[:, 6] = seg(joints[:, 5], _UPPER_ARM * scale, th_arm_l)
    joints[:, 7] = seg(joints[:, 6], _FORE_ARM * scale, 1.2 * th_arm_l)
    joints[:, 9] = seg(joints[:, 8], _THIGH * scale, th_leg_r)
    joints[:, 10] = seg(joints[:, 9], _SHIN * scale, 0.6 * th_leg_r)
    joints[:, 12] = seg(joints[:, 11], _THIGH * scale, th_leg_l)
    joints[:, 13] = seg(joints[:, 12], _SHIN * scale, 0.6 * th_leg_l)
    return np.clip(joints, 0.0, 1.0)


def synth_dataset(specs):
    """Generate deterministic articulated stick-figure sequences.

    The waist midpoint follows each spec's trajectory exactly; limbs swing
    with category-dependent frequency and amplitude so the category is
    recoverable from the motion alone.
    """
    out = []
    for i, spec in enumerate(specs):
        joints = _walker_frames(spec)
        out.append(
            PoseSequence(
                joints,
                frame_rate=spec.frame_rate,
                source_id=f"synth_{i:04d}_cat{spec.category}",
                frame_indices=np.arange(spec.length),
            )
        )
    return out


def waist_midpoint(joints):
    """Midpoint of the left/right waist joints; accepts (..., 14, 2)."""
    return 0.5 * (joints[..., RIGHT_WAIST, :] + joints[..., LEFT_WAIST, :])
