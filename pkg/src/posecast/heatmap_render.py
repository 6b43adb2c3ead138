"""Heatmaps, person masks, and skeleton rasterization.

A pose enters pixel space through :func:`joint_pixels`: unit coordinate x
maps to column ``round(x * (W - 1))`` (same for rows), clipped to the frame.
Heatmap Gaussians are centered on those integer pixels and peak-normalized
to 1, so the conditioning magnitude is resolution independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pose_data import MIRROR, N_JOINTS, SKELETON_EDGES


@dataclass(frozen=True)
class HeatmapSpec:
    height: int = 128
    width: int = 128
    sigma: float = 2.0

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError(f"heatmap size must be >= 1, got {self.height}x{self.width}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def joint_pixels(frame, height, width):
    """Round unit coordinates to integer pixel (col, row) pairs, clipped."""
    frame = np.asarray(frame, dtype=np.float64).reshape(N_JOINTS, 2)
    px = np.clip(np.rint(frame[:, 0] * (width - 1)), 0, width - 1).astype(np.int64)
    py = np.clip(np.rint(frame[:, 1] * (height - 1)), 0, height - 1).astype(np.int64)
    return px, py


def pose_to_heatmap(frame, spec=HeatmapSpec()):
    """One Gaussian bump per joint: channel j peaks (value 1.0) at joint j's pixel.

    Returns an (H, W, 14) array with values in [0, 1].
    """
    px, py = joint_pixels(frame, spec.height, spec.width)
    ii = np.arange(spec.height, dtype=np.float64)[:, None, None]
    jj = np.arange(spec.width, dtype=np.float64)[None, :, None]
    d2 = (ii - py[None, None, :]) ** 2 + (jj - px[None, None, :]) ** 2
    return np.exp(-d2 / (2.0 * spec.sigma**2))


def person_mask(frame, spec=HeatmapSpec(), margin=8):
    """Binary mask: 1 inside the margin-dilated joint bounding box, 0 outside."""
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    px, py = joint_pixels(frame, spec.height, spec.width)
    x0 = max(0, int(px.min()) - margin)
    x1 = min(spec.width - 1, int(px.max()) + margin)
    y0 = max(0, int(py.min()) - margin)
    y1 = min(spec.height - 1, int(py.max()) + margin)
    mask = np.zeros((spec.height, spec.width), dtype=np.float64)
    mask[y0 : y1 + 1, x0 : x1 + 1] = 1.0
    return mask


# bone colors; mirror-partner bones share a color so that horizontally
# flipping a render equals rendering the flipped pose
DEFAULT_BONE_COLORS = np.array(
    [
        (0.92, 0.92, 0.92),  # head - neck
        (0.25, 0.75, 0.90),  # neck - shoulders
        (0.95, 0.60, 0.20),  # upper arms
        (0.95, 0.82, 0.35),  # forearms
        (0.25, 0.75, 0.90),
        (0.95, 0.60, 0.20),
        (0.95, 0.82, 0.35),
        (0.45, 0.50, 0.95),  # neck - waists
        (0.30, 0.85, 0.40),  # thighs
        (0.60, 0.90, 0.50),  # shins
        (0.45, 0.50, 0.95),
        (0.30, 0.85, 0.40),
        (0.60, 0.90, 0.50),
    ]
)


def render_skeleton(frame, canvas_size=128, palette=None):
    """Rasterize a pose: bones as capsules, joints as discs, on black.

    Bones are combined with a per-channel max, so the result is independent
    of draw order; all distance arithmetic happens on integer pixel
    displacements, which makes the render commute exactly with horizontal
    flips (given mirror-symmetric coordinates and palette).
    """
    h = w = int(canvas_size)
    if palette is None:
        palette = DEFAULT_BONE_COLORS
    palette = np.asarray(palette, dtype=np.float64)
    px, py = joint_pixels(frame, h, w)
    img = np.zeros((h, w, 3), dtype=np.float64)
    bone_r = max(1.0, canvas_size / 96.0)
    disc_r = max(1.5, canvas_size / 64.0)

    def paint(y0, y1, x0, x1, inside, color):
        region = img[y0:y1, x0:x1]
        np.maximum(region, inside[:, :, None] * color, out=region)

    for e, (a, b) in enumerate(SKELETON_EDGES):
        ax, ay, bx, by = px[a], py[a], px[b], py[b]
        x0 = max(0, int(min(ax, bx) - bone_r - 1))
        x1 = min(w, int(max(ax, bx) + bone_r + 2))
        y0 = max(0, int(min(ay, by) - bone_r - 1))
        y1 = min(h, int(max(ay, by) + bone_r + 2))
        yy = np.arange(y0, y1, dtype=np.int64)[:, None]
        xx = np.arange(x0, x1, dtype=np.int64)[None, :]
        relx = (xx - ax).astype(np.float64)
        rely = (yy - ay).astype(np.float64)
        dx, dy = float(bx - ax), float(by - ay)
        den = dx * dx + dy * dy
        if den > 0:
            t = np.clip((relx * dx + rely * dy) / den, 0.0, 1.0)
        else:
            t = 0.0
        d2 = (relx - t * dx) ** 2 + (rely - t * dy) ** 2
        paint(y0, y1, x0, x1, d2 <= bone_r * bone_r, palette[e])

    joint_color = np.array([1.0, 1.0, 1.0])
    for j in range(N_JOINTS):
        x0 = max(0, int(px[j] - disc_r - 1))
        x1 = min(w, int(px[j] + disc_r + 2))
        y0 = max(0, int(py[j] - disc_r - 1))
        y1 = min(h, int(py[j] + disc_r + 2))
        yy = np.arange(y0, y1, dtype=np.int64)[:, None]
        xx = np.arange(x0, x1, dtype=np.int64)[None, :]
        d2 = ((xx - px[j]) ** 2 + (yy - py[j]) ** 2).astype(np.float64)
        paint(y0, y1, x0, x1, d2 <= disc_r * disc_r, joint_color)
    return img


def mirror_palette_check(palette):
    """True when mirror-partner bones share colors (needed for flip symmetry)."""
    partner = {}
    for e, (a, b) in enumerate(SKELETON_EDGES):
        key = tuple(sorted((int(MIRROR[a]), int(MIRROR[b]))))
        partner[key] = e
    for e, (a, b) in enumerate(SKELETON_EDGES):
        m = partner[tuple(sorted((int(a), int(b))))]
        if not np.array_equal(palette[e], palette[m]):
            return False
    return True
