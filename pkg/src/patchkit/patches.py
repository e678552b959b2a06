"""Patch extraction from registered view stacks and training-time augmentation.

Extraction samples an out_side x out_side grid bilinearly from the rotated,
scaled square support of a keypoint. The same keypoint geometry is reused
on every image of a view, which is what makes the patches correspond.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Keypoint, PatchSet, validate_image


class OutOfBoundsError(ValueError):
    """Keypoint support exits the image."""


def bilinear_sample(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear interpolation at float coordinates (x right, y down)."""
    h, w = img.shape
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)
    fy = np.clip(ys - y0, 0.0, 1.0)
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize with half-pixel centers, so a 2x downscale averages 2x2 blocks."""
    h, w = img.shape
    ys = (np.arange(out_h) + 0.5) * h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * w / out_w - 0.5
    gx, gy = np.meshgrid(xs, ys)
    return bilinear_sample(img, gx, gy)


def _support_grid(kp: Keypoint, out_side: int):
    """Sample coordinates covering the rotated square support of a keypoint.

    Sample spacing is scale/out_side; with scale == out_side and angle 0 the
    grid lands exactly on integer offsets around the center.
    """
    offs = (np.arange(out_side) - (out_side - 1) / 2.0) * (kp.scale / out_side)
    du, dv = np.meshgrid(offs, offs)
    theta = np.deg2rad(kp.angle)
    c, s = np.cos(theta), np.sin(theta)
    xs = kp.x + c * du - s * dv
    ys = kp.y + s * du + c * dv
    return xs, ys


def extract_patch(img: np.ndarray, kp: Keypoint, out_side: int) -> np.ndarray:
    img = validate_image(img)
    h, w = img.shape
    # the rotated corners bound all sample points
    half = kp.scale / 2.0
    theta = np.deg2rad(kp.angle)
    c, s = np.cos(theta), np.sin(theta)
    for du, dv in ((-half, -half), (-half, half), (half, -half), (half, half)):
        cx = kp.x + c * du - s * dv
        cy = kp.y + s * du + c * dv
        if cx < 0 or cy < 0 or cx > w - 1 or cy > h - 1:
            raise OutOfBoundsError(
                f"support of keypoint at ({kp.x}, {kp.y}) scale {kp.scale} "
                f"exits the {w}x{h} image")
    xs, ys = _support_grid(kp, out_side)
    return bilinear_sample(img, xs, ys)


def extract_patch_sets(images, kps, view_id: int = 0, out_side: int = 96) -> list:
    """One PatchSet per in-bounds keypoint; out-of-bounds keypoints are dropped
    and the remaining labels stay consecutive."""
    images = [validate_image(im) for im in images]
    if any(im.shape != images[0].shape for im in images):
        raise ValueError("all view images must share dimensions")
    sets = []
    label = 0
    for kp in kps:
        try:
            patches = [extract_patch(im, kp, out_side) for im in images]
        except OutOfBoundsError:
            continue
        sets.append(PatchSet(label=label, view_id=view_id,
                             patches=patches, source_keypoint=kp))
        label += 1
    return sets


def shift_keypoints(kps, dx: float, dy: float) -> list:
    """Displace keypoints to reproduce the misregistration study."""
    return [Keypoint(k.x + dx, k.y + dy, k.scale, k.angle, k.response, k.level)
            for k in kps]


# ---------------------------------------------------------------------------
# Augmentation recipes. The stochastic parameters are split out so tests can
# force identity transforms.

@dataclass(frozen=True)
class AmosAugmentParams:
    flip_h: bool
    flip_v: bool
    rotation_deg: float  # U(-25, 25)
    scale: float         # U(0.8, 1.4)
    shear_deg: float     # U(-10, 10)
    crop_area: float     # U(0.7, 1.0), w.r.t. the 64x64 center crop
    crop_aspect: float   # U(0.9, 1.1)
    crop_u: float        # U(0, 1) crop placement
    crop_v: float

    @staticmethod
    def identity():
        return AmosAugmentParams(False, False, 0.0, 1.0, 0.0, 1.0, 1.0, 0.5, 0.5)


def draw_amos_params(rng) -> AmosAugmentParams:
    return AmosAugmentParams(
        flip_h=bool(rng.random() < 0.5),
        flip_v=bool(rng.random() < 0.5),
        rotation_deg=float(rng.uniform(-25.0, 25.0)),
        scale=float(rng.uniform(0.8, 1.4)),
        shear_deg=float(rng.uniform(-10.0, 10.0)),
        crop_area=float(rng.uniform(0.7, 1.0)),
        crop_aspect=float(rng.uniform(0.9, 1.1)),
        crop_u=float(rng.random()),
        crop_v=float(rng.random()),
    )


def _affine_resample(patch: np.ndarray, rotation_deg: float, scale: float,
                     shear_deg: float) -> np.ndarray:
    """Rotate, shear, then scale about the patch center (inverse mapping)."""
    side = patch.shape[0]
    center = (side - 1) / 2.0
    theta = np.deg2rad(rotation_deg)
    sh = np.tan(np.deg2rad(shear_deg))
    rot = np.array([[np.cos(theta), -np.sin(theta)],
                    [np.sin(theta), np.cos(theta)]])
    shear = np.array([[1.0, sh], [0.0, 1.0]])
    fwd = scale * (shear @ rot)
    inv = np.linalg.inv(fwd)
    grid = np.arange(side) - center
    gx, gy = np.meshgrid(grid, grid)
    xs = inv[0, 0] * gx + inv[0, 1] * gy + center
    ys = inv[1, 0] * gx + inv[1, 1] * gy + center
    return bilinear_sample(patch, np.clip(xs, 0, side - 1), np.clip(ys, 0, side - 1))


def _center_crop(patch: np.ndarray, side: int) -> np.ndarray:
    off = (patch.shape[0] - side) // 2
    return patch[off:off + side, off:off + side]


def apply_amos_augment(patch96: np.ndarray, params: AmosAugmentParams) -> np.ndarray:
    if patch96.shape != (96, 96):
        raise ValueError(f"expected a 96x96 patch, got {patch96.shape}")
    p = patch96
    if params.flip_h:
        p = p[:, ::-1]
    if params.flip_v:
        p = p[::-1, :]
    p = _affine_resample(p, params.rotation_deg, params.scale, params.shear_deg)
    p = _center_crop(p, 64)
    # random-resized crop within the 64x64 center
    area = params.crop_area * 64 * 64
    cw = min(int(round(np.sqrt(area * params.crop_aspect))), 64)
    ch = min(int(round(np.sqrt(area / params.crop_aspect))), 64)
    x0 = int(round(params.crop_u * (64 - cw)))
    y0 = int(round(params.crop_v * (64 - ch)))
    p = p[y0:y0 + ch, x0:x0 + cw]
    return np.clip(bilinear_resize(p, 32, 32), 0.0, 1.0)


def augment_amos(patch96: np.ndarray, rng) -> np.ndarray:
    """Flips, random affine, 64x64 center crop, random-resized crop, resize to 32."""
    return apply_amos_augment(patch96, draw_amos_params(rng))


def augment_liberty(patch64: np.ndarray, rng) -> np.ndarray:
    """Flips with p=0.5 each, then bilinear resize 64 -> 32."""
    if patch64.shape != (64, 64):
        raise ValueError(f"expected a 64x64 patch, got {patch64.shape}")
    p = patch64
    if rng.random() < 0.5:
        p = p[:, ::-1]
    if rng.random() < 0.5:
        p = p[::-1, :]
    return np.clip(bilinear_resize(p, 32, 32), 0.0, 1.0)
