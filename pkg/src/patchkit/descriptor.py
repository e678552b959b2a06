"""Patch normalization and a handcrafted baseline descriptor.

The baseline (pooled intensities plus tiny gradient-orientation histograms)
exists so extraction -> description -> evaluation runs end to end without a
neural runtime. Externally computed descriptors enter through the embedding
file format instead.
"""

from __future__ import annotations

import numpy as np

STD_EPS = 1e-8
DESCRIPTOR_DIM = 128


def normalize_patch(p: np.ndarray) -> np.ndarray:
    """Mean/variance normalization; constant patches map to all zeros."""
    p = np.asarray(p, dtype=np.float64)
    std = p.std()
    if std < STD_EPS:
        return np.zeros_like(p)
    return (p - p.mean()) / std


def _pooled_intensities(p: np.ndarray) -> np.ndarray:
    """Average-pool 4x4 blocks of a 32x32 patch down to 8x8."""
    return p.reshape(8, 4, 8, 4).mean(axis=(1, 3)).ravel()


def _gradient_histograms(p: np.ndarray) -> np.ndarray:
    """4 orientation bins x 4x4 spatial cells, magnitude-weighted, from
    central differences."""
    gx = np.zeros_like(p)
    gy = np.zeros_like(p)
    gx[:, 1:-1] = (p[:, 2:] - p[:, :-2]) / 2.0
    gy[1:-1, :] = (p[2:, :] - p[:-2, :]) / 2.0
    mag = np.hypot(gx, gy)
    ang = np.mod(np.arctan2(gy, gx), np.pi)  # orientation, not direction
    bins = np.minimum((ang / (np.pi / 4)).astype(int), 3)
    feats = np.zeros((4, 4, 4))
    cell = p.shape[0] // 4
    for i in range(4):
        for j in range(4):
            sl = (slice(i * cell, (i + 1) * cell), slice(j * cell, (j + 1) * cell))
            for b in range(4):
                feats[i, j, b] = mag[sl][bins[sl] == b].sum()
    return feats.ravel()


def describe_baseline(p: np.ndarray) -> np.ndarray:
    """128-D unit vector for a 32x32 patch; all-zero for constant input."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (32, 32):
        raise ValueError(f"expected a 32x32 patch, got {p.shape}")
    z = normalize_patch(p)
    vec = np.concatenate([_pooled_intensities(z), _gradient_histograms(z)])
    norm = np.linalg.norm(vec)
    if norm == 0:
        return vec
    return vec / norm


def describe_batch(patches, descriptor=describe_baseline) -> np.ndarray:
    """Row i of the result is descriptor(patches[i])."""
    patches = list(patches)
    if not patches:
        return np.zeros((0, DESCRIPTOR_DIM))
    return np.stack([descriptor(p) for p in patches])
