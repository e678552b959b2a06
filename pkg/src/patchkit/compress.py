"""PCA compression of descriptor embeddings.

The fit is a plain eigendecomposition of the sample covariance with a
deterministic sign convention, so serialized models reproduce bit-for-bit
across platforms.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

PCA_MAGIC = b"PCA1"


@dataclass
class PcaModel:
    mean: np.ndarray        # (d,)
    components: np.ndarray  # (k, d), rows by descending explained variance
    explained_variance: np.ndarray  # (k,) eigenvalues

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.components.shape[1]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Make each component's largest-magnitude coordinate positive; magnitude
    ties resolve toward the lower coordinate index."""
    out = components.copy()
    for i, row in enumerate(out):
        mags = np.abs(row)
        pivot = int(np.argmax(mags))  # argmax takes the first on ties
        if row[pivot] < 0:
            out[i] = -row
    return out


def pca_fit(x: np.ndarray, k: int) -> PcaModel:
    """Principal components of the sample covariance (divisor n-1)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a 2-D data matrix")
    n, d = x.shape
    if n <= d:
        raise ValueError(f"need more samples than dimensions, got {n} <= {d}")
    if not 1 <= k <= d:
        raise ValueError(f"k must be in 1..{d}, got {k}")
    mean = x.mean(0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:k]
    components = _fix_signs(eigvecs[:, order].T)
    return PcaModel(mean=mean, components=components,
                    explained_variance=eigvals[order])


def pca_apply(model: PcaModel, x: np.ndarray, renorm: bool = True) -> np.ndarray:
    """Project onto the components; rows re-normalized to unit L2 by default
    (zero rows stay zero)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.d:
        raise ValueError(f"expected n x {model.d} data, got {x.shape}")
    y = (x - model.mean) @ model.components.T
    if renorm:
        norms = np.linalg.norm(y, axis=1, keepdims=True)
        y = np.where(norms > 0, y / np.where(norms == 0, 1.0, norms), 0.0)
    return y


# Model file: "PCA1" magic, u32 LE d, u32 LE k, mean as d float64 LE,
# components as k*d float64 LE row-major.

def write_pca(model: PcaModel, path) -> None:
    with open(path, "wb") as f:
        f.write(PCA_MAGIC)
        f.write(struct.pack("<II", model.d, model.k))
        f.write(model.mean.astype("<f8").tobytes())
        f.write(np.ascontiguousarray(model.components).astype("<f8").tobytes())


def read_pca(path) -> PcaModel:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != PCA_MAGIC:
        raise ValueError(f"bad magic in {path}: {raw[:4]!r}")
    d, k = struct.unpack("<II", raw[4:12])
    body = np.frombuffer(raw[12:], dtype="<f8")
    if body.size != d + k * d:
        raise ValueError(f"size mismatch in {path}: header says d={d}, k={k}")
    return PcaModel(mean=body[:d].copy(),
                    components=body[d:].reshape(k, d).copy(),
                    explained_variance=np.full(k, np.nan))
