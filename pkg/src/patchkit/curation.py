"""Camera and image selection plus view clustering for webcam stacks.

The neural sky/object predicates are injected as plain values (with
permissive defaults) so the pipeline runs without any model. Thresholds for
sharpness and brightness are on the 0-255 intensity scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve

from .core import validate_image

LAPLACIAN = np.array([[0.0, 1.0, 0.0],
                      [1.0, -4.0, 1.0],
                      [0.0, 1.0, 0.0]])

SHARPNESS_MIN_VAR = 180.0
BRIGHTNESS_MIN_MEAN = 30.0
MIN_SIDE = 700
IMAGES_PER_CAMERA = 20
MIN_PASSING = 14
VIEW_MIN_INLIERS = 50  # strict: must exceed
VIEW_MAX_SAD = 50.0
VIEW_KEEP_SIZE = 50  # strict: largest view must exceed this to be kept


@dataclass(frozen=True)
class ImageFlags:
    f1_not_sky: bool
    f2_not_dynamic: bool
    f3_sharp: bool
    f4_not_black: bool
    f5_large: bool

    @property
    def passes(self) -> bool:
        return (self.f1_not_sky and self.f2_not_dynamic and self.f3_sharp
                and self.f4_not_black and self.f5_large)


@dataclass
class CameraReport:
    flags: list  # ImageFlags per sampled image
    kept: bool
    reason: str = ""


def image_filters(img: np.ndarray, sky_fraction: float = 0.0,
                  has_dynamic_objects: bool = False) -> ImageFlags:
    """Per-image quality flags; sky/object inputs come from external detectors."""
    img = validate_image(img)
    h, w = img.shape
    byte = img * 255.0
    lap = convolve(byte, LAPLACIAN, mode="reflect")
    return ImageFlags(
        f1_not_sky=sky_fraction < 0.5,
        f2_not_dynamic=not has_dynamic_objects,
        f3_sharp=float(lap.var()) >= SHARPNESS_MIN_VAR,
        f4_not_black=float(byte.mean()) > BRIGHTNESS_MIN_MEAN,
        f5_large=w > MIN_SIDE and h > MIN_SIDE,
    )


def select_cameras(samples_per_camera, externals=None) -> dict:
    """Camera -> CameraReport; kept iff >= 14 of the 20 sampled images pass.

    `externals` maps camera id to a list of (sky_fraction, has_dynamic_objects)
    per image; missing entries default to the permissive (0.0, False).
    """
    externals = externals or {}
    reports = {}
    for cam_id in sorted(samples_per_camera):
        images = samples_per_camera[cam_id]
        if len(images) != IMAGES_PER_CAMERA:
            reports[cam_id] = CameraReport(
                flags=[], kept=False,
                reason=f"expected {IMAGES_PER_CAMERA} sampled images, got {len(images)}")
            continue
        ext = externals.get(cam_id, [(0.0, False)] * len(images))
        flags = [image_filters(im, sky, dyn)
                 for im, (sky, dyn) in zip(images, ext)]
        n_pass = sum(f.passes for f in flags)
        kept = n_pass >= MIN_PASSING
        reports[cam_id] = CameraReport(
            flags=flags, kept=kept,
            reason="" if kept else f"only {n_pass}/{IMAGES_PER_CAMERA} images pass")
    return reports


def default_descriptor(img: np.ndarray) -> np.ndarray:
    """8x8 average-pooled intensities, a cheap global image descriptor."""
    img = validate_image(img)
    h, w = img.shape
    ys = np.linspace(0, h, 9).astype(int)
    xs = np.linspace(0, w, 9).astype(int)
    out = np.empty((8, 8))
    for i in range(8):
        for j in range(8):
            out[i, j] = img[ys[i]:ys[i + 1], xs[j]:xs[j + 1]].mean()
    return out.ravel()


def kmeans_representatives(features: np.ndarray, k: int, rng,
                           max_iter: int = 100, tol: float = 1e-6):
    """Lloyd's algorithm with k-means++ seeding; returns one representative
    index per cluster (the member nearest its centroid), sorted ascending."""
    x = np.asarray(features, dtype=np.float64)
    n = x.shape[0]
    if n < k:
        raise ValueError(f"need at least k={k} samples, got {n}")

    # k-means++ seeding
    centroids = np.empty((k, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    d2 = ((x - centroids[0]) ** 2).sum(1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[c] = x[rng.integers(n)]
        else:
            centroids[c] = x[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((x - centroids[c]) ** 2).sum(1))

    assign = None
    for _ in range(max_iter):
        dists = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(2)
        assign = dists.argmin(1)
        new = np.empty_like(centroids)
        for c in range(k):
            members = x[assign == c]
            if len(members) == 0:
                # re-seed an empty cluster from the farthest point
                far = dists.min(1).argmax()
                new[c] = x[far]
            else:
                new[c] = members.mean(0)
        shift = np.abs(new - centroids).max()
        centroids = new
        if shift < tol:
            break

    dists = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(2)
    assign = dists.argmin(1)
    reps = []
    for c in range(k):
        members = np.nonzero(assign == c)[0]
        if len(members) == 0:
            continue
        reps.append(int(members[dists[members, c].argmin()]))
    return sorted(set(reps))


def normalize_homography(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64).reshape(3, 3)
    if h[2, 2] == 0 or not np.all(np.isfinite(h)):
        raise ValueError("homography not normalizable by entry (3,3)")
    return h / h[2, 2]


def homography_sad(h: np.ndarray) -> float:
    """Sum of absolute differences between the normalized H and identity."""
    return float(np.abs(normalize_homography(h) - np.eye(3)).sum())


def cluster_views(n_images: int, pair_results) -> list:
    """Greedy view clustering: the first unassigned image becomes a reference;
    images whose pair result has inliers > 50 and SAD(H, I) < 50 join it.

    `pair_results` maps (ref, other) to (H, inliers) or None on match failure.
    Returns a partition of range(n_images) as lists, reference first.
    """
    remaining = list(range(n_images))
    views = []
    while remaining:
        ref = remaining.pop(0)
        view = [ref]
        still = []
        for i in remaining:
            res = pair_results.get((ref, i))
            if res is None:
                still.append(i)
                continue
            h, inliers = res
            if inliers > VIEW_MIN_INLIERS and homography_sad(h) < VIEW_MAX_SAD:
                view.append(i)
            else:
                still.append(i)
        remaining = still
        views.append(view)
    return views


def keep_main_view(views, rng):
    """The largest view, reduced to 50 images by random selection; None when
    the largest has 50 or fewer. Size ties go to the smaller reference index."""
    if not views:
        return None
    best = min(views, key=lambda v: (-len(v), v[0]))
    if len(best) <= VIEW_KEEP_SIZE:
        return None
    picked = rng.choice(len(best), size=VIEW_KEEP_SIZE, replace=False)
    return sorted(best[i] for i in picked)
