"""Scale-normalized Hessian keypoint detection on a Gaussian pyramid,
plus probability-map construction and random keypoint sampling.

The detector runs NMS on each pyramid level separately (not in 3-D
scale space) and restarts with a doubled threshold whenever the total
keypoint count exceeds the cap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve, convolve1d, maximum_filter

from .core import Keypoint, validate_image

# Central-difference stencils on the blurred level.
KXX = np.array([[1.0, -2.0, 1.0]])
KYY = KXX.T
KXY = np.array([[1.0, 0.0, -1.0],
                [0.0, 0.0, 0.0],
                [-1.0, 0.0, 1.0]]) / 4.0


@dataclass(frozen=True)
class PyramidParams:
    sigma: float = 1.8
    k1: int = 0
    k2: int = 4
    base_scale: float = 30.0
    threshold: float = 0.00016
    max_points: int = 2000

    def __post_init__(self):
        if self.sigma <= 1:
            raise ValueError("sigma must be > 1")
        if self.k1 < 0 or self.k2 < self.k1:
            raise ValueError("need 0 <= k1 <= k2")
        if self.threshold <= 0 or self.base_scale <= 0:
            raise ValueError("threshold and base_scale must be positive")


def gaussian_kernel_1d(std: float) -> np.ndarray:
    """Normalized Gaussian samples, width ceil(6*std) rounded up to odd."""
    width = int(np.ceil(6.0 * std))
    if width % 2 == 0:
        width += 1
    half = width // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / std) ** 2)
    return k / k.sum()


def gaussian_blur(img: np.ndarray, std: float) -> np.ndarray:
    k = gaussian_kernel_1d(std)
    out = convolve1d(img, k, axis=0, mode="reflect")
    return convolve1d(out, k, axis=1, mode="reflect")


def gaussian_pyramid(img: np.ndarray, p: PyramidParams) -> list:
    """Levels k1..k2 inclusive; level k is the image blurred with std sigma**k."""
    img = validate_image(img)
    if min(img.shape) < 3:
        raise ValueError(f"image too small for pyramid: {img.shape}")
    return [gaussian_blur(img, p.sigma ** k) for k in range(p.k1, p.k2 + 1)]


def hessian_response(img: np.ndarray) -> np.ndarray:
    """Per-pixel det of the Hessian, clamped to >= 0 so sqrt is always defined."""
    img = validate_image(img)
    if min(img.shape) < 3:
        raise ValueError(f"image too small for Hessian stencils: {img.shape}")
    ixx = convolve(img, KXX, mode="reflect")
    iyy = convolve(img, KYY, mode="reflect")
    ixy = convolve(img, KXY, mode="reflect")
    return np.maximum(ixx * iyy - ixy * ixy, 0.0)


def nms_window_side(sigma: float, k: int, base_scale: float) -> int:
    side = int(round(2.0 * sigma ** k * base_scale))
    side = max(side, 3)
    if side % 2 == 0:
        side += 1
    return side


def _window_maxima(resp: np.ndarray, side: int, floor: float = -np.inf):
    """Strict window maxima; among equal maxima only the lexicographically
    smallest (y, x) in the window survives. Candidates below `floor` are
    pruned early (they can never pass the detection threshold)."""
    winmax = maximum_filter(resp, size=side, mode="constant", cval=-np.inf)
    ys, xs = np.nonzero((resp == winmax) & (resp >= floor))
    half = side // 2
    h, w = resp.shape
    keep = []
    for y, x in zip(ys.tolist(), xs.tolist()):
        v = resp[y, x]
        window = resp[max(y - half, 0):y + half + 1, max(x - half, 0):x + half + 1]
        ty, tx = np.nonzero(window == v)
        y0, x0 = max(y - half, 0), max(x - half, 0)
        best = min(zip((ty + y0).tolist(), (tx + x0).tolist()))
        if best == (y, x):
            keep.append((y, x))
    return keep


def detect(img: np.ndarray, p: PyramidParams) -> list:
    """Keypoints over all pyramid levels, thresholded after per-level NMS.

    If more than max_points survive, the threshold is doubled and the whole
    detection restarts. Keypoints closer than scale/2 to the border are
    dropped so patch extraction never reads out of bounds.
    """
    img = validate_image(img)
    levels = gaussian_pyramid(img, p)
    responses = []
    maxima = []
    for i, level in enumerate(levels):
        k = p.k1 + i
        # sigma^(4k) equalizes blob responses across levels: the raw stencil
        # determinant of a level-matched blob decays as sigma^(-4k)
        resp = hessian_response(level) * p.sigma ** (4 * k)
        responses.append(resp)
        maxima.append(_window_maxima(resp, nms_window_side(p.sigma, k, p.base_scale),
                                     floor=p.threshold))

    h, w = img.shape
    threshold = p.threshold
    while True:
        kps = []
        for i, peaks in enumerate(maxima):
            k = p.k1 + i
            scale = p.base_scale * p.sigma ** k
            half = scale / 2.0
            resp = responses[i]
            for y, x in peaks:
                r = resp[y, x]
                if r < threshold:
                    continue
                if x - half < 0 or y - half < 0 or x + half > w - 1 or y + half > h - 1:
                    continue
                kps.append(Keypoint(float(x), float(y), scale, 0.0, float(r), k))
        if len(kps) <= p.max_points:
            break
        threshold *= 2.0
    kps.sort(key=lambda kp: (-kp.response, kp.level, kp.y, kp.x))
    return kps


RESPONSES = ("uniform", "hessian", "sqrt_hessian", "sqrt_hessian_nms")
SOURCES = ("random_image", "mean_image", "median_image", "average_responses")


def _evaluate_response(img: np.ndarray, response: str) -> np.ndarray:
    if response == "hessian":
        return hessian_response(img)
    if response == "sqrt_hessian":
        return np.sqrt(hessian_response(img))
    if response == "sqrt_hessian_nms":
        resp = np.sqrt(hessian_response(img))
        out = np.zeros_like(resp)
        for y, x in _window_maxima(resp, 3):
            out[y, x] = resp[y, x]
        return out
    raise ValueError(f"unknown response function: {response}")


def probability_map(images, response: str, source: str, rng) -> np.ndarray:
    """Sampling distribution over pixels; sums to 1, uniform fallback if flat."""
    if not images:
        raise ValueError("need at least one image")
    images = [validate_image(im) for im in images]
    shape = images[0].shape
    if any(im.shape != shape for im in images):
        raise ValueError("all images must share dimensions")

    if response == "uniform":
        out = np.ones(shape)
    elif source == "average_responses":
        out = np.mean([_evaluate_response(im, response) for im in images], axis=0)
    else:
        if source == "random_image":
            rep = images[rng.integers(len(images))]
        elif source == "mean_image":
            rep = np.mean(images, axis=0)
        elif source == "median_image":
            rep = np.median(images, axis=0)
        else:
            raise ValueError(f"unknown source: {source}")
        out = _evaluate_response(rep, response)

    total = out.sum()
    if total <= 0:
        out = np.ones(shape)
        total = out.sum()
    return out / total


def sample_keypoints(prob_map: np.ndarray, n: int, scale_range, rng) -> list:
    """Draw n keypoints: positions from the map, scales and angles uniform."""
    lo, hi = scale_range
    if lo > hi:
        raise ValueError(f"inverted scale range: {scale_range}")
    if n < 1:
        raise ValueError("n must be >= 1")
    flat = prob_map.ravel()
    idx = rng.choice(flat.size, size=n, p=flat)
    ys, xs = np.unravel_index(idx, prob_map.shape)
    scales = rng.uniform(lo, hi, size=n)
    angles = rng.uniform(0.0, 360.0, size=n)
    return [Keypoint(float(x), float(y), float(s), float(a), 0.0, 0)
            for x, y, s, a in zip(xs, ys, scales, angles)]
