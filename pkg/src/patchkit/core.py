"""Shared domain types, seeded RNG helpers and file formats.

Images are 2-D float arrays with intensities in [0, 1]. All stochastic
operations take an explicit numpy Generator; there is no global randomness.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

EMB_MAGIC = b"EMB1"

# ITU-R 601 luma weights used when collapsing RGB at load time.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


class FormatError(ValueError):
    """Raised on malformed files (bad magic, size mismatch, zero dims)."""


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator; identical seed gives identical draws on any platform."""
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent per-item stream, stable under any execution schedule."""
    return np.random.Generator(np.random.PCG64(seed ^ stream))


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    scale: float  # side length of the square support, px
    angle: float = 0.0  # degrees in [0, 360)
    response: float = 0.0
    level: int = 0

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"keypoint scale must be positive, got {self.scale}")


@dataclass
class PatchSet:
    """Corresponding patches of one scene point across a registered view stack."""

    label: int
    view_id: int
    patches: list  # of 2-D float arrays, all the same side
    source_keypoint: Keypoint

    def __post_init__(self):
        if len(self.patches) < 2:
            raise ValueError("a patch set needs at least 2 patches")
        sides = {p.shape for p in self.patches}
        if len(sides) != 1:
            raise ValueError(f"inconsistent patch shapes: {sides}")

    @property
    def side(self) -> int:
        return self.patches[0].shape[0]


def validate_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise FormatError(f"expected a non-empty 2-D image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise FormatError("image contains non-finite values")
    return img


def load_image(path) -> np.ndarray:
    """Load an 8-bit PNG/PGM image as a grayscale array in [0, 1].

    RGB inputs are collapsed by the 0.299/0.587/0.114 luminance combination
    before scaling, so a pure-red pixel maps exactly to 0.299.
    """
    try:
        with PILImage.open(path) as im:
            im.load()
            arr = np.asarray(im)
    except (OSError, SyntaxError) as exc:
        raise IOError(f"cannot read image {path}: {exc}") from exc
    if arr.ndim == 3:
        arr = arr[..., :3].astype(np.float64) @ LUMA_WEIGHTS
    else:
        arr = arr.astype(np.float64)
    arr = arr / 255.0
    return validate_image(arr)


def save_image(img: np.ndarray, path) -> None:
    """Write a [0, 1] grayscale array as 8-bit PNG/PGM."""
    data = np.clip(np.asarray(img) * 255.0, 0, 255).round().astype(np.uint8)
    PILImage.fromarray(data, mode="L").save(path)


# ---------------------------------------------------------------------------
# Embedding file format "EMB1":
#   bytes 'E','M','B','1', u32 LE n, u32 LE d, then n*d float32 LE row-major.

def write_embeddings(m: np.ndarray, path) -> None:
    m = np.ascontiguousarray(m, dtype=np.float32)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise FormatError(f"embedding matrix must be 2-D non-empty, got {m.shape}")
    with open(path, "wb") as f:
        f.write(EMB_MAGIC)
        f.write(struct.pack("<II", m.shape[0], m.shape[1]))
        f.write(m.astype("<f4").tobytes())


def read_embeddings(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != EMB_MAGIC:
        raise FormatError(f"bad magic in {path}: {raw[:4]!r}")
    n, d = struct.unpack("<II", raw[4:12])
    body = raw[12:]
    if len(body) != n * d * 4:
        raise FormatError(
            f"size mismatch in {path}: header says {n}x{d}, "
            f"payload holds {len(body) // 4} floats"
        )
    return np.frombuffer(body, dtype="<f4").reshape(n, d).copy()


# ---------------------------------------------------------------------------
# Keypoint CSV: header x,y,scale,angle,response,level, full float precision.

KEYPOINT_HEADER = "x,y,scale,angle,response,level"


def write_keypoints(kps, path) -> None:
    lines = [KEYPOINT_HEADER]
    for k in kps:
        lines.append(f"{k.x!r},{k.y!r},{k.scale!r},{k.angle!r},{k.response!r},{k.level}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_keypoints(path) -> list:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0].strip() != KEYPOINT_HEADER:
        raise FormatError(f"bad keypoint CSV header in {path}")
    kps = []
    for line in lines[1:]:
        x, y, scale, angle, response, level = line.split(",")
        kps.append(Keypoint(float(x), float(y), float(scale), float(angle),
                            float(response), int(level)))
    return kps


# ---------------------------------------------------------------------------
# Patch-set store: one grayscale PNG strip per set (patches stacked
# top-to-bottom in view order) plus a JSON sidecar with label/view/keypoint.

def save_patch_set(ps: PatchSet, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    strip = np.concatenate(ps.patches, axis=0)
    save_image(strip, out_dir / f"set_{ps.label:06d}.png")
    kp = ps.source_keypoint
    sidecar = {
        "label": ps.label,
        "view_id": ps.view_id,
        "keypoint": {"x": kp.x, "y": kp.y, "scale": kp.scale,
                     "angle": kp.angle, "response": kp.response, "level": kp.level},
    }
    (out_dir / f"set_{ps.label:06d}.json").write_text(json.dumps(sidecar, indent=1))


def load_patch_set(png_path) -> PatchSet:
    png_path = Path(png_path)
    strip = load_image(png_path)
    meta = json.loads(png_path.with_suffix(".json").read_text())
    side = strip.shape[1]
    if strip.shape[0] % side != 0:
        raise FormatError(f"strip height {strip.shape[0]} not a multiple of width {side}")
    count = strip.shape[0] // side
    patches = [strip[i * side:(i + 1) * side] for i in range(count)]
    kp = meta["keypoint"]
    return PatchSet(
        label=meta["label"],
        view_id=meta["view_id"],
        patches=patches,
        source_keypoint=Keypoint(kp["x"], kp["y"], kp["scale"], kp["angle"],
                                 kp["response"], kp.get("level", 0)),
    )


def load_patch_sets(directory) -> list:
    return [load_patch_set(p) for p in sorted(Path(directory).glob("set_*.png"))]
