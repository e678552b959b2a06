"""Hardness-based dataset reduction and batch-composition strategies.

Batch sources are plain callables `(n_items, rng) -> list[BatchItem]`, so the
multi-dataset composition can slice them into epochs, batches or blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SetHardness:
    label: int
    mean_e: float
    count: int

    def __post_init__(self):
        if self.count < 1 or not np.isfinite(self.mean_e):
            raise ValueError(f"bad hardness entry: {self}")


@dataclass(frozen=True)
class BatchSpec:
    batch_size: int
    positives_per_set: int = 2
    n_source_views: int = 1

    def __post_init__(self):
        if self.positives_per_set < 2:
            raise ValueError("positives_per_set must be >= 2")
        if self.batch_size % self.positives_per_set != 0:
            raise ValueError("batch_size must be a multiple of positives_per_set")


@dataclass(frozen=True)
class BatchItem:
    patch: object  # 2-D array; kept opaque so index-only pipelines work too
    label: int
    view_id: int
    image_index: int


@dataclass
class Batch:
    items: list
    short: bool = False  # pool exhausted before batch_size was reached


@dataclass
class ReductionResult:
    selected: list  # (label, patches_taken) in selection order
    partial_label: int | None = None
    partial_indices: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(c for _, c in self.selected)


def reduce_dataset(hardness, target_patches: int, mode: str, rng) -> ReductionResult:
    """Pick whole patch sets by hardness until the target is met; top up the
    budget with randomly chosen patches from the first unused set.

    mode 'medium' sorts ascending by |mean_e - overall mean|, 'low' ascending
    and 'high' descending by mean_e. Ties break by ascending label.
    """
    if target_patches < 1:
        raise ValueError("target_patches must be >= 1")
    hardness = list(hardness)
    if mode == "medium":
        e_bar = float(np.mean([h.mean_e for h in hardness]))
        order = sorted(hardness, key=lambda h: (abs(h.mean_e - e_bar), h.label))
    elif mode == "low":
        order = sorted(hardness, key=lambda h: (h.mean_e, h.label))
    elif mode == "high":
        order = sorted(hardness, key=lambda h: (-h.mean_e, h.label))
    else:
        raise ValueError(f"unknown reduction mode: {mode}")

    selected = []
    total = 0
    result = ReductionResult(selected)
    for i, h in enumerate(order):
        if total + h.count <= target_patches:
            selected.append((h.label, h.count))
            total += h.count
        else:
            remaining = target_patches - total
            if remaining > 0:
                idx = rng.choice(h.count, size=remaining, replace=False)
                result.partial_label = h.label
                result.partial_indices = sorted(int(j) for j in idx)
                selected.append((h.label, remaining))
            break
    return result


def sample_batch_uniform(views, spec: BatchSpec, rng) -> Batch:
    """Uniform sampling: a fixed subset of views, then (view, set, patches)
    all uniform; no patch set repeats within one batch."""
    n_sets_needed = spec.batch_size // spec.positives_per_set
    chosen = rng.choice(len(views), size=min(spec.n_source_views, len(views)),
                        replace=False)
    available = sum(len(views[v]) for v in chosen)
    if available < n_sets_needed:
        raise ValueError(
            f"chosen views hold {available} sets, batch needs {n_sets_needed}")
    used = set()
    items = []
    while len(items) < spec.batch_size:
        v = int(chosen[rng.integers(len(chosen))])
        view = views[v]
        s = int(rng.integers(len(view)))
        if (v, s) in used:
            continue
        used.add((v, s))
        ps = view[s]
        picks = rng.choice(len(ps.patches), size=spec.positives_per_set, replace=False)
        for p in picks:
            items.append(BatchItem(ps.patches[p], ps.label, ps.view_id, int(p)))
    return Batch(items)


def sample_batch_image_pairs(views, spec: BatchSpec, rng) -> Batch:
    """Run sequentially over views; within a view draw one random image pair
    (i, j) and emit each set's patch i and patch j until the batch is full."""
    if spec.positives_per_set != 2:
        raise ValueError("image-pair sampling emits exactly 2 positives per set")
    items = []
    for view in views:
        if len(items) >= spec.batch_size:
            break
        n_images = len(view[0].patches)
        if n_images < 2:
            raise ValueError("image-pair sampling needs >= 2 images per view")
        i, j = rng.choice(n_images, size=2, replace=False)
        order = rng.permutation(len(view))
        for s in order:
            if len(items) >= spec.batch_size:
                break
            ps = view[int(s)]
            items.append(BatchItem(ps.patches[int(i)], ps.label, ps.view_id, int(i)))
            items.append(BatchItem(ps.patches[int(j)], ps.label, ps.view_id, int(j)))
    if len(items) < spec.batch_size:
        raise ValueError("views exhausted before the batch was filled")
    return Batch(items)


def _boxes_overlap(kp1, kp2) -> bool:
    """Axis-aligned keypoint boxes (side = scale, centered) with IoU > 0."""
    dx = abs(kp1.x - kp2.x)
    dy = abs(kp1.y - kp2.y)
    return dx < (kp1.scale + kp2.scale) / 2.0 and dy < (kp1.scale + kp2.scale) / 2.0


def sample_batch_no_collisions(pool, spec: BatchSpec, rng) -> Batch:
    """Collision-avoiding sampling: after accepting a set, every set whose
    keypoint box overlaps it is discarded from the pool. A short batch is
    returned (flagged) when the pool runs dry."""
    remaining = list(pool)
    items = []
    while len(items) < spec.batch_size and remaining:
        idx = int(rng.integers(len(remaining)))
        ps = remaining.pop(idx)
        picks = rng.choice(len(ps.patches), size=spec.positives_per_set, replace=False)
        for p in picks:
            items.append(BatchItem(ps.patches[p], ps.label, ps.view_id, int(p)))
        kp = ps.source_keypoint
        remaining = [o for o in remaining
                     if not _boxes_overlap(kp, o.source_keypoint)]
    return Batch(items, short=len(items) < spec.batch_size)


def compose_multi(sources, strategy: str, batches_per_epoch: int,
                  batch_size: int, rng, weights=None):
    """Yield one epoch of batches drawn from several datasets.

    'per_epoch': contiguous runs per dataset in listed order. 'per_batch':
    dataset drawn per batch by weight. 'in_batch': every batch holds one
    contiguous block per dataset (remainder goes to the last block).
    """
    if not sources:
        raise ValueError("need at least one batch source")
    n = len(sources)
    if weights is None:
        weights = np.full(n, 1.0 / n)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (n,) or not np.isclose(weights.sum(), 1.0):
            raise ValueError("weights must match sources and sum to 1")

    if strategy == "per_epoch":
        bounds = np.linspace(0, batches_per_epoch, n + 1).round().astype(int)
        for d in range(n):
            for _ in range(bounds[d + 1] - bounds[d]):
                yield Batch(sources[d](batch_size, rng))
    elif strategy == "per_batch":
        for _ in range(batches_per_epoch):
            d = int(rng.choice(n, p=weights))
            yield Batch(sources[d](batch_size, rng))
    elif strategy == "in_batch":
        block = batch_size // n
        sizes = [block] * (n - 1) + [batch_size - block * (n - 1)]
        for _ in range(batches_per_epoch):
            items = []
            for d in range(n):
                items.extend(sources[d](sizes[d], rng))
            yield Batch(items)
    else:
        raise ValueError(f"unknown combination strategy: {strategy}")
