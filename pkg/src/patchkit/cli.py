"""Command-line entry point wiring the pipeline stages together.

Metric-producing subcommands print machine-readable JSON to stdout; logs go
to stderr. All randomness is controlled by --seed. A JSON config file can
mirror any flag; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import compress, curation, datasetops, descriptor, detector, evalmetrics
from . import metric, patches
from .core import (Keypoint, load_image, load_patch_sets, make_rng,
                   read_embeddings, read_keypoints, save_patch_set,
                   write_embeddings, write_keypoints)


def _log(msg):
    print(msg, file=sys.stderr)


def _emit(obj):
    print(json.dumps(obj, sort_keys=True))


def _input_images(path):
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir()
                       if p.suffix.lower() in (".png", ".pgm"))
        if not files:
            raise ValueError(f"no PNG/PGM images in {path}")
        return files
    return [path]


def cmd_detect(args):
    params = detector.PyramidParams(sigma=args.sigma, k1=args.k1, k2=args.k2,
                                    base_scale=args.bs, threshold=args.threshold,
                                    max_points=args.max_points)
    kps = []
    for f in _input_images(args.input):
        kps.extend(detector.detect(load_image(f), params))
    write_keypoints(kps, args.out)
    _emit({"keypoints": len(kps)})


def cmd_extract(args):
    files = _input_images(args.view_dir)
    images = [load_image(f) for f in files]
    kps = read_keypoints(args.keypoints)
    sets = patches.extract_patch_sets(images, kps, view_id=args.view_id,
                                      out_side=args.patch_size)
    for ps in sets:
        save_patch_set(ps, args.out)
    _emit({"patch_sets": len(sets), "patches_per_set": len(images)})


def cmd_shift(args):
    kps = patches.shift_keypoints(read_keypoints(args.keypoints), args.dx, args.dy)
    write_keypoints(kps, args.out)
    _emit({"keypoints": len(kps), "dx": args.dx, "dy": args.dy})


def cmd_augment(args):
    rng = make_rng(args.seed)
    fn = patches.augment_amos if args.recipe == "amos" else patches.augment_liberty
    count = 0
    for ps in load_patch_sets(getattr(args, "in")):
        ps.patches = [fn(p, rng) for p in ps.patches]
        save_patch_set(ps, args.out)
        count += len(ps.patches)
    _emit({"augmented_patches": count, "recipe": args.recipe})


def cmd_describe(args):
    if args.method != "baseline":
        raise ValueError(f"unknown descriptor method: {args.method}")
    all_patches = []
    for ps in load_patch_sets(args.patches):
        all_patches.extend(ps.patches)
    emb = descriptor.describe_batch(all_patches)
    write_embeddings(emb, args.out)
    _emit({"descriptors": emb.shape[0], "dim": emb.shape[1]})


def cmd_loss(args):
    if args.generalized:
        if not args.labels:
            raise ValueError("--generalized requires --labels")
        e = read_embeddings(args.a)
        labels = [int(x) for x in Path(args.labels).read_text().split()]
        report = metric.generalized_loss(e, labels, margin=args.margin)
    else:
        report = metric.hard_triplet_loss(read_embeddings(args.a),
                                          read_embeddings(args.b),
                                          margin=args.margin)
    _emit({"total": report.total, "per_anchor": report.per_anchor})


def _read_hardness(path):
    lines = Path(path).read_text().strip().splitlines()
    if lines[0].strip() != "label,mean_e,count":
        raise ValueError(f"bad hardness CSV header in {path}")
    out = []
    for line in lines[1:]:
        label, mean_e, count = line.split(",")
        out.append(datasetops.SetHardness(int(label), float(mean_e), int(count)))
    return out


def cmd_reduce(args):
    rng = make_rng(args.seed)
    result = datasetops.reduce_dataset(_read_hardness(args.hardness),
                                       args.target, args.mode, rng)
    lines = ["label,count"] + [f"{l},{c}" for l, c in result.selected]
    Path(args.out).write_text("\n".join(lines) + "\n")
    _emit({"selected_sets": len(result.selected), "total_patches": result.total})


def cmd_sample(args):
    cfg = json.loads(Path(args.config).read_text())
    rng = make_rng(args.seed)
    views = [load_patch_sets(d) for d in cfg["view_dirs"]]
    spec = datasetops.BatchSpec(batch_size=cfg["batch_size"],
                                positives_per_set=cfg.get("positives_per_set", 2),
                                n_source_views=cfg.get("n_source_views", 1))
    strategy = cfg.get("strategy", "uniform")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for b in range(cfg.get("n_batches", 1)):
        if strategy == "uniform":
            batch = datasetops.sample_batch_uniform(views, spec, rng)
        elif strategy == "image_pairs":
            batch = datasetops.sample_batch_image_pairs(views, spec, rng)
        elif strategy == "no_collisions":
            pool = [ps for view in views for ps in view]
            batch = datasetops.sample_batch_no_collisions(pool, spec, rng)
        else:
            raise ValueError(f"unknown sampling strategy: {strategy}")
        rows = [{"label": it.label, "view_id": it.view_id,
                 "image_index": it.image_index} for it in batch.items]
        (out_dir / f"batch_{b:05d}.json").write_text(
            json.dumps({"items": rows, "short": batch.short}, indent=1))
    _emit({"batches": cfg.get("n_batches", 1), "strategy": strategy})


def _read_scored_pairs(path):
    scores, labels = [], []
    lines = Path(path).read_text().strip().splitlines()
    start = 1 if lines[0].strip() == "score,label" else 0
    for line in lines[start:]:
        s, l = line.split(",")
        scores.append(float(s))
        labels.append(bool(int(l)))
    return np.array(scores), np.array(labels)


def cmd_eval(args):
    if args.task == "fpr95":
        scores, labels = _read_scored_pairs(args.scores)
        _emit({"fpr95": evalmetrics.fpr95(scores, labels), "n": len(scores)})
    elif args.task == "ap":
        scores, labels = _read_scored_pairs(args.scores)
        _emit({"ap": evalmetrics.average_precision(scores, labels),
               "n": len(scores)})
    elif args.task == "matching":
        ref = read_embeddings(args.ref)
        tgt = read_embeddings(args.tgt)
        gt = [int(x) for x in Path(args.gt).read_text().split()]
        _emit({"matching_map": evalmetrics.matching_map(ref, tgt, gt),
               "queries": len(gt)})
    elif args.task == "maa":
        errors = [float(x) for x in Path(args.errors).read_text().split()]
        _emit({"maa": evalmetrics.maa(errors, args.max, args.step),
               "n": len(errors)})


def cmd_pca(args):
    if args.action == "fit":
        model = compress.pca_fit(read_embeddings(getattr(args, "in")), args.k)
        compress.write_pca(model, args.out)
        _emit({"d": model.d, "k": model.k})
    else:
        model = compress.read_pca(args.model)
        y = compress.pca_apply(model, read_embeddings(getattr(args, "in")),
                               renorm=not args.no_renorm)
        write_embeddings(y, args.out)
        _emit({"n": y.shape[0], "k": y.shape[1]})


def cmd_curate(args):
    externals = {}
    if args.externals:
        raw = json.loads(Path(args.externals).read_text())
        externals = {cam: [(e["sky_fraction"], e["has_dynamic_objects"])
                           for e in entries]
                     for cam, entries in raw.items()}
    cameras = {}
    for cam_dir in sorted(p for p in Path(args.cameras).iterdir() if p.is_dir()):
        cameras[cam_dir.name] = [load_image(f) for f in _input_images(cam_dir)]
    reports = curation.select_cameras(cameras, externals)
    out = {cam: {"kept": r.kept, "reason": r.reason,
                 "passes": [f.passes for f in r.flags]}
           for cam, r in reports.items()}
    Path(args.out).write_text(json.dumps(out, indent=1, sort_keys=True))
    _emit({"cameras": len(reports),
           "kept": sum(r.kept for r in reports.values())})


def cmd_cluster_views(args):
    raw = json.loads(Path(args.pairs).read_text())
    pair_results = {}
    max_idx = -1
    for key, val in raw.items():
        i, j = (int(x) for x in key.split(","))
        max_idx = max(max_idx, i, j)
        pair_results[(i, j)] = (np.array(val["H"]).reshape(3, 3), val["inliers"])
    views = curation.cluster_views(max_idx + 1, pair_results)
    Path(args.out).write_text(json.dumps(views))
    _emit({"views": len(views), "largest": max(len(v) for v in views)})


def build_parser():
    parser = argparse.ArgumentParser(prog="patchkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1,
                       help="cap on internal parallelism (results identical for any N)")
        p.add_argument("--config", help="JSON file mirroring the flags; flags win")
        return p

    p = add("detect", cmd_detect, help="Hessian keypoint detection")
    p.add_argument("--input", required=True)
    p.add_argument("--sigma", type=float, default=1.8)
    p.add_argument("--k1", type=int, default=0)
    p.add_argument("--k2", type=int, default=4)
    p.add_argument("--bs", type=float, default=30.0)
    p.add_argument("--threshold", type=float, default=0.00016)
    p.add_argument("--max-points", type=int, default=2000)
    p.add_argument("--out", required=True)

    p = add("extract", cmd_extract, help="extract patch sets from a view")
    p.add_argument("--view-dir", required=True)
    p.add_argument("--keypoints", required=True)
    p.add_argument("--patch-size", type=int, default=96)
    p.add_argument("--view-id", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("shift", cmd_shift, help="displace keypoints (deregistration study)")
    p.add_argument("--keypoints", required=True)
    p.add_argument("--dx", type=float, required=True)
    p.add_argument("--dy", type=float, required=True)
    p.add_argument("--out", required=True)

    p = add("augment", cmd_augment, help="apply a training augmentation recipe")
    p.add_argument("--in", required=True)
    p.add_argument("--recipe", choices=["amos", "liberty"], required=True)
    p.add_argument("--out", required=True)

    p = add("describe", cmd_describe, help="compute descriptors for stored patches")
    p.add_argument("--patches", required=True)
    p.add_argument("--method", default="baseline")
    p.add_argument("--out", required=True)

    p = add("loss", cmd_loss, help="hard-in-batch triplet or generalized loss")
    p.add_argument("--a", required=True)
    p.add_argument("--b")
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--generalized", action="store_true")
    p.add_argument("--labels")

    p = add("reduce", cmd_reduce, help="hardness-based dataset reduction")
    p.add_argument("--hardness", required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--mode", choices=["low", "medium", "high"], required=True)
    p.add_argument("--out", required=True)

    p = add("sample", cmd_sample, help="sample training batches")
    p.add_argument("--out", required=True)

    p = add("eval", cmd_eval, help="descriptor evaluation metrics")
    p.add_argument("task", choices=["fpr95", "ap", "matching", "maa"])
    p.add_argument("--scores")
    p.add_argument("--ref")
    p.add_argument("--tgt")
    p.add_argument("--gt")
    p.add_argument("--errors")
    p.add_argument("--max", type=float, default=10.0)
    p.add_argument("--step", type=float, default=1.0)

    p = add("pca", cmd_pca, help="fit or apply embedding compression")
    p.add_argument("action", choices=["fit", "apply"])
    p.add_argument("--in", required=True)
    p.add_argument("--k", type=int, default=128)
    p.add_argument("--model")
    p.add_argument("--no-renorm", action="store_true")
    p.add_argument("--out", required=True)

    p = add("curate", cmd_curate, help="camera selection filters")
    p.add_argument("--cameras", required=True)
    p.add_argument("--externals")
    p.add_argument("--out", required=True)

    p = add("cluster-views", cmd_cluster_views, help="greedy view clustering")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)

    return parser, sub


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, sub = build_parser()

    # apply config-file defaults to the subcommand before the real parse,
    # so explicit flags win
    if "--config" in argv and argv and argv[0] in sub.choices:
        cfg_path = argv[argv.index("--config") + 1]
        try:
            cfg = json.loads(Path(cfg_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            _log(f"error: cannot read config {cfg_path}: {exc}")
            return 2
        if argv[0] != "sample":  # sample uses --config as its input file
            sub.choices[argv[0]].set_defaults(
                **{k.replace("-", "_"): v for k, v in cfg.items()})

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        args.fn(args)
    except Exception as exc:
        _log(f"error: {exc}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
