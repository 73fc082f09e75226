"""Command-line front end: dataset construction, splitting, training,
evaluation, reconstruction, segmentation, benchmarking, and the full
multi-model pipeline, each run leaving a reproducible manifest.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

import argparse
import hashlib
import os
import sys

import numpy as np

from . import __version__
from .dataset import (apply_normalizer, clean, fit_normalizer, load_normalizer,
                      load_points, load_split, sample_background,
                      sample_pixels_from_mask, save_normalizer, save_points,
                      save_split, split_blocked, split_random)
from .errors import DataError, NumericError
from .fields import (ArchSpec, default_depth, forward_batch, init_params,
                     load_checkpoint, save_checkpoint, sigmoid)
from .metrics import (MetricReport, compute_report, dice_iou, boundary_f1,
                      field_summary, leakage_gap, select_thresholds)
from .optim import TrainConfig, train
from .raster import BinaryRaster, read_raster, write_raster
from .recon import (GridSpec, bench, evaluate_grid, load_field,
                    probability_raster, save_field)
from .spline import SplineSpec, fit_spline, predict_spline, save_spline


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage problems via exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _default_seed():
    return int(os.environ.get("FIELDLOOM_SEED", "0"))


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command, flags, inputs=(), notes=()):
    """Flat key=value record of a run: command, resolved flags, input file
    digests, and the toolkit version."""
    with open(path, "w") as fh:
        fh.write(f"command={command}\n")
        fh.write(f"version={__version__}\n")
        for key in sorted(flags):
            fh.write(f"{key}={flags[key]}\n")
        for p in inputs:
            if p and os.path.exists(p):
                fh.write(f"digest.{os.path.basename(p)}={_sha256(p)}\n")
        for note in notes:
            fh.write(f"note={note}\n")


def _manifest_flags(args, skip=("func",)):
    return {k: v for k, v in vars(args).items() if k not in skip and v is not None}


def _load_indexed(path):
    """Load a dataset for index-aligned use with a split file; rows must
    already be clean (run make-dataset first)."""
    points = load_points(path)
    if points.meta.get("bad_rows"):
        raise DataError(f"{path} contains {points.meta['bad_rows']} unparseable rows; "
                        "run make-dataset to clean it first")
    if not np.all(np.isfinite(points.coords)):
        raise DataError(f"{path} contains non-finite coordinates; "
                        "run make-dataset to clean it first")
    return points


def _partition_sets(points, split, *parts):
    out = []
    for part in parts:
        idx = split.indices(part)
        if idx.size == 0:
            raise DataError(f"partition {part!r} is empty")
        out.append(points.subset(idx))
    return out


def _parse_bbox(text, expected_dims=None):
    vals = [float(v) for v in text.split(",")]
    if len(vals) % 2:
        raise UsageError("--bbox needs an even number of comma-separated values")
    bounds = [(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)]
    if expected_dims is not None and len(bounds) != expected_dims:
        raise UsageError(f"--bbox describes {len(bounds)} dimensions, "
                         f"expected {expected_dims}")
    return bounds


def _parse_slices(items):
    fixed = []
    for item in items or ():
        dim, _, value = item.partition("=")
        try:
            fixed.append((int(dim), float(value)))
        except ValueError:
            raise UsageError(f"--slice must look like dim=value, got {item!r}") from None
    return tuple(fixed)


def _arch_spec_from_args(args, input_dim):
    depth = args.depth if args.depth is not None else default_depth(args.arch)
    return ArchSpec(kind=args.arch, input_dim=input_dim, depth=depth,
                    width=args.width, w0=args.w0, n_fourier=args.fourier_k,
                    fourier_sigma=args.fourier_sigma, n_centers=args.rbf_centers)


def _add_arch_flags(p, default_arch="sine"):
    p.add_argument("--arch", default=default_arch,
                   choices=("sine", "fourier", "relu", "rbf"))
    p.add_argument("--depth", type=int, default=None,
                   help="hidden layers (default: 4 for sine, 3 otherwise)")
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--w0", type=float, default=30.0)
    p.add_argument("--fourier-k", type=int, default=16)
    p.add_argument("--fourier-sigma", type=float, default=10.0)
    p.add_argument("--rbf-centers", type=int, default=64)


def _add_train_flags(p, default_epochs=10):
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=4096)
    p.add_argument("--max-epochs", type=int, default=default_epochs)
    p.add_argument("--patience", type=int, default=3)


# ---------------------------------------------------------------------------
# Subcommands

def cmd_make_dataset(args):
    points = load_points(args.presences)
    presences = clean(points)
    presences = presences.subset(np.flatnonzero(presences.labels == 1))
    if len(presences) == 0:
        raise DataError("no presence records after cleaning")
    n_bg = args.n_background if args.n_background else len(presences)
    domain = _parse_bbox(args.domain, presences.dim) if args.domain else None
    background = sample_background(presences, n_bg, args.seed, domain=domain)
    combined = presences.concat(background)
    save_points(combined, args.out)
    write_manifest(args.out + ".manifest", "make-dataset", _manifest_flags(args),
                   inputs=[args.presences])
    print(f"wrote {len(combined)} records ({len(presences)} presences, "
          f"{n_bg} background) to {args.out}")


def cmd_split(args):
    points = _load_indexed(args.data)
    if args.protocol == "random":
        split = split_random(points, args.test_frac, args.val_frac, args.seed)
    else:
        split = split_blocked(points, args.block_deg, args.doy_bin_days,
                              args.test_frac, args.val_frac, args.seed)
    save_split(split, args.out)
    write_manifest(args.out + ".manifest", "split", _manifest_flags(args),
                   inputs=[args.data])
    sizes = {p: int(np.sum(split.partitions == p)) for p in ("train", "val", "test")}
    print(f"split {len(points)} records: {sizes}")


def cmd_train(args):
    points = _load_indexed(args.data)
    split = load_split(args.split)
    if len(split) != len(points):
        raise DataError("split file does not match the dataset length")
    train_set, val_set = _partition_sets(points, split, "train", "val")
    norm = fit_normalizer(train_set)
    model = init_params(_arch_spec_from_args(args, points.dim), args.seed)
    cfg = TrainConfig(learning_rate=args.lr, batch_size=args.batch_size,
                      max_epochs=args.max_epochs, patience=args.patience,
                      seed=args.seed)
    best, trace = train(model, apply_normalizer(norm, train_set),
                        apply_normalizer(norm, val_set), cfg)
    save_checkpoint(best, args.out)
    save_normalizer(norm, args.norm_out)
    if args.trace_out:
        trace.to_csv(args.trace_out)
    write_manifest(args.out + ".manifest", "train", _manifest_flags(args),
                   inputs=[args.data, args.split])
    print(f"best epoch {trace.best_epoch} ({trace.stop_reason}), "
          f"val loss {trace.best_val_loss:.6f} -> {args.out}")


def cmd_evaluate(args):
    points = _load_indexed(args.data)
    split = load_split(args.split)
    if len(split) != len(points):
        raise DataError("split file does not match the dataset length")
    (subset,) = _partition_sets(points, split, args.partition)
    model = load_checkpoint(args.model)
    norm = load_normalizer(args.norm)
    scores = sigmoid(forward_batch(model, norm.apply(subset.coords)))
    report = compute_report(scores, subset.labels, threshold=args.threshold,
                            bootstrap=args.bootstrap, seed=args.seed,
                            meta={"partition": args.partition,
                                  "model": os.path.basename(args.model)})
    report.to_csv(args.out)
    write_manifest(args.out + ".manifest", "evaluate", _manifest_flags(args),
                   inputs=[args.data, args.split, args.model, args.norm])
    print(f"{args.partition}: " + ", ".join(
        f"{k}={v:.4f}" for k, v in report.values.items()))


def cmd_reconstruct(args):
    model = load_checkpoint(args.model)
    norm = load_normalizer(args.norm)
    bounds = _parse_bbox(args.bbox)
    res = [int(r) for r in args.res.split(",")]
    spec = GridSpec(bounds=bounds, resolution=res, fixed=_parse_slices(args.slice))
    field = evaluate_grid(model, norm, spec)
    save_field(field, args.out)
    if args.heatmap:
        if len(spec.resolution) != 2:
            raise UsageError("--heatmap requires a 2-D grid")
        write_raster(field.as_array().T, args.heatmap)
    write_manifest(args.out + ".manifest", "reconstruct", _manifest_flags(args),
                   inputs=[args.model, args.norm])
    print(f"evaluated {field.values.size} cells -> {args.out}")


def cmd_field_summary(args):
    field = load_field(args.field)
    points = load_points(args.presences)
    presences = points.subset(np.flatnonzero(points.labels == 1))
    summary = field_summary(field, presences, threshold=args.threshold)
    report = MetricReport({"area_above_threshold": summary.area_above_threshold,
                           "eoo": summary.eoo,
                           "hit_at_1pct": summary.hit_at_1pct,
                           "hit_at_5pct": summary.hit_at_5pct},
                          meta={"threshold": str(args.threshold)})
    report.to_csv(args.out)
    write_manifest(args.out + ".manifest", "field-summary", _manifest_flags(args),
                   inputs=[args.field, args.presences])
    print(", ".join(f"{k}={v:.4g}" for k, v in report.values.items()))


def cmd_segment(args):
    mask = read_raster(args.mask)
    n_pixels = args.n_pixels or mask.width * mask.height
    pixels = sample_pixels_from_mask(mask, n_pixels, args.seed)
    split = split_random(pixels, args.test_frac, args.val_frac, args.seed)
    train_set, val_set = _partition_sets(pixels, split, "train", "val")
    norm = fit_normalizer(train_set)
    model = init_params(_arch_spec_from_args(args, 2), args.seed)
    cfg = TrainConfig(learning_rate=args.lr, batch_size=args.batch_size,
                      max_epochs=args.max_epochs, patience=args.patience,
                      seed=args.seed)
    best, trace = train(model, apply_normalizer(norm, train_set),
                        apply_normalizer(norm, val_set), cfg)
    prob = probability_raster(best, norm, mask.width, mask.height)
    if args.threshold is not None:
        t = args.threshold
    else:
        _, t = select_thresholds([(prob, mask)])
    recon = BinaryRaster((prob >= t).astype(np.uint8))
    write_raster(recon, args.out_mask)
    if args.prob_out:
        write_raster(prob, args.prob_out)
    overlap = dice_iou(recon, mask)
    values = dict(overlap)
    for tol in (1, 2, 4, 8):
        values[f"boundary_f1_at_{tol}px"] = boundary_f1(recon, mask, tol)
    report = MetricReport(values, meta={"threshold": f"{t:.2f}",
                                        "best_epoch": str(trace.best_epoch)})
    if args.report:
        report.to_csv(args.report)
    write_manifest(args.out_mask + ".manifest", "segment", _manifest_flags(args),
                   inputs=[args.mask], notes=[f"threshold={t:.2f}"])
    print(f"threshold {t:.2f}: dice={overlap['dice']:.4f} iou={overlap['iou']:.4f}")


def cmd_bench(args):
    model = init_params(_arch_spec_from_args(args, args.d), args.seed)
    result = bench(model, n_points=args.n_points, repeats=args.repeats,
                   seed=args.seed)
    line = (f"arch={args.arch} params={result.params} macs={result.macs} "
            f"throughput={result.throughput:.1f} latency={result.latency:.3e}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("key,value\n")
            fh.write(f"params,{result.params}\n")
            fh.write(f"macs,{result.macs}\n")
            fh.write(f"throughput,{result.throughput:.17g}\n")
            fh.write(f"latency,{result.latency:.17g}\n")
            fh.write(f"batch_size,{result.batch_size}\n")
            fh.write(f"repeats,{result.repeats}\n")
    print(line)


def cmd_baseline_spline(args):
    points = _load_indexed(args.data)
    split = load_split(args.split)
    if len(split) != len(points):
        raise DataError("split file does not match the dataset length")
    train_set, test_set = _partition_sets(points, split, "train", "test")
    # knot bounds are fixed from the overall dataset range, before splitting
    bounds = list(zip(points.coords.min(axis=0), points.coords.max(axis=0)))
    spec = SplineSpec(bounds=bounds, basis_count=args.basis, degree=args.degree,
                      penalty=args.penalty)
    model = fit_spline(spec, train_set)
    scores = predict_spline(model, test_set.coords)
    report = compute_report(scores, test_set.labels, bootstrap=args.bootstrap,
                            seed=args.seed, meta={"model": "spline",
                                                  "partition": "test"})
    report.to_csv(args.out)
    if args.model_out:
        save_spline(model, args.model_out)
    write_manifest(args.out + ".manifest", "baseline-spline",
                   _manifest_flags(args), inputs=[args.data, args.split])
    print("test: " + ", ".join(f"{k}={v:.4f}" for k, v in report.values.items()))


# ---------------------------------------------------------------------------
# Pipeline

PIPELINE_DEFAULTS = {
    "architectures": "sine",
    "protocols": "random,blocked",
    "seed": None,
    "test_frac": "0.2",
    "val_frac": "0.1",
    "block_deg": "5.0",
    "doy_bin_days": "30",
    "depth": "",
    "width": "128",
    "w0": "30.0",
    "fourier_k": "16",
    "fourier_sigma": "10.0",
    "rbf_centers": "64",
    "learning_rate": "1e-3",
    "batch_size": "4096",
    "max_epochs": "10",
    "patience": "3",
    "bootstrap": "0",
    "grid_res": "100,100",
    "grid_bbox": "auto",
    "threshold": "0.5",
}


def read_config(path):
    """Flat key=value text, one pair per line, '#' comments."""
    if not os.path.exists(path):
        raise DataError(f"config file not found: {path}")
    cfg = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            cfg[key.strip()] = value.strip()
    return cfg


def _pipeline_cell(points, arch, protocol, cfg, seed, out_dir):
    """split -> train -> evaluate -> reconstruct -> summarize for one
    (architecture, protocol) pair; returns the metric report."""
    tag = f"{arch}_{protocol}"
    if protocol == "random":
        split = split_random(points, float(cfg["test_frac"]),
                             float(cfg["val_frac"]), seed)
    else:
        doy_bins = float(cfg["doy_bin_days"]) if points.dim == 3 else None
        split = split_blocked(points, float(cfg["block_deg"]), doy_bins,
                              float(cfg["test_frac"]), float(cfg["val_frac"]), seed)
    save_split(split, os.path.join(out_dir, f"split_{tag}.csv"))
    train_set, val_set, test_set = _partition_sets(points, split,
                                                   "train", "val", "test")
    norm = fit_normalizer(train_set)
    depth = int(cfg["depth"]) if cfg["depth"] else default_depth(arch)
    spec = ArchSpec(kind=arch, input_dim=points.dim, depth=depth,
                    width=int(cfg["width"]), w0=float(cfg["w0"]),
                    n_fourier=int(cfg["fourier_k"]),
                    fourier_sigma=float(cfg["fourier_sigma"]),
                    n_centers=int(cfg["rbf_centers"]))
    tc = TrainConfig(learning_rate=float(cfg["learning_rate"]),
                     batch_size=int(cfg["batch_size"]),
                     max_epochs=int(cfg["max_epochs"]),
                     patience=int(cfg["patience"]), seed=seed)
    best, trace = train(init_params(spec, seed),
                        apply_normalizer(norm, train_set),
                        apply_normalizer(norm, val_set), tc)
    save_checkpoint(best, os.path.join(out_dir, f"model_{tag}.ckpt"))
    save_normalizer(norm, os.path.join(out_dir, f"norm_{tag}.txt"))
    trace.to_csv(os.path.join(out_dir, f"trace_{tag}.csv"))

    scores = sigmoid(forward_batch(best, norm.apply(test_set.coords)))
    report = compute_report(scores, test_set.labels,
                            threshold=float(cfg["threshold"]),
                            bootstrap=int(cfg["bootstrap"]), seed=seed,
                            meta={"protocol": protocol, "arch": arch,
                                  "seed": str(seed)})
    report.to_csv(os.path.join(out_dir, f"report_{tag}.csv"))

    if cfg["grid_bbox"] == "auto":
        bounds = list(zip(points.coords.min(axis=0), points.coords.max(axis=0)))
    else:
        bounds = [tuple(map(float, b.split(":"))) for b in cfg["grid_bbox"].split(";")]
    res = [int(r) for r in cfg["grid_res"].split(",")]
    fixed = ()
    if points.dim == 3 and len(res) == 2:
        held = cfg.get("slice")
        if held:
            d, v = held.split(":")
            fixed = ((int(d), float(v)),)
            bounds = [b for k, b in enumerate(bounds) if k != int(d)]
        else:
            lo, hi = bounds[2]
            fixed = ((2, (lo + hi) / 2.0),)
            bounds = bounds[:2]
    gspec = GridSpec(bounds=bounds, resolution=res, fixed=fixed)
    field = evaluate_grid(best, norm, gspec)
    save_field(field, os.path.join(out_dir, f"field_{tag}.csv"))
    if len(res) == 2:
        write_raster(field.as_array().T, os.path.join(out_dir, f"field_{tag}.pgm"))

    presences = points.subset(np.flatnonzero(points.labels == 1))
    summary = field_summary(field, presences, threshold=float(cfg["threshold"]))
    MetricReport({"area_above_threshold": summary.area_above_threshold,
                  "eoo": summary.eoo,
                  "hit_at_1pct": summary.hit_at_1pct,
                  "hit_at_5pct": summary.hit_at_5pct},
                 meta={"protocol": protocol, "arch": arch}).to_csv(
        os.path.join(out_dir, f"summary_{tag}.csv"))
    return report


def cmd_pipeline(args):
    cfg = dict(PIPELINE_DEFAULTS)
    cfg.update(read_config(args.config))
    if "data" not in cfg:
        raise UsageError("pipeline config must set data=<points.csv>")
    seed = args.seed if args.seed is not None else (
        int(cfg["seed"]) if cfg["seed"] else _default_seed())
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    points = _load_indexed(cfg["data"])
    archs = [a.strip() for a in cfg["architectures"].split(",") if a.strip()]
    protocols = [p.strip() for p in cfg["protocols"].split(",") if p.strip()]
    notes = []
    reports = {}
    for arch in archs:
        for protocol in protocols:
            try:
                reports[(arch, protocol)] = _pipeline_cell(
                    points, arch, protocol, cfg, seed, out_dir)
                notes.append(f"{arch}/{protocol}: ok")
            except (DataError, NumericError, ValueError) as exc:
                notes.append(f"{arch}/{protocol}: failed: {exc}")
        if (arch, "random") in reports and (arch, "blocked") in reports:
            gap = leakage_gap(reports[(arch, "random")], reports[(arch, "blocked")])
            gap.meta["arch"] = arch
            gap.to_csv(os.path.join(out_dir, f"gap_{arch}.csv"))
    flags = {f"config.{k}": v for k, v in sorted(cfg.items())}
    flags["seed"] = seed
    write_manifest(os.path.join(out_dir, "manifest.txt"), "pipeline", flags,
                   inputs=[cfg["data"], args.config], notes=notes)
    for note in notes:
        print(note)
    if any("failed" in n for n in notes):
        raise DataError("one or more pipeline stages failed; see manifest")


# ---------------------------------------------------------------------------
# Dispatch

def build_parser():
    parser = _Parser(prog="fieldloom",
                     description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("make-dataset", help="clean presences and "
                       "add uniform background samples")
    p.add_argument("--presences", required=True)
    p.add_argument("--n-background", type=int, default=0,
                   help="background count (default: one per presence)")
    p.add_argument("--domain", default=None,
                   help="explicit sampling box lo0,hi0,lo1,hi1[,lo2,hi2]")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_dataset)

    p = sub.add_parser("split", help="assign train/val/test partitions")
    p.add_argument("--data", required=True)
    p.add_argument("--protocol", choices=("random", "blocked"), default="random")
    p.add_argument("--block-deg", type=float, default=5.0)
    p.add_argument("--doy-bin-days", type=float, default=None)
    p.add_argument("--test-frac", type=float, default=0.2)
    p.add_argument("--val-frac", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a coordinate network")
    p.add_argument("--data", required=True)
    p.add_argument("--split", required=True)
    _add_arch_flags(p)
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--norm-out", required=True, help="normalizer path")
    p.add_argument("--trace-out", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a partition with a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--norm", required=True)
    p.add_argument("--partition", choices=("train", "val", "test"), default="test")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--bootstrap", type=int, default=0)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reconstruct", help="evaluate a dense probability grid")
    p.add_argument("--model", required=True)
    p.add_argument("--norm", required=True)
    p.add_argument("--bbox", required=True, help="lo0,hi0,lo1,hi1[,...]")
    p.add_argument("--res", default="360,180", help="cells per free dimension")
    p.add_argument("--slice", action="append", default=None,
                   help="fix a held dimension, e.g. --slice 2=150")
    p.add_argument("--heatmap", default=None, help="optional P5 output (2-D)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("field-summary", help="geometric field descriptors")
    p.add_argument("--field", required=True)
    p.add_argument("--presences", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_field_summary)

    p = sub.add_parser("segment", help="fit a mask end to end and reconstruct")
    p.add_argument("--mask", required=True, help="P2/P5 graymap")
    p.add_argument("--n-pixels", type=int, default=0,
                   help="pixel samples (default: every pixel)")
    p.add_argument("--test-frac", type=float, default=0.2)
    p.add_argument("--val-frac", type=float, default=0.1)
    _add_arch_flags(p, default_arch="rbf")
    _add_train_flags(p, default_epochs=8)
    p.add_argument("--threshold", type=float, default=None,
                   help="binarization threshold (default: Dice-optimal)")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out-mask", required=True)
    p.add_argument("--prob-out", default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("bench", help="forward-pass throughput and cost")
    _add_arch_flags(p)
    p.add_argument("--d", type=int, default=2, help="input dimensionality")
    p.add_argument("--n-points", type=int, default=50000)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("baseline-spline", help="tensor-spline logistic baseline")
    p.add_argument("--data", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--basis", type=int, default=12)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--penalty", type=float, default=1e-3)
    p.add_argument("--bootstrap", type=int, default=0)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.add_argument("--model-out", default=None)
    p.set_defaults(func=cmd_baseline_spline)

    p = sub.add_parser("pipeline", help="split/train/evaluate/reconstruct for "
                       "every (architecture, protocol) pair")
    p.add_argument("--config", required=True, help="flat key=value config file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_pipeline)
    return parser


def dispatch(argv) -> int:
    """Run one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help()
            return 1
        args.func(args)
        return 0
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


def main(argv=None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
