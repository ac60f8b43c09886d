"""Command-line front end.

Subcommands::

    gen      write a synthetic corpus and its manifest
    sample   enumerate and label scanning windows -> CSV
    extract  describe the same windows -> feature cache
    train    fit a linear model on a feature cache and its sample CSV
    spot     detections for one video -> CSV
    eval     full protocol run -> DET curves and summary CSVs
    report   SVG DET plot and a summary table from curve CSVs
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .benchmark import BenchmarkConfig, enumerate_samples, prepare_video, run_benchmark
from .classifier import TrainConfig, load_model, save_model, train
from .core import DatasetManifest, VideoRecord, count_frames, load_manifest, load_volume, parse_intervals
from .descriptors import BlockGrid, DescriptorConfig, read_feature_cache, write_feature_cache
from .errors import DimMismatch, MespotError
from .evaluation import REF_FPPV, REF_FPPW, SplitSpec, read_curve, read_summary, reference_point
from .plotting import emit_det_plot
from .sampling import read_samples, write_samples
from .spotting import spot, write_detections
from .synth import SMIC_LIKE_COUNTS, SynthConfig, generate_synthetic
from .temporal import DEFAULT_FACTORS, ScaleSpec

log = logging.getLogger("mespot")


def _pair(cast):
    def parse(text: str):
        parts = text.replace(":", ",").split(",")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
        return tuple(cast(p) for p in parts)

    return parse


def _blocks(text: str) -> tuple[int, int, int]:
    t = text.lower()
    parts = t.split("x") if "x" in t else list(t)
    if len(parts) != 3 or not all(p.isdigit() for p in parts):
        raise argparse.ArgumentTypeError(f"block division must look like 8x8x4 or 884, got {text!r}")
    return tuple(int(p) for p in parts)


def _feature(text: str) -> str:
    t = text.lower().replace("_", "-")
    if t not in ("lbp-top", "hog-top", "higo-top"):
        raise argparse.ArgumentTypeError(f"unknown feature {text!r} (lbp-top, hog-top, higo-top)")
    return t


# ---------------------------------------------------------------------------
# shared flag groups


def _add_scale_flags(p):
    g = p.add_argument_group("multi-scale")
    g.add_argument("--scales", default=",".join(f"{f:g}" for f in DEFAULT_FACTORS),
                   help="comma list of temporal scale factors, must include 1 (default: %(default)s)")
    g.add_argument("--interp", choices=("tim", "linear"), default="tim", help="temporal resampling method")


def _add_window_flags(p):
    g = p.add_argument_group("windows")
    g.add_argument("--L", type=int, default=9, help="window length in frames (default: %(default)s)")
    g.add_argument("--stride", type=int, default=1, help="sliding stride (default: %(default)s)")
    g.add_argument("--epsilon", type=float, default=0.5, help="IoU needed for a positive label and a hit")
    g.add_argument("--no-gt-normalize", action="store_true",
                   help="keep annotated ground-truth lengths instead of normalizing them to L")


def _add_descriptor_flags(p):
    g = p.add_argument_group("descriptor")
    g.add_argument("--feature", type=_feature, default="lbp-top", help="lbp-top, hog-top or higo-top")
    g.add_argument("--bl", type=_blocks, default=(8, 8, 4), help="block division nx x ny x nt (default 8x8x4)")
    g.add_argument("--ol", type=float, default=0.2, help="block overlap ratio (default: %(default)s)")
    g.add_argument("--nb", type=int, default=8, help="orientation bins for hog-top/higo-top")


def _add_train_flags(p):
    g = p.add_argument_group("training")
    g.add_argument("--lambda", dest="lam", type=float, default=TrainConfig.lam, help="L2 strength (default: %(default)s)")
    g.add_argument("--epochs", type=int, default=TrainConfig.epochs, help="passes over the data (default: %(default)s)")
    g.add_argument("--seed", type=int, default=0, help="seed for sample order and splits")
    g.add_argument("--train-scales", choices=("all", "identity"), default="all",
                   help="train on windows of every level or only of the original time scale")


def _add_eval_flags(p):
    g = p.add_argument_group("evaluation")
    g.add_argument("--nms-iou", type=float, default=0.3, help="temporal NMS overlap threshold")
    g.add_argument("--protocol", choices=("loso", "random"), default="loso")
    g.add_argument("--train-frac", type=float, default=0.7, help="training share for --protocol random")
    g.add_argument("--reps", type=int, default=10, help="repetitions for --protocol random")
    g.add_argument("--fppw-denominator", choices=("neg", "all"), default="neg",
                   help="divide per-window false positives by negative windows or by all windows")
    g.add_argument("--ref-fppw", type=float, default=REF_FPPW, help="per-window reference false-positive rate")
    g.add_argument("--ref-fppv", type=float, default=REF_FPPV, help="per-video reference false-positive rate")
    g.add_argument("--thresholds", type=int, default=41, help="points on each per-video threshold ladder")


def descriptor_config(a) -> DescriptorConfig:
    nx, ny, nt = a.bl
    return DescriptorConfig(a.feature.replace("-", "_"), BlockGrid(nx, ny, nt, a.ol), a.nb)


def benchmark_config(a) -> BenchmarkConfig:
    kw = dict(
        scales=ScaleSpec.parse(a.scales, a.interp),
        L=a.L,
        stride=a.stride,
        epsilon=a.epsilon,
        match_epsilon=a.epsilon,
        normalize_gt=not a.no_gt_normalize,
    )
    if hasattr(a, "feature"):
        kw["descriptor"] = descriptor_config(a)
    if hasattr(a, "lam"):
        kw["train"] = TrainConfig(a.lam, a.epochs, a.seed)
        kw["train_scales"] = a.train_scales
    if hasattr(a, "protocol"):
        kw.update(
            nms_iou=a.nms_iou,
            split=SplitSpec(a.protocol, a.train_frac, a.reps, a.seed),
            fppw_denominator=a.fppw_denominator,
            ref_fppw=a.ref_fppw,
            ref_fppv=a.ref_fppv,
            n_thresholds=a.thresholds,
        )
    return BenchmarkConfig(**kw)


def _dataset(a) -> DatasetManifest:
    """A manifest CSV, or a single volume wrapped as a one-video dataset."""
    src = Path(a.input)
    if src.suffix.lower() == ".csv":
        man = load_manifest(src)
        if a.video:
            wanted = set(a.video)
            recs = [r for r in man.records if r.id in wanted]
            missing = wanted - {r.id for r in recs}
            if missing:
                raise SystemExit(f"mespot: unknown video id(s): {', '.join(sorted(missing))}")
            man = DatasetManifest(tuple(recs), man.name, man.root)
        return man
    gts = parse_intervals(a.gt) if a.gt else []
    rec = VideoRecord(a.id or src.stem, a.id or src.stem, src.name, tuple(gts), a.fps, count_frames(src))
    return DatasetManifest((rec,), src.stem, src.parent)


def _add_input(p):
    p.add_argument("input", help="manifest CSV, or one video (.y8v file or frame directory)")
    p.add_argument("--video", action="append", help="restrict a manifest to this video id (repeatable)")
    p.add_argument("--gt", default="", help="ground truths for a single video, e.g. '10-18;40-48'")
    p.add_argument("--id", default="", help="video id for a single video (default: file stem)")
    p.add_argument("--fps", type=float, default=25.0, help="frame rate for a single video")


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(a) -> int:
    vps = a.videos_per_subject if a.videos_per_subject else (
        SMIC_LIKE_COUNTS if a.subjects == len(SMIC_LIKE_COUNTS) else 10)
    cfg = SynthConfig(
        n_subjects=a.subjects,
        videos_per_subject=vps,
        T=a.T,
        H=a.size,
        W=a.size,
        events_per_video=a.events,
        event_length=a.event_length,
        event_amplitude=a.amplitude,
        noise_sigma=a.noise,
        drift_amplitude=a.drift,
        n_empty_videos=a.empty,
        seed=a.seed,
        name=a.name,
    )
    man = generate_synthetic(cfg, a.out)
    print(f"wrote {len(man)} videos ({man.n_ground_truths} events, {len(man.subjects())} subjects) to {a.out}")
    return 0


def cmd_sample(a) -> int:
    cfg = benchmark_config(a)
    man = _dataset(a)
    rows = []
    for rec in man.records:
        n = rec.n_frames if rec.n_frames is not None else count_frames(man.resolve(rec))
        rows += enumerate_samples(rec, n, cfg)
    write_samples(rows, a.out)
    n_pos = sum(s.positive for s in rows)
    print(f"wrote {len(rows)} windows ({n_pos} positive) to {a.out}")
    return 0


def cmd_extract(a) -> int:
    cfg = benchmark_config(a)
    man = _dataset(a)
    feats, rows = [], []
    for rec in man.records:
        vs = prepare_video(rec, man.load(rec), cfg)
        feats.append(vs.features)
        rows += enumerate_samples(rec, vs.n_frames, cfg)
    X = np.concatenate(feats)
    write_feature_cache(a.out, cfg.descriptor.digest, X)
    if a.samples_out:
        write_samples(rows, a.samples_out)
    print(f"wrote {X.shape[0]} x {X.shape[1]} features ({cfg.descriptor.name}) to {a.out}")
    return 0


def cmd_train(a) -> int:
    digest, X = read_feature_cache(a.features)
    samples = read_samples(a.samples)
    if len(samples) != X.shape[0]:
        raise DimMismatch(f"{a.samples} lists {len(samples)} windows but {a.features} holds {X.shape[0]}")
    y = np.array([s.label for s in samples])
    if a.train_scales == "identity":
        keep = np.array([s.window.scale_factor == 1.0 for s in samples])
        X, y = X[keep], y[keep]
    m = train(X, y, TrainConfig(a.lam, a.epochs, a.seed), digest=digest)
    save_model(m, a.out)
    print(f"trained on {y.size} windows ({int((y > 0).sum())} positive), model written to {a.out}")
    return 0


def cmd_spot(a) -> int:
    cfg = benchmark_config(a)
    m = load_model(a.model)
    src = Path(a.video)
    vol = load_volume(src, a.fps)
    dets = spot(vol, m, cfg.descriptor, cfg.scales, cfg.L, cfg.stride, a.threshold, a.nms_iou)
    vid = a.id or src.stem
    write_detections([(vid, d) for d in dets], a.out)
    print(f"{vid}: {len(dets)} detection(s) written to {a.out}")
    return 0


def cmd_eval(a) -> int:
    cfg = benchmark_config(a)
    man = load_manifest(a.input)
    t0 = time.time()
    res = run_benchmark(man, cfg, progress=lambda vid: log.info("described %s", vid))
    written = res.write(a.out)
    for r in res.summary():
        print(f"{r.descriptor_name} {r.protocol}: miss {r.miss_mean:.4f} +/- {r.miss_std:.4f} at {r.reference_x:g}")
    print(f"wrote {len(written)} files to {a.out} in {time.time() - t0:.1f} s")
    return 0


def _curve_label(path: Path, multi_dir: bool) -> str:
    return f"{path.parent.name}/{path.stem}" if multi_dir else path.stem


def cmd_report(a) -> int:
    paths = [Path(p) for p in a.curves]
    multi_dir = len({p.parent for p in paths}) > 1
    curves = [(_curve_label(p, multi_dir), read_curve(p)) for p in paths]
    kinds = {c.kind for _, c in curves}
    if len(kinds) > 1:
        raise SystemExit("mespot: report: cannot mix per-window and per-video curves in one plot")
    ref = a.ref_x
    if ref is None:
        ref = REF_FPPW if kinds == {"per_window"} else REF_FPPV
    emit_det_plot(curves, a.out, ref, a.title)
    print(f"{'curve':40s} miss@{ref:g}")
    for label, c in sorted(curves, key=lambda lc: reference_point(lc[1], ref)):
        print(f"{label:40s} {reference_point(c, ref):.4f}")
    for s in a.summary or []:
        for r in read_summary(s):
            print(f"{r.descriptor_name:28s} {r.protocol:14s} x={r.reference_x:<5g} {r.miss_mean:.4f} +/- {r.miss_std:.4f}")
    print(f"plot written to {a.out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mespot", description="Sliding-window micro-expression spotting toolkit.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic corpus")
    p.add_argument("out", help="output directory")
    p.add_argument("--subjects", type=int, default=8)
    p.add_argument("--videos-per-subject", type=int, default=0,
                   help="videos per subject (default: 10,10,10,10,9,9,9,9 for 8 subjects, else 10)")
    p.add_argument("--T", type=int, default=80, help="frames per video")
    p.add_argument("--size", type=int, default=32, help="frame height and width")
    p.add_argument("--events", type=_pair(int), default=(1, 2), help="events per video LO,HI")
    p.add_argument("--event-length", type=_pair(int), default=(5, 17), help="event length range LO,HI")
    p.add_argument("--amplitude", type=_pair(float), default=(25.0, 45.0), help="event intensity range LO,HI")
    p.add_argument("--noise", type=float, default=2.0, help="per-pixel gaussian noise sigma")
    p.add_argument("--drift", type=float, default=4.0, help="global illumination drift amplitude")
    p.add_argument("--empty", type=int, default=5, help="videos without any event")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default="synthetic")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sample", help="enumerate and label windows")
    _add_input(p)
    p.add_argument("--out", required=True, help="samples CSV")
    _add_scale_flags(p)
    _add_window_flags(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("extract", help="describe windows into a feature cache")
    _add_input(p)
    p.add_argument("--out", required=True, help="feature cache file")
    p.add_argument("--samples-out", help="also write the matching samples CSV")
    _add_scale_flags(p)
    _add_window_flags(p)
    _add_descriptor_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit a linear model")
    p.add_argument("--features", required=True, help="feature cache from extract")
    p.add_argument("--samples", required=True, help="samples CSV listing the cache rows in order")
    p.add_argument("--out", required=True, help="model file")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("spot", help="spot events in one video")
    p.add_argument("model", help="model file from train")
    p.add_argument("video", help=".y8v file or frame directory")
    p.add_argument("--out", required=True, help="detections CSV")
    p.add_argument("--id", default="", help="video id written to the CSV (default: file stem)")
    p.add_argument("--fps", type=float, default=25.0)
    p.add_argument("--threshold", type=float, default=0.0, help="minimum window score")
    p.add_argument("--nms-iou", type=float, default=0.3, help="temporal NMS overlap threshold")
    _add_scale_flags(p)
    _add_window_flags(p)
    _add_descriptor_flags(p)
    p.set_defaults(func=cmd_spot)

    p = sub.add_parser("eval", help="run a full evaluation protocol")
    p.add_argument("input", help="manifest CSV")
    p.add_argument("--out", required=True, help="output directory for curves and summary")
    _add_scale_flags(p)
    _add_window_flags(p)
    _add_descriptor_flags(p)
    _add_train_flags(p)
    _add_eval_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="plot DET curves and tabulate summaries")
    p.add_argument("curves", nargs="+", help="curve CSVs written by eval")
    p.add_argument("--out", required=True, help="SVG file")
    p.add_argument("--summary", action="append", help="summary CSV to tabulate (repeatable)")
    p.add_argument("--ref-x", type=float, help="reference false-positive rate for the legend")
    p.add_argument("--title", default="")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return a.func(a)
    except MespotError as exc:
        print(f"mespot: {exc.module}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"mespot: {a.command}: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 1
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
