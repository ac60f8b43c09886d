"""End-to-end benchmark runs over a dataset manifest.

Every video is described once: all windows of all pyramid levels, their
features, labels, and their intervals in both time bases.  Protocol folds
then only select rows for training and score the held-out rows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .classifier import LinearModel, TrainConfig, score, train
from .core import DatasetManifest, Interval, VideoRecord, VideoVolume
from .descriptors import DescriptorConfig
from .errors import SingleClass, TooFewSamples
from .evaluation import (
    REF_FPPV,
    REF_FPPW,
    DetCurve,
    ScoredVideo,
    SplitSpec,
    SummaryRow,
    det_per_video,
    det_per_window,
    mean_curve,
    mean_std,
    reference_point,
    split_loso,
    split_random,
    threshold_ladder,
    write_curve,
    write_summary,
)
from .sampling import DEFAULT_EPSILON, DEFAULT_L, LabeledSample, Window, enumerate_windows, n_windows, normalize_ground_truth
from .spotting import DEFAULT_NMS_IOU, Detection, pyramid_windows
from .temporal import ScaleSpec, map_to_scaled, scaled_length

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchmarkConfig:
    descriptor: DescriptorConfig = DescriptorConfig()
    scales: ScaleSpec = ScaleSpec()
    L: int = DEFAULT_L
    stride: int = 1
    epsilon: float = DEFAULT_EPSILON  # window labelling
    match_epsilon: float = DEFAULT_EPSILON  # detection to ground-truth matching
    normalize_gt: bool = True
    train: TrainConfig = TrainConfig()
    train_scales: str = "all"  # "all" or "identity"
    nms_iou: float = DEFAULT_NMS_IOU
    split: SplitSpec = SplitSpec()
    fppw_denominator: str = "neg"
    ref_fppw: float = REF_FPPW
    ref_fppv: float = REF_FPPV
    n_thresholds: int = 41


@dataclass
class VideoSamples:
    record: VideoRecord
    n_frames: int
    ground_truths: list[Interval]  # source time base, normalized when configured
    features: np.ndarray  # (n_windows, dim) float32
    labels: np.ndarray  # +1 / -1
    best_iou: np.ndarray
    scales: np.ndarray
    scaled: list[Interval]
    original: list[Interval]

    def __len__(self):
        return self.labels.size


def best_iou_matrix(onsets, offsets, gts: Sequence[Interval]) -> np.ndarray:
    """Best IoU of each interval ``[onsets[i], offsets[i]]`` against ``gts`` (0 when empty)."""
    on = np.asarray(onsets)[:, None]
    off = np.asarray(offsets)[:, None]
    if not gts:
        return np.zeros(on.shape[0])
    g_on = np.array([g.onset for g in gts])[None, :]
    g_off = np.array([g.offset for g in gts])[None, :]
    inter = np.maximum(np.minimum(off, g_off) - np.maximum(on, g_on) + 1, 0)
    union = (off - on + 1) + (g_off - g_on + 1) - inter
    return (inter / union).max(axis=1)


def prepare_ground_truths(gts: Sequence[Interval], n_frames: int, cfg: BenchmarkConfig) -> list[Interval]:
    if not cfg.normalize_gt:
        return list(gts)
    return [normalize_ground_truth(g, cfg.L, n_frames) for g in gts]


def enumerate_samples(record: VideoRecord, n_frames: int, cfg: BenchmarkConfig) -> list[LabeledSample]:
    """Labeled windows of every pyramid level, in the row order used by :func:`prepare_video`.

    Only lengths are needed, so no frame is resampled.
    """
    gts = prepare_ground_truths(record.ground_truths, n_frames, cfg)
    out = []
    for f in cfg.scales.factors:
        length = scaled_length(n_frames, f)
        if n_windows(length, cfg.L, cfg.stride) == 0:
            continue
        level_gts = [map_to_scaled(g, n_frames, length) for g in gts]
        ivs = enumerate_windows(length, cfg.L, cfg.stride)
        b = best_iou_matrix([iv.onset for iv in ivs], [iv.offset for iv in ivs], level_gts)
        for iv, val in zip(ivs, b):
            out.append(LabeledSample(Window(record.id, f, iv), 1 if val >= cfg.epsilon else -1, float(val)))
    return out


def prepare_video(record: VideoRecord, volume: VideoVolume, cfg: BenchmarkConfig) -> VideoSamples:
    gts = prepare_ground_truths(record.ground_truths, volume.T, cfg)
    feats, labels, ious, scales, scaled, original = [], [], [], [], [], []
    for lw in pyramid_windows(volume, cfg.descriptor, cfg.scales, cfg.L, cfg.stride, dtype=np.float32):
        lv = lw.level
        level_gts = [map_to_scaled(g, lv.source_len, lv.length) for g in gts]
        b = best_iou_matrix([iv.onset for iv in lw.intervals], [iv.offset for iv in lw.intervals], level_gts)
        feats.append(lw.features)
        ious.append(b)
        labels.append(np.where(b >= cfg.epsilon, 1, -1))
        scales.append(np.full(b.size, lv.factor))
        scaled += lw.intervals
        original += lw.original
    if not feats:
        raise TooFewSamples(f"{record.id}: no pyramid level holds a {cfg.L}-frame window")
    return VideoSamples(
        record,
        volume.T,
        gts,
        np.concatenate(feats),
        np.concatenate(labels),
        np.concatenate(ious),
        np.concatenate(scales),
        scaled,
        original,
    )


def prepare_dataset(
    manifest: DatasetManifest, cfg: BenchmarkConfig, progress: Callable[[str], None] | None = None
) -> list[VideoSamples]:
    out = []
    for rec in manifest.records:
        out.append(prepare_video(rec, manifest.load(rec), cfg))
        if progress:
            progress(rec.id)
    return out


def _train_rows(videos: Sequence[VideoSamples], cfg: BenchmarkConfig) -> tuple[np.ndarray, np.ndarray]:
    X, y = [], []
    for v in videos:
        rows = slice(None) if cfg.train_scales == "all" else v.scales == 1.0
        X.append(v.features[rows])
        y.append(v.labels[rows])
    return np.concatenate(X), np.concatenate(y)


def fit(videos: Sequence[VideoSamples], cfg: BenchmarkConfig) -> LinearModel:
    X, y = _train_rows(videos, cfg)
    return train(X, y, cfg.train, digest=cfg.descriptor.digest)


def scored_video(v: VideoSamples, m: LinearModel) -> ScoredVideo:
    sc = score(m, v.features)
    cands = [Detection(iv, float(s), float(f)) for iv, s, f in zip(v.original, sc, v.scales)]
    return ScoredVideo(v.record.id, cands, list(v.ground_truths))


@dataclass
class BenchmarkResult:
    descriptor_name: str
    protocol: str
    per_window: list[tuple[str, DetCurve]] = field(default_factory=list)
    per_video: list[tuple[str, DetCurve]] = field(default_factory=list)
    fppw_refs: list[float] = field(default_factory=list)
    fppv_refs: list[float] = field(default_factory=list)
    cfg: BenchmarkConfig | None = None

    def summary(self) -> list[SummaryRow]:
        rows = []
        if self.fppw_refs:
            m, s = mean_std(self.fppw_refs)
            rows.append(SummaryRow(self.descriptor_name, f"{self.protocol}-fppw", self.cfg.ref_fppw, m, s))
        if self.fppv_refs:
            m, s = mean_std(self.fppv_refs)
            rows.append(SummaryRow(self.descriptor_name, f"{self.protocol}-fppv", self.cfg.ref_fppv, m, s))
        return rows

    def mean_curves(self, n: int = 101) -> dict[str, DetCurve]:
        out = {}
        if self.per_window:
            out["per_window"] = mean_curve([c for _, c in self.per_window], np.linspace(0, 1, n))
        if self.per_video:
            hi = max(c.fp_rates.max() for _, c in self.per_video)
            out["per_video"] = mean_curve([c for _, c in self.per_video], np.linspace(0, hi, n))
        return out

    def write(self, out_dir) -> list[Path]:
        out_dir = Path(out_dir)
        written = []
        for kind, curves in (("per_window", self.per_window), ("per_video", self.per_video)):
            for tag, c in curves:
                written.append(write_curve(c, out_dir / f"{kind}_{tag}.csv"))
        for kind, c in self.mean_curves().items():
            written.append(write_curve(c, out_dir / f"{kind}_mean.csv"))
        written.append(write_summary(self.summary(), out_dir / "summary.csv"))
        return written


def _per_window_point(tag: str, scores, labels, cfg: BenchmarkConfig, res: BenchmarkResult) -> None:
    try:
        curve = det_per_window(scores, labels, cfg.fppw_denominator)
    except SingleClass:
        log.info("%s: test windows hold a single class, no per-window curve", tag)
        return
    res.per_window.append((tag, curve))
    res.fppw_refs.append(reference_point(curve, cfg.ref_fppw))


def run_loso(manifest: DatasetManifest, videos: Sequence[VideoSamples], cfg: BenchmarkConfig) -> BenchmarkResult:
    by_id = {v.record.id: v for v in videos}
    res = BenchmarkResult(cfg.descriptor.name, "loso", cfg=cfg)
    scored_folds, ladders = [], []
    for fold in split_loso(manifest):
        train_v = [by_id[r.id] for r in fold.train]
        test_v = [by_id[r.id] for r in fold.test]
        m = fit(train_v, cfg)
        scored = [scored_video(v, m) for v in test_v]
        scores = np.concatenate([[d.score for d in s.candidates] for s in scored])
        labels = np.concatenate([v.labels for v in test_v])
        _per_window_point(f"loso_{fold.held_out}", scores, labels, cfg, res)
        scored_folds.append(scored)
        ladders.append(threshold_ladder(scores, cfg.n_thresholds))
        log.info("fold %s: trained on %d videos", fold.held_out, len(train_v))
    n_plus = sum(len(v.ground_truths) for v in videos)
    curve = det_per_video(scored_folds, ladders, len(videos), n_plus, cfg.match_epsilon, cfg.nms_iou)
    res.per_video.append(("overall", curve))
    res.fppv_refs.append(reference_point(curve, cfg.ref_fppv))
    return res


def run_random(videos: Sequence[VideoSamples], cfg: BenchmarkConfig) -> BenchmarkResult:
    sp = cfg.split
    res = BenchmarkResult(cfg.descriptor.name, sp.tag, cfg=cfg)
    X_all = np.concatenate([v.features for v in videos])
    y_all = np.concatenate([v.labels for v in videos])
    if cfg.train_scales == "identity":
        keep = np.concatenate([v.scales == 1.0 for v in videos])
    else:
        keep = np.ones(y_all.size, dtype=bool)
    rows = np.arange(y_all.size)
    for rep in range(sp.repetitions):
        seed = sp.seed + rep
        tag = f"rep{rep:02d}"

        # per-window: the windows themselves are split
        tr, te = split_random(list(rows), sp.train_fraction, seed)
        tr, te = np.array(tr), np.array(te)
        tr = tr[keep[tr]]
        try:
            m = train(X_all[tr], y_all[tr], cfg.train, digest=cfg.descriptor.digest)
        except SingleClass:
            log.info("%s: training windows hold a single class, skipped", tag)
        else:
            _per_window_point(tag, score(m, X_all[te]), y_all[te], cfg, res)

        # per-video: spotting runs on whole videos, so videos are split
        train_v, test_v = split_random(list(videos), sp.train_fraction, seed)
        n_plus = sum(len(v.ground_truths) for v in test_v)
        if n_plus == 0:
            log.info("%s: no ground truth among test videos, per-video point skipped", tag)
            continue
        try:
            m = fit(train_v, cfg)
        except SingleClass:
            log.info("%s: training videos hold a single class, skipped", tag)
            continue
        scored = [scored_video(v, m) for v in test_v]
        scores = np.concatenate([[d.score for d in s.candidates] for s in scored])
        curve = det_per_video([scored], [threshold_ladder(scores, cfg.n_thresholds)], len(test_v), n_plus,
                              cfg.match_epsilon, cfg.nms_iou)
        res.per_video.append((tag, curve))
        res.fppv_refs.append(reference_point(curve, cfg.ref_fppv))
    return res


def run_benchmark(
    manifest: DatasetManifest,
    cfg: BenchmarkConfig,
    videos: Sequence[VideoSamples] | None = None,
    progress: Callable[[str], None] | None = None,
) -> BenchmarkResult:
    if videos is None:
        videos = prepare_dataset(manifest, cfg, progress)
    if cfg.split.protocol == "loso":
        return run_loso(manifest, videos, cfg)
    return run_random(videos, cfg)
