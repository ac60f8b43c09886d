"""Benchmark protocols and measurements.

Two protocols split the data: random splits at a fixed training fraction,
repeated with different seeds, and leave-one-subject-out.  Two measurements
trace DET curves: per-window (classifier level, miss rate against false
positives per window) and per-video (spotting level, after NMS, miss rate
against false positives per video).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence, TypeVar

import numpy as np

from .core import DatasetManifest, Interval, VideoRecord
from .errors import EmptyCurve, EmptyDataset, EmptyInput, ParseError, SingleClass, SingleSubject, TooFewSamples
from .sampling import LabeledSample, iou
from .spotting import Detection, temporal_nms

SPLIT_FRACTIONS = (0.3, 0.5, 0.7)
DEFAULT_REPETITIONS = 10
REF_FPPW = 0.4
REF_FPPV = 1.0
CURVE_FIELDS = ("kind", "threshold", "fp_rate", "miss_rate")
SUMMARY_FIELDS = ("descriptor_name", "protocol", "reference_x", "miss_mean", "miss_std")

T = TypeVar("T")


@dataclass(frozen=True)
class SplitSpec:
    protocol: str = "loso"  # "loso" or "random"
    train_fraction: float = 0.7
    repetitions: int = DEFAULT_REPETITIONS
    seed: int = 0

    def __post_init__(self):
        if self.protocol not in ("loso", "random"):
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train fraction must be in (0, 1), got {self.train_fraction}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    @property
    def tag(self) -> str:
        if self.protocol == "loso":
            return "loso"
        return f"random{round(self.train_fraction * 100):02d}"


@dataclass(frozen=True)
class DetCurve:
    points: tuple[tuple[float, float], ...]
    kind: str = "per_window"
    thresholds: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "points", tuple((float(a), float(b)) for a, b in self.points))
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if self.thresholds and len(self.thresholds) != len(self.points):
            raise ValueError("one threshold per point required")

    @property
    def fp_rates(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def miss_rates(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


@dataclass
class FoldCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    n_videos: int = 0

    def __add__(self, other: "FoldCounts") -> "FoldCounts":
        return FoldCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.n_videos + other.n_videos)


@dataclass
class Fold:
    held_out: str
    train: list[VideoRecord]
    test: list[VideoRecord]


@dataclass
class ScoredVideo:
    """Every scanning window of one test video, scored, in the source time base."""

    video_id: str
    candidates: list[Detection]
    ground_truths: list[Interval] = field(default_factory=list)


# ---------------------------------------------------------------------------
# protocols


def _n_train(n: int, fraction: float) -> int:
    # exact decimal arithmetic so that e.g. 0.7 * 30 gives 21, not 20
    return math.floor(Fraction(repr(float(fraction))) * n)


def split_random(samples: Sequence[T], train_fraction: float, seed: int = 0) -> tuple[list[T], list[T]]:
    """Seeded shuffle; the first floor(fraction * N) items train, the rest test.

    Labelled samples must contain both classes.  Both partitions keep the
    input order.
    """
    n = len(samples)
    if n < 2:
        raise TooFewSamples(f"need at least 2 samples to split, got {n}")
    if not 0 < train_fraction < 1:
        raise ValueError(f"train fraction must be in (0, 1), got {train_fraction}")
    if isinstance(samples[0], LabeledSample) and len({s.label for s in samples}) < 2:
        raise TooFewSamples("samples contain a single class")
    perm = np.random.default_rng(seed).permutation(n)
    k = _n_train(n, train_fraction)
    train_idx = np.sort(perm[:k])
    test_idx = np.sort(perm[k:])
    return [samples[i] for i in train_idx], [samples[i] for i in test_idx]


def split_loso(manifest: DatasetManifest) -> list[Fold]:
    subjects = manifest.subjects()
    if len(subjects) < 2:
        raise SingleSubject("leave-one-subject-out needs at least 2 subjects")
    folds = []
    for subj in subjects:
        test = [r for r in manifest.records if r.subject_id == subj]
        train = [r for r in manifest.records if r.subject_id != subj]
        folds.append(Fold(subj, train, test))
    return folds


# ---------------------------------------------------------------------------
# measurements


def det_per_window(scores, labels, denominator: str = "neg") -> DetCurve:
    """Sweep the threshold over every distinct score (plus +inf).

    miss = positives scored below the threshold / positives;
    fppw = negatives scored at or above it / negatives (or / all windows).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    pos = np.sort(s[y > 0])
    neg = np.sort(s[y <= 0])
    if pos.size == 0 or neg.size == 0:
        raise SingleClass("per-window DET needs both positive and negative windows")
    if denominator not in ("neg", "all"):
        raise ValueError(f"unknown FPPW denominator {denominator!r}")
    fp_den = neg.size if denominator == "neg" else s.size
    thresholds = np.concatenate([[np.inf], np.unique(s)[::-1]])
    # counts of scores >= threshold
    tp = pos.size - np.searchsorted(pos, thresholds, side="left")
    fp = neg.size - np.searchsorted(neg, thresholds, side="left")
    miss = (pos.size - tp) / pos.size
    fppw = fp / fp_den
    return DetCurve(tuple(zip(fppw, miss)), "per_window", tuple(thresholds))


def match_detections(dets: Sequence[Detection], gts: Sequence[Interval], epsilon: float = 0.5) -> FoldCounts:
    """Greedy one-to-one matching in descending score order."""
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    matched = [False] * len(gts)
    tp = fp = 0
    for d in sorted(dets, key=lambda d: (-d.score, d.interval.onset, d.scale_factor)):
        best, best_j = -1.0, -1
        for j, g in enumerate(gts):
            if not matched[j]:
                o = iou(d.interval, g)
                if o > best:
                    best, best_j = o, j
        if best_j >= 0 and best >= epsilon:
            matched[best_j] = True
            tp += 1
        else:
            fp += 1
    return FoldCounts(tp, fp, len(gts) - tp, 1)


def aggregate_overall(folds: Iterable[FoldCounts], N: int, N_plus: int) -> tuple[float, float]:
    """Overall FPPV = sum FP / N and miss rate = 1 - sum TP / N_plus."""
    if N <= 0 or N_plus <= 0:
        raise EmptyDataset(f"need N > 0 and N_plus > 0, got N={N}, N_plus={N_plus}")
    total = sum(folds, FoldCounts())
    return total.fp / N, 1.0 - total.tp / N_plus


def threshold_ladder(scores, n: int = 41) -> np.ndarray:
    """+inf followed by ``n`` thresholds descending linearly over the score range."""
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        return np.array([np.inf])
    return np.concatenate([[np.inf], np.linspace(s.max(), s.min(), n)])


def det_per_video(
    folds: Sequence[Sequence[ScoredVideo]],
    ladders,
    N: int | None = None,
    N_plus: int | None = None,
    epsilon: float = 0.5,
    nms_iou: float = 0.3,
) -> DetCurve:
    """Overall per-video DET curve.

    ``ladders`` holds one descending threshold ladder per fold (all of equal
    length), or a single ladder shared by every fold.  Point k aggregates,
    over all folds, the videos spotted at each fold's k-th threshold.
    """
    ladders = np.asarray(ladders, dtype=np.float64)
    if ladders.ndim == 1:
        ladders = np.tile(ladders, (len(folds), 1))
    if ladders.shape[0] != len(folds):
        raise ValueError("one threshold ladder per fold required")
    videos = [v for fold in folds for v in fold]
    N = len(videos) if N is None else N
    N_plus = sum(len(v.ground_truths) for v in videos) if N_plus is None else N_plus
    points = []
    for k in range(ladders.shape[1]):
        counts = []
        for fold, ladder in zip(folds, ladders):
            thr = ladder[k]
            for v in fold:
                kept = temporal_nms([d for d in v.candidates if d.score >= thr], nms_iou)
                counts.append(match_detections(kept, v.ground_truths, epsilon))
        points.append(aggregate_overall(counts, N, N_plus))
    thresholds = ladders[0] if len(folds) == 1 else np.full(ladders.shape[1], np.nan)
    order = sorted(range(len(points)), key=lambda i: points[i][0])
    return DetCurve(tuple(points[i] for i in order), "per_video", tuple(thresholds[i] for i in order))


def reference_point(curve: DetCurve, x: float) -> float:
    """Miss rate at false-positive rate ``x`` by linear interpolation, clamped at the ends.

    Points sharing a false-positive rate collapse to their lowest miss rate.
    """
    if not curve.points:
        raise EmptyCurve("curve has no points")
    fps = curve.fp_rates
    miss = curve.miss_rates
    ux = np.unique(fps)
    um = np.array([miss[fps == u].min() for u in ux])
    return float(np.interp(x, ux, um))


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise EmptyInput("mean_std of an empty list")
    return float(v.mean()), float(v.std())


def mean_curve(curves: Sequence[DetCurve], grid) -> DetCurve:
    """Vertical average: mean miss rate of ``curves`` at each false-positive rate of ``grid``."""
    if not curves:
        raise EmptyCurve("no curves to average")
    grid = np.asarray(grid, dtype=np.float64)
    miss = [np.mean([reference_point(c, x) for c in curves]) for x in grid]
    return DetCurve(tuple(zip(grid, miss)), curves[0].kind, tuple(np.full(grid.size, np.nan)))


# ---------------------------------------------------------------------------
# CSV


def write_curve(curve: DetCurve, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    thr = curve.thresholds or (math.nan,) * len(curve.points)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(CURVE_FIELDS)
        for t, (fp, miss) in zip(thr, curve.points):
            wr.writerow([curve.kind, repr(t), repr(fp), repr(miss)])
    return path


def read_curve(path) -> DetCurve:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != CURVE_FIELDS:
            raise ParseError(f"{path}: unexpected header {rd.fieldnames}")
        rows = list(rd)
    if not rows:
        raise EmptyCurve(f"{path}: no points")
    kinds = {r["kind"] for r in rows}
    if len(kinds) != 1:
        raise ParseError(f"{path}: mixed curve kinds {sorted(kinds)}")
    try:
        pts = tuple((float(r["fp_rate"]), float(r["miss_rate"])) for r in rows)
        thr = tuple(float(r["threshold"]) for r in rows)
    except ValueError as exc:
        raise ParseError(f"{path}: bad number") from exc
    return DetCurve(pts, kinds.pop(), thr)


@dataclass(frozen=True)
class SummaryRow:
    descriptor_name: str
    protocol: str
    reference_x: float
    miss_mean: float
    miss_std: float


def write_summary(rows: Iterable[SummaryRow], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(SUMMARY_FIELDS)
        for r in rows:
            wr.writerow([r.descriptor_name, r.protocol, repr(r.reference_x), repr(r.miss_mean), repr(r.miss_std)])
    return path


def read_summary(path) -> list[SummaryRow]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != SUMMARY_FIELDS:
            raise ParseError(f"{path}: unexpected header {rd.fieldnames}")
        try:
            return [
                SummaryRow(r["descriptor_name"], r["protocol"], float(r["reference_x"]), float(r["miss_mean"]), float(r["miss_std"]))
                for r in rd
            ]
        except ValueError as exc:
            raise ParseError(f"{path}: bad number") from exc
