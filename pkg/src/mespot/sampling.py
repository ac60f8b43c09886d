"""Sliding-window enumeration, interval IoU and window labelling."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .core import Interval
from .errors import ParseError, VideoTooShort, WindowTooLong

DEFAULT_EPSILON = 0.5
DEFAULT_L = 9
SAMPLE_FIELDS = ("video_id", "scale", "start", "end", "label", "best_iou")


@dataclass(frozen=True)
class Window:
    video_id: str
    scale_factor: float
    interval: Interval

    @property
    def L(self) -> int:
        return self.interval.length


@dataclass(frozen=True)
class LabeledSample:
    window: Window
    label: int  # +1 positive, -1 negative
    best_iou: float

    @property
    def positive(self) -> bool:
        return self.label > 0


def n_windows(T: int, L: int, s: int) -> int:
    """Number of windows of length ``L`` and stride ``s`` in ``T`` frames (0 if none fit)."""
    return 0 if T < L else (T - L) // s + 1


def enumerate_windows(T: int, L: int, s: int = 1) -> list[Interval]:
    if L < 1:
        raise ValueError(f"window length must be >= 1, got {L}")
    if s < 1:
        raise ValueError(f"stride must be >= 1, got {s}")
    if L > T:
        raise WindowTooLong(f"window of {L} frames does not fit in {T} frames")
    return [Interval(i * s, i * s + L - 1) for i in range(n_windows(T, L, s))]


def iou(a: Interval, b: Interval) -> float:
    """Temporal IoU counted in whole frames."""
    inter = min(a.offset, b.offset) - max(a.onset, b.onset) + 1
    if inter <= 0:
        return 0.0
    return inter / (a.length + b.length - inter)


def best_iou(iv: Interval, gts: Iterable[Interval]) -> float:
    return max((iou(iv, g) for g in gts), default=0.0)


def label_window(w: Window, gts: Sequence[Interval], epsilon: float = DEFAULT_EPSILON) -> LabeledSample:
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    b = best_iou(w.interval, gts)
    return LabeledSample(w, 1 if b >= epsilon else -1, b)


def normalize_ground_truth(gt: Interval, L: int, T: int) -> Interval:
    """Length-``L`` interval centred on the midpoint of ``gt``, shifted to fit in ``[0, T-1]``."""
    if T < L:
        raise VideoTooShort(f"video of {T} frames is shorter than window length {L}")
    if gt.offset > T - 1:
        raise ValueError(f"ground truth {gt} outside video of {T} frames")
    mid = (gt.onset + gt.offset) // 2
    start = mid - (L - 1) // 2
    start = min(max(start, 0), T - L)
    return Interval(start, start + L - 1)


def write_samples(samples: Iterable[LabeledSample], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(SAMPLE_FIELDS)
        for s in samples:
            iv = s.window.interval
            wr.writerow([s.window.video_id, repr(s.window.scale_factor), iv.onset, iv.offset, s.label, repr(s.best_iou)])
    return path


def read_samples(path) -> list[LabeledSample]:
    out = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != SAMPLE_FIELDS:
            raise ParseError(f"{path}: unexpected header {rd.fieldnames}")
        for row in rd:
            try:
                w = Window(row["video_id"], float(row["scale"]), Interval(int(row["start"]), int(row["end"])))
                out.append(LabeledSample(w, int(row["label"]), float(row["best_iou"])))
            except ValueError as exc:
                raise ParseError(f"{path}: bad row {row}") from exc
    return out
