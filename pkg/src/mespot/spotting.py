"""Multi-scale scanning and temporal non-maximum suppression."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .classifier import LinearModel, score
from .core import Interval, VideoVolume
from .descriptors import DescriptorConfig, window_features
from .errors import DigestMismatch, NoValidScale, ParseError
from .sampling import enumerate_windows, iou, n_windows
from .temporal import ScaledVolume, ScaleSpec, build_pyramid, map_to_original

DEFAULT_NMS_IOU = 0.3
DETECTION_FIELDS = ("video_id", "onset", "offset", "score", "scale")


@dataclass(frozen=True)
class Detection:
    interval: Interval
    score: float
    scale_factor: float = 1.0


@dataclass
class LevelWindows:
    """All scanning windows of one pyramid level."""

    level: ScaledVolume
    intervals: list[Interval]  # scaled time base
    original: list[Interval]  # source time base
    features: np.ndarray


def pyramid_windows(
    v: VideoVolume | Sequence[ScaledVolume],
    dcfg: DescriptorConfig,
    scales: ScaleSpec,
    L: int,
    s: int,
    dtype=np.float64,
) -> Iterator[LevelWindows]:
    """Enumerate and describe the windows of every level long enough to hold one."""
    levels = build_pyramid(v, scales) if isinstance(v, VideoVolume) else v
    for lv in levels:
        if n_windows(lv.length, L, s) == 0:
            continue
        ivs = enumerate_windows(lv.length, L, s)
        feats = window_features(lv.volume, dcfg, L, [iv.onset for iv in ivs]).astype(dtype, copy=False)
        orig = [map_to_original(iv, lv.source_len, lv.length) for iv in ivs]
        yield LevelWindows(lv, ivs, orig, feats)


def _check_digest(m: LinearModel, dcfg: DescriptorConfig) -> None:
    if m.feature_config_digest and m.feature_config_digest != dcfg.digest:
        raise DigestMismatch(
            f"model was trained on features {m.feature_config_digest}, scanning with {dcfg.digest} ({dcfg.name})"
        )
    if m.dim != dcfg.dim:
        raise DigestMismatch(f"model dim {m.dim} != descriptor dim {dcfg.dim}")


def scan(
    v: VideoVolume,
    m: LinearModel,
    dcfg: DescriptorConfig,
    scales: ScaleSpec,
    L: int = 9,
    s: int = 1,
    score_threshold: float = 0.0,
) -> list[Detection]:
    """Score every window at every scale and keep those at or above ``score_threshold``."""
    _check_digest(m, dcfg)
    dets = []
    any_level = False
    for lw in pyramid_windows(v, dcfg, scales, L, s):
        any_level = True
        sc = score(m, lw.features)
        for iv, val in zip(lw.original, np.atleast_1d(sc)):
            if val >= score_threshold:
                dets.append(Detection(iv, float(val), lw.level.factor))
    if not any_level:
        raise NoValidScale(f"no pyramid level of a {v.T}-frame video holds a {L}-frame window")
    return dets


def _priority(d: Detection):
    return (-d.score, d.interval.onset, d.scale_factor)


def temporal_nms(dets: Iterable[Detection], overlap_thresh: float = DEFAULT_NMS_IOU) -> list[Detection]:
    """Greedy suppression: keep the best remaining detection, drop everything overlapping it."""
    if not 0 < overlap_thresh <= 1:
        raise ValueError(f"NMS overlap threshold must be in (0, 1], got {overlap_thresh}")
    order = sorted(dets, key=_priority)
    if not order:
        return []
    on = np.array([d.interval.onset for d in order])
    off = np.array([d.interval.offset for d in order])
    length = off - on + 1
    alive = np.ones(len(order), dtype=bool)
    keep = []
    for i in range(len(order)):
        if not alive[i]:
            continue
        keep.append(order[i])
        inter = np.minimum(off, off[i]) - np.maximum(on, on[i]) + 1
        inter = np.maximum(inter, 0)
        ov = inter / (length + length[i] - inter)
        alive &= ov < overlap_thresh
    return sorted(keep, key=lambda d: (d.interval.onset, d.interval.offset, -d.score, d.scale_factor))


def spot(
    v: VideoVolume,
    m: LinearModel,
    dcfg: DescriptorConfig,
    scales: ScaleSpec,
    L: int = 9,
    s: int = 1,
    score_threshold: float = 0.0,
    overlap_thresh: float = DEFAULT_NMS_IOU,
) -> list[Detection]:
    return temporal_nms(scan(v, m, dcfg, scales, L, s, score_threshold), overlap_thresh)


def max_pairwise_iou(dets: Sequence[Detection]) -> float:
    best = 0.0
    for i, a in enumerate(dets):
        for b in dets[i + 1 :]:
            best = max(best, iou(a.interval, b.interval))
    return best


def write_detections(rows: Iterable[tuple[str, Detection]], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(DETECTION_FIELDS)
        for vid, d in rows:
            wr.writerow([vid, d.interval.onset, d.interval.offset, repr(d.score), repr(d.scale_factor)])
    return path


def read_detections(path) -> list[tuple[str, Detection]]:
    out = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != DETECTION_FIELDS:
            raise ParseError(f"{path}: unexpected header {rd.fieldnames}")
        for row in rd:
            try:
                iv = Interval(int(row["onset"]), int(row["offset"]))
                out.append((row["video_id"], Detection(iv, float(row["score"]), float(row["scale"]))))
            except ValueError as exc:
                raise ParseError(f"{path}: bad row {row}") from exc
    return out
