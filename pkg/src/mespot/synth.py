"""Synthetic spotting corpus.

Each subject gets a fixed smooth "face" texture.  A video of that subject is
the texture plus per-frame Gaussian noise, a slow global sinusoidal intensity
drift (an illumination confounder) and a few injected events: a localized
blob whose intensity rises and falls with a triangular onset-apex-offset
profile.  Ground truths are the exact event frame ranges.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .core import DatasetManifest, Interval, VideoRecord, VideoVolume, save_manifest, save_volume

SMIC_LIKE_COUNTS = (10, 10, 10, 10, 9, 9, 9, 9)  # 76 videos over 8 subjects


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 8
    videos_per_subject: int | tuple[int, ...] = SMIC_LIKE_COUNTS
    T: int = 80
    H: int = 32
    W: int = 32
    events_per_video: tuple[int, int] = (1, 2)
    event_length: tuple[int, int] = (5, 17)
    event_amplitude: tuple[float, float] = (25.0, 45.0)
    noise_sigma: float = 2.0
    drift_amplitude: float = 4.0
    n_empty_videos: int = 5
    fps: float = 25.0
    seed: int = 0
    name: str = "synthetic"

    def __post_init__(self):
        counts = self.counts
        if self.n_subjects < 1 or len(counts) != self.n_subjects or min(counts) < 1:
            raise ValueError("videos_per_subject must give a positive count for every subject")
        lo, hi = self.event_length
        if lo < 2 or hi < lo or hi > self.T // 2:
            raise ValueError(f"event lengths must lie in [2, T/2], got {self.event_length}")
        a0, a1 = self.event_amplitude
        if not (0 < a0 <= a1 <= 128):
            raise ValueError(f"event amplitude must lie in (0, 128], got {self.event_amplitude}")
        e0, e1 = self.events_per_video
        if e0 < 0 or e1 < e0:
            raise ValueError(f"bad events_per_video {self.events_per_video}")
        if e1 * (hi + 4) > self.T:
            raise ValueError("too many or too long events for the video length")
        if self.n_empty_videos > sum(counts):
            raise ValueError("more empty videos than videos")

    @property
    def counts(self) -> tuple[int, ...]:
        v = self.videos_per_subject
        return (v,) * self.n_subjects if isinstance(v, int) else tuple(v)


def subject_texture(cfg: SynthConfig, subject: int) -> np.ndarray:
    rng = np.random.default_rng([cfg.seed, subject, 0xFACE])
    tex = gaussian_filter(rng.normal(size=(cfg.H, cfg.W)), sigma=1.5)
    tex /= tex.std() + 1e-12
    yy, xx = np.mgrid[: cfg.H, : cfg.W]
    # darker elliptical border so frames look roughly like a cropped face
    ell = ((yy - cfg.H / 2) / (0.55 * cfg.H)) ** 2 + ((xx - cfg.W / 2) / (0.45 * cfg.W)) ** 2
    return 120.0 + 18.0 * tex - 30.0 * np.clip(ell - 0.6, 0, None)


def _sample_length(rng: np.random.Generator, lo: int, hi: int) -> int:
    mode = min(max(9, lo), hi)
    if lo == hi:
        return lo
    return int(np.clip(np.rint(rng.triangular(lo - 0.5, mode, hi + 0.5)), lo, hi))


def _place_events(rng, cfg: SynthConfig, n_events: int) -> list[Interval]:
    out = []
    seg = cfg.T // max(n_events, 1)
    for k in range(n_events):
        length = _sample_length(rng, *cfg.event_length)
        lo = k * seg + 2
        hi = (k + 1) * seg - length - 2
        onset = int(rng.integers(lo, max(lo, hi) + 1))
        out.append(Interval(onset, onset + length - 1))
    return out


def render_video(cfg: SynthConfig, subject: int, index: int, events: int | None = None):
    """Frames and ground truths of one video; ``events`` overrides the sampled event count."""
    rng = np.random.default_rng([cfg.seed, subject, index])
    n_events = int(rng.integers(cfg.events_per_video[0], cfg.events_per_video[1] + 1))
    if events is not None:
        n_events = events
    gts = _place_events(rng, cfg, n_events)

    t = np.arange(cfg.T)
    period = rng.uniform(cfg.T / 2, 2 * cfg.T)
    drift = cfg.drift_amplitude * np.sin(2 * np.pi * t / period + rng.uniform(0, 2 * np.pi))
    vol = subject_texture(cfg, subject)[None] + drift[:, None, None]
    vol = vol + rng.normal(0.0, cfg.noise_sigma, size=(cfg.T, cfg.H, cfg.W))

    yy, xx = np.mgrid[: cfg.H, : cfg.W]
    for gt in gts:
        amp = rng.uniform(*cfg.event_amplitude) * rng.choice([-1.0, 1.0])
        r = rng.uniform(0.12, 0.2) * min(cfg.H, cfg.W)
        cy = rng.uniform(0.3, 0.7) * cfg.H
        cx = rng.uniform(0.25, 0.75) * cfg.W
        blob = np.exp(-(((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r)))
        centre = (gt.onset + gt.offset) / 2
        half = (gt.offset - gt.onset) / 2
        for f in range(gt.onset, gt.offset + 1):
            vol[f] += amp * (1.0 - abs(f - centre) / (half + 1)) * blob
    frames = np.clip(np.floor(vol + 0.5), 0, 255).astype(np.uint8)
    return VideoVolume(frames, cfg.fps), gts


def generate_synthetic(cfg: SynthConfig, out_dir) -> DatasetManifest:
    """Write every video as ``videos/<id>.y8v`` plus ``manifest.csv`` under ``out_dir``."""
    out_dir = Path(out_dir)
    counts = cfg.counts
    # the last video of the first n_empty subjects (cycling) carries no event
    empty = set()
    k = 0
    while len(empty) < cfg.n_empty_videos:
        s = k % cfg.n_subjects
        idx = counts[s] - 1 - k // cfg.n_subjects
        if idx >= 0:
            empty.add((s, idx))
        k += 1

    records = []
    for s, count in enumerate(counts):
        for i in range(count):
            vid = f"s{s:02d}_v{i:02d}"
            vol, gts = render_video(cfg, s, i, events=0 if (s, i) in empty else None)
            rel = f"videos/{vid}.y8v"
            save_volume(vol, out_dir / rel)
            records.append(VideoRecord(vid, f"s{s:02d}", rel, tuple(gts), cfg.fps, vol.T))
    manifest = DatasetManifest(tuple(records), cfg.name, out_dir)
    save_manifest(manifest, out_dir / "manifest.csv")
    return manifest
