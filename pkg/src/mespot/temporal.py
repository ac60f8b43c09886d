"""Multi-scale temporal analysis.

A volume is resampled in time to several lengths so that a fixed-length
scanning window covers events of different durations.  Two resamplers are
available: ``linear`` (convex combination of the two bracketing frames) and
``tim``, the temporal interpolation model, which embeds the frame sequence on
the spectral curve of a path graph and reads new frames off that curve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Interval, VideoVolume, round_half_up
from .errors import BadTarget, DegenerateVolume, OutOfRange

DEFAULT_FACTORS = (0.5, 0.75, 1.0, 1.5, 2.0)
METHODS = ("tim", "linear")


@dataclass(frozen=True)
class ScaleSpec:
    factors: tuple[float, ...] = DEFAULT_FACTORS
    method: str = "tim"

    def __post_init__(self):
        f = tuple(float(x) for x in self.factors)
        object.__setattr__(self, "factors", f)
        if not f or any(x <= 0 for x in f):
            raise ValueError(f"scale factors must be positive, got {f}")
        if any(b <= a for a, b in zip(f, f[1:])):
            raise ValueError(f"scale factors must be strictly increasing, got {f}")
        if 1.0 not in f:
            raise ValueError("scale factors must include 1.0")
        if self.method not in METHODS:
            raise ValueError(f"unknown interpolation method {self.method!r}")

    @classmethod
    def parse(cls, text: str, method: str = "tim") -> "ScaleSpec":
        """Build from a comma list such as ``"0.5,1,2"`` (sorted and deduplicated)."""
        vals = sorted({float(x) for x in text.split(",") if x.strip()})
        return cls(tuple(vals), method)


@dataclass(frozen=True)
class ScaledVolume:
    volume: VideoVolume
    factor: float
    source_len: int

    @property
    def length(self) -> int:
        return self.volume.T


def scaled_length(source_len: int, factor: float) -> int:
    return max(2, round_half_up(factor * source_len))


def _tim_basis(n: int, t: np.ndarray) -> np.ndarray:
    # Path-graph Laplacian eigenvectors extended to a continuous curve; row k-1 is f_k(t).
    k = np.arange(1, n)[:, None]
    return np.sin(np.pi * k * t[None, :] + np.pi * (n - k) / (2 * n))


def tim_weights(n: int, m: int) -> np.ndarray:
    """(m, n) matrix mapping n mean-centred input frames to m output frames."""
    y = _tim_basis(n, np.arange(1, n + 1) / n)
    f = _tim_basis(n, np.linspace(1.0 / n, 1.0, m))
    # The linear map from curve coordinates to frames is learned by least squares.
    return f.T @ np.linalg.pinv(y).T


def _to_uint8(x: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


def resample_temporal(v: VideoVolume, target_len: int, method: str = "tim") -> VideoVolume:
    """Resample ``v`` to exactly ``target_len`` frames."""
    n = v.T
    if n < 2:
        raise DegenerateVolume(f"need at least 2 frames to resample, got {n}")
    if target_len < 2:
        raise BadTarget(f"target length must be >= 2, got {target_len}")
    x = v.frames.astype(np.float64)

    if method == "linear":
        pos = np.arange(target_len) * (n - 1) / (target_len - 1)
        lo = np.floor(pos).astype(int)
        lo = np.minimum(lo, n - 1)
        hi = np.minimum(lo + 1, n - 1)
        w = (pos - lo)[:, None, None]
        out = x[lo] + w * (x[hi] - x[lo])
    elif method == "tim":
        flat = x.reshape(n, -1)
        mu = flat.mean(axis=0)
        out = (tim_weights(n, target_len) @ (flat - mu) + mu).reshape(target_len, v.H, v.W)
    else:
        raise ValueError(f"unknown interpolation method {method!r}")
    return VideoVolume(_to_uint8(out), v.fps)


def build_pyramid(v: VideoVolume, spec: ScaleSpec) -> list[ScaledVolume]:
    if v.T < 2:
        raise DegenerateVolume(f"need at least 2 frames to build a pyramid, got {v.T}")
    levels = []
    for factor in spec.factors:
        n = scaled_length(v.T, factor)
        vol = v if n == v.T else resample_temporal(v, n, spec.method)
        levels.append(ScaledVolume(vol, factor, v.T))
    return levels


def _rescale_index(i: int, from_len: int, to_len: int) -> int:
    if from_len == to_len:
        return i
    return min(max(round_half_up(i * (to_len - 1) / (from_len - 1)), 0), to_len - 1)


def map_to_original(iv: Interval, source_len: int, scaled_len: int) -> Interval:
    """Map an interval on a scaled time base back to the source time base."""
    if iv.offset > scaled_len - 1:
        raise OutOfRange(f"interval {iv} outside scaled volume of {scaled_len} frames")
    return Interval(
        _rescale_index(iv.onset, scaled_len, source_len),
        _rescale_index(iv.offset, scaled_len, source_len),
    )


def map_to_scaled(iv: Interval, source_len: int, scaled_len: int) -> Interval:
    """Inverse of :func:`map_to_original`, using the same rounding rule."""
    if iv.offset > source_len - 1:
        raise OutOfRange(f"interval {iv} outside source volume of {source_len} frames")
    return Interval(
        _rescale_index(iv.onset, source_len, scaled_len),
        _rescale_index(iv.offset, source_len, scaled_len),
    )
