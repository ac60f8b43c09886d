"""Spatio-temporal block descriptors: LBP-TOP, HOG-TOP and HIGO-TOP.

A window is divided into an overlapping nt x ny x nx grid of blocks.  Every
block contributes three histograms, one per orthogonal plane (XY, XT, YT), and
the feature vector is their concatenation, t-major then y then x.

Per-pixel codes only depend on the pixel's own neighbourhood, and a pixel votes
in a block only when that neighbourhood lies inside the block.  Codes are
therefore computed once per volume and every block (or window) just histograms
a region of the shared maps.
"""

from __future__ import annotations

import hashlib
import math
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import round_half_up
from .errors import BlockTooSmall, CacheFormatError, ExtentTooSmall

KINDS = ("lbp_top", "hog_top", "higo_top")
NBINS_CHOICES = (8, 12, 16)
PLANES = ("XY", "XT", "YT")
MIN_BLOCK = 3
# Ring samples and bin edges sit at irrational positions, so for integer
# intensities a genuine non-tie differs from the tie by far more than this.
# Anything closer is a tie blurred by float rounding.
TIE_TOL = 1e-9


@dataclass(frozen=True)
class BlockGrid:
    nx: int = 8
    ny: int = 8
    nt: int = 4
    overlap: float = 0.2

    def __post_init__(self):
        if min(self.nx, self.ny, self.nt) < 1:
            raise ValueError(f"block counts must be >= 1, got {self.nx}x{self.ny}x{self.nt}")
        if not 0 <= self.overlap < 1:
            raise ValueError(f"overlap must be in [0, 1), got {self.overlap}")

    @property
    def n_blocks(self) -> int:
        return self.nx * self.ny * self.nt


@dataclass(frozen=True)
class DescriptorConfig:
    kind: str = "lbp_top"
    grid: BlockGrid = BlockGrid()
    nbins: int = 8
    P: int = 8
    R: int = 1
    block_norm: str = "l1"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown descriptor kind {self.kind!r}")
        if self.kind != "lbp_top" and self.nbins not in NBINS_CHOICES:
            raise ValueError(f"nbins must be one of {NBINS_CHOICES}, got {self.nbins}")
        if self.P not in (4, 8):
            raise ValueError(f"LBP neighbours must be 4 or 8, got {self.P}")
        if self.R < 1:
            raise ValueError(f"LBP radius must be >= 1, got {self.R}")
        if self.block_norm not in ("none", "l1", "l2"):
            raise ValueError(f"unknown block_norm {self.block_norm!r}")

    @property
    def bins_per_plane(self) -> int:
        return 2**self.P if self.kind == "lbp_top" else self.nbins

    @property
    def dim(self) -> int:
        return self.grid.n_blocks * 3 * self.bins_per_plane

    @property
    def margin(self) -> int:
        return self.R if self.kind == "lbp_top" else 1

    @property
    def name(self) -> str:
        g = self.grid
        counts = (g.nx, g.ny, g.nt)
        bl = "".join(map(str, counts)) if max(counts) < 10 else "x".join(map(str, counts))
        ol = repr(float(g.overlap)).replace(".", "")
        name = f"{self.kind.replace('_', '-')}-bl{bl}-ol{ol}"
        if self.kind != "lbp_top":
            name += f"-nb{self.nbins}"
        return name

    @property
    def digest(self) -> str:
        g = self.grid
        nb = 0 if self.kind == "lbp_top" else self.nbins
        key = f"{self.kind}|{g.nx}x{g.ny}x{g.nt}|{float(g.overlap)!r}|{nb}|{self.P}|{self.R}|{self.block_norm}"
        return hashlib.sha256(key.encode()).hexdigest()[:16]

    @classmethod
    def parse(cls, name: str, **kw) -> "DescriptorConfig":
        """Parse names such as ``higo-top-bl884-ol02-nb8`` or ``lbp-top-bl8x8x4-ol05``."""
        m = re.fullmatch(
            r"(lbp|hog|higo)[-_]top-bl(\d{3}|\d+x\d+x\d+)-ol(\d+)(?:-nb(\d+))?", name.strip().lower()
        )
        if not m:
            raise ValueError(f"cannot parse descriptor name {name!r}")
        kind = f"{m.group(1)}_top"
        bl = m.group(2)
        nx, ny, nt = (int(c) for c in (bl.split("x") if "x" in bl else bl))
        ol = m.group(3)
        overlap = float(f"{ol[0]}.{ol[1:] or '0'}")
        nbins = int(m.group(4)) if m.group(4) else 8
        if kind == "lbp_top" and m.group(4):
            raise ValueError(f"{name!r}: LBP-TOP takes no bin count")
        return cls(kind, BlockGrid(nx, ny, nt, overlap), nbins, **kw)


def block_bounds(dim_extent: int, n_blocks: int, overlap: float) -> list[tuple[int, int]]:
    """Inclusive ``(start, end)`` ranges of ``n_blocks`` overlapping blocks over ``dim_extent``."""
    if n_blocks < 1:
        raise ValueError(f"n_blocks must be >= 1, got {n_blocks}")
    if not 0 <= overlap < 1:
        raise ValueError(f"overlap must be in [0, 1), got {overlap}")
    b = math.ceil(dim_extent / (n_blocks - overlap * (n_blocks - 1)))
    if b < MIN_BLOCK:
        raise ExtentTooSmall(
            f"extent {dim_extent} split into {n_blocks} blocks gives block size {b} < {MIN_BLOCK}"
        )
    stride = b - round_half_up(overlap * b)
    if (n_blocks - 1) * stride + b < dim_extent:
        # rounding the overlap up left a gap before the last block
        stride = b - math.floor(overlap * b)
    # the last block is flush with the end; with many small blocks the
    # stride can overshoot earlier, so every start is clamped the same way
    starts = [min(i * stride, dim_extent - b) for i in range(n_blocks - 1)] + [dim_extent - b]
    return [(s, s + b - 1) for s in starts]


# ---------------------------------------------------------------------------
# per-pixel maps


def _as_array(vol) -> np.ndarray:
    return np.asarray(getattr(vol, "frames", vol))


def lbp_offsets(P: int, R: int) -> list[tuple[float, float]]:
    """(row, col) offsets of the P ring samples; row grows downward."""
    out = []
    for p in range(P):
        a = 2 * np.pi * p / P
        out.append((round(-R * math.sin(a), 10) + 0.0, round(R * math.cos(a), 10) + 0.0))
    return out


def _lbp_codes_2d(imgs: np.ndarray, P: int, R: int) -> np.ndarray:
    """LBP codes of the interior pixels of a stack of images (N, rows, cols)."""
    n, rows, cols = imgs.shape
    x = imgs.astype(np.int32)
    ir, ic = rows - 2 * R, cols - 2 * R
    centre = x[:, R : R + ir, R : R + ic]

    def rel(oy: int, ox: int) -> np.ndarray:
        return x[:, R + oy : R + oy + ir, R + ox : R + ox + ic] - centre

    codes = np.zeros((n, ir, ic), dtype=np.int32)
    for p, (dy, dx) in enumerate(lbp_offsets(P, R)):
        y0, x0 = math.floor(dy), math.floor(dx)
        fy, fx = dy - y0, dx - x0
        # differences to the centre keep the comparison exact under intensity offsets
        top = rel(y0, x0).astype(np.float64)
        if fx:
            top = top + fx * (rel(y0, x0 + 1) - top)
        val = top
        if fy:
            bot = rel(y0 + 1, x0).astype(np.float64)
            if fx:
                bot = bot + fx * (rel(y0 + 1, x0 + 1) - bot)
            val = top + fy * (bot - top)
        codes |= (val >= -TIE_TOL).astype(np.int32) << p
    return codes


def lbp_maps(vol, P: int = 8, R: int = 1) -> list[np.ndarray]:
    """Full-size (T, H, W) code maps for the XY, XT and YT planes; border codes are 0."""
    v = _as_array(vol)
    T, H, W = v.shape
    maps = [np.zeros(v.shape, dtype=np.int32) for _ in PLANES]
    if H > 2 * R and W > 2 * R:
        maps[0][:, R : H - R, R : W - R] = _lbp_codes_2d(v, P, R)
    if T > 2 * R and W > 2 * R:
        xt = _lbp_codes_2d(v.transpose(1, 0, 2), P, R)  # (H, T', W')
        maps[1][R : T - R, :, R : W - R] = xt.transpose(1, 0, 2)
    if T > 2 * R and H > 2 * R:
        yt = _lbp_codes_2d(v.transpose(2, 0, 1), P, R)  # (W, T', H')
        maps[2][R : T - R, R : H - R, :] = yt.transpose(1, 2, 0)
    return maps


def _central(v: np.ndarray, axis: int) -> np.ndarray:
    pad = [(0, 0)] * 3
    pad[axis] = (1, 1)
    p = np.pad(v, pad, mode="edge")
    hi = [slice(None)] * 3
    lo = [slice(None)] * 3
    hi[axis] = slice(2, None)
    lo[axis] = slice(None, -2)
    return (p[tuple(hi)] - p[tuple(lo)]) / 2.0


def orientation_bin(g1: np.ndarray, g2: np.ndarray, nbins: int) -> np.ndarray:
    """Unsigned orientation of the gradient (g1, g2) hard-binned over [0, pi)."""
    theta = np.arctan2(g2, g1)
    theta = np.where(theta < 0, theta + np.pi, theta)
    theta = np.where(theta >= np.pi, 0.0, theta)
    b = np.floor(theta * nbins / np.pi + TIE_TOL).astype(np.int64)
    return np.where(b >= nbins, 0, b)


def gradient_maps(vol, nbins: int, magnitude: bool = True) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-plane (bin, weight) maps; weight is the gradient magnitude or a 0/1 vote."""
    v = _as_array(vol).astype(np.float64)
    gt = _central(v, 0)
    gy = _central(v, 1)
    gx = _central(v, 2)
    out = []
    for g1, g2 in ((gx, gy), (gx, gt), (gy, gt)):
        mag = np.hypot(g1, g2)
        w = mag if magnitude else (mag > 0).astype(np.float64)
        out.append((orientation_bin(g1, g2, nbins), w))
    return out


def _plane_margins(m: int) -> list[tuple[int, int, int]]:
    # (t, y, x) margins that make a pixel interior in each plane
    return [(0, m, m), (m, 0, m), (m, m, 0)]


def _check_block(ext: tuple[int, int, int], m: int) -> None:
    if min(ext) < 2 * m + 1:
        raise BlockTooSmall(f"block extents {ext} too small for a margin of {m}")


# ---------------------------------------------------------------------------
# single-block histograms


def _block_histograms(maps, weights, margin: int, nbins: int, ext) -> np.ndarray:
    _check_block(ext, margin)
    T, H, W = ext
    hists = []
    for k, (mt, my, mx) in enumerate(_plane_margins(margin)):
        region = (slice(mt, T - mt), slice(my, H - my), slice(mx, W - mx))
        idx = maps[k][region].ravel()
        w = None if weights is None else weights[k][region].ravel()
        hists.append(np.bincount(idx, weights=w, minlength=nbins).astype(np.float64))
    return np.concatenate(hists)


def lbp_top_block(block, P: int = 8, R: int = 1) -> np.ndarray:
    """Concatenated XY, XT, YT code histograms (3 * 2**P counts) of one block."""
    v = _as_array(block)
    _check_block(v.shape, R)
    return _block_histograms(lbp_maps(v, P, R), None, R, 2**P, v.shape)


def hog_top_block(block, nbins: int = 8) -> np.ndarray:
    v = _as_array(block)
    _check_block(v.shape, 1)
    g = gradient_maps(v, nbins, magnitude=True)
    return _block_histograms([b for b, _ in g], [w for _, w in g], 1, nbins, v.shape)


def higo_top_block(block, nbins: int = 8) -> np.ndarray:
    v = _as_array(block)
    _check_block(v.shape, 1)
    g = gradient_maps(v, nbins, magnitude=False)
    return _block_histograms([b for b, _ in g], [w for _, w in g], 1, nbins, v.shape)


# ---------------------------------------------------------------------------
# windows


def _normalize(feats: np.ndarray, norm: str) -> np.ndarray:
    # feats: (..., bins); one histogram per (block, plane)
    if norm == "none":
        return feats
    if norm == "l1":
        s = feats.sum(axis=-1, keepdims=True)
    else:
        s = np.sqrt((feats * feats).sum(axis=-1, keepdims=True))
    return np.divide(feats, s, out=np.zeros_like(feats), where=s > 0)


def _pixel_maps(v: np.ndarray, cfg: DescriptorConfig):
    if cfg.kind == "lbp_top":
        return lbp_maps(v, cfg.P, cfg.R), None
    g = gradient_maps(v, cfg.nbins, magnitude=cfg.kind == "hog_top")
    return [b for b, _ in g], [w for _, w in g]


def frame_histograms(vol, cfg: DescriptorConfig) -> np.ndarray:
    """Per-frame histograms (T, ny*nx, 3, bins) of every spatial block of a volume."""
    v = _as_array(vol)
    T, H, W = v.shape
    g = cfg.grid
    m = cfg.margin
    ys = block_bounds(H, g.ny, g.overlap)
    xs = block_bounds(W, g.nx, g.overlap)
    nb = cfg.bins_per_plane
    maps, weights = _pixel_maps(v, cfg)
    out = np.zeros((T, len(ys) * len(xs), 3, nb), dtype=np.float64)
    offs = (np.arange(T) * nb)[:, None]
    for k, (_, my, mx) in enumerate(_plane_margins(m)):
        for j, ((y0, y1), (x0, x1)) in enumerate((yy, xx) for yy in ys for xx in xs):
            if y1 - y0 + 1 < 2 * m + 1 or x1 - x0 + 1 < 2 * m + 1:
                raise BlockTooSmall(f"spatial block {y1 - y0 + 1}x{x1 - x0 + 1} too small")
            region = (slice(None), slice(y0 + my, y1 - my + 1), slice(x0 + mx, x1 - mx + 1))
            idx = (maps[k][region].reshape(T, -1) + offs).ravel()
            w = None if weights is None else weights[k][region].ravel()
            out[:, j, k, :] = np.bincount(idx, weights=w, minlength=T * nb).reshape(T, nb)
    return out


def window_features(vol, cfg: DescriptorConfig, L: int, starts: Sequence[int]) -> np.ndarray:
    """Feature matrix (len(starts), cfg.dim) for the length-L windows starting at ``starts``."""
    v = _as_array(vol)
    starts = np.asarray(starts, dtype=np.int64)
    if starts.size and (starts.min() < 0 or starts.max() + L > v.shape[0]):
        raise ValueError("window extends outside the volume")
    ts = block_bounds(L, cfg.grid.nt, cfg.grid.overlap)
    m = cfg.margin
    for t0, t1 in ts:
        if t1 - t0 + 1 < 2 * m + 1:
            raise BlockTooSmall(f"temporal block of {t1 - t0 + 1} frames too small")
    fh = frame_histograms(v, cfg)
    n_s, nb = fh.shape[1], fh.shape[3]
    out = np.zeros((starts.size, len(ts), n_s, 3, nb), dtype=np.float64)
    for bi, (t0, t1) in enumerate(ts):
        for k, (mt, _, _) in enumerate(_plane_margins(m)):
            acc = out[:, bi, :, k, :]
            for dt in range(t0 + mt, t1 - mt + 1):
                acc += fh[starts + dt, :, k, :]
    out = _normalize(out, cfg.block_norm)
    return out.reshape(starts.size, -1)


def extract(window_volume, cfg: DescriptorConfig) -> np.ndarray:
    """Descriptor of a whole window volume."""
    v = _as_array(window_volume)
    return window_features(v, cfg, v.shape[0], [0])[0]


# ---------------------------------------------------------------------------
# feature cache

CACHE_MAGIC = b"MEF1"
CACHE_HEADER = struct.Struct("<4s16sII")


def write_feature_cache(path, digest: str, features: np.ndarray) -> Path:
    path = Path(path)
    feats = np.ascontiguousarray(features, dtype="<f4")
    if feats.ndim != 2:
        raise ValueError("features must be a 2-D array")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(CACHE_HEADER.pack(CACHE_MAGIC, digest.encode("ascii"), feats.shape[1], feats.shape[0]))
        fh.write(feats.tobytes())
    return path


def read_feature_cache(path, expect_digest: str | None = None) -> tuple[str, np.ndarray]:
    data = Path(path).read_bytes()
    if len(data) < CACHE_HEADER.size:
        raise CacheFormatError(f"{path}: truncated header")
    magic, digest, dim, count = CACHE_HEADER.unpack_from(data)
    if magic != CACHE_MAGIC:
        raise CacheFormatError(f"{path}: bad magic {magic!r}")
    digest = digest.decode("ascii")
    if expect_digest is not None and digest != expect_digest:
        raise CacheFormatError(f"{path}: cache digest {digest} does not match config {expect_digest}")
    body = data[CACHE_HEADER.size :]
    if len(body) != 4 * dim * count:
        raise CacheFormatError(f"{path}: payload size does not match {count}x{dim}")
    return digest, np.frombuffer(body, dtype="<f4").reshape(count, dim).astype(np.float32)
