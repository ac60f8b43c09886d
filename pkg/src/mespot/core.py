"""Domain types, the dataset manifest, and video-volume I/O.

Frame indices are 0-based everywhere and intervals are inclusive at both
ends.  Volumes are single-channel uint8 arrays laid out frame-major (T, H, W).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image

from .errors import (
    DuplicateId,
    EmptyVolume,
    InconsistentFrameDims,
    InvalidInterval,
    MissingPath,
    ParseError,
)

MIN_SIDE = 16
Y8V_MAGIC = b"Y8V1"
Y8V_HEADER = struct.Struct("<4sIII")
IMAGE_SUFFIXES = {".pgm", ".ppm", ".pnm", ".png", ".bmp", ".jpg", ".jpeg", ".tif", ".tiff"}
LUMA = (0.299, 0.587, 0.114)


@dataclass(frozen=True, order=True)
class Interval:
    """Inclusive frame range ``[onset, offset]``."""

    onset: int
    offset: int

    def __post_init__(self):
        if self.onset < 0 or self.offset < self.onset:
            raise InvalidInterval(f"invalid interval [{self.onset}, {self.offset}]")

    @property
    def length(self) -> int:
        return self.offset - self.onset + 1

    def __str__(self):
        return f"{self.onset}-{self.offset}"


class VideoVolume:
    """A T x H x W grayscale intensity volume."""

    __slots__ = ("frames", "fps")

    def __init__(self, frames, fps: float = 25.0):
        arr = np.asarray(frames)
        if arr.ndim != 3:
            raise InconsistentFrameDims(f"expected a T x H x W array, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise EmptyVolume("volume has zero frames")
        if arr.shape[1] < MIN_SIDE or arr.shape[2] < MIN_SIDE:
            raise InconsistentFrameDims(
                f"frames must be at least {MIN_SIDE}x{MIN_SIDE}, got {arr.shape[1]}x{arr.shape[2]}"
            )
        if arr.dtype != np.uint8:
            if np.issubdtype(arr.dtype, np.integer) and arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("integer frames must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        else:
            arr = arr.view()
        arr.flags.writeable = False
        if not fps > 0:
            raise ValueError(f"fps must be positive, got {fps}")
        object.__setattr__(self, "frames", arr)
        object.__setattr__(self, "fps", float(fps))

    def __setattr__(self, name, value):
        raise AttributeError("VideoVolume is immutable")

    @property
    def T(self) -> int:
        return self.frames.shape[0]

    @property
    def H(self) -> int:
        return self.frames.shape[1]

    @property
    def W(self) -> int:
        return self.frames.shape[2]

    def __len__(self):
        return self.T

    def window(self, iv: Interval) -> "VideoVolume":
        """Sub-volume covering the frames of ``iv``."""
        if iv.offset >= self.T:
            raise InvalidInterval(f"interval {iv} exceeds volume of {self.T} frames")
        return VideoVolume(self.frames[iv.onset : iv.offset + 1], self.fps)

    def __eq__(self, other):
        if not isinstance(other, VideoVolume):
            return NotImplemented
        return self.fps == other.fps and np.array_equal(self.frames, other.frames)

    def __repr__(self):
        return f"VideoVolume(T={self.T}, H={self.H}, W={self.W}, fps={self.fps})"


@dataclass(frozen=True)
class VideoRecord:
    id: str
    subject_id: str
    path: str
    ground_truths: tuple[Interval, ...] = ()
    fps: float = 25.0
    n_frames: int | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ground_truths", tuple(self.ground_truths))
        if not self.id:
            raise ParseError("video id must be non-empty")
        if not self.fps > 0:
            raise ParseError(f"{self.id}: fps must be positive")
        prev = None
        for gt in self.ground_truths:
            if self.n_frames is not None and gt.offset >= self.n_frames:
                raise InvalidInterval(
                    f"{self.id}: ground truth {gt} outside video of {self.n_frames} frames"
                )
            if prev is not None and gt.onset <= prev.offset:
                raise InvalidInterval(f"{self.id}: ground truths must be sorted and non-overlapping")
            prev = gt


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[VideoRecord, ...]
    name: str = "dataset"
    root: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise DuplicateId(f"duplicate video id {rec.id!r}")
            seen.add(rec.id)
        if not self.records:
            raise ParseError("manifest contains no videos")

    def subjects(self) -> list[str]:
        """Subject ids in order of first appearance."""
        return list(dict.fromkeys(r.subject_id for r in self.records))

    def by_subject(self, subject_id: str) -> list[VideoRecord]:
        return [r for r in self.records if r.subject_id == subject_id]

    def resolve(self, rec: VideoRecord) -> Path:
        return self.root / rec.path

    def load(self, rec: VideoRecord) -> VideoVolume:
        return load_volume(self.resolve(rec), fps=rec.fps)

    @property
    def n_ground_truths(self) -> int:
        return sum(len(r.ground_truths) for r in self.records)

    def __getitem__(self, video_id: str) -> VideoRecord:
        for rec in self.records:
            if rec.id == video_id:
                return rec
        raise KeyError(video_id)

    def __len__(self):
        return len(self.records)


# ---------------------------------------------------------------------------
# volume I/O


def to_gray(rgb: np.ndarray) -> np.ndarray:
    """ITU-R 601 luma, rounded half up."""
    rgb = rgb[..., :3].astype(np.float64)
    y = rgb[..., 0] * LUMA[0] + rgb[..., 1] * LUMA[1] + rgb[..., 2] * LUMA[2]
    return np.clip(np.floor(y + 0.5), 0, 255).astype(np.uint8)


def _read_image(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8)
        if im.mode in ("1", "LA"):
            return np.asarray(im.convert("L"), dtype=np.uint8)
        return to_gray(np.asarray(im.convert("RGB")))


def _frame_files(path: Path) -> list[Path]:
    return sorted(p for p in path.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def read_y8v_header(path: Path) -> tuple[int, int, int]:
    with open(path, "rb") as fh:
        head = fh.read(Y8V_HEADER.size)
    if len(head) != Y8V_HEADER.size:
        raise EmptyVolume(f"{path}: truncated header")
    magic, t, h, w = Y8V_HEADER.unpack(head)
    if magic != Y8V_MAGIC:
        raise EmptyVolume(f"{path}: bad magic {magic!r}")
    return t, h, w


def load_volume(path, fps: float = 25.0) -> VideoVolume:
    """Load a frame directory or a ``.y8v`` raw volume."""
    path = Path(path)
    if not path.exists():
        raise MissingPath(f"no such volume: {path}")
    if path.is_dir():
        files = _frame_files(path)
        if not files:
            raise EmptyVolume(f"{path}: no image frames")
        frames = [_read_image(f) for f in files]
        shape = frames[0].shape
        for f, fr in zip(files, frames):
            if fr.shape != shape:
                raise InconsistentFrameDims(f"{f.name}: {fr.shape} differs from {shape}")
        return VideoVolume(np.stack(frames), fps)

    t, h, w = read_y8v_header(path)
    payload = path.read_bytes()[Y8V_HEADER.size :]
    if t == 0 or h == 0 or w == 0:
        raise EmptyVolume(f"{path}: empty volume")
    if len(payload) != t * h * w:
        raise EmptyVolume(f"{path}: payload is {len(payload)} bytes, header says {t * h * w}")
    frames = np.frombuffer(payload, dtype=np.uint8).reshape(t, h, w)
    return VideoVolume(frames, fps)


def save_volume(volume: VideoVolume, path) -> Path:
    """Write ``volume`` as ``.y8v``, or as numbered PGM frames if ``path`` has no suffix."""
    path = Path(path)
    if path.suffix == "":
        path.mkdir(parents=True, exist_ok=True)
        for i, frame in enumerate(volume.frames):
            Image.fromarray(np.ascontiguousarray(frame)).save(path / f"{i:06d}.pgm")
        return path
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(Y8V_HEADER.pack(Y8V_MAGIC, volume.T, volume.H, volume.W))
        fh.write(np.ascontiguousarray(volume.frames).tobytes())
    return path


def count_frames(path) -> int:
    path = Path(path)
    if not path.exists():
        raise MissingPath(f"no such volume: {path}")
    if path.is_dir():
        return len(_frame_files(path))
    return read_y8v_header(path)[0]


# ---------------------------------------------------------------------------
# manifest I/O


def parse_intervals(text: str) -> list[Interval]:
    text = text.strip()
    if not text:
        return []
    out = []
    for part in text.split(";"):
        try:
            a, b = part.split("-")
            onset, offset = int(a), int(b)
        except ValueError as exc:
            raise ParseError(f"bad interval {part!r}") from exc
        if onset > offset or onset < 0:
            raise InvalidInterval(f"bad interval {part!r}")
        out.append(Interval(onset, offset))
    return out


def format_intervals(ivs: Iterable[Interval]) -> str:
    return ";".join(str(iv) for iv in ivs)


def load_manifest(path, check_volumes: bool = True) -> DatasetManifest:
    """Parse a manifest; ground truths are checked against each volume's length."""
    path = Path(path)
    if not path.exists():
        raise MissingPath(f"no such manifest: {path}")
    name = path.stem
    records = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("name:"):
                name = body[5:].strip()
            continue
        fields = line.split(",")
        if len(fields) != 5:
            raise ParseError(f"{path}:{lineno}: expected 5 fields, got {len(fields)}")
        vid, subject, rel, fps_txt, gts_txt = (f.strip() for f in fields)
        try:
            fps = float(fps_txt)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad fps {fps_txt!r}") from exc
        try:
            gts = parse_intervals(gts_txt)
        except (ParseError, InvalidInterval) as exc:
            raise type(exc)(f"{path}:{lineno}: {exc}") from exc
        n_frames = count_frames(path.parent / rel) if check_volumes else None
        records.append(VideoRecord(vid, subject, rel, tuple(gts), fps, n_frames))
    if not records:
        raise ParseError(f"{path}: manifest contains no videos")
    return DatasetManifest(tuple(records), name, path.parent)


def save_manifest(manifest: DatasetManifest, path) -> Path:
    path = Path(path)
    lines = [f"# name: {manifest.name}", "# id,subject_id,relative_path,fps,ground_truths"]
    for r in manifest.records:
        lines.append(f"{r.id},{r.subject_id},{r.path},{r.fps!r},{format_intervals(r.ground_truths)}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path



def round_half_up(x: float) -> int:
    """Round to nearest, ties away from zero for non-negative inputs."""
    return int(np.floor(x + 0.5))
