import numpy as np
import pytest
from hypothesis import given, strategies as st
from PIL import Image

from mespot.core import (
    DatasetManifest,
    Interval,
    VideoRecord,
    VideoVolume,
    count_frames,
    format_intervals,
    load_manifest,
    load_volume,
    parse_intervals,
    round_half_up,
    save_manifest,
    save_volume,
    to_gray,
)
from mespot.errors import (
    DuplicateId,
    EmptyVolume,
    InconsistentFrameDims,
    InvalidInterval,
    MespotError,
    MissingPath,
    ParseError,
)


def test_interval_basics():
    iv = Interval(3, 7)
    assert iv.length == 5
    assert str(iv) == "3-7"
    assert Interval(1, 2) < Interval(1, 3) < Interval(2, 2)
    with pytest.raises(InvalidInterval):
        Interval(5, 4)
    with pytest.raises(InvalidInterval):
        Interval(-1, 2)


def test_volume_is_immutable(rng):
    v = VideoVolume(rng.integers(0, 256, (3, 16, 16), dtype=np.uint8))
    assert (v.T, v.H, v.W) == (3, 16, 16)
    with pytest.raises(ValueError):
        v.frames[0, 0, 0] = 1
    with pytest.raises(AttributeError):
        v.fps = 30


def test_volume_validation():
    with pytest.raises(EmptyVolume):
        VideoVolume(np.zeros((0, 16, 16), np.uint8))
    with pytest.raises(InconsistentFrameDims):
        VideoVolume(np.zeros((2, 8, 16), np.uint8))
    with pytest.raises(InconsistentFrameDims):
        VideoVolume(np.zeros((16, 16), np.uint8))


def test_window_slices_frames(rng):
    v = VideoVolume(rng.integers(0, 256, (10, 16, 16), dtype=np.uint8))
    w = v.window(Interval(2, 4))
    assert np.array_equal(w.frames, v.frames[2:5])
    with pytest.raises(InvalidInterval):
        v.window(Interval(8, 10))


def test_pgm_directory_100_frames(tmp_path, rng):
    frames = rng.integers(0, 256, (100, 64, 64), dtype=np.uint8)
    d = tmp_path / "frames"
    save_volume(VideoVolume(frames), d)
    assert count_frames(d) == 100
    v = load_volume(d)
    assert (v.T, v.H, v.W) == (100, 64, 64)
    assert np.array_equal(v.frames, frames)


def test_color_frames_become_gray(tmp_path):
    d = tmp_path / "rgb"
    d.mkdir()
    rgb = np.zeros((16, 16, 3), np.uint8)
    rgb[..., 0] = 200
    rgb[..., 1] = 100
    rgb[..., 2] = 50
    Image.fromarray(rgb).save(d / "0.png")
    v = load_volume(d)
    # 0.299*200 + 0.587*100 + 0.114*50 = 124.2
    assert v.frames.shape == (1, 16, 16) and int(v.frames[0, 0, 0]) == 124
    assert to_gray(np.array([[[255, 255, 255]]]))[0, 0] == 255


def test_y8v_single_frame(tmp_path):
    p = tmp_path / "one.y8v"
    p.write_bytes(b"Y8V1" + np.array([1, 16, 16], "<u4").tobytes() + bytes(range(256)))
    v = load_volume(p)
    assert v.T == 1 and v.frames.ravel().tolist() == list(range(256))


def test_y8v_bad_payload(tmp_path):
    p = tmp_path / "bad.y8v"
    p.write_bytes(b"Y8V1" + np.array([2, 16, 16], "<u4").tobytes() + bytes(300))
    with pytest.raises(EmptyVolume):
        load_volume(p)
    with pytest.raises(MissingPath):
        load_volume(tmp_path / "nothing.y8v")


def test_inconsistent_frame_sizes(tmp_path):
    d = tmp_path / "mixed"
    d.mkdir()
    Image.fromarray(np.zeros((16, 16), np.uint8)).save(d / "0.pgm")
    Image.fromarray(np.zeros((16, 20), np.uint8)).save(d / "1.pgm")
    with pytest.raises(InconsistentFrameDims):
        load_volume(d)


@given(st.integers(1, 5), st.integers(16, 20), st.integers(16, 20), st.integers(0, 2**32 - 1))
def test_volume_round_trip(tmp_path_factory, T, H, W, seed):
    frames = np.random.default_rng(seed).integers(0, 256, (T, H, W), dtype=np.uint8)
    p = tmp_path_factory.mktemp("v") / "a.y8v"
    v = VideoVolume(frames, fps=30.0)
    assert load_volume(save_volume(v, p), fps=30.0) == v


def _write_volumes(root, n, T=20):
    for i in range(n):
        save_volume(VideoVolume(np.zeros((T, 16, 16), np.uint8)), root / f"v{i}.y8v")


def test_manifest_two_subjects(tmp_path):
    _write_volumes(tmp_path, 3)
    (tmp_path / "m.csv").write_text(
        "# name: demo\n"
        "a,S1,v0.y8v,25,2-5\n"
        "b,S1,v1.y8v,25,\n"
        "c,S2,v2.y8v,30,1-3;10-12\n"
    )
    m = load_manifest(tmp_path / "m.csv")
    assert m.name == "demo" and len(m) == 3
    assert m.subjects() == ["S1", "S2"]
    assert m.n_ground_truths == 3
    assert m["c"].ground_truths == (Interval(1, 3), Interval(10, 12))
    assert m.load(m["c"]).fps == 30.0


def test_manifest_errors(tmp_path):
    _write_volumes(tmp_path, 2)
    bad = tmp_path / "bad.csv"
    bad.write_text("a,S1,v0.y8v,25,15-20\n")  # offset 20 >= T=20
    with pytest.raises(InvalidInterval):
        load_manifest(bad)
    empty = tmp_path / "empty.csv"
    empty.write_text("# nothing\n")
    with pytest.raises(ParseError):
        load_manifest(empty)
    dup = tmp_path / "dup.csv"
    dup.write_text("a,S1,v0.y8v,25,\na,S1,v1.y8v,25,\n")
    with pytest.raises(DuplicateId):
        load_manifest(dup)
    fields = tmp_path / "fields.csv"
    fields.write_text("a,S1,v0.y8v,25\n")
    with pytest.raises(ParseError):
        load_manifest(fields)
    overlap = tmp_path / "overlap.csv"
    overlap.write_text("a,S1,v0.y8v,25,2-6;5-8\n")
    with pytest.raises(InvalidInterval):
        load_manifest(overlap)


def test_manifest_round_trip(tmp_path):
    _write_volumes(tmp_path, 2)
    recs = (
        VideoRecord("x", "S1", "v0.y8v", (Interval(0, 3), Interval(7, 9)), 25.0, 20),
        VideoRecord("y", "S2", "v1.y8v", (), 29.97, 20),
    )
    m = DatasetManifest(recs, "rt", tmp_path)
    m2 = load_manifest(save_manifest(m, tmp_path / "rt.csv"))
    assert m2 == m


def test_interval_text_round_trip():
    ivs = [Interval(0, 4), Interval(9, 9)]
    assert parse_intervals(format_intervals(ivs)) == ivs
    assert parse_intervals("") == []
    with pytest.raises(ParseError):
        parse_intervals("3:4")


def test_errors_are_package_errors():
    assert issubclass(InvalidInterval, MespotError) and issubclass(InvalidInterval, ValueError)
    assert issubclass(MissingPath, FileNotFoundError)


def test_round_half_up():
    assert [round_half_up(x) for x in (0.5, 1.5, 2.5, 2.4999)] == [1, 2, 3, 2]
