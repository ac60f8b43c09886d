import numpy as np
import pytest
from hypothesis import given, strategies as st

from mespot.core import Interval
from mespot.errors import WindowTooLong
from mespot.sampling import (
    LabeledSample,
    Window,
    best_iou,
    enumerate_windows,
    iou,
    label_window,
    n_windows,
    normalize_ground_truth,
    read_samples,
    write_samples,
)
from oracles import iou_frames


def test_enumerate_examples():
    w = enumerate_windows(100, 9, 1)
    assert len(w) == 92 and w[0] == Interval(0, 8) and w[-1] == Interval(91, 99)
    assert enumerate_windows(9, 9, 1) == [Interval(0, 8)]
    assert enumerate_windows(20, 9, 4) == [Interval(0, 8), Interval(4, 12), Interval(8, 16)]
    with pytest.raises(WindowTooLong):
        enumerate_windows(8, 9, 1)
    assert n_windows(8, 9, 1) == 0


@given(st.integers(1, 200), st.integers(1, 10), st.data())
def test_windows_are_strided_and_inside(T, s, data):
    L = data.draw(st.integers(1, T))
    w = enumerate_windows(T, L, s)
    assert all(iv.length == L and iv.offset <= T - 1 for iv in w)
    assert all(b.onset - a.onset == s for a, b in zip(w, w[1:]))
    # no room for one more window
    assert w[-1].onset + s + L - 1 > T - 1


def test_iou_examples():
    assert iou(Interval(10, 18), Interval(10, 18)) == 1.0
    assert iou(Interval(0, 4), Interval(10, 14)) == 0.0
    assert iou(Interval(10, 18), Interval(14, 22)) == pytest.approx(5 / 13)


@given(st.integers(0, 40), st.integers(0, 12), st.integers(0, 40), st.integers(0, 12))
def test_iou_properties(a0, la, b0, lb):
    a, b = Interval(a0, a0 + la), Interval(b0, b0 + lb)
    v = iou(a, b)
    assert v == iou(b, a) and 0.0 <= v <= 1.0 and iou(a, a) == 1.0
    assert v == pytest.approx(iou_frames((a.onset, a.offset), (b.onset, b.offset)), abs=1e-15)


def test_label_examples():
    w = Window("v", 1.0, Interval(10, 18))
    s = label_window(w, [Interval(10, 18)], 0.5)
    assert s.label == 1 and s.best_iou == 1.0
    s = label_window(w, [], 0.5)
    assert s.label == -1 and s.best_iou == 0.0
    s = label_window(Window("v", 1.0, Interval(14, 22)), [Interval(10, 18)], 0.5)
    assert s.label == -1 and s.best_iou == pytest.approx(5 / 13)
    assert best_iou(Interval(0, 8), [Interval(30, 38), Interval(2, 10)]) == pytest.approx(7 / 11)


@given(st.integers(9, 60), st.data())
def test_positive_windows_near_gt_start(T, data):
    # stride 1, GT of length L: windows overlapping it in >= 6 frames are positive (iou >= 6/12)
    L = 9
    g0 = data.draw(st.integers(0, T - L))
    gt = Interval(g0, g0 + L - 1)
    pos = {iv.onset for iv in enumerate_windows(T, L, 1) if label_window(Window("v", 1.0, iv), [gt]).label > 0}
    assert pos == {s for s in range(T - L + 1) if abs(s - g0) <= 3}


def test_normalize_examples():
    assert normalize_ground_truth(Interval(10, 18), 9, 100) == Interval(10, 18)
    assert normalize_ground_truth(Interval(10, 16), 9, 100) == Interval(9, 17)
    assert normalize_ground_truth(Interval(0, 2), 9, 100) == Interval(0, 8)
    assert normalize_ground_truth(Interval(95, 99), 9, 100) == Interval(91, 99)


@given(st.integers(9, 120), st.data())
def test_normalize_length_and_bounds(T, data):
    a = data.draw(st.integers(0, T - 1))
    b = data.draw(st.integers(a, T - 1))
    g = normalize_ground_truth(Interval(a, b), 9, T)
    assert g.length == 9 and 0 <= g.onset and g.offset <= T - 1


def test_samples_csv_round_trip(tmp_path):
    rows = [
        LabeledSample(Window("a", 0.75, Interval(0, 8)), 1, 0.6),
        LabeledSample(Window("b", 2.0, Interval(3, 11)), -1, 1 / 3),
    ]
    assert read_samples(write_samples(rows, tmp_path / "s.csv")) == rows
