import numpy as np
import pytest

from mespot.benchmark import (
    BenchmarkConfig,
    best_iou_matrix,
    enumerate_samples,
    prepare_dataset,
    run_loso,
    run_random,
)
from mespot.classifier import TrainConfig
from mespot.core import Interval
from mespot.descriptors import DescriptorConfig
from mespot.evaluation import SplitSpec
from mespot.sampling import best_iou
from mespot.synth import SynthConfig, generate_synthetic
from mespot.temporal import ScaleSpec


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    cfg = SynthConfig(n_subjects=3, videos_per_subject=3, T=60, event_amplitude=(40, 60), noise_sigma=1.5,
                      n_empty_videos=1, seed=3)
    man = generate_synthetic(cfg, tmp_path_factory.mktemp("bench"))
    bcfg = BenchmarkConfig(descriptor=DescriptorConfig.parse("higo-top-bl664-ol02-nb8"),
                           scales=ScaleSpec((0.75, 1.0, 1.5)), train=TrainConfig(epochs=3))
    return man, bcfg, prepare_dataset(man, bcfg)


def test_best_iou_matrix(rng):
    gts = [Interval(3, 11), Interval(30, 38)]
    on = rng.integers(0, 40, 50)
    off = on + rng.integers(0, 12, 50)
    got = best_iou_matrix(on, off, gts)
    ref = [best_iou(Interval(int(a), int(b)), gts) for a, b in zip(on, off)]
    assert np.allclose(got, ref)
    assert not best_iou_matrix([0], [8], []).any()


def test_sample_rows_line_up_with_features(small):
    man, bcfg, videos = small
    for v in videos:
        rows = enumerate_samples(v.record, v.n_frames, bcfg)
        assert len(rows) == v.features.shape[0]
        assert [r.label for r in rows] == v.labels.tolist()
        assert [r.window.interval for r in rows] == v.scaled
        assert [r.window.scale_factor for r in rows] == v.scales.tolist()


def test_ground_truths_are_normalized(small):
    _, bcfg, videos = small
    for v in videos:
        assert all(g.length == bcfg.L for g in v.ground_truths)
        if v.ground_truths:
            assert (v.labels > 0).any()


def test_loso_result_shape(small):
    man, bcfg, videos = small
    res = run_loso(man, videos, bcfg)
    assert len(res.per_window) == 3 and len(res.per_video) == 1
    rows = res.summary()
    assert [r.protocol for r in rows] == ["loso-fppw", "loso-fppv"]
    assert all(0 <= r.miss_mean <= 1 for r in rows)


def test_random_result_shape(small):
    _, bcfg, videos = small
    cfg = BenchmarkConfig(descriptor=bcfg.descriptor, scales=bcfg.scales, train=bcfg.train,
                          split=SplitSpec("random", 0.7, 3, 0))
    res = run_random(videos, cfg)
    assert len(res.per_window) == 3 and 1 <= len(res.per_video) <= 3
    assert res.summary()[0].protocol == "random70-fppw"
