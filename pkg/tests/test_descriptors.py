import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mespot.core import VideoVolume
from mespot.descriptors import (
    BlockGrid,
    DescriptorConfig,
    block_bounds,
    extract,
    higo_top_block,
    hog_top_block,
    lbp_offsets,
    lbp_top_block,
    read_feature_cache,
    window_features,
    write_feature_cache,
)
from mespot.errors import BlockTooSmall, CacheFormatError, ExtentTooSmall
from oracles import (
    gradient_top_reference,
    gradient_top_reference_grid,
    lbp_code_pixel,
    lbp_top_reference,
    orientation_bin_reference,
)
from mespot.descriptors import orientation_bin


def test_block_bounds_examples():
    assert block_bounds(64, 8, 0.0) == [(8 * i, 8 * i + 7) for i in range(8)]
    assert block_bounds(9, 4, 0.5) == [(0, 3), (2, 5), (4, 7), (5, 8)]
    with pytest.raises(ExtentTooSmall):
        block_bounds(4, 4, 0.0)


@given(st.integers(3, 200), st.integers(1, 10), st.sampled_from([0.0, 0.2, 0.3, 0.5]))
def test_block_bounds_cover_extent(E, n, ol):
    try:
        bb = block_bounds(E, n, ol)
    except ExtentTooSmall:
        return
    sizes = {b - a + 1 for a, b in bb}
    assert len(sizes) == 1 and len(bb) == n
    assert bb[0][0] == 0 and bb[-1][1] == E - 1
    covered = set()
    for a, b in bb:
        covered.update(range(a, b + 1))
    assert covered == set(range(E))


def test_lbp_offsets_ring():
    off = lbp_offsets(8, 1)
    assert off[0] == (0.0, 1.0) and off[2] == (-1.0, 0.0) and off[4] == (0.0, -1.0) and off[6] == (1.0, 0.0)
    assert all(abs(dy * dy + dx * dx - 1) < 1e-9 for dy, dx in off)


def test_constant_block():
    b = np.full((9, 32, 32), 128, np.uint8)
    h = lbp_top_block(b).reshape(3, 256)
    assert (h[:, 255] == [9 * 30 * 30, 7 * 32 * 30, 7 * 32 * 30]).all()
    assert h[:, :255].sum() == 0
    assert not hog_top_block(b).any() and not higo_top_block(b).any()
    cfg = DescriptorConfig("hog_top", BlockGrid(8, 8, 4), 8)
    f = extract(b, cfg)
    assert f.shape == (cfg.dim,) and not f.any()


def test_lbp_plane_sums(rng):
    for shape in [(5, 5, 5), (9, 32, 32), (4, 7, 11)]:
        b = rng.integers(0, 256, shape).astype(np.uint8)
        T, H, W = shape
        h = lbp_top_block(b).reshape(3, 256).sum(axis=1)
        assert h.tolist() == [T * (H - 2) * (W - 2), (T - 2) * H * (W - 2), (T - 2) * (H - 2) * W]


def test_lbp_per_pixel_reference(rng):
    for _ in range(5):
        b = rng.integers(0, 256, (5, 5, 5)).astype(np.uint8)
        ref = lbp_top_reference(b, per_pixel=True)
        assert np.array_equal(lbp_top_block(b).astype(np.int64), ref)
        assert np.array_equal(lbp_top_reference(b), ref)


def test_lbp_exact_ties():
    # bilinear sample equal to the centre in exact arithmetic: the bit must be set
    # ring sample 1 (up-right) mixes (r-1,c), (r-1,c+1), (r,c), (r,c+1)
    img = np.full((3, 3), 10, dtype=np.int64)
    img[0, 1], img[0, 2], img[1, 2] = 11, 9, 11  # d01=1, d11=-1 ... gives an exact tie
    code = lbp_code_pixel(img, 1, 1)
    b = np.broadcast_to(img.astype(np.uint8), (3, 3, 3)).copy()
    got = lbp_top_block(b).reshape(3, 256)[0]
    assert got[code] == 3


def test_lbp_low_range_blocks_match_reference(rng):
    # intensities in {0..3} produce many exact ties
    for _ in range(20):
        b = rng.integers(0, 4, (6, 12, 12)).astype(np.uint8)
        assert np.array_equal(lbp_top_block(b).astype(np.int64), lbp_top_reference(b))


def test_gradient_per_pixel_reference(rng):
    for nb in (8, 12, 16):
        b = rng.integers(0, 256, (5, 5, 5)).astype(np.uint8)
        ref = gradient_top_reference(b, nb)
        assert np.allclose(hog_top_block(b, nb), ref, rtol=1e-12, atol=0)
        assert np.array_equal(higo_top_block(b, nb), gradient_top_reference(b, nb, magnitude=False))
        assert np.allclose(gradient_top_reference_grid(b, nb), ref, rtol=1e-12, atol=0)


def test_orientation_bins_on_half_integer_grid():
    g = np.arange(-12, 13) / 2
    G1, G2 = np.meshgrid(g, g)
    for nb in (8, 12, 16):
        got = orientation_bin(G1, G2, nb)
        for i in range(G1.shape[0]):
            for j in range(G1.shape[1]):
                if G1[i, j] or G2[i, j]:
                    assert got[i, j] == orientation_bin_reference(G1[i, j], G2[i, j], nb)


def test_ramp_block():
    # intensity = x: gradient (1, 0) in XY and XT, none in YT
    x = np.arange(16, dtype=np.uint8) * 3
    b = np.broadcast_to(x, (5, 16, 16)).copy()
    h = higo_top_block(b, 8).reshape(3, 8)
    assert h[0, 0] == 5 * 14 * 14 and h[0, 1:].sum() == 0
    assert h[1, 0] == 3 * 16 * 14 and h[1, 1:].sum() == 0
    assert not h[2].any()
    hog = hog_top_block(b, 8).reshape(3, 8)
    assert hog[0, 0] == pytest.approx(3.0 * 5 * 14 * 14)


def test_higo_is_unit_vote_hog(rng):
    b = rng.integers(0, 256, (6, 10, 10)).astype(np.uint8)
    b[:, :, :3] = 50  # some zero-gradient pixels
    ref = gradient_top_reference(b, 12, magnitude=False)
    assert np.array_equal(higo_top_block(b, 12), ref)
    nz = np.isclose(hog_top_block(b, 12), 0) == (ref == 0)
    assert nz.all()


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(-60, 60))
def test_intensity_offset_invariance(seed, delta):
    b = np.random.default_rng(seed).integers(60, 190, (5, 16, 16))
    shifted = (b + delta).astype(np.uint8)
    b = b.astype(np.uint8)
    assert np.array_equal(lbp_top_block(b), lbp_top_block(shifted))
    assert np.array_equal(higo_top_block(b), higo_top_block(shifted))
    assert np.array_equal(hog_top_block(b), hog_top_block(shifted))


def test_shift_covariance(rng):
    base = np.full((5, 24, 24), 100, np.uint8)
    pat = rng.integers(0, 256, (5, 6, 6)).astype(np.uint8)
    a, b = base.copy(), base.copy()
    a[:, 5:11, 5:11] = pat
    b[:, 8:14, 7:13] = pat
    assert np.array_equal(lbp_top_block(a), lbp_top_block(b))


def test_dimensions():
    assert DescriptorConfig("lbp_top", BlockGrid(8, 8, 4)).dim == 196608
    assert DescriptorConfig("higo_top", BlockGrid(6, 6, 4), 8).dim == 3456
    v = np.zeros((9, 64, 64), np.uint8)
    assert extract(v, DescriptorConfig("lbp_top", BlockGrid(8, 8, 4))).shape == (196608,)
    assert extract(v, DescriptorConfig("higo_top", BlockGrid(6, 6, 4), 8)).shape == (3456,)


def test_extract_equals_blockwise_reference(rng):
    v = rng.integers(0, 256, (9, 32, 32)).astype(np.uint8)
    for cfg in (
        DescriptorConfig("lbp_top", BlockGrid(4, 4, 2, 0.2), block_norm="none"),
        DescriptorConfig("hog_top", BlockGrid(3, 4, 2, 0.5), 12, block_norm="none"),
        DescriptorConfig("higo_top", BlockGrid(6, 6, 4, 0.2), 8, block_norm="none"),
    ):
        g = cfg.grid
        ref = []
        for t0, t1 in block_bounds(9, g.nt, g.overlap):
            for y0, y1 in block_bounds(32, g.ny, g.overlap):
                for x0, x1 in block_bounds(32, g.nx, g.overlap):
                    blk = v[t0 : t1 + 1, y0 : y1 + 1, x0 : x1 + 1]
                    if cfg.kind == "lbp_top":
                        ref.append(lbp_top_reference(blk))
                    else:
                        ref.append(gradient_top_reference_grid(blk, cfg.nbins, cfg.kind == "hog_top"))
        assert np.allclose(extract(v, cfg), np.concatenate(ref), rtol=1e-9, atol=1e-9)


def test_window_features_match_per_window_extract(rng):
    v = rng.integers(0, 256, (30, 32, 32)).astype(np.uint8)
    cfg = DescriptorConfig("higo_top", BlockGrid(6, 6, 4), 8)
    starts = [0, 5, 21]
    F = window_features(v, cfg, 9, starts)
    for row, s in zip(F, starts):
        assert np.array_equal(row, extract(v[s : s + 9], cfg))
    # l1 block normalisation: every (block, plane) histogram sums to 1 or 0
    sums = F.reshape(len(starts), -1, 8).sum(axis=-1)
    assert np.all(np.isclose(sums, 1) | (sums == 0))


def test_extract_is_deterministic(rng):
    v = VideoVolume(rng.integers(0, 256, (9, 32, 32)).astype(np.uint8))
    cfg = DescriptorConfig()
    assert np.array_equal(extract(v, cfg), extract(v, cfg))


def test_block_too_small():
    cfg = DescriptorConfig("lbp_top", BlockGrid(8, 8, 4))
    with pytest.raises((BlockTooSmall, ExtentTooSmall)):
        extract(np.zeros((9, 12, 12), np.uint8), cfg)


def test_config_names_round_trip():
    for name in ("lbp-top-bl884-ol02", "hog-top-bl884-ol02-nb12", "higo-top-bl664-ol05-nb16", "lbp-top-bl882-ol03"):
        cfg = DescriptorConfig.parse(name)
        assert cfg.name == name
    a, b = DescriptorConfig.parse("higo-top-bl664-ol02-nb8"), DescriptorConfig.parse("higo-top-bl664-ol02-nb12")
    assert a.digest != b.digest and len(a.digest) == 16
    with pytest.raises(ValueError):
        DescriptorConfig.parse("sift-top-bl884-ol02")
    with pytest.raises(ValueError):
        DescriptorConfig("hog_top", nbins=10)


def test_feature_cache_round_trip(tmp_path, rng):
    X = rng.random((7, 24)).astype(np.float32)
    p = write_feature_cache(tmp_path / "f.mef", "0123456789abcdef", X)
    d, Y = read_feature_cache(p, "0123456789abcdef")
    assert d == "0123456789abcdef" and np.array_equal(X, Y)
    with pytest.raises(CacheFormatError):
        read_feature_cache(p, "ffffffffffffffff")
    p.write_bytes(p.read_bytes()[:-4])
    with pytest.raises(CacheFormatError):
        read_feature_cache(p)
