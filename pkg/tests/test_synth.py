import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarpipe.mosaic import MosaicLayout, split_planes
from polarpipe.pipeline import extract_frame
from polarpipe.stokes import ChannelStack, stokes_from_intensities
from polarpipe.synth import (
    RegionSpec,
    SceneSpec,
    TruthPlanes,
    bake_truth,
    interior_mask,
    load_scene,
    mosaicize,
    polarizer_intensity,
    read_truth,
    write_truth,
)


def uniform_truth(h, w, s0, s1=0.0, s2=0.0):
    planes = [{ch: np.full((h, w), v, dtype=float) for ch in "RGBM"} for v in (s0, s1, s2)]
    d = math.hypot(s1, s2) / s0 if s0 else 0.0
    return TruthPlanes(*planes, np.full((h, w), d), np.zeros((h, w)), np.zeros((h, w), np.int32))


def test_polarizer_examples():
    for phi in (0, 30, 45, 90, 135, 170):
        assert polarizer_intensity(1, 0, 0, phi) == pytest.approx(0.5, abs=1e-15)
    assert [polarizer_intensity(1, 1, 0, p) for p in (0, 45, 90, 135)] == [1, 0.5, 0, 0.5]
    ints = [polarizer_intensity(1, 0.3, 0.4, p) for p in (0, 45, 90, 135)]
    s = stokes_from_intensities(ChannelStack(*(np.array([v]) for v in ints)))
    assert (s.s0[0], s.s1[0], s.s2[0]) == pytest.approx((1, 0.3, 0.4), abs=1e-15)


def test_polarizer_rejects_unphysical():
    with pytest.raises(ValueError, match="unphysical"):
        polarizer_intensity(1, 0.8, 0.8, 0)


@settings(max_examples=200, deadline=None)
@given(s0=st.floats(0.01, 2), a=st.floats(0, 180, exclude_max=True), phi=st.floats(0, 180))
def test_malus_law(s0, a, phi):
    s1 = s0 * math.cos(math.radians(2 * a))
    s2 = s0 * math.sin(math.radians(2 * a))
    expected = s0 * math.cos(math.radians(phi - a)) ** 2
    assert polarizer_intensity(s0, s1, s2, phi) == pytest.approx(expected, abs=1e-12)


def test_bake_truth_examples():
    spec = SceneSpec(
        8, 8, RegionSpec((0.5, 0.5, 0.5), 1.0, 0.0), (RegionSpec((0.2, 0.4, 0.6), 0.0, 0.0, (2, 2, 4, 4)),)
    )
    t = bake_truth(spec)
    for ch in "RGB":
        assert t.s0[ch][0, 0] == 1 and t.s1[ch][0, 0] == 1 and t.s2[ch][0, 0] == 0
        assert np.all(t.s1[ch][2:6, 2:6] == 0) and np.all(t.s2[ch][2:6, 2:6] == 0)
    assert t.labels[3, 3] == 1 and t.labels[0, 0] == 0
    assert t.s0["M"][3, 3] == pytest.approx(2 * (0.299 * 0.2 + 0.587 * 0.4 + 0.114 * 0.6))


@settings(max_examples=50, deadline=None)
@given(d=st.floats(0, 1), a=st.floats(0, 180, exclude_max=True), g=st.floats(0, 1))
def test_truth_invariant(d, a, g):
    t = bake_truth(SceneSpec(2, 2, RegionSpec((g, g / 2, g / 3), d, a)))
    for ch in "RGBM":
        lhs = t.s1[ch] ** 2 + t.s2[ch] ** 2
        np.testing.assert_allclose(lhs, (d * t.s0[ch]) ** 2, rtol=1e-12, atol=1e-15)


def test_scene_validation():
    with pytest.raises(ValueError):
        SceneSpec(7, 8)
    with pytest.raises(ValueError, match="outside"):
        SceneSpec(8, 8, regions=(RegionSpec(rect=(4, 4, 8, 2)),))
    with pytest.raises(ValueError):
        RegionSpec(dolp=1.5)
    with pytest.raises(ValueError):
        RegionSpec(aolp_deg=180)


def test_scene_json_roundtrip(tmp_path):
    spec = SceneSpec(16, 8, RegionSpec((0.1, 0.2, 0.3), 0.4, 50.0), (RegionSpec((0.3, 0.3, 0.3), 0.9, 170.0, (0, 0, 4, 4)),))
    (tmp_path / "s.json").write_text(json.dumps(spec.to_json()))
    assert load_scene(tmp_path / "s.json") == spec


def test_mosaicize_gray_codes():
    # truth S0 = 0.5, unpolarized: every analyser passes half, 0.25 * 255 -> 64
    raw = mosaicize(uniform_truth(4, 4, 0.5), bit_depth=8)
    assert raw.pixels.shape == (8, 8)
    assert np.all(raw.pixels == 64)


def test_mosaicize_crossed_filter_extinction():
    spec = SceneSpec(4, 4, RegionSpec((0.5, 0.5, 0.5), 1.0, 0.0))
    raw = mosaicize(bake_truth(spec), bit_depth=8)
    planes = split_planes(raw)
    assert np.all(planes[0] == 255) and np.all(planes[90] == 0)
    assert np.all(planes[45] == 128) and np.all(planes[135] == 128)


def test_mosaicize_respects_layout_and_bayer():
    spec = SceneSpec(4, 4, RegionSpec((0.1, 0.3, 0.45), 0.0, 0.0))
    lay = MosaicLayout.parse("0,45,90,135")
    raw = mosaicize(bake_truth(spec), lay, 16)
    full = 65535
    expect = {0: 0.1, 1: 0.3, 2: 0.45}
    for r in range(4):
        for c in range(4):
            color = {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 2}[(r % 2, c % 2)]
            quad = raw.pixels[2 * r : 2 * r + 2, 2 * c : 2 * c + 2]
            assert np.all(quad == math.floor(expect[color] * full + 0.5))


def test_seeded_noise_is_reproducible():
    t = uniform_truth(8, 8, 0.8, 0.2, 0.1)
    a = mosaicize(t, bit_depth=16, noise_sigma=0.01, seed=7)
    b = mosaicize(t, bit_depth=16, noise_sigma=0.01, seed=7)
    c = mosaicize(t, bit_depth=16, noise_sigma=0.01, seed=8)
    assert a.pixels.tobytes() == b.pixels.tobytes()
    assert a.pixels.tobytes() != c.pixels.tobytes()
    with pytest.raises(ValueError, match="seed"):
        mosaicize(t, noise_sigma=0.01)


def test_truth_pfm_roundtrip(tmp_path):
    spec = SceneSpec(8, 6, RegionSpec((0.1, 0.2, 0.3), 0.4, 50.0), (RegionSpec((0.3, 0.3, 0.3), 0.9, 170.0, (2, 2, 4, 2)),))
    t = bake_truth(spec)
    write_truth(t, tmp_path)
    back = read_truth(tmp_path)
    np.testing.assert_array_equal(back.labels, t.labels)
    np.testing.assert_allclose(back.dolp, t.dolp, rtol=1e-7)
    np.testing.assert_allclose(back.s2["M"], t.s2["M"], rtol=1e-6, atol=1e-7)


def test_interior_mask():
    labels = np.zeros((20, 20), np.int32)
    labels[8:12, 8:12] = 1
    m = interior_mask(labels, 2)
    assert not m[7, 7] and not m[9, 9] and not m[13, 10]
    assert m[0, 0] and m[14, 14] and m[5, 10]


def test_round_trip_dolp_03_aolp_70():
    spec = SceneSpec(32, 32, RegionSpec((0.3, 0.4, 0.2), 0.3, 70.0))
    truth = bake_truth(spec)
    planes = extract_frame(mosaicize(truth, bit_depth=16), ("mono",), keep_planes=True).planes
    assert np.max(np.abs(planes["dolp"] - 0.3)) <= 2 / 65536
    assert np.max(np.abs(planes["aolp"] - 70.0)) <= 0.5
