import numpy as np
import pytest

from lpwpd.errors import InvalidConfig
from lpwpd.rtf import NoiseMask, noise_frame_mask
from lpwpd.scene import CTFModel, exponential_ctf, make_scene, synth_ctf_scene, synth_sparse_source
from lpwpd.stft import AnalysisConfig

from oracles import direct_convolution


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def test_no_late_taps():
    rng = np.random.default_rng(0)
    taps = crandn(rng, 4, 2)
    Y, parts = synth_ctf_scene(crandn(rng, 100), CTFModel(taps), tau=4, noise_level=0.1)
    assert not np.any(parts.late)
    np.testing.assert_array_equal(Y, parts.desired + parts.noise)


def test_single_tap_noiseless():
    rng = np.random.default_rng(1)
    v = crandn(rng, 3)
    s = crandn(rng, 50)
    Y, parts = synth_ctf_scene(s, CTFModel(v[None, :]), tau=1)
    # exact up to the last-bit rounding of one complex product
    np.testing.assert_allclose(Y, s[:, None] * v, rtol=1e-15, atol=0)
    assert not np.any(parts.noise)


def test_matches_direct_convolution():
    rng = np.random.default_rng(2)
    taps = crandn(rng, 8, 3)
    s = crandn(rng, 60)
    _, parts = synth_ctf_scene(s, CTFModel(taps), tau=4)
    np.testing.assert_allclose(parts.desired + parts.late, direct_convolution(s, taps), atol=1e-12)
    np.testing.assert_allclose(parts.desired, direct_convolution(s, taps[:4]), atol=1e-12)


def test_exact_additivity_multibin():
    rng = np.random.default_rng(3)
    ctf = exponential_ctf(5, 6, 2, seed=3)
    Y, parts = synth_ctf_scene(crandn(rng, 5, 40), ctf, tau=2, noise_level=0.5, seed=9)
    assert Y.shape == (5, 40, 2)
    np.testing.assert_array_equal(Y - (parts.desired + parts.late + parts.noise), 0)


def test_noise_level_is_power_ratio():
    rng = np.random.default_rng(4)
    Y, parts = synth_ctf_scene(crandn(rng, 20000), CTFModel(crandn(rng, 3, 2)), tau=1, noise_level=0.01)
    speech = np.mean(np.abs(parts.desired + parts.late) ** 2)
    assert np.mean(np.abs(parts.noise) ** 2) / speech == pytest.approx(0.01, rel=0.03)


def test_seeded_noise():
    rng = np.random.default_rng(5)
    s, taps = crandn(rng, 30), crandn(rng, 2, 2)
    a = synth_ctf_scene(s, CTFModel(taps), 1, 0.1, seed=7)[0]
    b = synth_ctf_scene(s, CTFModel(taps), 1, 0.1, seed=7)[0]
    c = synth_ctf_scene(s, CTFModel(taps), 1, 0.1, seed=8)[0]
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_tau_beyond_taps():
    with pytest.raises(InvalidConfig):
        synth_ctf_scene(np.ones(10), CTFModel(np.ones((3, 2))), tau=4)


class TestSparseSource:
    def test_full_activity(self):
        assert np.all(synth_sparse_source(500, 1.0, seed=0) != 0)

    def test_half_activity(self):
        s = synth_sparse_source(1000, 0.5, seed=1)
        assert 0.45 <= np.mean(s == 0) <= 0.55

    def test_deterministic(self):
        a = synth_sparse_source(300, 0.3, seed=2)
        b = synth_sparse_source(300, 0.3, seed=2)
        assert a.tobytes() == b.tobytes()

    @pytest.mark.parametrize("a", [0, 1.5, -0.2])
    def test_bad_activity(self, a):
        with pytest.raises(InvalidConfig):
            synth_sparse_source(10, a)


def test_exponential_ctf_reference_tap():
    taps = exponential_ctf(4, 10, 3, ref_mic=1, seed=0).taps
    np.testing.assert_array_equal(taps[:, 0, 1], 1)
    np.testing.assert_allclose(np.abs(taps[:, 0, :]), 1)


def test_make_scene_keeps_noise_frames_speech_free():
    cfg = AnalysisConfig()
    Y, parts, ctf = make_scene(200, num_channels=2, seed=4)
    assert Y.shape == (257, 200, 2)
    mask = noise_frame_mask(200, NoiseMask(), cfg)
    assert not np.any(parts.desired[:, mask]) and not np.any(parts.late[:, mask])
    assert np.any(parts.desired[:, ~mask])
    Y2, _, _ = make_scene(200, num_channels=2, seed=4)
    assert Y.tobytes() == Y2.tobytes()
