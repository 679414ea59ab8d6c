import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpwpd.errors import DegenerateReference, InvalidMask
from lpwpd.linalg import hermitian, sample_cov
from lpwpd.rtf import NoiseMask, estimate_noise_cov, estimate_rtf, estimate_rtf_from_frames, noise_frame_mask
from lpwpd.stft import AnalysisConfig, num_frames

from oracles import noise_frames_by_enumeration

CFG = AnalysisConfig()


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def pd_with_condition(rng, n, cond):
    Q, _ = np.linalg.qr(crandn(rng, n, n))
    return hermitian(Q @ np.diag(np.geomspace(1, cond, n)) @ Q.conj().T)


def hermitian_angle_deg(a, b):
    c = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    return np.degrees(np.arccos(min(c, 1.0)))


class TestNoiseMask:
    def test_negative(self):
        with pytest.raises(InvalidMask):
            NoiseMask(-1, 75)

    @pytest.mark.parametrize("n_samples", [16000, 40000, 40077])
    def test_frame_selection_matches_enumeration(self, n_samples):
        T = num_frames(n_samples, CFG)
        sel = np.flatnonzero(noise_frame_mask(T, NoiseMask(), CFG, n_samples))
        expect = noise_frames_by_enumeration(T, n_samples, 3600, 1200, 512, 128)
        assert sel.tolist() == expect

    def test_head_count(self):
        # 225 ms = 3600 samples; frame t covers [128 t - 384, 128 t + 128)
        T = num_frames(32000, CFG)
        sel = noise_frame_mask(T, NoiseMask(225, 0), CFG, 32000)
        assert sel.sum() == len(noise_frames_by_enumeration(T, 32000, 3600, 0, 512, 128)) == 28

    def test_constant_frames(self):
        u = np.array([1.0, 1j, -0.5])
        c = 2 - 1j
        Y = np.tile(c * u, (200, 1))
        Rn = estimate_noise_cov(Y, NoiseMask(), CFG)
        np.testing.assert_allclose(Rn, abs(c) ** 2 * np.outer(u, u.conj()), atol=1e-12)

    def test_full_cover_equals_sample_cov(self):
        Y = crandn(np.random.default_rng(0), 50, 3)
        Rn = estimate_noise_cov(Y, NoiseMask(1e6, 0), CFG)
        np.testing.assert_allclose(Rn, sample_cov(Y.T), rtol=1e-14)

    def test_empty_selection(self):
        with pytest.raises(InvalidMask):
            estimate_noise_cov(np.ones((100, 2)), NoiseMask(0, 0), CFG)


class TestEstimateRtf:
    def test_identity_noise_rank_one_speech(self):
        u = np.array([1, 1j]) / np.sqrt(2)
        r = estimate_rtf(np.eye(2) + 4 * np.outer(u, u.conj()), np.eye(2), 0)
        np.testing.assert_allclose(r.v_tilde, [1, 1j], atol=1e-12)
        assert r.ref_mic == 0

    def test_no_speech_still_normalized(self):
        Rn = pd_with_condition(np.random.default_rng(1), 3, 10)
        r = estimate_rtf(Rn, Rn, 1)
        assert r.v_tilde[1] == 1
        assert np.all(np.isfinite(r.v_tilde))

    @pytest.mark.parametrize("seed", range(5))
    def test_exact_model_recovery(self, seed):
        rng = np.random.default_rng(seed)
        M = 4
        Rn = pd_with_condition(rng, M, 1e6)
        v = crandn(rng, M)
        Ry = Rn + 10 * np.outer(v, v.conj())
        for m in range(M):
            r = estimate_rtf(Ry, Rn, m)
            np.testing.assert_allclose(r.v_tilde, v / v[m], rtol=1e-8)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2 ** 20), alpha=st.floats(1e-3, 1e3), beta=st.floats(1e-3, 1e3))
    def test_scale_invariance(self, seed, alpha, beta):
        rng = np.random.default_rng(seed)
        Rn = pd_with_condition(rng, 3, 100)
        v = crandn(rng, 3)
        Ry = Rn + 3 * np.outer(v, v.conj()) + 0.1 * pd_with_condition(rng, 3, 10)
        a = estimate_rtf(Ry, Rn, 0).v_tilde
        b = estimate_rtf(alpha * Ry, beta * Rn, 0).v_tilde
        np.testing.assert_allclose(b, a, rtol=1e-9, atol=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2 ** 20), m=st.integers(0, 3))
    def test_reference_entry_exactly_one(self, seed, m):
        rng = np.random.default_rng(seed)
        A = crandn(rng, 4, 4)
        Rn = hermitian(A @ A.conj().T + np.eye(4))
        B = crandn(rng, 4, 4)
        r = estimate_rtf(Rn + hermitian(B @ B.conj().T), Rn, m)
        assert r.v_tilde[m] == 1 + 0j

    def test_degenerate_reference(self):
        v = np.array([0.0, 1.0, 1j])
        with pytest.raises(DegenerateReference):
            estimate_rtf(np.eye(3) + 100 * np.outer(v, v.conj()), np.eye(3), 0, loading=0)

    def test_sample_covariance_recovery(self):
        # 20 dB SNR, 500 frames; the first 60 are noise only
        rng = np.random.default_rng(7)
        angles = []
        for _ in range(20):
            M, T = 4, 500
            v = crandn(rng, M)
            s = crandn(rng, T)
            s[:60] = 0
            d = s[:, None] * v
            n = crandn(rng, T, M)
            n *= np.sqrt(np.mean(np.abs(d) ** 2) / np.mean(np.abs(n) ** 2) / 100)
            Y = d + n
            Ry = sample_cov(Y.T)
            Rn = sample_cov(Y[:60].T)
            angles.append(hermitian_angle_deg(estimate_rtf(Ry, Rn, 0).v_tilde, v))
        assert np.mean(angles) <= 5.0

    def test_from_frames(self):
        rng = np.random.default_rng(8)
        v = np.array([1.0, 0.5 - 0.5j])
        T = 300
        s = crandn(rng, T)
        mask = noise_frame_mask(T, NoiseMask(), CFG)
        s[mask] = 0
        Y = s[:, None] * v + 0.01 * crandn(rng, T, 2)
        r = estimate_rtf_from_frames(Y, NoiseMask(), CFG, 0)
        assert hermitian_angle_deg(r.v_tilde, v) < 1.0
