"""
Blind RTF estimation by covariance whitening, and noise covariance
estimation from declared noise-only intervals at the start/end of a recording.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DegenerateReference, InvalidInput, InvalidMask, NotPositiveDefinite
from .linalg import DEFAULT_LOADING, RANK_DEFICIENT_LOADING, cholesky, hermitian, principal_eigvec, sample_cov
from .stft import AnalysisConfig, frame_starts


@dataclass(frozen=True)
class NoiseMask:
    head_ms: float = 225.0
    tail_ms: float = 75.0

    def __post_init__(self):
        if self.head_ms < 0 or self.tail_ms < 0:
            raise InvalidMask("noise intervals must be non-negative")


@dataclass(frozen=True)
class RtfVector:
    v_tilde: np.ndarray
    ref_mic: int  # zero-based channel index


def noise_frame_mask(n_frames, mask, cfg=AnalysisConfig(), n_samples=None):
    """
    Boolean selector of noise-only frames.

    A frame counts as noise-only when the part of its support that lies
    inside the signal (the rest is edge padding) falls entirely within the
    head interval [0, head) or the tail interval [N - tail, N).  When
    n_samples is unknown it is taken as the largest length consistent with
    n_frames.
    """
    if n_samples is None:
        n_samples = (n_frames - 1) * cfg.hop + cfg.frame_len - 2 * cfg.pad
    head = int(round(mask.head_ms * 1e-3 * cfg.fs))
    tail = int(round(mask.tail_ms * 1e-3 * cfg.fs))
    start = np.maximum(frame_starts(n_frames, cfg), 0)
    end = np.minimum(frame_starts(n_frames, cfg) + cfg.frame_len, n_samples)
    nonempty = end > start
    in_head = end <= head
    in_tail = start >= n_samples - tail
    return nonempty & (in_head | in_tail)


def estimate_noise_cov(frames, mask=NoiseMask(), cfg=AnalysisConfig(), n_samples=None):
    """
    Arguments:
        frames: complex (T, M) STFT frames of one frequency bin
        mask: NoiseMask declaring the noise-only head/tail durations
    Returns:
        M x M sample covariance over the noise-only frames
    """
    Y = np.asarray(frames)
    if Y.ndim != 2:
        raise InvalidInput("frames must be (T, M) for a single bin")
    sel = noise_frame_mask(Y.shape[0], mask, cfg, n_samples)
    if not sel.any():
        raise InvalidMask("noise mask selects no frames")
    return sample_cov(Y[sel].T)


def estimate_rtf(Ry, Rn, ref_mic=0, loading=None, eig_tol=1e-12):
    """
    Covariance whitening: whiten Ry with the Cholesky factor of Rn, take
    the principal eigenvector, de-whiten and normalize to the reference mic.

    With loading=None, Rn is factored as is and only loaded (by
    DEFAULT_LOADING) if it is not numerically positive definite.  Any
    loading is added to both matrices so that Ry - Rn is unchanged.
    """
    Ry = hermitian(Ry)
    Rn = hermitian(Rn)
    M = Ry.shape[0]
    if Rn.shape != (M, M):
        raise InvalidInput(f"Ry is {Ry.shape} but Rn is {Rn.shape}")
    if not 0 <= ref_mic < M:
        raise InvalidInput(f"ref_mic {ref_mic} out of range for {M} channels")
    if loading is None:
        try:
            L = cholesky(Rn)
            diag_load = 0.0
        except NotPositiveDefinite:
            loading = DEFAULT_LOADING
    if loading is not None:
        diag_load = loading * np.trace(Rn).real / M * np.eye(M)
        L = cholesky(Rn + diag_load)
    # W = L^{-H} Ry L^{-1}; the second solve uses (L^{-H} Ry)^H = Ry L^{-1}
    X = solve_triangular(L, Ry + diag_load, trans="C", lower=True)
    W = hermitian(solve_triangular(L, X.conj().T, trans="C", lower=True))
    v_dot, _ = principal_eigvec(W, tol=eig_tol)
    v = L.conj().T @ v_dot
    if abs(v[ref_mic]) < 1e-12 * np.linalg.norm(v):
        raise DegenerateReference(f"reference entry vanishes (|v_m| = {abs(v[ref_mic]):.3g})")
    v_tilde = v / v[ref_mic]
    v_tilde[ref_mic] = 1.0
    return RtfVector(v_tilde, ref_mic)


def estimate_rtf_from_frames(frames, mask=NoiseMask(), cfg=AnalysisConfig(), ref_mic=0, n_samples=None):
    """Ry over all frames, Rn over the masked frames, then :func:`estimate_rtf`."""
    Y = np.asarray(frames)
    Ry = sample_cov(Y.T)
    Rn = estimate_noise_cov(Y, mask, cfg, n_samples)
    n_noise = int(noise_frame_mask(Y.shape[0], mask, cfg, n_samples).sum())
    # fewer noise frames than channels: Rn is singular, load it up front
    loading = RANK_DEFICIENT_LOADING if n_noise < Y.shape[1] else None
    return estimate_rtf(Ry, Rn, ref_mic, loading=loading)
