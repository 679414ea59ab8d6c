"""
STFT analysis / weighted overlap-add synthesis.

Layout: time-domain audio is (num_samples, num_channels) like a WAV array;
spectral frames are complex (F, T, M) with F = frame_len // 2 + 1.

Edge policy: frame_len - hop zeros are padded at both ends (plus up to
hop - 1 extra zeros at the end so the last frame fits exactly), so every
input sample is covered by the full window overlap and the round trip is
exact over the whole signal.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigMismatch, InvalidConfig, InvalidInput

WINDOWS = ("sqrt_hann",)


@dataclass(frozen=True)
class AnalysisConfig:
    frame_len: int = 512
    hop: int = 128
    window: str = "sqrt_hann"
    fs: int = 16000

    def __post_init__(self):
        if self.hop < 1 or self.frame_len < 1:
            raise InvalidConfig("frame_len and hop must be positive")
        if self.frame_len & (self.frame_len - 1):
            raise InvalidConfig(f"frame_len={self.frame_len} is not a power of two")
        if self.frame_len % self.hop:
            raise InvalidConfig(f"hop={self.hop} does not divide frame_len={self.frame_len}")
        if self.window not in WINDOWS:
            raise InvalidConfig(f"unknown window {self.window!r}")
        if self.fs <= 0:
            raise InvalidConfig("fs must be positive")

    @property
    def num_bins(self):
        return self.frame_len // 2 + 1

    @property
    def pad(self):
        return self.frame_len - self.hop


def window(cfg):
    """Square root of the periodic Hann window."""
    n = np.arange(cfg.frame_len)
    hann = 0.5 - 0.5 * np.cos(2 * np.pi * n / cfg.frame_len)
    return np.sqrt(hann)


def num_frames(num_samples, cfg):
    """Frame count produced by :func:`analyze` for a signal of this length."""
    padded = num_samples + 2 * cfg.pad
    return -(-(padded - cfg.frame_len) // cfg.hop) + 1


def frame_starts(n_frames, cfg):
    """First sample of every frame, in original (unpadded) signal coordinates."""
    return np.arange(n_frames) * cfg.hop - cfg.pad


def analyze(audio, cfg=AnalysisConfig()):
    """
    Arguments:
        audio: real samples, shape (N,) or (N, M)
        cfg: AnalysisConfig
    Returns:
        complex spectral frames, shape (F, T, M); a 1-D input gives M = 1
    """
    x = np.asarray(audio, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.size == 0:
        raise InvalidInput("audio must be a non-empty (samples, channels) array")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("audio contains NaN or infinite samples")
    n = x.shape[0]
    if n < cfg.frame_len:
        raise InvalidInput(f"need at least {cfg.frame_len} samples, got {n}")
    T = num_frames(n, cfg)
    total = (T - 1) * cfg.hop + cfg.frame_len
    xp = np.zeros((total, x.shape[1]))
    xp[cfg.pad:cfg.pad + n] = x
    # (T, M, frame_len)
    segs = sliding_window_view(xp, cfg.frame_len, axis=0)[::cfg.hop]
    spec = np.fft.rfft(segs * window(cfg), axis=-1)
    return np.ascontiguousarray(spec.transpose(2, 0, 1))


def synthesize(frames, cfg=AnalysisConfig(), length=None):
    """
    Weighted overlap-add with the sqrt-Hann synthesis window.

    Arguments:
        frames: complex (F, T, M), or (F, T) for a single channel
        length: trim the output to this many samples (original signal length)
    Returns:
        real samples, (N, M) or (N,) matching the input rank
    """
    Z = np.asarray(frames)
    mono = Z.ndim == 2
    if mono:
        Z = Z[:, :, None]
    if Z.ndim != 3:
        raise InvalidInput("frames must be (F, T, M) or (F, T)")
    F, T, M = Z.shape
    if F != cfg.num_bins:
        raise ConfigMismatch(f"{F} bins but frame_len={cfg.frame_len} implies {cfg.num_bins}")
    win = window(cfg)
    segs = np.fft.irfft(Z.transpose(1, 2, 0), n=cfg.frame_len, axis=-1) * win
    total = (T - 1) * cfg.hop + cfg.frame_len
    out = np.zeros((total, M))
    env = np.zeros(total)
    for t in range(T):
        s = t * cfg.hop
        out[s:s + cfg.frame_len] += segs[t].T
        env[s:s + cfg.frame_len] += win ** 2
    nz = env > 1e-10
    out[nz] /= env[nz][:, None]
    out = out[cfg.pad:total - cfg.pad]
    if length is not None:
        out = out[:length]
    return out[:, 0] if mono else out
