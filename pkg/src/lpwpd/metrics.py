"""
Objective quality measures against a clean reference: frequency-weighted
segmental SNR (FWSSNR) and time-domain segmental SNR.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import correlate, get_window

from .errors import InvalidInput


@dataclass(frozen=True)
class FwssnrConfig:
    frame_ms: float = 25.0
    overlap: float = 0.75
    num_bands: int = 25
    gamma: float = 0.2
    snr_min: float = -10.0
    snr_max: float = 35.0


@dataclass
class MetricReport:
    fwssnr_db: float
    seg_snr_db: float
    per_frame: dict = None


def _frames(x, fs, cfg):
    n = int(round(cfg.frame_ms * 1e-3 * fs))
    hop = max(1, int(round(n * (1 - cfg.overlap))))
    if x.size < n:
        raise InvalidInput(f"signal shorter than one {cfg.frame_ms} ms frame")
    return sliding_window_view(x, n)[::hop], n


def mel_filterbank(num_bands, nfft, fs):
    """Triangular filters equally spaced on the mel scale between 0 and fs/2, shape (bands, nfft//2+1)."""
    def mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def hz(m):
        return 700.0 * (10 ** (m / 2595.0) - 1.0)

    edges = hz(np.linspace(0.0, mel(fs / 2), num_bands + 2))
    freqs = np.arange(nfft // 2 + 1) * fs / nfft
    fb = np.zeros((num_bands, freqs.size))
    for j in range(num_bands):
        lo, mid, hi = edges[j:j + 3]
        rise = (freqs - lo) / (mid - lo)
        fall = (hi - freqs) / (hi - mid)
        fb[j] = np.clip(np.minimum(rise, fall), 0.0, None)
    return fb


def _check_pair(reference, test):
    ref = np.asarray(reference, dtype=np.float64)
    tst = np.asarray(test, dtype=np.float64)
    if ref.ndim != 1 or tst.ndim != 1:
        raise InvalidInput("metrics take mono signals")
    if ref.shape != tst.shape:
        raise InvalidInput(f"length mismatch: {ref.size} vs {tst.size}")
    if not np.any(ref):
        raise InvalidInput("reference is all zeros")
    if not (np.all(np.isfinite(ref)) and np.all(np.isfinite(tst))):
        raise InvalidInput("non-finite samples")
    return ref, tst


def fwssnr_frames(reference, test, fs=16000, cfg=FwssnrConfig()):
    """Per-frame FWSSNR scores in dB; frames with a silent reference are dropped."""
    ref, tst = _check_pair(reference, test)
    rf, n = _frames(ref, fs, cfg)
    tf, _ = _frames(tst, fs, cfg)
    nfft = 1 << int(np.ceil(np.log2(n)))
    win = get_window("hann", n)
    fb = mel_filterbank(cfg.num_bands, nfft, fs)
    R = np.abs(np.fft.rfft(rf * win, n=nfft)) @ fb.T
    X = np.abs(np.fft.rfft(tf * win, n=nfft)) @ fb.T
    err = (R - X) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = 10 * np.log10(R ** 2 / err)
    # exact match in a band means unbounded SNR
    snr[err == 0] = cfg.snr_max
    snr = np.clip(snr, cfg.snr_min, cfg.snr_max)
    W = R ** cfg.gamma
    wsum = W.sum(axis=1)
    keep = wsum > 0
    # written as a shortfall from the ceiling so a perfect match scores exactly snr_max
    shortfall = (W[keep] * (cfg.snr_max - snr[keep])).sum(axis=1) / wsum[keep]
    return cfg.snr_max - shortfall


def fwssnr(reference, test, fs=16000, cfg=FwssnrConfig()):
    """Frequency-weighted segmental SNR in dB (mean of clipped per-frame scores)."""
    return float(np.mean(fwssnr_frames(reference, test, fs, cfg)))


def seg_snr_frames(reference, test, fs=16000, cfg=FwssnrConfig()):
    ref, tst = _check_pair(reference, test)
    rf, _ = _frames(ref, fs, cfg)
    tf, _ = _frames(tst, fs, cfg)
    sig = np.sum(rf ** 2, axis=1)
    err = np.sum((rf - tf) ** 2, axis=1)
    keep = sig > 0
    with np.errstate(divide="ignore"):
        snr = 10 * np.log10(sig[keep] / err[keep])
    return np.clip(snr, cfg.snr_min, cfg.snr_max)


def seg_snr(reference, test, fs=16000, cfg=FwssnrConfig()):
    """Time-domain segmental SNR in dB with the same framing and clipping as FWSSNR."""
    return float(np.mean(seg_snr_frames(reference, test, fs, cfg)))


def align(reference, test, fs=16000, max_ms=32.0):
    """
    Shift test by the lag in +-max_ms that maximizes its cross-correlation
    with the reference; both are trimmed to their common support.

    Returns:
        (reference, test, lag) with lag > 0 meaning test was delayed
    """
    ref = np.asarray(reference, dtype=np.float64)
    tst = np.asarray(test, dtype=np.float64)
    max_lag = int(round(max_ms * 1e-3 * fs))
    xc = correlate(tst, ref, mode="full", method="direct" if ref.size < 4096 else "fft")
    zero = ref.size - 1
    lo, hi = max(0, zero - max_lag), min(xc.size, zero + max_lag + 1)
    lag = int(np.argmax(xc[lo:hi])) + lo - zero
    if lag > 0:
        tst = tst[lag:]
    elif lag < 0:
        ref = ref[-lag:]
    n = min(ref.size, tst.size)
    return ref[:n], tst[:n], lag


def evaluate(reference, test, fs=16000, do_align=True, cfg=FwssnrConfig(), per_frame=False):
    """MetricReport of test against reference, optionally after alignment."""
    ref, tst = np.asarray(reference, dtype=np.float64), np.asarray(test, dtype=np.float64)
    if do_align:
        ref, tst, _ = align(ref, tst, fs)
    else:
        n = min(ref.size, tst.size)
        ref, tst = ref[:n], tst[:n]
    fw = fwssnr_frames(ref, tst, fs, cfg)
    sg = seg_snr_frames(ref, tst, fs, cfg)
    frames = {"fwssnr_db": fw, "seg_snr_db": sg} if per_frame else None
    return MetricReport(float(np.mean(fw)), float(np.mean(sg)), frames)


def delta(metric_enhanced, metric_noisy):
    """Improvement of the enhanced signal over the unprocessed one."""
    return metric_enhanced - metric_noisy
