"""
Convolutional WPD beamformer with an l_p-norm cost, optimized by IRLS.

Per frequency bin, frames are (T, M).  The stacked observation keeps the
current frame and the past frames t-tau ... t-Lh+1, skipping the tau-1 most
recent ones so early reflections survive.  The filter minimizes the
weighted output power subject to h^H v_bar = 1; the weights are refreshed
from the output as w_t = 1 / |z_t|^(2-p).  p = 0 is the conventional
time-varying Gaussian WPD, where 1/w_t is the per-frame variance.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConstraint, InvalidConfig, InvalidInput
from .linalg import default_loading, solve_gram, solve_hpd, weighted_data

INITS = ("sc", "mc")


@dataclass(frozen=True)
class BeamformerConfig:
    tau: int = 4
    Lh: int = 12
    p: float = 0.5
    iterations: int = 10
    init: str = "mc"
    ref_mic: int = 0  # zero-based
    weight_floor: float = 1e-8  # relative to the RMS reference magnitude of the bin

    def __post_init__(self):
        if not 1 <= self.tau <= self.Lh:
            raise InvalidConfig(f"need 1 <= tau <= Lh, got tau={self.tau}, Lh={self.Lh}")
        if not 0 <= self.p <= 2:
            raise InvalidConfig(f"shape parameter p={self.p} outside [0, 2]")
        if self.iterations < 1:
            raise InvalidConfig("iterations must be >= 1")
        if self.init not in INITS:
            raise InvalidConfig(f"init must be one of {INITS}, got {self.init!r}")
        if self.ref_mic < 0:
            raise InvalidConfig("ref_mic must be non-negative")
        if not self.weight_floor > 0:
            raise InvalidConfig("weight_floor must be positive")

    @property
    def exponent(self):
        return 2.0 - self.p

    def stacked_dim(self, num_channels):
        return num_channels * (self.Lh - self.tau + 1)


@dataclass
class ConvFilter:
    h_bar: np.ndarray
    v_bar: np.ndarray

    @property
    def constraint_residual(self):
        return abs(np.vdot(self.h_bar, self.v_bar) - 1.0)


@dataclass
class IterationDiagnostics:
    lp_cost: float
    constraint_residual: float


@dataclass
class WpdResult:
    z: np.ndarray
    filter: ConvFilter
    diagnostics: list = field(default_factory=list)
    z_history: np.ndarray = None  # (iterations, T)
    h_history: np.ndarray = None  # (iterations, D)


def _bin_frames(frames):
    Y = np.asarray(frames, dtype=np.complex128)
    if Y.ndim != 2 or Y.shape[0] < 1 or Y.shape[1] < 1:
        raise InvalidInput("frames of one bin must be a (T, M) array")
    return Y


def lags(tau, Lh):
    """Frame lags covered by the stacked vector: 0, tau, tau+1, ..., Lh-1."""
    if not 1 <= tau <= Lh:
        raise InvalidConfig(f"need 1 <= tau <= Lh, got tau={tau}, Lh={Lh}")
    return [0] + list(range(tau, Lh))


def stack(frames, tau, Lh):
    """
    Arguments:
        frames: (T, M) frames of one bin
    Returns:
        D x T stacked matrix, D = M (Lh - tau + 1); frames before the
        start of the signal are zero
    """
    Y = _bin_frames(frames)
    T, M = Y.shape
    ls = lags(tau, Lh)
    Ybar = np.zeros((len(ls) * M, T), dtype=np.complex128)
    for j, lag in enumerate(ls):
        if lag < T:
            Ybar[j * M:(j + 1) * M, lag:] = Y[:T - lag].T
    return Ybar


def pad_rtf(v_tilde, tau, Lh):
    """v_bar = [v_tilde; 0] with M (Lh - tau) trailing zeros."""
    v = np.asarray(v_tilde, dtype=np.complex128)
    v_bar = np.zeros(v.size * (Lh - tau + 1), dtype=np.complex128)
    v_bar[:v.size] = v
    return v_bar


def magnitude_floor(frames, cfg):
    """Absolute floor for |z|: weight_floor times the RMS reference-channel magnitude."""
    Y = _bin_frames(frames)
    rms = np.sqrt(np.mean(np.abs(Y[:, cfg.ref_mic]) ** 2))
    # a silent bin has no meaningful scale; any positive floor will do
    return cfg.weight_floor * rms if rms > 0 else cfg.weight_floor


def init_weights(frames, cfg, floor=None):
    """
    Initial IRLS weights from the noisy input.

    sc: w_t = 1 / max(|y_{m,t}|, floor)^(2-p)
    mc: w_t = M / max(||y_t||, floor)^(2-p)
    """
    Y = _bin_frames(frames)
    if floor is None:
        floor = magnitude_floor(Y, cfg)
    if cfg.init == "sc":
        return 1.0 / np.maximum(np.abs(Y[:, cfg.ref_mic]), floor) ** cfg.exponent
    return Y.shape[1] / np.maximum(np.linalg.norm(Y, axis=1), floor) ** cfg.exponent


def update_weights(z, cfg, floor):
    """w_t = 1 / max(|z_t|, floor)^(2-p)."""
    return 1.0 / np.maximum(np.abs(z), floor) ** cfg.exponent


def lp_cost(z, p, floor):
    """
    Floored l_p cost (1/T) sum max(|z_t|, floor)^p.  For p = 0 this is
    replaced by its log limit (1/T) sum ln max(|z_t|, floor)^2, the
    variance-dependent part of the Gaussian negative log-likelihood.
    """
    mag = np.maximum(np.abs(z), floor)
    if p == 0:
        return float(np.mean(2.0 * np.log(mag)))
    return float(np.mean(mag ** p))


def _distortionless(x, v_bar):
    q = np.vdot(v_bar, x)
    if not abs(q) >= 1e-14:
        raise DegenerateConstraint(f"v^H R^-1 v = {q:.3g}")
    h = x / q
    # one rescale removes the rounding left in h^H v
    return h / np.conj(np.vdot(h, v_bar))


def mpdr(R, v_bar, loading=None, n_frames=None, level=None):
    """h = R^{-1} v / (v^H R^{-1} v) with a loaded Cholesky solve."""
    D = v_bar.size
    if loading is None:
        loading = default_loading(D, D if n_frames is None else n_frames)
    return _distortionless(solve_hpd(R, v_bar, loading, level), v_bar)


def mpdr_from_data(B, v_bar, loading=None, level=None):
    """MPDR filter for R = B B^H, solved from the square root B (D x T)."""
    D, T = B.shape
    if loading is None:
        loading = default_loading(D, T)
    return _distortionless(solve_gram(B, v_bar, loading, level), v_bar)


def wpd_solve(Ybar, weights, v_bar, loading=None):
    """
    Weighted MPDR on the stacked signal, h = R^{-1} v / (v^H R^{-1} v)
    with R = (1/T) sum_t w_t ybar_t ybar_t^H.

    Arguments:
        Ybar: D x T stacked frames
        weights: positive T-vector
        v_bar: zero-padded RTF, length D
    Returns:
        ConvFilter with h_bar^H v_bar = 1
    """
    v_bar = np.asarray(v_bar, dtype=np.complex128)
    if not np.any(v_bar):
        raise DegenerateConstraint("constraint vector is zero")
    B = weighted_data(Ybar, weights)
    h = mpdr_from_data(B, v_bar, loading, level=loading_level(Ybar, weights))
    return ConvFilter(h, v_bar)


def loading_level(Ybar, weights):
    """
    Diagonal reference for the loading: median weight times the mean
    unweighted power.  Unlike tr(R)/D it is not dominated by the few frames
    whose weight explodes as |z_t| -> 0, which would otherwise turn a tiny
    relative loading into a large bias on every other direction.
    """
    return float(np.median(weights)) * float(np.mean(np.abs(Ybar) ** 2))


def _check_inputs(Y, v_tilde, cfg):
    T, M = Y.shape
    if v_tilde.shape != (M,):
        raise InvalidInput(f"RTF has shape {v_tilde.shape}, expected ({M},)")
    if cfg.ref_mic >= M:
        raise InvalidConfig(f"ref_mic {cfg.ref_mic} out of range for {M} channels")
    D = cfg.stacked_dim(M)
    if T <= D:
        warnings.warn(f"only {T} frames for a {D}-dimensional stacked covariance", RuntimeWarning, stacklevel=3)


def _rtf_array(rtf):
    return np.asarray(getattr(rtf, "v_tilde", rtf), dtype=np.complex128)


def run_lp_wpd(frames, rtf, cfg=BeamformerConfig(), loading=None):
    """
    IRLS alternating optimization for one frequency bin.

    Iteration i solves the weighted MPDR problem with the current weights,
    filters, then refreshes the weights from the output.  Iteration 1 uses
    the weights from :func:`init_weights`.

    Arguments:
        frames: (T, M) frames of one bin
        rtf: RtfVector or complex M-vector normalized to cfg.ref_mic
    Returns:
        WpdResult with the final output, filter, per-iteration diagnostics
        and the output/filter after every iteration
    """
    Y = _bin_frames(frames)
    v_tilde = _rtf_array(rtf)
    _check_inputs(Y, v_tilde, cfg)
    floor = magnitude_floor(Y, cfg)
    Ybar = stack(Y, cfg.tau, cfg.Lh)
    v_bar = pad_rtf(v_tilde, cfg.tau, cfg.Lh)
    w = init_weights(Y, cfg, floor)
    return _iterate(Ybar, v_bar, w, cfg, floor, loading, wpd_solve, update_weights)


def _iterate(Ybar, v_bar, state, cfg, floor, loading, solve, refresh):
    diags, zs, hs = [], [], []
    filt = z = None
    for _ in range(cfg.iterations):
        filt = solve(Ybar, state, v_bar, loading)
        z = filt.h_bar.conj() @ Ybar
        diags.append(IterationDiagnostics(lp_cost(z, cfg.p, floor), filt.constraint_residual))
        zs.append(z)
        hs.append(filt.h_bar)
        state = refresh(z, cfg, floor)
    return WpdResult(z, filt, diags, np.array(zs), np.array(hs))


def _variance_solve(Ybar, lam, v_bar, loading):
    T = Ybar.shape[1]
    B = Ybar / np.sqrt(lam * T)
    level = float(np.median(1.0 / lam)) * float(np.mean(np.abs(Ybar) ** 2))
    return ConvFilter(mpdr_from_data(B, v_bar, loading, level), v_bar)


def _variance_update(z, cfg, floor):
    return np.maximum(np.abs(z), floor) ** 2


def run_conventional_wpd(frames, rtf, cfg=BeamformerConfig(p=0.0), loading=None):
    """
    Conventional WPD with the time-varying Gaussian model, written with
    per-frame variances lambda_t instead of weights.  Only cfg.p = 0 is
    meaningful; it exists as an independent route to the p = 0 IRLS result.
    """
    if cfg.p != 0:
        raise InvalidConfig("the variance-based path is the p = 0 case")
    Y = _bin_frames(frames)
    v_tilde = _rtf_array(rtf)
    _check_inputs(Y, v_tilde, cfg)
    floor = magnitude_floor(Y, cfg)
    if cfg.init == "sc":
        lam = np.maximum(np.abs(Y[:, cfg.ref_mic]), floor) ** 2
    else:
        lam = np.maximum(np.linalg.norm(Y, axis=1), floor) ** 2 / Y.shape[1]
    Ybar = stack(Y, cfg.tau, cfg.Lh)
    v_bar = pad_rtf(v_tilde, cfg.tau, cfg.Lh)
    return _iterate(Ybar, v_bar, lam, cfg, floor, loading, _variance_solve, _variance_update)
