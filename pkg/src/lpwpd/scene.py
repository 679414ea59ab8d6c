"""
Synthetic multichannel scenes generated directly in the STFT domain under
the convolutive transfer function (CTF) model

    y_t = sum_{l < tau} a_l s_{t-l}  +  sum_{l >= tau} a_l s_{t-l}  +  n_t
          (desired d_t)               (late reverberation r_t)

so the ground-truth decomposition is exact and known.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, InvalidInput
from .rtf import NoiseMask, noise_frame_mask
from .stft import AnalysisConfig


@dataclass
class CTFModel:
    taps: np.ndarray  # (F, La, M), or (La, M) for a single bin

    def __post_init__(self):
        self.taps = np.asarray(self.taps, dtype=np.complex128)
        if self.taps.ndim not in (2, 3) or self.taps.shape[-2] < 1:
            raise InvalidInput("CTF taps must be (F, La, M) or (La, M) with La >= 1")
        if not np.all(np.isfinite(self.taps)):
            raise InvalidInput("CTF taps must be finite")

    @property
    def La(self):
        return self.taps.shape[-2]


@dataclass
class SceneComponents:
    desired: np.ndarray  # (F, T, M)
    late: np.ndarray
    noise: np.ndarray
    clean: np.ndarray  # (F, T) source s_t
    mixture: np.ndarray


def _convolve(source, taps, lags):
    # source (F, T), taps (F, La, M) -> (F, T, M)
    F, T = source.shape
    out = np.zeros((F, T, taps.shape[2]), dtype=np.complex128)
    for l in lags:
        if l < T:
            out[:, l:, :] += taps[:, l, None, :] * source[:, :T - l, None]
    return out


def synth_ctf_scene(source, ctf, tau, noise_level=0.0, seed=0):
    """
    Arguments:
        source: clean source s_t, (F, T) or (T,) for a single bin
        ctf: CTFModel with matching F
        tau: frames assigned to the desired component
        noise_level: noise-to-reverberant-speech power ratio over the whole
            mixture (linear; 0.01 is 20 dB SNR)
        seed: seed of the white complex Gaussian noise
    Returns:
        (mixture, SceneComponents), arrays shaped (F, T, M) or (T, M)
    """
    s = np.asarray(source, dtype=np.complex128)
    single = s.ndim == 1
    taps = ctf.taps
    if single:
        s = s[None]
    if taps.ndim == 2:
        taps = taps[None]
    if s.shape[0] != taps.shape[0]:
        raise InvalidInput(f"source has {s.shape[0]} bins, CTF has {taps.shape[0]}")
    La = taps.shape[1]
    if not 1 <= tau <= La:
        raise InvalidConfig(f"need 1 <= tau <= La, got tau={tau}, La={La}")
    if noise_level < 0:
        raise InvalidConfig("noise_level must be non-negative")

    desired = _convolve(s, taps, range(tau))
    late = _convolve(s, taps, range(tau, La))
    rng = np.random.default_rng(seed)
    shape = desired.shape
    noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    speech_power = np.mean(np.abs(desired + late) ** 2)
    noise = noise * np.sqrt(noise_level * speech_power)
    mixture = desired + late + noise

    parts = SceneComponents(desired, late, noise, s, mixture)
    if single:
        parts = SceneComponents(desired[0], late[0], noise[0], s[0], mixture[0])
    return parts.mixture, parts


def synth_sparse_source(T, activity=0.5, seed=0):
    """Unit-variance complex Gaussian sequence with round((1-activity) T) frames zeroed."""
    if T < 1:
        raise InvalidInput("T must be >= 1")
    if not 0 < activity <= 1:
        raise InvalidConfig(f"activity must lie in (0, 1], got {activity}")
    rng = np.random.default_rng(seed)
    s = (rng.standard_normal(T) + 1j * rng.standard_normal(T)) / np.sqrt(2)
    n_zero = int(round((1 - activity) * T))
    s[rng.choice(T, size=n_zero, replace=False)] = 0
    return s


def exponential_ctf(num_bins, La, num_channels, decay_db=1.0, early_gain=0.5, late_gain=0.5, ref_mic=0, seed=0,
                    early_taps=4):
    """
    Random CTF whose direct tap has unit modulus per microphone (exactly 1
    at the reference), followed by complex Gaussian taps under an
    exponential envelope falling decay_db per frame.  Taps 1..early_taps-1
    are scaled by early_gain, the rest by late_gain.
    """
    rng = np.random.default_rng(seed)
    F, M = num_bins, num_channels
    taps = np.zeros((F, La, M), dtype=np.complex128)
    taps[:, 0, :] = np.exp(2j * np.pi * rng.random((F, M)))
    taps[:, 0, :] /= taps[:, 0, ref_mic:ref_mic + 1]
    for l in range(1, La):
        gain = 10 ** (-decay_db * l / 20)
        gain *= early_gain if l < early_taps else late_gain
        g = (rng.standard_normal((F, M)) + 1j * rng.standard_normal((F, M))) / np.sqrt(2)
        taps[:, l, :] = gain * g
    return CTFModel(taps)


def make_scene(num_frames, num_channels=2, La=12, tau=4, activity=0.5, snr_db=20.0,
               cfg=AnalysisConfig(), mask=NoiseMask(), seed=0, **ctf_kwargs):
    """
    Full-band scene with a sparse source that is silent over the declared
    noise-only head/tail intervals (and long enough before the tail that no
    late reverberation leaks into it).

    Returns:
        (mixture (F, T, M), SceneComponents, CTFModel)
    """
    ss = np.random.SeedSequence(seed)
    src_seed, ctf_seed, noise_seed = (int(c.generate_state(1)[0]) for c in ss.spawn(3))
    F, T = cfg.num_bins, num_frames
    seeds = np.random.SeedSequence(src_seed).generate_state(F)
    source = np.stack([synth_sparse_source(T, activity, int(k)) for k in seeds])

    noisy_only = noise_frame_mask(T, mask, cfg)
    idx = np.flatnonzero(noisy_only)
    head_end = idx[idx < T // 2].max() + 1 if np.any(idx < T // 2) else 0
    tail_start = idx[idx >= T // 2].min() if np.any(idx >= T // 2) else T
    source[:, :head_end] = 0
    source[:, max(tail_start - La, head_end):] = 0

    ctf = exponential_ctf(F, La, num_channels, seed=ctf_seed, **ctf_kwargs)
    mixture, parts = synth_ctf_scene(source, ctf, tau, 10 ** (-snr_db / 10), noise_seed)
    return mixture, parts, ctf
