"""Joint dereverberation and noise reduction with an l_p-norm WPD convolutional beamformer."""

from .beamformer import BeamformerConfig, run_conventional_wpd, run_lp_wpd, stack, wpd_solve
from .errors import LpWpdError
from .metrics import fwssnr, seg_snr
from .pipeline import JobConfig, enhance, enhance_spectrum
from .rtf import NoiseMask, RtfVector, estimate_rtf
from .stft import AnalysisConfig, analyze, synthesize

__all__ = [
    "AnalysisConfig", "BeamformerConfig", "JobConfig", "LpWpdError", "NoiseMask", "RtfVector",
    "analyze", "enhance", "enhance_spectrum", "estimate_rtf", "fwssnr", "run_conventional_wpd",
    "run_lp_wpd", "seg_snr", "stack", "synthesize", "wpd_solve",
]
__version__ = "0.1.0"
