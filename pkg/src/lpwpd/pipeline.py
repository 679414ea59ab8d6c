"""
Batch driver: WAV in -> STFT -> per-bin (noise covariance, RTF, l_p-WPD)
-> resynthesis -> optional metrics.  Bins are independent and may run in a
thread pool; results are joined in bin order, so the output does not depend
on the degree of parallelism.
"""

import csv
import logging
import shlex
import subprocess
import tempfile
import time
import warnings
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .beamformer import BeamformerConfig, run_lp_wpd
from .errors import InvalidInput, SolverError
from .metrics import delta, evaluate
from .rtf import NoiseMask, estimate_rtf_from_frames
from .stft import AnalysisConfig, analyze, synthesize

log = logging.getLogger(__name__)

CSV_FIELDS = [
    "utterance", "p", "init", "iteration",
    "fwssnr_noisy", "fwssnr_enh", "delta_fwssnr",
    "seg_snr_noisy", "seg_snr_enh", "delta_seg_snr",
    "constraint_residual_max", "lp_cost_final",
]


@dataclass
class JobConfig:
    inputs: list
    output: str = None
    reference: str = None
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    beamformer: BeamformerConfig = field(default_factory=BeamformerConfig)
    mask: NoiseMask = field(default_factory=NoiseMask)
    p_values: list = None
    inits: list = None
    jobs: int = 1
    seed: int = 0
    utterance: str = None
    pesq_cmd: str = None


@dataclass
class RunRecord:
    config: dict
    num_channels: int
    num_bins: int
    num_frames: int
    stacked_dim: int
    failed_bins: int
    silent_bins: int
    failures: dict
    iterations: list  # per-iteration aggregates over processed bins
    metrics: dict = None
    timings: dict = None

    @property
    def warning_count(self):
        return self.failed_bins + self.silent_bins

    def to_dict(self):
        d = asdict(self)
        d["warning_count"] = self.warning_count
        return d


@dataclass
class SpectrumResult:
    z: np.ndarray  # (F, T)
    z_history: np.ndarray  # (I, F, T)
    status: list  # per bin: "ok", "silent" or the failing exception name
    costs: np.ndarray  # (I, F), nan for bins that were not processed
    residuals: np.ndarray  # (I, F)


# -- audio I/O ---------------------------------------------------------------

def read_audio(paths):
    """
    One multichannel WAV, or several mono WAVs taken in lexicographic order.

    Returns:
        (samples (N, M) float64, fs)
    """
    paths = sorted(str(p) for p in ([paths] if isinstance(paths, (str, Path)) else paths))
    if not paths:
        raise InvalidInput("no input files")
    chans, rates = [], set()
    for p in paths:
        fs, data = wavfile.read(p)
        rates.add(fs)
        data = _to_float(data)
        chans.append(data[:, None] if data.ndim == 1 else data)
    if len(rates) != 1:
        raise InvalidInput(f"inputs have different sample rates: {sorted(rates)}")
    lengths = {c.shape[0] for c in chans}
    if len(lengths) != 1:
        raise InvalidInput(f"inputs have different lengths: {sorted(lengths)}")
    return np.concatenate(chans, axis=1), rates.pop()


def _to_float(data):
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0
    if data.dtype == np.int32:
        return data.astype(np.float64) / 2147483648.0
    if data.dtype == np.uint8:
        return (data.astype(np.float64) - 128.0) / 128.0
    if data.dtype.kind == "f":
        return data.astype(np.float64)
    raise InvalidInput(f"unsupported WAV sample type {data.dtype}")


def write_wav(path, samples, fs):
    wavfile.write(str(path), fs, np.asarray(samples, dtype=np.float32))


# -- per-bin processing ------------------------------------------------------

def _process_bin(Yf, bf, mask, analysis, n_samples):
    if not np.any(Yf):
        return "silent", None, None, None
    try:
        rtf = estimate_rtf_from_frames(Yf, mask, analysis, bf.ref_mic, n_samples)
        res = run_lp_wpd(Yf, rtf, bf)
    except SolverError as exc:
        return type(exc).__name__, None, None, None
    if not np.all(np.isfinite(res.z_history)):
        return "NonFiniteOutput", None, None, None
    costs = np.array([d.lp_cost for d in res.diagnostics])
    resid = np.array([d.constraint_residual for d in res.diagnostics])
    return "ok", res.z_history, costs, resid


def enhance_spectrum(Y, bf=BeamformerConfig(), mask=NoiseMask(), analysis=AnalysisConfig(), n_samples=None, jobs=1):
    """
    Enhance every frequency bin of Y (F, T, M) independently.

    Bins that are entirely zero, or whose solver fails, pass the reference
    channel through unchanged.
    """
    Y = np.asarray(Y, dtype=np.complex128)
    F, T, M = Y.shape
    if M < 2:
        raise InvalidInput("RTF estimation needs at least two channels")
    if bf.ref_mic >= M:
        raise InvalidInput(f"reference mic {bf.ref_mic + 1} but only {M} channels")

    D = bf.stacked_dim(M)
    if T <= D:
        log.warning("only %d frames for a %d-dimensional stacked covariance", T, D)

    def work(f):
        return _process_bin(Y[f], bf, mask, analysis, n_samples)

    # filters are process-global, so set them once around the whole pool
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(work, range(F)))
        else:
            results = [work(f) for f in range(F)]

    I = bf.iterations
    hist = np.repeat(Y[None, :, :, bf.ref_mic], I, axis=0)
    costs = np.full((I, F), np.nan)
    resid = np.full((I, F), np.nan)
    status = []
    for f, (st, zh, c, r) in enumerate(results):
        status.append(st)
        if st == "ok":
            hist[:, f] = zh
            costs[:, f] = c
            resid[:, f] = r
    return SpectrumResult(hist[-1], hist, status, costs, resid)


# -- utterance level ---------------------------------------------------------

def _load_reference(path, fs):
    ref, rfs = read_audio([path])
    if rfs != fs:
        raise InvalidInput(f"reference sample rate {rfs} differs from input {fs}")
    return ref[:, 0]


def _run(job, bf):
    t0 = time.perf_counter()
    audio, fs = read_audio(job.inputs)
    if fs != job.analysis.fs:
        raise InvalidInput(f"input sample rate {fs} Hz differs from the configured {job.analysis.fs} Hz")
    if audio.shape[1] < 2:
        raise InvalidInput("need at least two microphone channels")
    t1 = time.perf_counter()
    Y = analyze(audio, job.analysis)
    spec = enhance_spectrum(Y, bf, job.mask, job.analysis, audio.shape[0], job.jobs)
    t2 = time.perf_counter()
    return audio, Y, spec, {"read_s": t1 - t0, "enhance_s": t2 - t1}


def _iteration_summary(spec):
    ok = [s == "ok" for s in spec.status]
    out = []
    for i in range(spec.costs.shape[0]):
        c, r = spec.costs[i, ok], spec.residuals[i, ok]
        out.append({
            "iteration": i + 1,
            "lp_cost_mean": float(np.mean(c)) if c.size else None,
            "constraint_residual_max": float(np.max(r)) if r.size else None,
        })
    return out


def _metric_pair(reference, noisy, enhanced, fs):
    m_noisy = evaluate(reference, noisy, fs)
    m_enh = evaluate(reference, enhanced, fs)
    return {
        "fwssnr_noisy": m_noisy.fwssnr_db,
        "fwssnr_enh": m_enh.fwssnr_db,
        "delta_fwssnr": delta(m_enh.fwssnr_db, m_noisy.fwssnr_db),
        "seg_snr_noisy": m_noisy.seg_snr_db,
        "seg_snr_enh": m_enh.seg_snr_db,
        "delta_seg_snr": delta(m_enh.seg_snr_db, m_noisy.seg_snr_db),
    }


def external_metric(cmd, reference, test, fs):
    """
    Run an external scorer (for example a PESQ binary).  cmd is a template
    with {ref} and {deg} placeholders for temporary WAV paths; the last
    number printed on stdout is returned.
    """
    with tempfile.TemporaryDirectory() as tmp:
        ref_p, deg_p = Path(tmp, "ref.wav"), Path(tmp, "deg.wav")
        write_wav(ref_p, reference, fs)
        write_wav(deg_p, test, fs)
        args = [a.format(ref=ref_p, deg=deg_p) for a in shlex.split(cmd)]
        out = subprocess.run(args, capture_output=True, text=True, check=True).stdout
    nums = [tok for tok in out.replace(",", " ").split() if _is_float(tok)]
    if not nums:
        raise InvalidInput(f"no score found in output of {args[0]!r}")
    return float(nums[-1])


def _is_float(tok):
    try:
        float(tok)
    except ValueError:
        return False
    return True


def enhance(job):
    """
    Returns:
        (enhanced samples (N,), RunRecord); the WAV is written when
        job.output is set
    """
    bf = job.beamformer
    audio, Y, spec, timings = _run(job, bf)
    fs = job.analysis.fs
    t0 = time.perf_counter()
    enhanced = synthesize(spec.z, job.analysis, length=audio.shape[0])
    timings["synthesize_s"] = time.perf_counter() - t0
    if job.output:
        write_wav(job.output, enhanced, fs)

    failures = defaultdict(int)
    for s in spec.status:
        if s not in ("ok", "silent"):
            failures[s] += 1
    metrics = None
    if job.reference:
        ref = _load_reference(job.reference, fs)
        noisy = audio[:, bf.ref_mic]
        metrics = _metric_pair(ref, noisy, enhanced, fs)
        if job.pesq_cmd:
            metrics["pesq_noisy"] = external_metric(job.pesq_cmd, ref, noisy, fs)
            metrics["pesq_enh"] = external_metric(job.pesq_cmd, ref, enhanced, fs)
            metrics["delta_pesq"] = delta(metrics["pesq_enh"], metrics["pesq_noisy"])
    M = audio.shape[1]
    record = RunRecord(
        config=_snapshot(job),
        num_channels=M,
        num_bins=Y.shape[0],
        num_frames=Y.shape[1],
        stacked_dim=bf.stacked_dim(M),
        failed_bins=sum(failures.values()),
        silent_bins=spec.status.count("silent"),
        failures=dict(failures),
        iterations=_iteration_summary(spec),
        metrics=metrics,
        timings=timings,
    )
    if record.warning_count:
        log.warning("%d bins fell back to the reference channel (%d silent, %d failed)",
                    record.warning_count, record.silent_bins, record.failed_bins)
    return enhanced, record


def all_bins_failed(record):
    """True when the solver failed on every bin that carried signal."""
    return record.failed_bins > 0 and record.failed_bins + record.silent_bins == record.num_bins


def _snapshot(job):
    d = asdict(job)
    d["inputs"] = [str(p) for p in job.inputs]
    return d


def sweep(job):
    """
    One row per (p, init, iteration) for the utterance; iteration k uses
    the output after k iterations of a single run with job.beamformer.iterations.
    """
    if not job.reference:
        raise InvalidInput("sweep needs a reference signal for the improvement metrics")
    ps = job.p_values or [job.beamformer.p]
    inits = job.inits or [job.beamformer.init]
    if not ps or not inits:
        raise InvalidInput("sweep lists must be non-empty")
    fs = job.analysis.fs
    utt = job.utterance or Path(sorted(map(str, job.inputs))[0]).stem
    rows = []
    ref = None
    for p in ps:
        for init in inits:
            bf = replace(job.beamformer, p=float(p), init=init)
            audio, _, spec, _ = _run(job, bf)
            if ref is None:
                ref = _load_reference(job.reference, fs)
            noisy = audio[:, bf.ref_mic]
            ok = np.array([s == "ok" for s in spec.status])
            for i in range(bf.iterations):
                enhanced = synthesize(spec.z_history[i], job.analysis, length=audio.shape[0])
                row = {"utterance": utt, "p": bf.p, "init": init, "iteration": i + 1}
                row.update(_metric_pair(ref, noisy, enhanced, fs))
                row["constraint_residual_max"] = float(np.max(spec.residuals[i, ok])) if ok.any() else float("nan")
                row["lp_cost_final"] = float(np.mean(spec.costs[i, ok])) if ok.any() else float("nan")
                rows.append(row)
    return rows


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in CSV_FIELDS})


def report(paths):
    """
    Average the improvement columns over utterances, one row per
    (p, init, iteration), every utterance weighted equally.
    """
    groups = defaultdict(list)
    for path in paths:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                groups[(float(row["p"]), row["init"], int(row["iteration"]))].append(row)
    out = []
    for (p, init, it) in sorted(groups):
        rows = groups[(p, init, it)]
        out.append({
            "p": p, "init": init, "iteration": it, "utterances": len(rows),
            "delta_fwssnr": float(np.mean([float(r["delta_fwssnr"]) for r in rows])),
            "delta_seg_snr": float(np.mean([float(r["delta_seg_snr"]) for r in rows])),
        })
    return out
