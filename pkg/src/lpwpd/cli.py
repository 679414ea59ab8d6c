"""
Command line interface.

    lpwpd enhance --in mics.wav --out enhanced.wav [--ref clean.wav] ...
    lpwpd sweep --config sweep.cfg --out-csv results.csv
    lpwpd report --csv a.csv b.csv

Exit codes: 0 success, 1 input error, 2 solver failure on every bin.
"""

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .beamformer import BeamformerConfig
from .errors import InvalidInput, LpWpdError
from .pipeline import JobConfig, all_bins_failed, enhance, report, sweep, write_csv
from .rtf import NoiseMask
from .stft import AnalysisConfig

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2


def _add_algorithm_args(p):
    p.add_argument("--p", type=float, default=0.5, help="shape parameter; 0 = conventional WPD")
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--init", choices=["sc", "mc"], default="mc")
    p.add_argument("--tau", type=int, default=4, help="prediction delay in frames")
    p.add_argument("--lh", type=int, default=12, help="filter length in frames")
    p.add_argument("--ref-mic", type=int, default=1, help="reference microphone, 1-based")
    p.add_argument("--noise-head-ms", type=float, default=225.0)
    p.add_argument("--noise-tail-ms", type=float, default=75.0)
    p.add_argument("--frame-len", type=int, default=512)
    p.add_argument("--hop", type=int, default=128)
    p.add_argument("--fs", type=int, default=16000)
    p.add_argument("--jobs", type=int, default=1, help="frequency bins processed concurrently")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="lpwpd", description="l_p-norm WPD dereverberation and denoising")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="enhance one utterance")
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   help="one multichannel WAV or several mono WAVs (sorted by name)")
    p.add_argument("--out", required=True)
    p.add_argument("--ref", help="clean reference WAV for metrics")
    p.add_argument("--record", help="write the run record as JSON")
    p.add_argument("--pesq-cmd", help="external scorer, e.g. 'pesq +16000 {ref} {deg}'")
    _add_algorithm_args(p)

    p = sub.add_parser("sweep", help="metrics per (p, init, iteration)")
    p.add_argument("--config", required=True, help="key = value file, see README")
    p.add_argument("--out-csv", required=True)

    p = sub.add_parser("report", help="average sweep CSVs over utterances")
    p.add_argument("--csv", nargs="+", required=True)
    p.add_argument("--out-csv", help="write the table here instead of stdout")
    return parser


def _job_from_args(a):
    return JobConfig(
        inputs=a.inputs,
        output=a.out,
        reference=a.ref,
        analysis=AnalysisConfig(frame_len=a.frame_len, hop=a.hop, fs=a.fs),
        beamformer=BeamformerConfig(tau=a.tau, Lh=a.lh, p=a.p, iterations=a.iters,
                                    init=a.init, ref_mic=a.ref_mic - 1),
        mask=NoiseMask(a.noise_head_ms, a.noise_tail_ms),
        jobs=a.jobs,
        seed=a.seed,
        pesq_cmd=a.pesq_cmd,
    )


def _parse_value(text):
    items = [t.strip() for t in text.split(",") if t.strip()]
    out = []
    for t in items:
        for conv in (int, float):
            try:
                out.append(conv(t))
                break
            except ValueError:
                pass
        else:
            out.append(t.strip("\"'"))
    return out


def parse_sweep_config(text):
    """
    Global ``key = value`` lines followed by one ``[name]`` section per
    utterance holding ``in`` and ``ref``.  Comma-separated values are lists.

    Returns:
        (global settings, {utterance: settings})
    """
    glob, utts, cur = {}, {}, None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            cur = utts.setdefault(line[1:-1].strip(), {})
            continue
        if "=" not in line:
            raise InvalidInput(f"line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        (glob if cur is None else cur)[key.replace("-", "_")] = _parse_value(val)
    if not utts and "in" in glob:
        utts["utterance"] = {k: glob.pop(k) for k in ("in", "ref") if k in glob}
    return glob, utts


def _scalar(settings, key, default):
    v = settings.get(key)
    return default if v is None else v[0]


def jobs_from_config(text, base_dir="."):
    """JobConfigs for every utterance; relative paths resolve against base_dir."""
    glob, utts = parse_sweep_config(text)
    if not utts:
        raise InvalidInput("sweep config names no utterance")
    analysis = AnalysisConfig(frame_len=_scalar(glob, "frame_len", 512), hop=_scalar(glob, "hop", 128),
                              fs=_scalar(glob, "fs", 16000))
    bf = BeamformerConfig(tau=_scalar(glob, "tau", 4), Lh=_scalar(glob, "lh", 12),
                          iterations=_scalar(glob, "iters", 10), ref_mic=_scalar(glob, "ref_mic", 1) - 1)
    mask = NoiseMask(_scalar(glob, "noise_head_ms", 225.0), _scalar(glob, "noise_tail_ms", 75.0))
    ps = [float(p) for p in glob.get("p", [0.5])]
    inits = [str(i) for i in glob.get("init", ["mc"])]
    jobs = []
    for name, u in utts.items():
        if "in" not in u or "ref" not in u:
            raise InvalidInput(f"utterance {name!r} needs both 'in' and 'ref'")
        jobs.append(JobConfig(inputs=[str(Path(base_dir, str(x))) for x in u["in"]],
                              reference=str(Path(base_dir, str(u["ref"][0]))),
                              analysis=analysis, beamformer=replace(bf, p=ps[0], init=inits[0]),
                              mask=mask, p_values=ps, inits=inits, jobs=_scalar(glob, "jobs", 1),
                              seed=_scalar(glob, "seed", 0), utterance=name))
    return jobs


def _cmd_enhance(a):
    job = _job_from_args(a)
    _, record = enhance(job)
    if a.record:
        with open(a.record, "w") as fh:
            json.dump(record.to_dict(), fh, indent=2, sort_keys=True)
    if record.metrics:
        for k, v in record.metrics.items():
            print(f"{k}\t{v:.4f}")
    if record.warning_count:
        print(f"warning: {record.warning_count} bins fell back to the reference channel", file=sys.stderr)
    return EXIT_SOLVER if all_bins_failed(record) else EXIT_OK


def _cmd_sweep(a):
    with open(a.config) as fh:
        jobs = jobs_from_config(fh.read(), Path(a.config).parent)
    rows = []
    for job in jobs:
        rows.extend(sweep(job))
    write_csv(rows, a.out_csv)
    print(f"wrote {len(rows)} rows to {a.out_csv}")
    return EXIT_OK


def _cmd_report(a):
    rows = report(a.csv)
    fields = ["p", "init", "iteration", "utterances", "delta_fwssnr", "delta_seg_snr"]
    fh = open(a.out_csv, "w", newline="") if a.out_csv else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if a.out_csv:
            fh.close()
    return EXIT_OK


def main(argv=None):
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"enhance": _cmd_enhance, "sweep": _cmd_sweep, "report": _cmd_report}[a.command]
    try:
        return handler(a)
    except (LpWpdError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
