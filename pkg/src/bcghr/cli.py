"""Command-line front end.

Every subcommand writes its data to files (or stdout for short summaries)
and its diagnostics to stderr. Options may also come from a flat
``key=value`` file given by ``--config`` or from a named ``--preset``;
explicit flags win over the file, which wins over built-in defaults.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .bench import run_bench, synthetic_window, write_timings
from .detect import METHODS, DetectorConfig, detect_window
from .evaluation import (
    LimitsOfAgreement,
    PairedHrSeries,
    SweepRecord,
    Tolerance,
    bland_altman_points,
    bland_altman_repeated,
    format_mean_sd,
    format_p,
    metrics_report,
    mpd_sweep,
    pair_series,
    rmcorr,
    rmcorr_lines,
)
from .io import (
    ParseError,
    Record,
    metadata_path,
    read_detections,
    read_metadata,
    read_record,
    read_reference,
    write_beats,
    write_detections,
    write_metadata,
    write_peaks,
    write_record,
    write_reference,
)
from .pipeline import PreprocessConfig, Preprocessed, fuse_and_resample, preprocess
from .signal_core import FUSERS, TimeSeries, WindowLabel, bandpass_bcg, decimate
from .synth import SynthSpec, gen_bcg, gen_reference_hr, label_slices
from .template import (
    TEMPLATE_LEN,
    BcgTemplate,
    SliceLabel,
    build_template,
    read_slice_labels,
    slice_starts,
    template_from_labels,
    write_slice_labels,
)

# Column mappings for the public bed-sensor dataset with four EMFi films and
# four bedpost load cells sampled at 1 kHz. Column names follow that
# release's CSV headers; adjust ``channels`` if a copy names them differently.
PRESETS = {
    "dataset4-emfi": {"fs": "1000", "channels": "EMFi1,EMFi2,EMFi3,EMFi4", "fuse": "max", "method": "cwt-gaus2"},
    "dataset4-loadcell": {"fs": "1000", "channels": "LC2,LC3", "fuse": "max", "method": "cwt-gaus2"},
}


class CliError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


# -- shared option groups -----------------------------------------------------

def _preprocess_opts() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("preprocessing")
    g.add_argument("--fs", type=float, help="sampling rate override (Hz)")
    g.add_argument("--channels", help="comma-separated column names to use (default: all)")
    g.add_argument("--fuse", choices=sorted(FUSERS), default="mean", help="multi-channel fusion (default: mean)")
    g.add_argument("--mad-mult", type=float, default=2.0, help="artifact threshold in MADs (default: 2)")
    g.add_argument("--floor-sd", type=float, default=10.0, help="no-activity SD floor (default: 10)")
    return p


def _config_opts() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat key=value file of option defaults")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named option preset")
    return p


def _method_list(text: str) -> list[str]:
    out = []
    for m in text.split(","):
        m = m.strip()
        if m == "all":
            out.extend(METHODS)
        elif m in METHODS:
            out.append(m)
        else:
            raise argparse.ArgumentTypeError(f"unknown method {m!r}; choose from {', '.join(METHODS)} or all")
    return out


def _tolerance(text: str) -> Tolerance:
    try:
        return Tolerance.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="bcghr", description="Heart rate from ballistocardiogram recordings.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    pre, cfg = _preprocess_opts(), _config_opts()
    leaves = {}

    p = sub.add_parser("preprocess", parents=[pre, cfg], help="screen windows and band-pass a record")
    p.add_argument("inputs", nargs="+", help="signal CSV files")
    p.add_argument("--out", default=".", help="output directory")
    leaves["preprocess"] = p

    p = sub.add_parser("detect", parents=[pre, cfg], help="per-window heart rate")
    p.add_argument("inputs", nargs="+", help="signal CSVs or *_filtered.csv from preprocess")
    p.add_argument("--method", type=_method_list, action="append",
                   help="detector(s), comma-separated or repeated; 'all' for every one (default: modwt-mra)")
    p.add_argument("--mpd", type=_positive, default=0.3, help="minimum peak distance in s (default: 0.3)")
    p.add_argument("--template", help="template CSV for the template method")
    p.add_argument("--min-corr", type=float, help="correlation floor for template candidates (default: off)")
    p.add_argument("--complex-part", choices=("real", "modulus"), default="real",
                   help="trace taken from complex CWT rows (default: real)")
    p.add_argument("--peaks", action="store_true", help="also write per-peak times")
    p.add_argument("--out", default=".", help="output directory")
    leaves["detect"] = p

    p = sub.add_parser("template", help="build a template or emit slices for labelling")
    tsub = p.add_subparsers(dest="template_command", required=True)
    b = tsub.add_parser("build", parents=[pre, cfg], help="ensemble-average labelled slices")
    b.add_argument("inputs", nargs="+", help="signal CSVs the labels refer to")
    b.add_argument("--labels", required=True, help="slice label CSV (record,slice_start_s,label,jpeak_time_s)")
    b.add_argument("--out", default="template.csv", help="template CSV path")
    leaves["template build"] = b
    c = tsub.add_parser("candidates", parents=[pre, cfg], help="write 1 s slices with suggested labels for review")
    c.add_argument("inputs", nargs="+", help="signal CSVs")
    c.add_argument("--out", default="labels.csv", help="label CSV path")
    leaves["template candidates"] = c

    p = sub.add_parser("evaluate", parents=[cfg], help="score detections against reference HR")
    p.add_argument("--detections", nargs="+", required=True, help="*_hr.csv files from detect")
    p.add_argument("--reference", nargs="+", required=True, help="reference HR CSVs (window_start_s,hr_bpm)")
    p.add_argument("--tolerance", type=_tolerance, default=Tolerance(), help="correct-detection tolerance, e.g. 10%% or 5 (BPM); default 10%%")
    p.add_argument("--all-pairs", action="store_true", help="error metrics over every estimate, not only correct ones")
    p.add_argument("--out", default=".", help="output directory")
    leaves["evaluate"] = p

    p = sub.add_parser("sweep", parents=[pre, cfg], help="minimum-peak-distance sweep")
    p.add_argument("inputs", nargs="+", help="signal CSVs")
    p.add_argument("--reference", nargs="+", required=True, help="reference HR CSVs, one per input")
    p.add_argument("--template", help="template CSV (required for the template method)")
    p.add_argument("--method", type=_method_list, action="append", help="detector (default: template)")
    p.add_argument("--tolerance", type=_tolerance, default=Tolerance(), help="default 10%%")
    p.add_argument("--out", default="sweep.csv", help="output CSV")
    leaves["sweep"] = p

    p = sub.add_parser("bench", parents=[pre, cfg], help="per-window detection latency")
    p.add_argument("inputs", nargs="*", help="optional signal CSV; its first informative window is timed")
    p.add_argument("--method", type=_method_list, action="append", help="detectors (default: all)")
    p.add_argument("--template", help="template CSV (built from the synthetic record if omitted)")
    p.add_argument("--iterations", type=int, default=100, help="timed runs per method (default: 100)")
    p.add_argument("--warmup", type=int, default=5, help="untimed runs first (default: 5)")
    p.add_argument("--mpd", type=_positive, default=0.3)
    p.add_argument("--out", default="timing.csv", help="output CSV")
    leaves["bench"] = p

    p = sub.add_parser("synth", parents=[cfg], help="write a synthetic fixture")
    p.add_argument("--hr", type=float, default=60.0, help="constant heart rate in BPM (default: 60)")
    p.add_argument("--hr-profile", help="BPM knots spread evenly over the record, e.g. 60:90")
    p.add_argument("--fs", type=float, default=50.0, help="sampling rate (default: 50)")
    p.add_argument("--duration", type=float, default=300.0, help="seconds (default: 300)")
    p.add_argument("--snr-db", type=float, default=math.inf, help="white-noise SNR in dB (default: none)")
    p.add_argument("--jitter", type=float, default=0.0, help="beat timing jitter SD in s")
    p.add_argument("--resp-amp", type=float, default=0.2, help="respiration amplitude relative to J")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default="synth", help="file stem and subject id")
    p.add_argument("--out", default=".", help="output directory")
    leaves["synth"] = p
    return parser, leaves


def _leaf_name(args) -> str:
    return f"template {args.template_command}" if args.command == "template" else args.command


def _apply_config(args, leaf: argparse.ArgumentParser) -> bool:
    """Install config values as parser defaults; True when a re-parse is needed."""
    values = {}
    if getattr(args, "preset", None):
        values.update(PRESETS[args.preset])
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise CliError(f"{path}: no such config file")
        values.update(read_metadata(path))
    if not values:
        return False
    dests = {a.dest: a for a in leaf._actions}
    defaults = {}
    for key, raw in values.items():
        dest = key.replace("-", "_")
        if dest not in dests or dest in ("config", "preset", "help", "inputs"):
            raise CliError(f"unknown config key {key!r} for '{_leaf_name(args)}'")
        action = dests[dest]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = raw.strip().lower() in ("1", "true", "yes", "on")
        elif dest == "method":
            defaults[dest] = [_method_list(raw)]
        else:
            try:
                defaults[dest] = action.type(raw) if action.type else raw
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise CliError(f"config key {key!r}: {exc}") from None
    leaf.set_defaults(**defaults)
    return True


# -- helpers --------------------------------------------------------------------

def _load(path: str, args) -> Record:
    rec = read_record(path, args.fs)
    if args.channels:
        wanted = [c.strip() for c in args.channels.split(",") if c.strip()]
        missing = [c for c in wanted if c not in rec.names]
        if missing:
            raise CliError(f"{path}: no column(s) {', '.join(missing)}; have {', '.join(rec.names)}")
        idx = [rec.names.index(c) for c in wanted]
        rec = Record([rec.channels[i] for i in idx], wanted, rec.meta)
    return rec


def _load_subject(path: str) -> str:
    mpath = metadata_path(path)
    return read_metadata(mpath).get("subject", Path(path).stem) if mpath.exists() else Path(path).stem


def _pre_cfg(args) -> PreprocessConfig:
    return PreprocessConfig(fuse=args.fuse, mad_mult=args.mad_mult, floor_sd=args.floor_sd)


def _stem(path: str) -> str:
    stem = Path(path).stem
    return stem[: -len("_filtered")] if stem.endswith("_filtered") else stem


def _store_paths(path: str) -> tuple[Path, Path] | None:
    p = Path(path)
    if p.stem.endswith("_filtered"):
        windows = p.with_name(p.stem[: -len("_filtered")] + "_windows.csv")
        if windows.exists():
            return p, windows
    return None


def _read_store(filtered_path: Path, windows_path: Path) -> tuple[str, list[TimeSeries]]:
    rec = read_record(filtered_path)
    series = rec.channels[0]
    n_win = None
    out = []
    with open(windows_path, newline="") as fh:
        reader = csv.DictReader(fh)
        for lineno, row in enumerate(reader, start=2):
            try:
                start, stop, label = float(row["window_start_s"]), float(row["window_end_s"]), row["label"]
            except (KeyError, TypeError, ValueError):
                raise ParseError(f"{windows_path}:{lineno}: malformed window row") from None
            if label != WindowLabel.INFORMATIVE.value:
                continue
            i0 = int(round((start - series.t0) * series.fs))
            n_win = int(round((stop - start) * series.fs))
            out.append(series.slice(i0, i0 + n_win))
    return rec.subject, out


def _informative(path: str, args) -> tuple[str, list[TimeSeries]]:
    store = _store_paths(path)
    if store:
        return _read_store(*store)
    pre = preprocess(_load(path, args), _pre_cfg(args))
    return pre.subject, pre.informative_windows()


def _methods(args, default: list[str]) -> list[str]:
    if not args.method:
        return list(default)
    seen = []
    for group in args.method:
        for m in group:
            if m not in seen:
                seen.append(m)
    return seen


def _load_template(args, methods, parser) -> BcgTemplate | None:
    if "template" in methods and not args.template:
        parser.error("the template method requires --template")
    return BcgTemplate.load(args.template) if args.template else None


def _fmt_float(x: float) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.4f}"


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# -- commands -------------------------------------------------------------------

def cmd_preprocess(args, parser) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for path in args.inputs:
        rec = _load(path, args)
        pre: Preprocessed = preprocess(rec, _pre_cfg(args))
        stem = _stem(path)
        n_win, _ = pre.plan.sizes(pre.raw.fs)
        rows = []
        for w, lab, sd in zip(pre.segmented.windows, pre.segmented.labels, pre.segmented.sd_values):
            t0 = pre.raw.t0 + w.start / pre.raw.fs
            rows.append([f"{t0:.3f}", f"{t0 + n_win / pre.raw.fs:.3f}", lab.value, f"{sd:.6g}"])
        _write_rows(out / f"{stem}_windows.csv", ["window_start_s", "window_end_s", "label", "sd"], rows)
        write_record(out / f"{stem}_filtered.csv", pre.filtered, ["bcg"], {"subject": pre.subject})
        counts = pre.segmented.counts()
        print(f"{pre.subject}: artifact={counts[WindowLabel.ARTIFACT]} "
              f"no-activity={counts[WindowLabel.NO_ACTIVITY]} informative={counts[WindowLabel.INFORMATIVE]} "
              f"(mad={pre.segmented.mad:.4g})")
    return 0


def cmd_detect(args, parser) -> int:
    methods = _methods(args, ["modwt-mra"])
    template = _load_template(args, methods, parser)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfgs = [DetectorConfig(m, mpd_s=args.mpd, min_corr=args.min_corr, complex_part=args.complex_part) for m in methods]
    for path in args.inputs:
        subject, windows = _informative(path, args)
        if not windows:
            _warn(f"{path}: no informative windows; writing an empty detection file")
        rows, peak_rows = [], []
        for w in windows:
            for cfg in cfgs:
                peaks, est = detect_window(w, cfg, template)
                rows.append((est.window_start_s, cfg.method, est.hr_bpm, est.n_beats))
                peak_rows.extend((cfg.method, t) for t in peaks.times_s)
        stem = _stem(path)
        det_path = out / f"{stem}_hr.csv"
        write_detections(det_path, rows)
        write_metadata(metadata_path(det_path), {"subject": subject})
        if args.peaks:
            write_peaks(out / f"{stem}_peaks.csv", peak_rows)
        print(f"{subject}: {len(windows)} window(s) x {len(cfgs)} method(s) -> {det_path}")
    return 0


def cmd_template_build(args, parser) -> int:
    labels = read_slice_labels(args.labels)
    slices, sources = [], []
    for path in args.inputs:
        rec = _load(path, args)
        filtered = bandpass_bcg(_fused(rec, args))
        got = template_from_labels(filtered, labels, rec.subject)
        if got:
            sources.append(rec.subject)
        slices.extend(got)
    known = {_load_subject(p) for p in args.inputs}
    stray = sorted({lab.record for lab in labels if lab.label == "bcg"} - known)
    if stray:
        _warn(f"labels reference records not given as inputs: {', '.join(stray)}")
    template = build_template(slices, sources)
    template.save(args.out)
    print(f"template from {template.n_slices} slice(s) of {len(sources)} record(s) -> {args.out}")
    return 0


def _fused(rec: Record, args) -> TimeSeries:
    return fuse_and_resample(rec.channels, _pre_cfg(args))


def cmd_template_candidates(args, parser) -> int:
    labels = []
    for path in args.inputs:
        rec = _load(path, args)
        filtered = bandpass_bcg(_fused(rec, args))
        x = filtered.samples
        for s in slice_starts(len(filtered)):
            seg = x[s:s + TEMPLATE_LEN]
            k = int(np.argmax(seg))
            start = filtered.t0 + s / filtered.fs
            # suggest bcg when the slice maximum sits away from the slice edges
            if 0.25 * TEMPLATE_LEN <= k < 0.75 * TEMPLATE_LEN:
                labels.append(SliceLabel(rec.subject, start, "bcg", start + k / filtered.fs))
            else:
                labels.append(SliceLabel(rec.subject, start, "non-bcg"))
    write_slice_labels(args.out, labels)
    print(f"{len(labels)} candidate slice(s) -> {args.out}")
    return 0


def _loa_cells(loa: LimitsOfAgreement | None) -> list[str]:
    if loa is None:
        return ["", "", ""]
    return [f"{loa.bias:.2f}", f"{loa.upper:.2f}", f"{loa.lower:.2f}"]


def cmd_evaluate(args, parser) -> int:
    refs = {}
    for path in args.reference:
        subject, rows = read_reference(path)
        if subject in refs:
            raise CliError(f"{path}: duplicate reference for subject {subject!r}")
        refs[subject] = rows
    by_method: dict[str, list[PairedHrSeries]] = {}
    for path in args.detections:
        subject = _load_subject(path)
        if not metadata_path(path).exists():
            subject = _stem(path)
        if subject not in refs:
            raise CliError(f"{path}: no reference for subject {subject!r}")
        dets = read_detections(path)
        for method in dict.fromkeys(m for _, m, _, _ in dets):
            rows = [(s, hr) for s, m, hr, _ in dets if m == method]
            try:
                paired = pair_series(subject, refs[subject], rows)
            except ValueError as exc:
                raise CliError(f"{path}: {exc}") from None
            by_method.setdefault(method, []).append(paired)
    if not by_method:
        raise CliError("nothing to score")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tol = args.tolerance
    print(f"tolerance: {tol}{' (all-pairs errors)' if args.all_pairs else ''}")
    summary = []
    for method in [m for m in METHODS if m in by_method] + sorted(set(by_method) - set(METHODS)):
        series = sorted(by_method[method], key=lambda s: s.subject)
        report = metrics_report(series, tol, args.all_pairs, method)
        _write_rows(out / f"metrics_{method}.csv", *_split(report.table()))
        agg = report.aggregate()
        loa = rm = None
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                loa = bland_altman_repeated(series, tol)
            except ValueError as exc:
                _warn(f"{method}: {exc}")
        for w in caught:
            _warn(f"{method}: {w.message}")
        try:
            rm = rmcorr(series, tol)
        except ValueError as exc:
            _warn(f"{method}: {exc}")
        _write_rows(out / f"bland_altman_{method}.csv", ["subject", "mean_bpm", "diff_bpm"],
                    [[s, f"{m:.4f}", f"{d:.4f}"] for s, m, d in bland_altman_points(series, tol)])
        if rm is not None:
            _write_rows(out / f"rmcorr_{method}.csv", ["subject", "ref_min", "ref_max", "intercept", "slope"],
                        [[s, f"{a:.4f}", f"{b:.4f}", f"{c:.6f}", f"{d:.6f}"]
                         for s, a, b, c, d in rmcorr_lines(series, rm, tol)])
        row = [method] + [format_mean_sd(*agg[k]) for k in ("MAE", "MAPE (%)", "RMSE", "Prec (%)")]
        row += _loa_cells(loa)
        row += ["", ""] if rm is None else [f"{rm.r:.4f}", f"{rm.p:.4g}"]
        summary.append(row)
        rm_txt = "" if rm is None else f", r_mr = {rm.r:.2f}, {format_p(rm.p)}"
        loa_txt = "" if loa is None else f", LoA {loa.upper:.2f} / {loa.lower:.2f}"
        print(f"{method}: MAE {row[1]}, MAPE {row[2]}, RMSE {row[3]}, Prec {row[4]}{loa_txt}{rm_txt}")
    _write_rows(out / "summary.csv",
                ["method", "MAE", "MAPE (%)", "RMSE", "Prec (%)", "bias", "upper_loa", "lower_loa", "rmcorr_r", "rmcorr_p"],
                summary)
    return 0


def _split(table):
    return table[0], table[1:]


def cmd_sweep(args, parser) -> int:
    methods = _methods(args, ["template"])
    if len(methods) != 1:
        parser.error("sweep takes a single --method")
    template = _load_template(args, methods, parser)
    if len(args.reference) != len(args.inputs):
        parser.error("give one --reference per input")
    records = []
    for path, ref_path in zip(args.inputs, args.reference):
        subject, windows = _informative(path, args)
        _, ref_rows = read_reference(ref_path)
        records.append(SweepRecord(subject, windows, dict(ref_rows)))
    points = mpd_sweep(records, template, tolerance=args.tolerance, method=methods[0])
    _write_rows(Path(args.out), ["mpd_s", "mean_mae", "mean_prec"],
                [[f"{p.mpd_s:.2f}", _fmt_float(p.mean_mae), f"{p.mean_prec:.4f}"] for p in points])
    for p in points:
        print(f"mpd {p.mpd_s:.2f} s: MAE {_fmt_float(p.mean_mae) or '-'}  Prec {p.mean_prec:.2f}%")
    return 0


def cmd_bench(args, parser) -> int:
    methods = _methods(args, list(METHODS))
    template = BcgTemplate.load(args.template) if args.template else None
    if args.inputs:
        _, windows = _informative(args.inputs[0], args)
        if not windows:
            raise CliError(f"{args.inputs[0]}: no informative window to time")
        window = windows[0]
        if "template" in methods and template is None:
            parser.error("the template method requires --template when timing a recording")
    else:
        window, synth_template = synthetic_window()
        template = template or synth_template
    timings = run_bench(window, template, methods, args.iterations, args.warmup, args.mpd)
    write_timings(args.out, timings)
    for t in timings:
        print(f"{t.method:10s} {t.mean_s:.6f} s ({t.sd_s:.6f})")
    return 0


def _profile(text: str, duration: float) -> tuple:
    try:
        bpm = [float(v) for v in text.split(":")]
    except ValueError:
        raise CliError(f"bad --hr-profile {text!r}; use e.g. 60:90") from None
    if len(bpm) == 1:
        return ((0.0, bpm[0]),)
    times = np.linspace(0.0, duration, len(bpm))
    return tuple(zip(times.tolist(), bpm))


def cmd_synth(args, parser) -> int:
    hr = _profile(args.hr_profile, args.duration) if args.hr_profile else args.hr
    try:
        spec = SynthSpec(hr_bpm=hr, fs=args.fs, duration_s=args.duration, snr_db=args.snr_db,
                         resp_amp=args.resp_amp, hrv_jitter_s=args.jitter, seed=args.seed)
    except ValueError as exc:
        parser.error(str(exc))
    x, truth = gen_bcg(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = args.name
    write_record(out / f"{name}.csv", x, ["bcg"], {"subject": name})
    write_beats(out / f"{name}_beats.csv", truth.beat_times_s)
    if args.duration >= 30.0:
        write_reference(out / f"{name}_reference.csv", gen_reference_hr(truth), subject=name)
    x50 = decimate(x, 50.0) if args.fs != 50.0 and float(args.fs / 50.0).is_integer() else x
    if x50.fs == 50.0:
        write_slice_labels(out / f"{name}_labels.csv", label_slices(name, bandpass_bcg(x50), truth))
    print(f"{name}: {truth.beat_times_s.size} beats, {len(x)} samples at {x.fs:g} Hz -> {out}")
    return 0


COMMANDS = {
    "preprocess": cmd_preprocess,
    "detect": cmd_detect,
    "template build": cmd_template_build,
    "template candidates": cmd_template_candidates,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
    "synth": cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    args = parser.parse_args(argv)
    leaf_name = _leaf_name(args)
    leaf = leaves[leaf_name]
    try:
        if _apply_config(args, leaf):
            args = parser.parse_args(argv)
        with warnings.catch_warnings():
            warnings.showwarning = lambda message, *a, **k: _warn(str(message))
            return COMMANDS[leaf_name](args, leaf)
    except (CliError, ParseError, ValueError, OSError) as exc:
        _err(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
