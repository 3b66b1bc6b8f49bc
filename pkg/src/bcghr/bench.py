"""Per-window detection latency, one row per method."""
from __future__ import annotations

import csv
import statistics
import time
from dataclasses import dataclass
from typing import Sequence

from .detect import METHODS, DetectorConfig, detect_window
from .signal_core import TimeSeries, bandpass_bcg
from .synth import SynthSpec, gen_bcg, label_slices
from .template import BcgTemplate, build_template, template_from_labels


@dataclass(frozen=True)
class Timing:
    method: str
    mean_s: float
    sd_s: float
    iterations: int


def synthetic_window(hr_bpm: float = 60.0, seed: int = 0) -> tuple[TimeSeries, BcgTemplate]:
    """A band-passed 30 s window and a template built from the same record."""
    x, truth = gen_bcg(SynthSpec(hr_bpm=hr_bpm, duration_s=60.0, snr_db=20.0, seed=seed))
    filtered = bandpass_bcg(x)
    template = build_template(template_from_labels(filtered, label_slices("bench", filtered, truth), "bench"))
    return filtered.slice(750, 2250), template


def time_method(window: TimeSeries, cfg: DetectorConfig, template: BcgTemplate | None = None,
                iterations: int = 100, warmup: int = 5) -> Timing:
    """Wall-clock time of ``detect_window`` on an already filtered window."""
    if iterations < 2:
        raise ValueError("need at least 2 timed iterations")
    for _ in range(warmup):
        detect_window(window, cfg, template)
    samples = []
    for _ in range(iterations):
        t = time.perf_counter()
        detect_window(window, cfg, template)
        samples.append(time.perf_counter() - t)
    return Timing(cfg.method, statistics.fmean(samples), statistics.stdev(samples), iterations)


def run_bench(window: TimeSeries, template: BcgTemplate | None, methods: Sequence[str] = METHODS,
              iterations: int = 100, warmup: int = 5, mpd_s: float = 0.3) -> list[Timing]:
    out = []
    for m in methods:
        if m == "template" and template is None:
            raise ValueError("template required for the template method")
        out.append(time_method(window, DetectorConfig(m, mpd_s=mpd_s), template, iterations, warmup))
    return out


def write_timings(path, timings: Sequence[Timing]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "mean_s", "sd_s", "iterations"])
        for t in timings:
            w.writerow([t.method, f"{t.mean_s:.6f}", f"{t.sd_s:.6f}", t.iterations])
