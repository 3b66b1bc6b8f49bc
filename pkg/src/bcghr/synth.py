"""Synthetic BCG records with known beat times, for tests and fixtures.

Each beat is an I-J-K complex built from three Gaussian lobes (negative,
dominant positive, negative). Beats follow a piecewise-linear heart-rate
profile, optionally jittered, on top of a respiration sinusoid and white
noise scaled to a target SNR against the beat train.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .peaks import hr_from_times
from .signal_core import TimeSeries, WindowPlan
from .template import SLICE_HOP, TEMPLATE_LEN, SliceLabel

# (offset from J in s, relative amplitude, gaussian sd in s)
LOBES = ((-0.10, -0.4, 0.05), (0.0, 1.0, 0.03), (0.07, -0.6, 0.05))


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic record.

    ``hr_bpm`` is either a constant or a sequence of ``(time_s, bpm)`` knots
    interpolated linearly (held constant outside the knots).
    """

    hr_bpm: float | tuple = 60.0
    fs: float = 50.0
    duration_s: float = 300.0
    snr_db: float = float("inf")
    resp_amp: float = 0.2
    resp_hz: float = 0.25
    hrv_jitter_s: float = 0.0
    amplitude: float = 100.0
    seed: int = 0

    def __post_init__(self):
        knots = self.knots()
        if np.any(knots[:, 1] < 30) or np.any(knots[:, 1] > 220):
            raise ValueError("bad synth spec: heart rate must lie in [30, 220] BPM")
        if self.fs < 25 or self.duration_s <= 0:
            raise ValueError("bad synth spec: need fs >= 25 Hz and positive duration")
        if self.hrv_jitter_s < 0 or self.amplitude <= 0:
            raise ValueError("bad synth spec: jitter must be >= 0 and amplitude > 0")

    def knots(self) -> np.ndarray:
        if np.isscalar(self.hr_bpm):
            return np.array([[0.0, float(self.hr_bpm)]])
        k = np.array(self.hr_bpm, dtype=float).reshape(-1, 2)
        if k.shape[0] == 0 or np.any(np.diff(k[:, 0]) <= 0):
            raise ValueError("bad synth spec: profile knots need increasing times")
        return k

    def hr_at(self, t) -> np.ndarray:
        k = self.knots()
        return np.interp(t, k[:, 0], k[:, 1])


@dataclass(frozen=True)
class GroundTruth:
    beat_times_s: np.ndarray
    duration_s: float
    fs: float
    # (window_start_s, bpm) on the default 30 s / 15 s plan
    hr_profile: list = field(default_factory=list)


def beat_times(spec: SynthSpec) -> np.ndarray:
    """Times at which the integrated beat phase crosses k + 1/2."""
    fine = 1000.0
    t = np.arange(0.0, spec.duration_s + 1.0 / fine, 1.0 / fine)
    rate = spec.hr_at(t) / 60.0
    phase = np.concatenate([[0.0], np.cumsum((rate[1:] + rate[:-1]) / 2) / fine])
    targets = np.arange(0.5, phase[-1], 1.0)
    times = np.interp(targets, phase, t)
    return times[times < spec.duration_s]


def beat_waveform(t: np.ndarray) -> np.ndarray:
    """One I-J-K complex evaluated at offsets ``t`` (s) from the J lobe centre.

    Lobes overlap, so the J maximum is below the unit J lobe weight.
    """
    out = np.zeros_like(t, dtype=float)
    for off, amp, sd in LOBES:
        out += amp * np.exp(-0.5 * ((t - off) / sd) ** 2)
    return out


def gen_bcg(spec: SynthSpec) -> tuple[TimeSeries, GroundTruth]:
    rng = np.random.default_rng(spec.seed)
    beats = beat_times(spec)
    if spec.hrv_jitter_s > 0:
        beats = np.sort(beats + rng.normal(0.0, spec.hrv_jitter_s, beats.size))
        beats = beats[(beats >= 0) & (beats < spec.duration_s)]
    n = int(round(spec.duration_s * spec.fs))
    t = np.arange(n) / spec.fs
    train = np.zeros(n)
    reach = 0.3
    for b in beats:
        lo = max(0, int(np.floor((b - reach) * spec.fs)))
        hi = min(n, int(np.ceil((b + reach) * spec.fs)) + 1)
        train[lo:hi] += beat_waveform(t[lo:hi] - b)
    train *= spec.amplitude
    x = train + spec.resp_amp * spec.amplitude * np.sin(2 * np.pi * spec.resp_hz * t)
    if np.isfinite(spec.snr_db):
        noise = rng.standard_normal(n)
        target = np.mean(train ** 2) / 10 ** (spec.snr_db / 10)
        noise *= np.sqrt(target / np.mean(noise ** 2))
        x = x + noise
    truth = GroundTruth(beats, spec.duration_s, spec.fs)
    truth = replace(truth, hr_profile=gen_reference_hr(truth))
    return TimeSeries(x, spec.fs, 0.0, "mV"), truth


def gen_reference_hr(truth: GroundTruth, plan: WindowPlan = WindowPlan()) -> list[tuple[float, float | None]]:
    """Per-window reference HR from ground-truth beats, aggregated like the detectors."""
    n = int(round(truth.duration_s * truth.fs))
    n_win, n_hop = plan.sizes(truth.fs)
    rows = []
    for s in range(0, n - n_win + 1, n_hop):
        start, stop = s / truth.fs, (s + n_win) / truth.fs
        inside = truth.beat_times_s[(truth.beat_times_s >= start) & (truth.beat_times_s < stop)]
        est = hr_from_times(inside, start)
        rows.append((start, est.hr_bpm))
    return rows


def label_slices(record: str, filtered: TimeSeries, truth: GroundTruth,
                 search_s: tuple[float, float] = (-0.04, 0.2)) -> list[SliceLabel]:
    """Label every 1 s slice of a band-passed synthetic record.

    A slice is ``bcg`` when a J-peak falls inside it; the J-peak time is the
    maximum of the filtered signal within ``search_s`` of the true beat, which
    absorbs the band-pass delay.
    """
    x = filtered.samples
    fs = filtered.fs
    jpeaks = []
    for b in truth.beat_times_s:
        lo = max(0, int(round((b + search_s[0] - filtered.t0) * fs)))
        hi = min(x.size, int(round((b + search_s[1] - filtered.t0) * fs)) + 1)
        if hi - lo < 1:
            continue
        jpeaks.append(filtered.t0 + (lo + int(np.argmax(x[lo:hi]))) / fs)
    jpeaks = np.array(jpeaks)
    labels = []
    for s in range(0, len(filtered) - TEMPLATE_LEN + 1, SLICE_HOP):
        start = filtered.t0 + s / fs
        inside = jpeaks[(jpeaks >= start) & (jpeaks < start + TEMPLATE_LEN / fs)]
        if inside.size:
            # the beat nearest the slice centre
            jp = inside[np.argmin(np.abs(inside - (start + 0.5)))]
            labels.append(SliceLabel(record, start, "bcg", float(jp)))
        else:
            labels.append(SliceLabel(record, start, "non-bcg"))
    return labels
