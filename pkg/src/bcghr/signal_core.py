"""Signal containers and everything upstream of the beat detectors.

Windowing, SD/MAD artifact screening, the Chebyshev band-pass cascade,
integer-factor decimation and multi-channel fusion.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy import signal


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled scalar signal.

    Parameters
    ----------
    samples : array_like
        Signal values. Copied into a read-only float64 array.
    fs : float
        Sampling rate in Hz.
    t0 : float
        Time of the first sample in seconds.
    units : str
        Declared signal units (informational).
    """

    samples: np.ndarray
    fs: float
    t0: float = 0.0
    units: str = "mV"

    def __post_init__(self):
        x = np.array(self.samples, dtype=float).reshape(-1)
        if x.size < 1:
            raise ValueError("time series needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("time series contains NaN or Inf")
        if not (self.fs > 0):
            raise ValueError(f"sampling rate must be positive, got {self.fs}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "fs", float(self.fs))
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.fs

    def with_samples(self, samples, fs: float | None = None) -> "TimeSeries":
        return TimeSeries(samples, self.fs if fs is None else fs, self.t0, self.units)

    def slice(self, start: int, stop: int) -> "TimeSeries":
        return TimeSeries(self.samples[start:stop], self.fs, self.t0 + start / self.fs, self.units)


@dataclass(frozen=True)
class WindowPlan:
    win_s: float = 30.0
    hop_s: float = 15.0

    def __post_init__(self):
        if not (0 < self.hop_s <= self.win_s):
            raise ValueError(f"need 0 < hop_s <= win_s, got hop={self.hop_s} win={self.win_s}")

    def sizes(self, fs: float) -> tuple[int, int]:
        return int(round(self.win_s * fs)), int(round(self.hop_s * fs))


class WindowLabel(str, enum.Enum):
    ARTIFACT = "artifact"
    NO_ACTIVITY = "no-activity"
    INFORMATIVE = "informative"


class Window(NamedTuple):
    start: int
    series: TimeSeries


@dataclass(frozen=True)
class SegmentedRecord:
    windows: list[Window]
    labels: list[WindowLabel]
    sd_values: np.ndarray
    mad: float
    mad_multiplier: float = 2.0
    floor_sd: float = 10.0

    def informative(self) -> list[Window]:
        return [w for w, lab in zip(self.windows, self.labels) if lab is WindowLabel.INFORMATIVE]

    def counts(self) -> dict[WindowLabel, int]:
        return {lab: sum(1 for x in self.labels if x is lab) for lab in WindowLabel}


@dataclass(frozen=True)
class FilterSpec:
    kind: str  # "highpass" | "lowpass"
    order: int
    ripple_db: float
    cutoff_hz: float

    def __post_init__(self):
        if self.kind not in ("highpass", "lowpass"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.order < 1 or self.ripple_db <= 0:
            raise ValueError("filter order must be >= 1 and ripple positive")

    def sos(self, fs: float) -> np.ndarray:
        if self.cutoff_hz >= fs / 2:
            raise ValueError(
                f"cutoff above Nyquist: {self.cutoff_hz} Hz with fs={fs} Hz"
            )
        return _cheby1_sos(self.order, self.ripple_db, self.cutoff_hz, self.kind, fs)


BCG_HIGHPASS = FilterSpec("highpass", 2, 0.5, 2.5)
BCG_LOWPASS = FilterSpec("lowpass", 4, 0.5, 5.0)


@lru_cache(maxsize=32)
def _cheby1_sos(order, ripple_db, cutoff_hz, kind, fs):
    # scipy pre-warps the critical frequency before the bilinear map
    sos = signal.cheby1(order, ripple_db, cutoff_hz, btype=kind, fs=fs, output="sos")
    sos.setflags(write=False)
    return sos


def bandpass_sos(fs: float) -> np.ndarray:
    """Second-order sections of the BCG cascade (high-pass first)."""
    return np.vstack([BCG_HIGHPASS.sos(fs), BCG_LOWPASS.sos(fs)])


def segment(series: TimeSeries, plan: WindowPlan = WindowPlan()) -> list[Window]:
    """Cut ``series`` into full-length sliding windows; a trailing partial window is dropped."""
    n_win, n_hop = plan.sizes(series.fs)
    n = len(series)
    if n < n_win:
        raise ValueError(
            f"record too short: {n} samples, one window needs {n_win}"
        )
    return [Window(s, series.slice(s, s + n_win)) for s in range(0, n - n_win + 1, n_hop)]


def classify_windows(
    windows: Sequence[Window],
    mad_multiplier: float = 2.0,
    floor_sd: float = 10.0,
) -> SegmentedRecord:
    """Label windows as artifact, no-activity or informative.

    A window is an artifact when its SD exceeds ``mad_multiplier`` times the
    (unscaled) median absolute deviation of all window SDs, and no-activity
    when its SD is below ``floor_sd``. The artifact test wins when both hold,
    so a record whose window SDs are all equal (MAD = 0) marks every non-flat
    window as artifact.
    """
    if len(windows) < 1:
        raise ValueError("need at least one window to classify")
    sd = np.array([np.std(w.series.samples) for w in windows])
    mad = float(np.median(np.abs(sd - np.median(sd))))
    labels = []
    for s in sd:
        if s > mad_multiplier * mad:
            labels.append(WindowLabel.ARTIFACT)
        elif s < floor_sd:
            labels.append(WindowLabel.NO_ACTIVITY)
        else:
            labels.append(WindowLabel.INFORMATIVE)
    return SegmentedRecord(list(windows), labels, sd, mad, mad_multiplier, floor_sd)


def bandpass_bcg(series: TimeSeries) -> TimeSeries:
    """Causal 2nd-order Chebyshev-I high-pass (2.5 Hz) then 4th-order low-pass (5 Hz)."""
    if series.fs <= 10.0:
        raise ValueError(f"cutoff above Nyquist: fs={series.fs} Hz must exceed 10 Hz")
    y = signal.sosfilt(bandpass_sos(series.fs), series.samples)
    return series.with_samples(y)


@lru_cache(maxsize=16)
def antialias_fir(fs: float, factor: int) -> np.ndarray:
    """Hamming-windowed sinc, cutoff at 80 % of the output Nyquist, 24*factor taps of order."""
    target = fs / factor
    taps = signal.firwin(24 * factor + 1, 0.8 * target / 2, fs=fs, window="hamming")
    taps.setflags(write=False)
    return taps


def decimate(series: TimeSeries, target_fs: float) -> TimeSeries:
    """Anti-alias filter with a linear-phase FIR, then keep every k-th sample.

    The FIR group delay is removed exactly, so sample ``m`` of the output sits
    at the same instant as sample ``m*k`` of the input. Edges are zero-extended.
    """
    ratio = series.fs / target_fs
    factor = int(round(ratio))
    if target_fs <= 0 or factor < 1 or abs(ratio - factor) > 1e-9:
        raise ValueError(
            f"unsupported resampling ratio {series.fs}/{target_fs}; need an integer factor"
        )
    if factor == 1:
        return series
    h = antialias_fir(series.fs, factor)
    delay = (h.size - 1) // 2  # multiple of factor by construction
    x = np.concatenate([series.samples, np.zeros(delay)])
    y = signal.upfirdn(h, x, up=1, down=factor)
    n_out = -(-len(series) // factor)
    skip = delay // factor
    return TimeSeries(y[skip:skip + n_out], target_fs, series.t0, series.units)


def _check_channels(channels: Sequence[TimeSeries], minimum: int = 1) -> None:
    if len(channels) < minimum:
        raise ValueError(f"need at least {minimum} channel(s)")
    first = channels[0]
    for ch in channels[1:]:
        if len(ch) != len(first) or ch.fs != first.fs:
            raise ValueError(
                f"channel mismatch: ({len(first)} samples, {first.fs} Hz) vs "
                f"({len(ch)} samples, {ch.fs} Hz)"
            )


def fuse_mean(channels: Sequence[TimeSeries]) -> TimeSeries:
    _check_channels(channels)
    return channels[0].with_samples(np.mean([c.samples for c in channels], axis=0))


def fuse_pairwise_max(channels: Sequence[TimeSeries]) -> TimeSeries:
    _check_channels(channels, minimum=2)
    out = channels[0].samples
    for c in channels[1:]:
        out = np.maximum(out, c.samples)
    return channels[0].with_samples(out)


FUSERS = {"mean": fuse_mean, "max": fuse_pairwise_max}
