"""J-peak picking and heart rate from peak times."""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .signal_core import TimeSeries


@dataclass(frozen=True)
class PeakList:
    indices: np.ndarray
    fs: float
    t0: float = 0.0
    source: str = ""

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        if idx.size > 1 and np.any(np.diff(idx) <= 0):
            raise ValueError("peak indices must be strictly increasing")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return self.indices.size

    @property
    def times_s(self) -> np.ndarray:
        return self.t0 + self.indices / self.fs


@dataclass(frozen=True)
class HrEstimate:
    window_start_s: float
    hr_bpm: float | None
    n_beats: int
    instantaneous: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    @property
    def defined(self) -> bool:
        return self.hr_bpm is not None


def local_maxima(x: np.ndarray) -> np.ndarray:
    """Indices of samples strictly greater than both neighbours."""
    x = np.asarray(x)
    if x.size < 3:
        return np.empty(0, dtype=np.int64)
    mid = x[1:-1]
    return np.nonzero((mid > x[:-2]) & (mid > x[2:]))[0] + 1


def select_by_distance(x: np.ndarray, candidates: np.ndarray, min_distance: float) -> np.ndarray:
    """Keep the tallest candidates first, dropping any closer than ``min_distance`` samples
    to one already kept. Equal heights resolve to the earlier index."""
    if candidates.size == 0:
        return candidates
    pos = candidates.tolist()
    order = np.lexsort((candidates, -x[candidates])).tolist()
    removed = bytearray(len(pos))
    keep = []
    for i in order:
        if removed[i]:
            continue
        keep.append(i)
        # candidates are sorted, so neighbours within reach are contiguous
        lo = bisect.bisect_right(pos, pos[i] - min_distance)
        hi = bisect.bisect_left(pos, pos[i] + min_distance)
        removed[lo:hi] = b"\x01" * (hi - lo)
    return candidates[np.sort(keep)]


def find_peaks(response, mpd_s: float = 0.3, fs: float | None = None, source: str = "") -> PeakList:
    """Local maxima of ``response`` at least ``mpd_s`` seconds apart.

    Parameters
    ----------
    response : TimeSeries or array_like
        Detector output. A bare array needs ``fs``.
    mpd_s : float
        Minimum peak distance in seconds.
    """
    if isinstance(response, TimeSeries):
        x, fs, t0 = response.samples, response.fs, response.t0
    else:
        if fs is None:
            raise ValueError("fs is required for a bare array response")
        x, t0 = np.asarray(response, dtype=float), 0.0
    if mpd_s <= 0:
        raise ValueError("minimum peak distance must be positive")
    cand = local_maxima(x)
    kept = select_by_distance(x, cand, mpd_s * fs)
    return PeakList(kept, fs, t0, source)


def hr_from_times(times_s, window_start_s: float = 0.0, aggregate: str = "median") -> HrEstimate:
    """Window HR from consecutive peak intervals, ``60 / (t_n - t_{n-1})``.

    The per-interval rates are summarised by their median (or mean). Fewer than
    two peaks leave the estimate undefined.
    """
    t = np.asarray(times_s, dtype=float)
    if t.size < 2:
        return HrEstimate(window_start_s, None, 0)
    inst = 60.0 / np.diff(t)
    if aggregate == "median":
        hr = float(np.median(inst))
    elif aggregate == "mean":
        hr = float(np.mean(inst))
    else:
        raise ValueError(f"unknown aggregate {aggregate!r}")
    return HrEstimate(window_start_s, hr, int(inst.size), inst)


def hr_from_peaks(peaks: PeakList, window_start_s: float | None = None, aggregate: str = "median") -> HrEstimate:
    start = peaks.t0 if window_start_s is None else window_start_s
    return hr_from_times(peaks.times_s, start, aggregate)
