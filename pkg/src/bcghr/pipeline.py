"""Record-level glue: fuse, resample, screen, filter, then detect per window."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .detect import DetectorConfig, detect_window
from .io import Record
from .peaks import HrEstimate, PeakList
from .signal_core import (
    FUSERS,
    SegmentedRecord,
    TimeSeries,
    WindowPlan,
    bandpass_bcg,
    classify_windows,
    decimate,
    segment,
)
from .template import BcgTemplate

TARGET_FS = 50.0


@dataclass(frozen=True)
class PreprocessConfig:
    target_fs: float = TARGET_FS
    fuse: str = "mean"
    mad_mult: float = 2.0
    floor_sd: float = 10.0
    plan: WindowPlan = WindowPlan()

    def __post_init__(self):
        if self.fuse not in FUSERS:
            raise ValueError(f"unknown fusion {self.fuse!r}; choose from {', '.join(FUSERS)}")


@dataclass(frozen=True)
class Preprocessed:
    """A record after screening and filtering.

    ``raw`` is the fused, resampled signal the SD screen ran on; ``filtered``
    is the whole record band-passed, from which informative windows are cut
    so the filter's start-up transient stays out of later windows.
    """

    subject: str
    raw: TimeSeries
    filtered: TimeSeries
    segmented: SegmentedRecord
    plan: WindowPlan

    def informative_windows(self) -> list[TimeSeries]:
        n_win, _ = self.plan.sizes(self.filtered.fs)
        return [self.filtered.slice(w.start, w.start + n_win) for w in self.segmented.informative()]


def fuse_and_resample(channels: Sequence[TimeSeries], cfg: PreprocessConfig = PreprocessConfig()) -> TimeSeries:
    x = channels[0] if len(channels) == 1 else FUSERS[cfg.fuse](channels)
    return decimate(x, cfg.target_fs)


def preprocess_series(series: TimeSeries, subject: str = "", cfg: PreprocessConfig = PreprocessConfig()) -> Preprocessed:
    seg = classify_windows(segment(series, cfg.plan), cfg.mad_mult, cfg.floor_sd)
    return Preprocessed(subject, series, bandpass_bcg(series), seg, cfg.plan)


def preprocess(record: Record, cfg: PreprocessConfig = PreprocessConfig()) -> Preprocessed:
    return preprocess_series(fuse_and_resample(record.channels, cfg), record.subject, cfg)


def detect_windows(windows: Sequence[TimeSeries], cfg: DetectorConfig,
                   template: BcgTemplate | None = None) -> list[tuple[PeakList, HrEstimate]]:
    return [detect_window(w, cfg, template) for w in windows]
