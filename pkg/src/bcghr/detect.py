"""Per-window heart-rate detection with the five methods."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cwt as cwt_mod
from .modwt import bior39_filters, modwt_smooth
from .peaks import HrEstimate, PeakList, find_peaks, hr_from_peaks
from .signal_core import TimeSeries
from .template import BcgTemplate, ccf, tm_detect


@dataclass(frozen=True)
class CwtMethod:
    spec: cwt_mod.CwtWaveletSpec
    max_scale: int
    hr_scale: int


CWT_METHODS = {
    "cwt-gaus2": CwtMethod(cwt_mod.GAUS2, 30, 20),
    "cwt-fbsp": CwtMethod(cwt_mod.FBSP_2_1_1, 100, 45),
    "cwt-shan": CwtMethod(cwt_mod.SHAN_15_10, 100, 75),
}
METHODS = ("modwt-mra", "cwt-gaus2", "cwt-fbsp", "cwt-shan", "template")


@dataclass(frozen=True)
class DetectorConfig:
    """Detector settings.

    ``hr_scale`` overrides the CWT scale whose row is peak-picked. With
    ``full_grid`` the whole scalogram over the method's scale range is
    computed, as a scalogram-based analysis would; otherwise only that row.
    ``complex_part`` picks how a complex CWT row becomes a real trace:
    ``"real"`` (default) or ``"modulus"``. The modulus of a narrow-band row
    that holds a single cardiac harmonic is nearly flat, so it only carries
    beat timing when beat amplitudes vary.
    """

    method: str = "modwt-mra"
    mpd_s: float = 0.3
    hr_scale: int | None = None
    levels: int = 4
    aggregate: str = "median"
    full_grid: bool = True
    min_corr: float | None = None
    complex_part: str = "real"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.mpd_s <= 0:
            raise ValueError("mpd_s must be positive")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.complex_part not in ("real", "modulus"):
            raise ValueError(f"complex_part must be real or modulus, got {self.complex_part!r}")

    def scale(self) -> int:
        return self.hr_scale or CWT_METHODS[self.method].hr_scale


def response(window: TimeSeries, cfg: DetectorConfig, template: BcgTemplate | None = None) -> TimeSeries:
    """The 1-D trace whose maxima mark J-peaks for ``cfg.method``."""
    if cfg.method == "modwt-mra":
        return window.with_samples(modwt_smooth(window, bior39_filters(), cfg.levels))
    if cfg.method in CWT_METHODS:
        m = CWT_METHODS[cfg.method]
        a = cfg.scale()
        if cfg.full_grid:
            scal = cwt_mod.cwt(window, m.spec, range(1, max(m.max_scale, a) + 1))
            row = scal.row(a)
        else:
            row = cwt_mod.cwt_row(window.samples, m.spec, a)
        if m.spec.complex:
            row = np.abs(row) if cfg.complex_part == "modulus" else row.real
        return window.with_samples(row)
    if template is None:
        raise ValueError("template required for the template method")
    return ccf(template, window)


def detect_window(window: TimeSeries, cfg: DetectorConfig, template: BcgTemplate | None = None) -> tuple[PeakList, HrEstimate]:
    if cfg.method == "template":
        if template is None:
            raise ValueError("template required for the template method")
        peaks = tm_detect(window, template, cfg.mpd_s, cfg.min_corr)
    else:
        peaks = find_peaks(response(window, cfg), cfg.mpd_s, source=cfg.method)
    return peaks, hr_from_peaks(peaks, window.t0, cfg.aggregate)
