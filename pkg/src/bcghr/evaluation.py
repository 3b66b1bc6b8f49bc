"""Scoring detected heart rate against a reference.

Error metrics and precision per subject, the minimum-peak-distance sweep,
and agreement statistics for repeated observations per subject
(Bland-Altman limits of agreement and repeated-measures correlation).
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .signal_core import TimeSeries

MPD_GRID = tuple(round(0.2 + 0.05 * i, 2) for i in range(11))
METRIC_NAMES = ("MAE", "MAPE (%)", "RMSE", "Prec (%)")
_TOL_RE = re.compile(r"^\s*([0-9]*\.?[0-9]+)\s*(%|bpm)?\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class Tolerance:
    """Threshold on |est - ref| for a detection to count as correct.

    Relative tolerances are percentages of the reference HR.
    """

    value: float = 10.0
    relative: bool = True

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("tolerance must be positive")

    @classmethod
    def parse(cls, text: str) -> "Tolerance":
        """``"10%"`` is relative, ``"5"`` or ``"5bpm"`` absolute."""
        m = _TOL_RE.match(str(text))
        if not m:
            raise ValueError(f"bad tolerance {text!r}; use e.g. 10% or 5")
        return cls(float(m.group(1)), m.group(2) == "%")

    def limit(self, ref):
        return np.asarray(ref, dtype=float) * self.value / 100.0 if self.relative else self.value

    def __str__(self) -> str:
        return f"{self.value:g}%" if self.relative else f"{self.value:g} BPM"


@dataclass(frozen=True)
class PairedHrSeries:
    subject: str
    pairs: tuple  # of (window_start_s, hr_ref_bpm, hr_est_bpm or None)

    def __post_init__(self):
        pairs = tuple((float(s), float(r), None if e is None else float(e)) for s, r, e in self.pairs)
        starts = [p[0] for p in pairs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError(f"{self.subject}: window starts must be strictly increasing")
        if any(not math.isfinite(p[1]) for p in pairs):
            raise ValueError(f"{self.subject}: reference HR missing for an evaluated window")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Reference and estimate arrays; absent estimates are NaN."""
        ref = np.array([p[1] for p in self.pairs], dtype=float)
        est = np.array([np.nan if p[2] is None else p[2] for p in self.pairs], dtype=float)
        return ref, est

    def correct_mask(self, tolerance: Tolerance) -> np.ndarray:
        ref, est = self.arrays()
        with np.errstate(invalid="ignore"):
            return np.isfinite(est) & (np.abs(est - ref) <= tolerance.limit(ref))


def pair_series(subject: str, reference: Iterable[tuple[float, float | None]],
                detections: Iterable[tuple[float, float | None]]) -> PairedHrSeries:
    """Join detections to reference rows by window start.

    Every detection window needs a reference row; windows whose reference HR
    is undefined are not scored.
    """
    ref = {round(s, 3): hr for s, hr in reference}
    pairs = []
    for start, est in sorted(detections, key=lambda r: r[0]):
        key = round(start, 3)
        if key not in ref:
            raise ValueError(f"window-grid mismatch: no reference for window starting at {start:.3f} s")
        if ref[key] is not None:
            pairs.append((start, ref[key], est))
    return PairedHrSeries(subject, tuple(pairs))


@dataclass(frozen=True)
class MetricsRow:
    subject: str
    mae: float
    mape: float
    rmse: float
    prec: float
    n_correct: int
    n_windows: int

    def values(self) -> tuple[float, float, float, float]:
        return self.mae, self.mape, self.rmse, self.prec


def error_metrics(paired: PairedHrSeries, tolerance: Tolerance = Tolerance(), all_pairs: bool = False) -> MetricsRow:
    """MAE, MAPE (%), RMSE over correct detections and Prec (%).

    A window whose estimate is absent counts as incorrect. With
    ``all_pairs`` the error metrics use every window that has an estimate
    (Prec is unchanged). Errors are NaN when nothing qualifies.
    """
    ref, est = paired.arrays()
    if ref.size == 0 or not np.any(np.isfinite(est)):
        raise ValueError("nothing to score")
    ok = paired.correct_mask(tolerance)
    use = np.isfinite(est) if all_pairs else ok
    if np.any(use):
        err = est[use] - ref[use]
        mae = float(np.mean(np.abs(err)))
        mape = float(100.0 * np.mean(np.abs(err) / ref[use]))
        rmse = float(np.sqrt(np.mean(err ** 2)))
    else:
        mae = mape = rmse = math.nan
    prec = 100.0 * int(ok.sum()) / ref.size
    return MetricsRow(paired.subject, mae, mape, rmse, prec, int(ok.sum()), int(ref.size))


def mean_sd(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample SD (n - 1), ignoring NaN; SD is NaN below two values."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return math.nan, math.nan
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else math.nan


def format_mean_sd(mean: float, sd: float) -> str:
    if math.isnan(mean):
        return ""
    return f"{mean:.2f}" if math.isnan(sd) else f"{mean:.2f} ({sd:.2f})"


@dataclass
class MetricsReport:
    rows: list[MetricsRow]
    tolerance: Tolerance
    method: str = ""

    def aggregate(self) -> dict[str, tuple[float, float]]:
        cols = list(zip(*(r.values() for r in self.rows)))
        return {name: mean_sd(col) for name, col in zip(METRIC_NAMES, cols)}

    def table(self) -> list[list[str]]:
        """Subjects as columns and a final ``Mean (SD)`` column."""
        agg = self.aggregate()
        out = [["Metrics"] + [r.subject for r in self.rows] + ["Mean (SD)"]]
        for i, name in enumerate(METRIC_NAMES):
            cells = ["" if math.isnan(r.values()[i]) else f"{r.values()[i]:.2f}" for r in self.rows]
            out.append([name] + cells + [format_mean_sd(*agg[name])])
        return out


def metrics_report(series: Sequence[PairedHrSeries], tolerance: Tolerance = Tolerance(),
                   all_pairs: bool = False, method: str = "") -> MetricsReport:
    rows = [error_metrics(s, tolerance, all_pairs) for s in series]
    return MetricsReport(rows, tolerance, method)


# -- agreement ---------------------------------------------------------------

@dataclass(frozen=True)
class LimitsOfAgreement:
    bias: float
    upper: float
    lower: float
    sd_between: float = 0.0
    sd_within: float = 0.0
    naive: bool = False


@dataclass(frozen=True)
class RmcorrResult:
    r: float
    p: float
    slope: float
    df: int
    intercepts: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AgreementReport:
    bias: float
    upper_loa: float
    lower_loa: float
    rmcorr_r: float
    rmcorr_p: float


def _selected(series: Sequence[PairedHrSeries], tolerance: Tolerance | None) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """Per-subject (ref, est) restricted to correct pairs, or to every pair
    with an estimate when ``tolerance`` is None. Empty subjects are dropped."""
    out = []
    for s in series:
        ref, est = s.arrays()
        keep = np.isfinite(est) if tolerance is None else s.correct_mask(tolerance)
        if keep.any():
            out.append((s.subject, ref[keep], est[keep]))
    return out


def _naive_loa(d: np.ndarray) -> LimitsOfAgreement:
    bias = float(d.mean())
    sd = float(d.std(ddof=1)) if d.size > 1 else 0.0
    return LimitsOfAgreement(bias, bias + 1.96 * sd, bias - 1.96 * sd, 0.0, sd, naive=True)


def loa_from_groups(groups: Sequence[np.ndarray]) -> LimitsOfAgreement:
    """Limits of agreement from per-subject differences.

    Between- and within-subject variances come from a one-way random-effects
    ANOVA on subject with method-of-moments estimates; unequal group sizes
    use ``n0 = (N - sum(n_i^2) / N) / (k - 1)``.
    """
    groups = [np.asarray(g, dtype=float) for g in groups if len(g)]
    if not groups:
        raise ValueError("nothing to score")
    d = np.concatenate(groups)
    if len(groups) < 2:
        warnings.warn("repeated-measures LoA undefined; falling back to naive LoA", stacklevel=3)
        return _naive_loa(d)
    k, n_tot = len(groups), d.size
    n_i = np.array([g.size for g in groups], dtype=float)
    means = np.array([g.mean() for g in groups])
    bias = float(d.mean())
    msb = float(np.sum(n_i * (means - bias) ** 2) / (k - 1))
    ssw = float(sum(np.sum((g - g.mean()) ** 2) for g in groups))
    msw = ssw / (n_tot - k) if n_tot > k else 0.0
    n0 = (n_tot - np.sum(n_i ** 2) / n_tot) / (k - 1)
    var_b = max(0.0, (msb - msw) / n0)
    sd = math.sqrt(var_b + msw)
    return LimitsOfAgreement(bias, bias + 1.96 * sd, bias - 1.96 * sd, math.sqrt(var_b), math.sqrt(msw))


def bland_altman_repeated(series: Sequence[PairedHrSeries], tolerance: Tolerance | None = None) -> LimitsOfAgreement:
    """Bias and 95% limits of agreement of ``est - ref`` with repeated windows per subject."""
    sel = _selected(series, tolerance)
    return loa_from_groups([est - ref for _, ref, est in sel])


def bland_altman_points(series: Sequence[PairedHrSeries], tolerance: Tolerance | None = None) -> list[tuple[str, float, float]]:
    """``(subject, mean of the pair, difference est - ref)`` for scatter plots."""
    return [(subj, float((r + e) / 2), float(e - r))
            for subj, ref, est in _selected(series, tolerance) for r, e in zip(ref, est)]


def rmcorr_from_groups(groups: Sequence[tuple[str, np.ndarray, np.ndarray]]) -> RmcorrResult:
    """Repeated-measures correlation of y on x with subject intercepts.

    ``groups`` holds ``(subject, x, y)``. The common slope comes from
    within-subject centred data; ``p`` from F(1, N - k - 1).
    """
    k = len(groups)
    n_tot = sum(len(x) for _, x, _ in groups)
    if k < 2:
        raise ValueError("rmcorr undefined: need at least 2 subjects")
    df = n_tot - k - 1
    if df < 1:
        raise ValueError(f"rmcorr undefined: {n_tot} pairs over {k} subjects leave no error degrees of freedom")
    xc = np.concatenate([np.asarray(x, float) - np.mean(x) for _, x, _ in groups])
    yc = np.concatenate([np.asarray(y, float) - np.mean(y) for _, _, y in groups])
    sxx = float(xc @ xc)
    if sxx == 0:
        raise ValueError("rmcorr undefined: reference is constant within every subject")
    slope = float(xc @ yc) / sxx
    ss_measure = slope ** 2 * sxx
    ss_error = float(np.sum((yc - slope * xc) ** 2))
    total = ss_measure + ss_error
    r = math.copysign(math.sqrt(ss_measure / total), slope) if total > 0 else 0.0
    if ss_error == 0:
        p = 0.0 if ss_measure > 0 else 1.0
    else:
        p = float(stats.f.sf(ss_measure / (ss_error / df), 1, df))
    intercepts = {s: float(np.mean(y) - slope * np.mean(x)) for s, x, y in groups}
    return RmcorrResult(r, p, slope, df, intercepts)


def rmcorr(series: Sequence[PairedHrSeries], tolerance: Tolerance | None = None) -> RmcorrResult:
    """Repeated-measures correlation of estimate on reference."""
    return rmcorr_from_groups(_selected(series, tolerance))


def rmcorr_lines(series: Sequence[PairedHrSeries], result: RmcorrResult,
                 tolerance: Tolerance | None = None) -> list[tuple[str, float, float, float, float]]:
    """Per-subject fitted line ``(subject, x_min, x_max, intercept, slope)``."""
    return [(subj, float(ref.min()), float(ref.max()), result.intercepts[subj], result.slope)
            for subj, ref, _ in _selected(series, tolerance)]


def format_p(p: float) -> str:
    return "P < .001" if p < 0.001 else f"P = {p:.4g}"


def agreement(series: Sequence[PairedHrSeries], tolerance: Tolerance | None = None) -> AgreementReport:
    loa = bland_altman_repeated(series, tolerance)
    rm = rmcorr(series, tolerance)
    return AgreementReport(loa.bias, loa.upper, loa.lower, rm.r, rm.p)


# -- MPD sweep ---------------------------------------------------------------

@dataclass(frozen=True)
class SweepRecord:
    """Band-passed informative windows of one record and its reference HR by window start."""

    subject: str
    windows: Sequence[TimeSeries]
    reference: Mapping[float, float | None]


@dataclass(frozen=True)
class SweepPoint:
    mpd_s: float
    mean_mae: float
    mean_prec: float


def mpd_sweep(records: Sequence[SweepRecord], template, distances: Sequence[float] = MPD_GRID,
              tolerance: Tolerance = Tolerance(), method: str = "template") -> list[SweepPoint]:
    """Score the detector at each minimum peak distance; subject means of MAE and Prec."""
    from .detect import DetectorConfig, detect_window

    out = []
    for mpd in distances:
        cfg = DetectorConfig(method, mpd_s=mpd)
        rows = []
        for rec in records:
            dets = [(w.t0, detect_window(w, cfg, template)[1].hr_bpm) for w in rec.windows]
            paired = pair_series(rec.subject, rec.reference.items(), dets)
            try:
                rows.append(error_metrics(paired, tolerance))
            except ValueError:
                # no estimate at all: every window incorrect
                rows.append(MetricsRow(rec.subject, math.nan, math.nan, math.nan, 0.0, 0, len(paired)))
        mae = [r.mae for r in rows]
        out.append(SweepPoint(float(mpd), mean_sd(mae)[0], float(np.mean([r.prec for r in rows]))))
    return out
