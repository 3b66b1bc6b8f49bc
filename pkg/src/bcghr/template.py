"""Prototype cardiac cycle construction and cross-correlation beat matching."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .peaks import PeakList, local_maxima, select_by_distance
from .signal_core import TimeSeries

TEMPLATE_FS = 50.0
TEMPLATE_LEN = 50
SLICE_HOP = 25
CENTER = 25


@dataclass(frozen=True)
class BcgTemplate:
    samples: np.ndarray
    center_index: int = CENTER
    n_slices: int = 1
    sources: tuple[str, ...] = ()

    def __post_init__(self):
        x = np.array(self.samples, dtype=float).reshape(-1)
        if x.size != TEMPLATE_LEN:
            raise ValueError(f"template must have {TEMPLATE_LEN} samples, got {x.size}")
        if not np.all(np.isfinite(x)) or np.std(x) == 0:
            raise ValueError("template must be finite and non-constant")
        if not 0 <= self.center_index < TEMPLATE_LEN:
            raise ValueError(f"center_index {self.center_index} out of range")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    def save(self, path) -> None:
        """Write the 50 values as CSV plus a ``.meta`` sidecar."""
        path = Path(path)
        np.savetxt(path, self.samples, fmt="%.17g", header="template", comments="")
        meta = {
            "fs_hz": f"{TEMPLATE_FS:g}",
            "center_index": self.center_index,
            "n_slices": self.n_slices,
            "sources": " ".join(self.sources),
        }
        path.with_suffix(".meta").write_text("".join(f"{k}={v}\n" for k, v in meta.items()))

    @classmethod
    def load(cls, path) -> "BcgTemplate":
        from .io import read_metadata

        path = Path(path)
        values = np.loadtxt(path, skiprows=1, ndmin=1)
        meta_path = path.with_suffix(".meta")
        meta = read_metadata(meta_path) if meta_path.exists() else {}
        return cls(
            values,
            int(meta.get("center_index", CENTER)),
            int(meta.get("n_slices", 1)),
            tuple(meta.get("sources", "").split()),
        )


@dataclass(frozen=True)
class SliceLabel:
    record: str
    slice_start_s: float
    label: str  # "bcg" | "non-bcg"
    jpeak_time_s: float | None = None

    def __post_init__(self):
        if self.label not in ("bcg", "non-bcg"):
            raise ValueError(f"slice label must be bcg or non-bcg, got {self.label!r}")
        if self.label == "bcg":
            if self.jpeak_time_s is None:
                raise ValueError(f"bcg slice at {self.slice_start_s}s has no J-peak time")
            if not self.slice_start_s <= self.jpeak_time_s < self.slice_start_s + 1.0:
                raise ValueError(f"J-peak {self.jpeak_time_s}s lies outside slice at {self.slice_start_s}s")


LABEL_FIELDS = ["record", "slice_start_s", "label", "jpeak_time_s"]


def read_slice_labels(path) -> list[SliceLabel]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(LABEL_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing label columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                jp = row["jpeak_time_s"].strip()
                out.append(SliceLabel(
                    row["record"].strip(),
                    float(row["slice_start_s"]),
                    row["label"].strip(),
                    float(jp) if jp else None,
                ))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def write_slice_labels(path, labels: Iterable[SliceLabel]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LABEL_FIELDS)
        for lab in labels:
            jp = "" if lab.jpeak_time_s is None else f"{lab.jpeak_time_s:.6f}"
            w.writerow([lab.record, f"{lab.slice_start_s:.6f}", lab.label, jp])


def _require_50hz(series: TimeSeries) -> None:
    if abs(series.fs - TEMPLATE_FS) > 1e-9:
        raise ValueError(f"template pipeline requires 50 Hz, got {series.fs} Hz")


def slice_starts(n: int) -> range:
    return range(0, n - TEMPLATE_LEN + 1, SLICE_HOP)


def slice_segments(window: TimeSeries) -> list[TimeSeries]:
    """1 s slices every 0.5 s; a trailing partial slice is dropped."""
    _require_50hz(window)
    return [window.slice(s, s + TEMPLATE_LEN) for s in slice_starts(len(window))]


def build_template(slices: Sequence[tuple[np.ndarray, int]], sources: Sequence[str] = ()) -> BcgTemplate:
    """Ensemble-average labelled slices aligned on their J-peak.

    Parameters
    ----------
    slices : sequence of (samples, jpeak_index)
        50-sample slices and the J-peak position inside each. Every slice is
        rotated circularly so the J-peak lands on index 25.
    """
    if len(slices) == 0:
        raise ValueError("empty template: no valid bcg slices")
    acc = np.zeros(TEMPLATE_LEN)
    for samples, jpeak in slices:
        x = np.asarray(samples, dtype=float)
        if x.size != TEMPLATE_LEN:
            raise ValueError(f"slice has {x.size} samples, expected {TEMPLATE_LEN}")
        if not 0 <= jpeak < TEMPLATE_LEN:
            raise ValueError(f"J-peak index {jpeak} outside slice")
        acc += np.roll(x, CENTER - int(jpeak))
    mean = acc / len(slices)
    sd = mean.std()
    if sd == 0:
        raise ValueError("empty template: averaged slices are constant")
    z = (mean - mean.mean()) / sd
    return BcgTemplate(z, int(np.argmax(z)), len(slices), tuple(sorted(set(sources))))


def template_from_labels(series: TimeSeries, labels: Iterable[SliceLabel], record: str) -> list[tuple[np.ndarray, int]]:
    """Cut the bcg-labelled slices of ``record`` out of a (band-passed) series."""
    _require_50hz(series)
    out = []
    for lab in labels:
        if lab.record != record or lab.label != "bcg":
            continue
        start = int(round((lab.slice_start_s - series.t0) * series.fs))
        if start < 0 or start + TEMPLATE_LEN > len(series):
            raise ValueError(f"slice at {lab.slice_start_s}s lies outside record {record}")
        jpeak = int(round((lab.jpeak_time_s - lab.slice_start_s) * series.fs))
        out.append((series.samples[start:start + TEMPLATE_LEN], min(jpeak, TEMPLATE_LEN - 1)))
    return out


def ccf(template: BcgTemplate, window: TimeSeries) -> TimeSeries:
    """Normalised cross-correlation of the template against every full overlap.

    Output sample ``k`` holds the correlation coefficient when the template's
    J-peak sits on window sample ``k``. Shifts without a full 50-sample overlap
    and zero-variance segments give 0.
    """
    _require_50hz(window)
    y = window.samples
    n = y.size
    if n < TEMPLATE_LEN:
        raise ValueError(f"window needs at least {TEMPLATE_LEN} samples")
    x = template.samples - template.samples.mean()
    x_norm = np.sqrt(np.dot(x, x))
    raw = sliding_window_view(y, TEMPLATE_LEN)
    seg = raw - raw.mean(axis=1, keepdims=True)
    num = seg @ x
    den = np.sqrt(np.einsum("ij,ij->i", seg, seg)) * x_norm
    rho = np.zeros_like(num)
    # exactly flat segments: rounding in the mean must not fake a correlation
    ok = (den > 0) & (np.ptp(raw, axis=1) > 0)
    rho[ok] = num[ok] / den[ok]
    np.clip(rho, -1.0, 1.0, out=rho)
    out = np.zeros(n)
    c = template.center_index
    out[c:c + rho.size] = rho
    return window.with_samples(out)


def valid_ccf_range(template: BcgTemplate, n: int) -> tuple[int, int]:
    c = template.center_index
    return c, c + n - TEMPLATE_LEN + 1


def tm_detect(window: TimeSeries, template: BcgTemplate, mpd_s: float = 0.3, min_corr: float | None = None) -> PeakList:
    """J-peaks as maxima of the cross-correlation trace, pruned by minimum distance.

    ``min_corr`` (off by default) discards candidates whose coefficient does
    not exceed it before distance pruning.
    """
    if mpd_s <= 0:
        raise ValueError("minimum peak distance must be positive")
    trace = ccf(template, window).samples
    lo, hi = valid_ccf_range(template, len(window))
    inner = trace[lo:hi]
    cand = local_maxima(inner)
    if min_corr is not None:
        cand = cand[inner[cand] > min_corr]
    kept = select_by_distance(inner, cand, mpd_s * window.fs) + lo
    return PeakList(kept, window.fs, window.t0, "template")
