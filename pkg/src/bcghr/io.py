"""CSV and ``key=value`` sidecar formats shared by the library and the CLI.

Signal files carry a header row, either ``time_s,ch1,...`` or ``ch1,...``,
and one sample per row. The sidecar ``<stem>.meta`` holds ``fs_hz``,
``units`` and ``subject`` lines.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .signal_core import TimeSeries


class ParseError(ValueError):
    pass


def metadata_path(path) -> Path:
    return Path(path).with_suffix(".meta")


def read_metadata(path) -> dict[str, str]:
    meta = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        meta[key.strip()] = value.strip()
    return meta


def write_metadata(path, meta: dict) -> None:
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in meta.items()))


@dataclass
class Record:
    channels: list[TimeSeries]
    names: list[str]
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def subject(self) -> str:
        return self.meta.get("subject", "")

    @property
    def fs(self) -> float:
        return self.channels[0].fs


def _parse_rows(path: Path, ncol: int) -> np.ndarray:
    """Slow path with line-numbered diagnostics."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != ncol:
                raise ParseError(f"{path}:{lineno}: expected {ncol} fields, got {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric value in {row!r}") from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError(f"{path}:{lineno}: non-finite value in {row!r}")
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.array(rows)


def read_record(path, fs: float | None = None) -> Record:
    """Load a signal CSV and its sidecar.

    ``fs`` overrides the sidecar's ``fs_hz``. Without either, a ``time_s``
    column is used to infer the rate.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: no such file")
    with open(path) as fh:
        text_head = [fh.readline().rstrip("\r\n")]
    if not text_head or not text_head[0].strip():
        raise ParseError(f"{path}:1: empty file or missing header row")
    header = [h.strip() for h in text_head[0].split(",")]
    if any(_is_number(h) for h in header):
        raise ParseError(f"{path}:1: header row expected, got {text_head[0]!r}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # empty-file notice; handled below
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[0] == 0 or data.shape[1] != len(header) or not np.all(np.isfinite(data)):
            raise ValueError
    except ValueError:
        data = _parse_rows(path, len(header))

    mpath = metadata_path(path)
    meta = read_metadata(mpath) if mpath.exists() else {}
    has_time = header[0] == "time_s"
    if fs is None:
        if "fs_hz" in meta:
            fs = float(meta["fs_hz"])
        elif has_time and data.shape[0] > 1:
            fs = 1.0 / float(np.median(np.diff(data[:, 0])))
        else:
            raise ParseError(f"{mpath}: missing metadata key 'fs_hz' (or pass --fs)")
    t0 = float(data[0, 0]) if has_time else 0.0
    names = header[1:] if has_time else header
    cols = data[:, 1:] if has_time else data
    if cols.shape[1] == 0:
        raise ParseError(f"{path}:1: no signal columns")
    units = meta.get("units", "mV")
    channels = [TimeSeries(cols[:, i], fs, t0, units) for i in range(cols.shape[1])]
    meta.setdefault("subject", path.stem)
    return Record(channels, names, meta)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def write_record(path, channels: Sequence[TimeSeries] | TimeSeries, names: Sequence[str] | None = None,
                 meta: dict | None = None, with_time: bool = True) -> None:
    """Write channels as CSV (full float precision) plus the sidecar."""
    if isinstance(channels, TimeSeries):
        channels = [channels]
    names = list(names or [f"ch{i + 1}" for i in range(len(channels))])
    first = channels[0]
    cols = [c.samples for c in channels]
    header = names
    if with_time:
        cols = [first.times] + cols
        header = ["time_s"] + names
    data = np.column_stack(cols)
    path = Path(path)
    np.savetxt(path, data, delimiter=",", fmt="%.17g", header=",".join(header), comments="")
    out_meta = {"fs_hz": f"{first.fs:.17g}", "units": first.units}
    out_meta.update(meta or {})
    write_metadata(metadata_path(path), out_meta)


def _fmt(x: float | None, spec: str = ".4f") -> str:
    return "" if x is None else format(x, spec)


DETECTION_FIELDS = ["window_start_s", "method", "hr_bpm", "n_beats"]


def write_detections(path, rows: Iterable[tuple[float, str, float | None, int]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DETECTION_FIELDS)
        for start, method, hr, n in rows:
            w.writerow([f"{start:.3f}", method, _fmt(hr), n])


def read_detections(path) -> list[tuple[float, str, float | None, int]]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != DETECTION_FIELDS:
            raise ParseError(f"{path}:1: expected header {','.join(DETECTION_FIELDS)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                hr = row["hr_bpm"].strip()
                out.append((float(row["window_start_s"]), row["method"],
                            float(hr) if hr else None, int(row["n_beats"])))
            except (ValueError, AttributeError):
                raise ParseError(f"{path}:{lineno}: malformed detection row") from None
    return out


def write_peaks(path, rows: Iterable[tuple[str, float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "peak_time_s"])
        for method, t in rows:
            w.writerow([method, f"{t:.4f}"])


REFERENCE_FIELDS = ["window_start_s", "hr_bpm"]


def write_reference(path, rows: Iterable[tuple[float, float | None]], subject: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REFERENCE_FIELDS)
        for start, hr in rows:
            w.writerow([f"{start:.3f}", _fmt(hr)])
    if subject is not None:
        write_metadata(metadata_path(path), {"subject": subject})


def read_reference(path) -> tuple[str, list[tuple[float, float | None]]]:
    """Return ``(subject, rows)``; the subject comes from the sidecar or the file stem."""
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != REFERENCE_FIELDS:
            raise ParseError(f"{path}:1: expected header {','.join(REFERENCE_FIELDS)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                hr = row["hr_bpm"].strip()
                rows.append((float(row["window_start_s"]), float(hr) if hr else None))
            except (ValueError, AttributeError):
                raise ParseError(f"{path}:{lineno}: malformed reference row") from None
    mpath = metadata_path(path)
    subject = read_metadata(mpath).get("subject", path.stem) if mpath.exists() else path.stem
    return subject, rows


def write_beats(path, times: Iterable[float]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("beat_time_s\n")
        for t in times:
            fh.write(f"{t:.17g}\n")


def read_beats(path) -> np.ndarray:
    return np.loadtxt(path, skiprows=1, ndmin=1)
