"""Shared synthetic fixtures for the test suite."""
from __future__ import annotations

from functools import lru_cache

from bcghr.signal_core import TimeSeries, WindowPlan, bandpass_bcg, segment
from bcghr.synth import GroundTruth, SynthSpec, gen_bcg, label_slices
from bcghr.template import BcgTemplate, build_template, template_from_labels


@lru_cache(maxsize=None)
def synth_case(hr_bpm: float = 60.0, duration_s: float = 120.0, snr_db: float = float("inf"),
               seed: int = 0) -> tuple[TimeSeries, GroundTruth, BcgTemplate]:
    """Band-passed record, its ground truth and a template built from its own cycles."""
    x, truth = gen_bcg(SynthSpec(hr_bpm=hr_bpm, duration_s=duration_s, snr_db=snr_db, seed=seed))
    filtered = bandpass_bcg(x)
    template = build_template(template_from_labels(filtered, label_slices("s", filtered, truth), "s"))
    return filtered, truth, template


def windows(series: TimeSeries, plan: WindowPlan = WindowPlan()) -> list[TimeSeries]:
    return [w.series for w in segment(series, plan)]
