from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from bcghr.evaluation import (
    MPD_GRID,
    PairedHrSeries,
    SweepRecord,
    Tolerance,
    agreement,
    bland_altman_points,
    bland_altman_repeated,
    error_metrics,
    format_mean_sd,
    format_p,
    loa_from_groups,
    mean_sd,
    metrics_report,
    mpd_sweep,
    pair_series,
    rmcorr,
    rmcorr_from_groups,
    rmcorr_lines,
)

from support import synth_case, windows


def paired(subject, ref, est, start=0.0):
    return PairedHrSeries(subject, tuple((start + 15.0 * i, r, e) for i, (r, e) in enumerate(zip(ref, est))))


def rmcorr_oracle(groups):
    """Subject dummies plus one shared slope, solved from the normal equations."""
    subjects = [s for s, _, _ in groups]
    rows, y = [], []
    for s, xs, ys in groups:
        for xv, yv in zip(xs, ys):
            rows.append([1.0 if s == t else 0.0 for t in subjects] + [xv])
            y.append(yv)
    X, y = np.array(rows), np.array(y)
    beta = np.linalg.solve(X.T @ X, X.T @ y)
    rss_full = float(np.sum((y - X @ beta) ** 2))
    Xr = X[:, :-1]
    br = np.linalg.solve(Xr.T @ Xr, Xr.T @ y)
    rss_reduced = float(np.sum((y - Xr @ br) ** 2))
    ss_measure = rss_reduced - rss_full
    r = math.copysign(math.sqrt(ss_measure / (ss_measure + rss_full)), beta[-1])
    df = len(y) - len(subjects) - 1
    p = stats.f.sf(ss_measure / (rss_full / df), 1, df)
    return r, p, beta[-1]


# -- tolerance -------------------------------------------------------------------------

def test_tolerance_parse():
    assert Tolerance.parse("10%") == Tolerance(10, True)
    assert Tolerance.parse("5") == Tolerance(5, False)
    assert Tolerance.parse("2.5 BPM") == Tolerance(2.5, False)
    assert str(Tolerance()) == "10%" and str(Tolerance(5, False)) == "5 BPM"
    with pytest.raises(ValueError, match="bad tolerance"):
        Tolerance.parse("ten")
    with pytest.raises(ValueError):
        Tolerance(0)


# -- error metrics ------------------------------------------------------------------------

def test_three_pair_fixture():
    row = error_metrics(paired("s", [60, 60, 60], [63, 57, 100]), Tolerance(10, relative=False))
    # exact rational arithmetic on the two correct pairs
    errs = [Fraction(3), Fraction(-3)]
    mae = sum(abs(e) for e in errs) / 2
    mape = 100 * sum(abs(e) / 60 for e in errs) / 2
    assert row.mae == pytest.approx(float(mae), abs=1e-12)
    assert row.mape == pytest.approx(float(mape), abs=1e-12)
    assert row.rmse == pytest.approx(math.sqrt(sum(e * e for e in errs) / 2), abs=1e-12)
    assert row.prec == pytest.approx(float(Fraction(200, 3)), abs=1e-12)
    assert (row.n_correct, row.n_windows) == (2, 3)


def test_identity_gives_zero_errors():
    row = error_metrics(paired("s", [60, 70, 80], [60, 70, 80]))
    assert (row.mae, row.mape, row.rmse, row.prec) == (0.0, 0.0, 0.0, 100.0)


def test_absent_estimate_counts_as_incorrect():
    row = error_metrics(paired("s", [60, 60], [60, None]))
    assert row.prec == 50.0 and row.mae == 0.0


def test_nothing_to_score():
    with pytest.raises(ValueError, match="nothing to score"):
        error_metrics(paired("s", [60], [None]))
    with pytest.raises(ValueError, match="nothing to score"):
        error_metrics(PairedHrSeries("s", ()))


def test_no_correct_detection_gives_nan_errors():
    row = error_metrics(paired("s", [60], [90]))
    assert math.isnan(row.mae) and row.prec == 0.0


def test_all_pairs_variant():
    row = error_metrics(paired("s", [60, 60, 60], [63, 57, 100]), Tolerance(10, False), all_pairs=True)
    assert row.mae == pytest.approx(46 / 3)
    assert row.prec == pytest.approx(200 / 3)


def test_paired_series_invariants():
    with pytest.raises(ValueError):
        PairedHrSeries("s", ((15.0, 60, 60), (0.0, 60, 60)))
    with pytest.raises(ValueError):
        PairedHrSeries("s", ((0.0, float("nan"), 60),))


hr = st.floats(40, 150)
est_or_none = st.one_of(st.none(), st.floats(30, 200))


@given(st.lists(st.tuples(hr, est_or_none), min_size=1, max_size=30), st.randoms(use_true_random=False))
def test_metric_properties(pairs, rnd):
    if all(e is None for _, e in pairs):
        return
    s = paired("s", [r for r, _ in pairs], [e for _, e in pairs])
    row = error_metrics(s)
    assert 0 <= row.prec <= 100
    if not math.isnan(row.mae):
        assert row.mae >= 0 and row.rmse >= row.mae - 1e-12
    shuffled = pairs[:]
    rnd.shuffle(shuffled)
    row2 = error_metrics(paired("s", [r for r, _ in shuffled], [e for _, e in shuffled]))
    assert row2.prec == pytest.approx(row.prec)
    if not math.isnan(row.mae):
        assert row2.mae == pytest.approx(row.mae) and row2.rmse == pytest.approx(row.rmse)


@given(st.lists(st.tuples(hr, st.floats(30, 200)), min_size=1, max_size=30), st.floats(0.5, 30), st.floats(0.5, 30))
def test_prec_monotone_in_tolerance(pairs, t1, t2):
    t1, t2 = sorted((t1, t2))
    s = paired("s", [r for r, _ in pairs], [e for _, e in pairs])
    for rel in (True, False):
        assert error_metrics(s, Tolerance(t1, rel)).prec <= error_metrics(s, Tolerance(t2, rel)).prec


# -- aggregate report ---------------------------------------------------------------------

TABLE4 = {
    "MAE": ([3.13, 4.92, 5.06, 4.70, 3.78, 4.68, 5.00, 7.16, 3.87, 4.83], "4.71 (1.07)"),
    "MAPE (%)": ([4.55, 7.45, 8.76, 8.15, 5.90, 8.66, 9.07, 9.99, 6.31, 7.26], "7.61 (1.65)"),
    "RMSE": ([4.05, 5.81, 5.94, 5.60, 4.68, 5.66, 5.88, 7.83, 4.69, 5.74], "5.59 (1.02)"),
    "Prec (%)": ([96.53, 81.87, 81.27, 83.66, 94.11, 70.54, 85.99, 30.77, 94.19, 83.23], "80.22 (19.01)"),
}


@pytest.mark.parametrize("metric", TABLE4)
def test_table4_mean_sd_format(metric):
    values, printed = TABLE4[metric]
    assert format_mean_sd(*mean_sd(values)) == printed


def test_mean_sd_edge_cases():
    m, s = mean_sd([5.0])
    assert m == 5.0 and math.isnan(s)
    assert format_mean_sd(5.0, math.nan) == "5.00"
    m, s = mean_sd([1.0, math.nan, 3.0])
    assert m == 2.0 and s == pytest.approx(math.sqrt(2))


def test_report_table_layout():
    series = [paired("P1", [60, 60], [61, 59]), paired("P2", [70, 70], [70, 90])]
    table = metrics_report(series).table()
    assert table[0] == ["Metrics", "P1", "P2", "Mean (SD)"]
    assert [r[0] for r in table[1:]] == ["MAE", "MAPE (%)", "RMSE", "Prec (%)"]
    assert table[4][1:] == ["100.00", "50.00", "75.00 (35.36)"]


def test_pair_series_alignment():
    s = pair_series("s", [(0.0, 60.0), (15.0, 61.0), (30.0, None)], [(15.0, 62.0), (0.0, None), (30.0, 70.0)])
    assert s.pairs == ((0.0, 60.0, None), (15.0, 61.0, 62.0))
    with pytest.raises(ValueError, match="window starting at 45.000 s"):
        pair_series("s", [(0.0, 60.0)], [(0.0, 60.0), (45.0, 60.0)])


# -- Bland-Altman ------------------------------------------------------------------------

def test_constant_differences():
    loa = loa_from_groups([np.full(3, 2.0), np.full(4, 2.0)])
    assert (loa.bias, loa.upper, loa.lower) == (2.0, 2.0, 2.0)


def test_hand_anova_fixture():
    # groups {1, 3} and {-1, 1}: grand mean 1; MSB = 4, MSW = 2, n0 = 2
    # -> between variance (4 - 2) / 2 = 1, within variance 2
    loa = loa_from_groups([np.array([1.0, 3.0]), np.array([-1.0, 1.0])])
    assert loa.bias == pytest.approx(1.0)
    assert loa.sd_between == pytest.approx(1.0) and loa.sd_within == pytest.approx(math.sqrt(2))
    assert loa.upper == pytest.approx(1 + 1.96 * math.sqrt(3))
    assert loa.lower == pytest.approx(1 - 1.96 * math.sqrt(3))


def test_unbalanced_groups_use_n0():
    g = [np.array([0.0, 2.0, 4.0]), np.array([5.0]), np.array([1.0, 3.0])]
    d = np.concatenate(g)
    n = np.array([3, 1, 2.0])
    means = np.array([2.0, 5.0, 2.0])
    msb = np.sum(n * (means - d.mean()) ** 2) / 2
    msw = (8.0 + 0.0 + 2.0) / (6 - 3)
    n0 = (6 - np.sum(n ** 2) / 6) / 2
    sd = math.sqrt(max(0.0, (msb - msw) / n0) + msw)
    assert loa_from_groups(g).upper == pytest.approx(d.mean() + 1.96 * sd)


@given(st.lists(st.floats(-20, 20), min_size=2, max_size=20))
def test_one_pair_per_subject_is_naive(diffs):
    loa = loa_from_groups([np.array([d]) for d in diffs])
    d = np.array(diffs)
    sd = d.std(ddof=1)
    assert abs(loa.upper - (d.mean() + 1.96 * sd)) < 1e-10
    assert abs(loa.lower - (d.mean() - 1.96 * sd)) < 1e-10


def test_single_subject_falls_back():
    with pytest.warns(UserWarning, match="falling back to naive LoA"):
        loa = bland_altman_repeated([paired("s", [60, 60, 60], [61, 59, 62])])
    assert loa.naive
    assert loa.upper == pytest.approx(2 / 3 + 1.96 * np.std([1, -1, 2], ddof=1))


def test_bland_altman_uses_correct_pairs_with_tolerance():
    series = [paired("a", [60, 60], [62, 90]), paired("b", [60, 60], [59, 61])]
    pts = bland_altman_points(series, Tolerance())
    assert [(s, d) for s, _, d in pts] == [("a", 2.0), ("b", -1.0), ("b", 1.0)]
    assert len(bland_altman_points(series)) == 4


@given(st.lists(st.lists(st.floats(-10, 10), min_size=1, max_size=6), min_size=2, max_size=6))
def test_loa_ordering(groups):
    loa = loa_from_groups([np.array(g) for g in groups])
    assert loa.lower <= loa.bias + 1e-12 and loa.bias <= loa.upper + 1e-12


# -- rmcorr -----------------------------------------------------------------------------

FIXTURE = [
    ("s1", np.array([60.0, 64.0, 70.0, 75.0]), np.array([62.0, 63.0, 72.0, 74.0])),
    ("s2", np.array([80.0, 78.0, 85.0, 90.0]), np.array([77.0, 80.0, 88.0, 87.0])),
    ("s3", np.array([55.0, 58.0, 61.0, 66.0]), np.array([57.0, 56.0, 64.0, 65.0])),
]


def test_rmcorr_matches_normal_equations():
    res = rmcorr_from_groups(FIXTURE)
    r, p, slope = rmcorr_oracle(FIXTURE)
    assert abs(res.r - r) < 1e-10
    assert abs(res.slope - slope) < 1e-10
    assert abs(res.p - p) < 1e-10
    assert res.df == 12 - 3 - 1


def test_rmcorr_perfect_offsets():
    groups = [(s, x, x + off) for (s, x, _), off in zip(FIXTURE, (3.0, -5.0, 10.0))]
    res = rmcorr_from_groups(groups)
    assert res.r == pytest.approx(1.0, abs=1e-12) and res.p == 0.0
    assert res.intercepts["s2"] == pytest.approx(-5.0)


def test_rmcorr_null_case():
    rng = np.random.default_rng(0)
    groups = [(f"s{i}", rng.uniform(50, 90, 40), rng.uniform(50, 90, 40)) for i in range(5)]
    res = rmcorr_from_groups(groups)
    assert abs(res.r) < 0.2 and res.p > 0.05


@given(st.lists(st.floats(-30, 30), min_size=3, max_size=3))
def test_rmcorr_invariant_to_subject_offsets(offsets):
    base = rmcorr_from_groups(FIXTURE)
    moved = rmcorr_from_groups([(s, x, y + o) for (s, x, y), o in zip(FIXTURE, offsets)])
    assert abs(moved.r - base.r) < 1e-12


def test_rmcorr_errors():
    with pytest.raises(ValueError, match="rmcorr undefined"):
        rmcorr_from_groups(FIXTURE[:1])
    with pytest.raises(ValueError, match="rmcorr undefined"):
        rmcorr_from_groups([(s, np.full(4, 60.0), y) for s, _, y in FIXTURE])
    with pytest.raises(ValueError, match="rmcorr undefined"):
        rmcorr_from_groups([("a", np.array([1.0]), np.array([1.0])), ("b", np.array([2.0]), np.array([2.0]))])


def test_rmcorr_series_interface_and_lines():
    series = [PairedHrSeries(s, tuple((15.0 * i, xv, yv) for i, (xv, yv) in enumerate(zip(x, y))))
              for s, x, y in FIXTURE]
    res = rmcorr(series)
    assert res.r == pytest.approx(rmcorr_from_groups(FIXTURE).r)
    lines = rmcorr_lines(series, res)
    assert lines[0][:3] == ("s1", 60.0, 75.0)
    rep = agreement(series)
    assert -1 <= rep.rmcorr_r <= 1 and 0 <= rep.rmcorr_p <= 1
    assert rep.lower_loa <= rep.bias <= rep.upper_loa


def test_format_p():
    assert format_p(1e-9) == "P < .001"
    assert format_p(0.0123456) == "P = 0.01235"


# -- MPD sweep --------------------------------------------------------------------------

def test_sweep_grid():
    assert MPD_GRID == (0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7)


def test_sweep_rows_and_beat_merging():
    filtered, truth, template = synth_case(110.0)
    wins = windows(filtered)
    ref = dict(truth.hr_profile)
    points = mpd_sweep([SweepRecord("s", wins, ref)], template)
    assert [p.mpd_s for p in points] == list(MPD_GRID)
    prec = {p.mpd_s: p.mean_prec for p in points}
    # 110 BPM beats sit 0.545 s apart, so any mpd above that merges beats
    assert prec[0.6] < prec[0.3]
    assert all(prec[m] <= prec[0.5] for m in MPD_GRID if m > 0.5)
