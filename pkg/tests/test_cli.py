from __future__ import annotations

import csv
import re

import numpy as np
import pytest

from bcghr.cli import main
from bcghr.detect import METHODS, DetectorConfig, detect_window
from bcghr.io import read_beats, read_detections, read_record, read_reference, write_record, write_reference
from bcghr.signal_core import TimeSeries
from bcghr.synth import SynthSpec, gen_bcg

# synthetic amplitudes are far below the default SD floor, and the literal
# artifact rule flags every window of a clean record; these open both gates
OPEN = ["--mad-mult", "1e6", "--floor-sd", "0"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- synth ------------------------------------------------------------------------------

def test_synth_defaults(tmp_path, capsys):
    code, out, _ = run(capsys, "synth", "--out", tmp_path)
    assert code == 0 and "300 beats" in out
    rec = read_record(tmp_path / "synth.csv")
    assert rec.fs == 50.0 and len(rec.channels[0]) == 15000
    np.testing.assert_allclose(np.diff(read_beats(tmp_path / "synth_beats.csv")), 1.0, atol=1e-9)
    _, ref = read_reference(tmp_path / "synth_reference.csv")
    assert [hr for _, hr in ref] == pytest.approx([60.0] * 19)


def test_synth_seed_is_deterministic(tmp_path, capsys):
    for d in ("a", "b"):
        run(capsys, "synth", "--seed", 7, "--snr-db", 5, "--jitter", 0.02, "--duration", 60, "--out", tmp_path / d)
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_synth_profile_gives_monotone_reference(tmp_path, capsys):
    run(capsys, "synth", "--hr-profile", "60:90", "--out", tmp_path)
    _, ref = read_reference(tmp_path / "synth_reference.csv")
    hrs = [hr for _, hr in ref]
    assert all(b >= a for a, b in zip(hrs, hrs[1:])) and hrs[-1] > hrs[0] + 20


def test_synth_invalid_spec_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--hr", "10", "--out", str(tmp_path)])
    assert exc.value.code == 2
    assert "bad synth spec" in capsys.readouterr().err


# -- preprocess ------------------------------------------------------------------------

@pytest.mark.xfail(strict=True, reason="the SD > k*MAD rule marks every window of a constant-SD record as artifact")
def test_preprocess_clean_record_has_no_artifacts(tmp_path, capsys):
    run(capsys, "synth", "--duration", 600, "--out", tmp_path)
    run(capsys, "preprocess", tmp_path / "synth.csv", "--floor-sd", 0, "--out", tmp_path)
    assert not [r for r in rows(tmp_path / "synth_windows.csv") if r["label"] == "artifact"]


def test_preprocess_burst_marks_artifact(tmp_path, capsys):
    x, _ = gen_bcg(SynthSpec(duration_s=600, snr_db=10, seed=2))
    y = x.samples.copy()
    burst = slice(300 * 50, 330 * 50)
    y[burst] += np.random.default_rng(5).normal(0, 100, burst.stop - burst.start)
    write_record(tmp_path / "b.csv", x.with_samples(y), ["bcg"], {"subject": "b"})
    code, out, _ = run(capsys, "preprocess", tmp_path / "b.csv", "--mad-mult", 300, "--floor-sd", 0, "--out", tmp_path)
    assert code == 0 and "artifact=" in out
    table = rows(tmp_path / "b_windows.csv")
    # window SDs sit near 27 with a MAD near 0.1, so k = 300 puts the cut near 30
    hit = [r for r in table if float(r["window_start_s"]) < 330 and float(r["window_end_s"]) > 300]
    assert any(r["label"] == "artifact" for r in hit)
    assert all(r["label"] != "artifact" for r in table if r not in hit)


def test_preprocess_empty_file(tmp_path, capsys):
    (tmp_path / "e.csv").write_text("")
    (tmp_path / "e.meta").write_text("fs_hz=50\n")
    code, out, err = run(capsys, "preprocess", tmp_path / "e.csv", "--out", tmp_path)
    assert code != 0 and "empty file" in err and out == ""


def test_preprocess_missing_metadata(tmp_path, capsys):
    (tmp_path / "r.csv").write_text("x\n1\n2\n")
    code, _, err = run(capsys, "preprocess", tmp_path / "r.csv", "--out", tmp_path)
    assert code == 1 and "fs_hz" in err


# -- detect ------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def detect72(tmp_path_factory):
    d = tmp_path_factory.mktemp("d72")
    main(["synth", "--hr", "72", "--duration", "120", "--name", "s72", "--out", str(d)])
    main(["template", "build", str(d / "s72.csv"), "--labels", str(d / "s72_labels.csv"), "--out", str(d / "t.csv")])
    main(["detect", str(d / "s72.csv"), "--method", "all", "--template", str(d / "t.csv"), *OPEN, "--out", str(d)])
    return read_detections(d / "s72_hr.csv")


_72_KNOWN = {
    "cwt-shan": "Shan1.5-1.0 at scale 75 passes roughly 0.17-1.17 Hz; 72 BPM is 1.2 Hz",
    "template": "ccf side lobes half a cycle from each beat survive 0.3 s pruning below about 75 BPM",
}


@pytest.mark.parametrize("method", [
    pytest.param(m, marks=pytest.mark.xfail(strict=True, reason=_72_KNOWN[m])) if m in _72_KNOWN else m
    for m in METHODS
])
def test_detect_72bpm(detect72, method):
    got = [hr for _, m, hr, _ in detect72 if m == method]
    assert len(got) == 7
    assert all(hr is not None and abs(hr - 72.0) <= 2.0 for hr in got)


def test_detect_no_informative_windows(tmp_path, capsys):
    write_record(tmp_path / "z.csv", TimeSeries(np.zeros(3000), 50.0), ["bcg"])
    code, _, err = run(capsys, "detect", tmp_path / "z.csv", "--out", tmp_path)
    assert code == 0 and "warning: " in err and "no informative windows" in err
    assert read_detections(tmp_path / "z_hr.csv") == []


def test_detect_fuse_max_matches_manual(tmp_path, capsys):
    a, _ = gen_bcg(SynthSpec(duration_s=90, snr_db=10, seed=1))
    b, _ = gen_bcg(SynthSpec(duration_s=90, snr_db=10, seed=2))
    write_record(tmp_path / "m.csv", [a, b.with_samples(0.5 * b.samples)], ["c1", "c2"], {"subject": "m"})
    fused = a.with_samples(np.maximum(a.samples, 0.5 * b.samples))
    write_record(tmp_path / "f.csv", fused, ["bcg"], {"subject": "m"})
    run(capsys, "detect", tmp_path / "m.csv", "--fuse", "max", *OPEN, "--out", tmp_path / "o1")
    run(capsys, "detect", tmp_path / "f.csv", *OPEN, "--out", tmp_path / "o2")
    assert (tmp_path / "o1" / "m_hr.csv").read_bytes() == (tmp_path / "o2" / "f_hr.csv").read_bytes()


def test_detect_store_matches_raw(tmp_path, capsys):
    run(capsys, "synth", "--duration", 60, "--out", tmp_path)
    run(capsys, "preprocess", tmp_path / "synth.csv", *OPEN, "--out", tmp_path / "pre")
    run(capsys, "detect", tmp_path / "pre" / "synth_filtered.csv", "--out", tmp_path / "o1")
    run(capsys, "detect", tmp_path / "synth.csv", *OPEN, "--out", tmp_path / "o2")
    a = read_detections(tmp_path / "o1" / "synth_hr.csv")
    b = read_detections(tmp_path / "o2" / "synth_hr.csv")
    assert a == b and len(a) == 3


def test_detect_template_without_template_is_usage_error(tmp_path, capsys):
    run(capsys, "synth", "--duration", 60, "--out", tmp_path)
    with pytest.raises(SystemExit) as exc:
        main(["detect", str(tmp_path / "synth.csv"), "--method", "template", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_detect_missing_input(tmp_path, capsys):
    code, out, err = run(capsys, "detect", tmp_path / "nope.csv", "--out", tmp_path)
    assert code == 1 and err.startswith("error: ") and out == ""


def test_detect_matches_library(tmp_path, capsys):
    x, _ = gen_bcg(SynthSpec(duration_s=60, snr_db=10, seed=4))
    write_record(tmp_path / "x.csv", x, ["bcg"])
    run(capsys, "detect", tmp_path / "x.csv", "--method", "cwt-gaus2", *OPEN, "--out", tmp_path)
    from bcghr.pipeline import PreprocessConfig, preprocess_series
    pre = preprocess_series(x, "x", PreprocessConfig(mad_mult=1e6, floor_sd=0.0))
    want = [detect_window(w, DetectorConfig("cwt-gaus2"))[1].hr_bpm for w in pre.informative_windows()]
    got = [hr for _, _, hr, _ in read_detections(tmp_path / "x_hr.csv")]
    assert got == pytest.approx(want, abs=5e-5)


# -- config ------------------------------------------------------------------------------

def test_config_precedence(tmp_path, capsys):
    x, _ = gen_bcg(SynthSpec(hr_bpm=110, duration_s=60, snr_db=5, seed=3))
    write_record(tmp_path / "x.csv", x, ["bcg"])
    (tmp_path / "c.conf").write_text("mpd=0.6\nmad-mult=1e6\nfloor_sd=0\n")
    outs = {}
    for tag, extra in {"cfg": ["--config", tmp_path / "c.conf"],
                       "flag06": ["--mpd", 0.6, *OPEN],
                       "both": ["--config", tmp_path / "c.conf", "--mpd", 0.3],
                       "flag03": ["--mpd", 0.3, *OPEN]}.items():
        assert run(capsys, "detect", tmp_path / "x.csv", *extra, "--out", tmp_path / tag)[0] == 0
        outs[tag] = (tmp_path / tag / "x_hr.csv").read_bytes()
    assert outs["cfg"] == outs["flag06"]
    assert outs["both"] == outs["flag03"]
    assert outs["cfg"] != outs["both"]


def test_config_unknown_key(tmp_path, capsys):
    (tmp_path / "c.conf").write_text("speed=11\n")
    code, _, err = run(capsys, "detect", tmp_path / "x.csv", "--config", tmp_path / "c.conf")
    assert code == 1 and "unknown config key 'speed'" in err


# -- evaluate ------------------------------------------------------------------------------

def _write_case(tmp_path, subject, ref, est, method="modwt-mra"):
    starts = [15.0 * i for i in range(len(ref))]
    write_reference(tmp_path / f"{subject}_ref.csv", list(zip(starts, ref)), subject=subject)
    path = tmp_path / f"{subject}_hr.csv"
    path.write_text("window_start_s,method,hr_bpm,n_beats\n"
                    + "".join(f"{s:.3f},{method},{'' if e is None else e},10\n" for s, e in zip(starts, est)))
    (tmp_path / f"{subject}_hr.meta").write_text(f"subject={subject}\n")


def _summary(path):
    return {r["method"]: r for r in rows(path)}


def test_evaluate_identity(tmp_path, capsys):
    _write_case(tmp_path, "a", [60, 70, 80], [60, 70, 80])
    _write_case(tmp_path, "b", [65, 75, 85], [65, 75, 85])
    code, out, _ = run(capsys, "evaluate", "--detections", tmp_path / "a_hr.csv", tmp_path / "b_hr.csv",
                       "--reference", tmp_path / "a_ref.csv", tmp_path / "b_ref.csv", "--out", tmp_path / "ev")
    assert code == 0 and "tolerance: 10%" in out
    row = _summary(tmp_path / "ev" / "summary.csv")["modwt-mra"]
    assert (row["MAE"], row["MAPE (%)"], row["RMSE"], row["Prec (%)"]) == \
        ("0.00 (0.00)", "0.00 (0.00)", "0.00 (0.00)", "100.00 (0.00)")


def test_evaluate_three_pair_fixture(tmp_path, capsys):
    _write_case(tmp_path, "s", [60, 60, 60], [63, 57, 100])
    code, _, _ = run(capsys, "evaluate", "--detections", tmp_path / "s_hr.csv", "--reference", tmp_path / "s_ref.csv",
                     "--tolerance", "10", "--out", tmp_path / "ev")
    assert code == 0
    table = {r["Metrics"]: r["s"] for r in rows(tmp_path / "ev" / "metrics_modwt-mra.csv")}
    assert table["MAE"] == "3.00" and table["Prec (%)"] == "66.67"


def test_evaluate_mean_sd_format(tmp_path, capsys):
    _write_case(tmp_path, "a", [60, 70, 80, 90], [62, 69, 85, 91])
    _write_case(tmp_path, "b", [60, 70, 80, 90], [60, 73, 79, 95])
    run(capsys, "evaluate", "--detections", tmp_path / "a_hr.csv", tmp_path / "b_hr.csv",
        "--reference", tmp_path / "a_ref.csv", tmp_path / "b_ref.csv", "--out", tmp_path / "ev")
    row = _summary(tmp_path / "ev" / "summary.csv")["modwt-mra"]
    for key in ("MAE", "MAPE (%)", "RMSE", "Prec (%)"):
        assert re.fullmatch(r"\d+\.\d{2} \(\d+\.\d{2}\)", row[key])
    assert (tmp_path / "ev" / "bland_altman_modwt-mra.csv").exists()
    assert (tmp_path / "ev" / "rmcorr_modwt-mra.csv").exists()


def test_evaluate_grid_mismatch_names_window(tmp_path, capsys):
    _write_case(tmp_path, "s", [60, 60, 60], [60, 60, 60])
    text = (tmp_path / "s_hr.csv").read_text().replace("30.000,", "45.000,")
    (tmp_path / "s_hr.csv").write_text(text)
    code, _, err = run(capsys, "evaluate", "--detections", tmp_path / "s_hr.csv", "--reference", tmp_path / "s_ref.csv",
                       "--out", tmp_path / "ev")
    assert code == 1 and "45.000 s" in err


def test_evaluate_missing_reference_subject(tmp_path, capsys):
    _write_case(tmp_path, "a", [60], [60])
    _write_case(tmp_path, "b", [60], [60])
    code, _, err = run(capsys, "evaluate", "--detections", tmp_path / "a_hr.csv", "--reference", tmp_path / "b_ref.csv",
                       "--out", tmp_path / "ev")
    assert code == 1 and "no reference for subject 'a'" in err


# -- bench -------------------------------------------------------------------------------

def _bench(tmp_path, capsys, tag):
    out = tmp_path / f"{tag}.csv"
    assert run(capsys, "bench", "--iterations", 100, "--out", out)[0] == 0
    return {r["method"]: float(r["mean_s"]) for r in rows(out)}


def test_bench_ordering_and_budget(tmp_path, capsys):
    t = _bench(tmp_path, capsys, "t")
    assert sorted(t) == sorted(METHODS)
    assert min(t, key=t.get) == "modwt-mra"
    assert all(v < 1.0 for v in t.values())


def test_bench_stability(tmp_path, capsys):
    a = _bench(tmp_path, capsys, "a")
    b = _bench(tmp_path, capsys, "b")
    for m in METHODS:
        pair = np.array([a[m], b[m]])
        assert pair.std(ddof=1) / pair.mean() < 0.2, m


# -- sweep, template candidates ---------------------------------------------------------------

def test_sweep_grid(tmp_path, capsys):
    run(capsys, "synth", "--hr", 110, "--duration", 90, "--out", tmp_path)
    run(capsys, "template", "build", tmp_path / "synth.csv", "--labels", tmp_path / "synth_labels.csv",
        "--out", tmp_path / "t.csv")
    code, _, _ = run(capsys, "sweep", tmp_path / "synth.csv", "--reference", tmp_path / "synth_reference.csv",
                     "--template", tmp_path / "t.csv", *OPEN, "--out", tmp_path / "sweep.csv")
    assert code == 0
    grid = [r["mpd_s"] for r in rows(tmp_path / "sweep.csv")]
    assert grid == [f"{0.2 + 0.05 * i:.2f}" for i in range(11)]


def test_template_candidates(tmp_path, capsys):
    run(capsys, "synth", "--duration", 30, "--out", tmp_path)
    code, out, _ = run(capsys, "template", "candidates", tmp_path / "synth.csv", "--out", tmp_path / "l.csv")
    assert code == 0 and "59 candidate slice(s)" in out
