import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from drpalp.analysis import (ScanProfile, autocorrelation, detect_peaks, format_csv, format_table, match_peaks,
                             moving_average, summarize, t_test)
from drpalp.errors import DegenerateDataError, DomainError
from drpalp.phantom import SCAN_HORSESHOE_APEX_X, SCAN_SPHERE_X, local_fields, preset


# ---- summaries ---------------------------------------------------------------------

def test_summarize_examples():
    s = summarize([283.9, 286.0, 281.5, 284.7], reference=282.1)
    assert s.mean == pytest.approx(284.025)
    assert s.rel_error == pytest.approx(100 * (284.025 - 282.1) / 282.1)
    assert s.n == 4
    c = summarize([5.0] * 10, reference=5.0)
    assert c.std == 0.0 and c.rel_error == 0.0
    one = summarize([3.0])
    assert math.isnan(one.std) and math.isnan(one.rel_error)
    with pytest.raises(DomainError):
        summarize([])


@given(st.lists(st.floats(1.0, 1e3), min_size=2, max_size=30), st.floats(0.01, 100.0), st.floats(1.0, 1e3))
@settings(max_examples=60, deadline=None)
def test_summarize_scale_equivariance(values, c, ref):
    a = summarize(values, ref)
    b = summarize([c * v for v in values], c * ref)
    assert b.mean == pytest.approx(c * a.mean, rel=1e-9)
    assert b.std == pytest.approx(c * a.std, rel=1e-9, abs=1e-9 * c * a.mean)
    assert b.rel_error == pytest.approx(a.rel_error, rel=1e-9, abs=1e-9)


# ---- correlation and smoothing -------------------------------------------------------

def test_autocorrelation_examples():
    x = np.random.default_rng(0).normal(size=100)
    rho = autocorrelation(x, 10)
    assert rho[0] == 1.0
    assert abs(rho[1]) < 0.2
    alt = np.tile([1.0, -1.0], 50)
    assert autocorrelation(alt, 1)[1] == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(DegenerateDataError):
        autocorrelation(np.ones(50), 3)
    with pytest.raises(DomainError):
        autocorrelation(x[:5], 5)


def test_white_noise_lags_inside_band():
    n = 2000
    x = np.random.default_rng(42).normal(size=n)
    rho = autocorrelation(x, 100)[1:]
    inside = np.mean(np.abs(rho) <= 2.0 / math.sqrt(n))
    assert inside >= 0.95


def test_moving_average_examples():
    np.testing.assert_allclose(moving_average(np.full(50, 3.5), 30), 3.5)
    ramp = np.arange(100.0)
    w = 30
    ma = moving_average(ramp, w)
    assert ma.size == 100 - w + 1
    # output j belongs to input j + w - 1 and lags it by (w - 1) / 2
    np.testing.assert_allclose(ramp[w - 1:] - ma, (w - 1) / 2.0)
    with pytest.raises(DomainError):
        moving_average(ramp[:10], 30)


@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_moving_average_reveals_drift(sign):
    rng = np.random.default_rng(9)
    n = 600
    # 1 % drift per 100 samples under 1 % noise
    x = 100.0 * (1.0 + sign * 0.01 * np.arange(n) / 100.0) + rng.normal(0.0, 1.0, n)
    ma = moving_average(x, 30)
    slope = np.polyfit(np.arange(ma.size), ma, 1)[0]
    assert np.sign(slope) == sign
    assert slope == pytest.approx(sign * 0.01, rel=0.1)


# ---- t-test ------------------------------------------------------------------------------

def test_t_test_examples():
    rng = np.random.default_rng(1)
    a = rng.normal(129.5, 0.5, 50)
    b = rng.normal(171.4, 1.0, 50)
    p = t_test(a, b)
    assert p < 1e-10
    assert oracles.normal_two_sided_p(a.mean(), a.std(ddof=1), 50, b.mean(), b.std(ddof=1), 50) < 1e-10
    assert t_test(a, a.copy()) == 1.0
    assert t_test(a, a[::-1]) == 1.0
    small = [t_test(rng.normal(0, 1, 5), rng.normal(0.1, 1, 5)) for _ in range(20)]
    assert np.median(small) > 0.01
    assert t_test(rng.normal(0, 1, 5), rng.normal(0.1, 1, 5)) > 0.01


def test_t_test_agrees_with_normal_approximation_for_large_groups():
    rng = np.random.default_rng(3)
    a = rng.normal(0.0, 1.0, 4000)
    b = rng.normal(0.06, 2.0, 5000)
    p = t_test(a, b)
    ref = oracles.normal_two_sided_p(a.mean(), a.std(ddof=1), a.size, b.mean(), b.std(ddof=1), b.size)
    assert p == pytest.approx(ref, rel=0.02)


def test_t_test_degenerate_groups():
    with pytest.raises(DegenerateDataError):
        t_test([1.0, 1.0, 1.0], [2.0, 2.0])
    with pytest.raises(DomainError):
        t_test([1.0], [2.0, 3.0])


# ---- peaks ----------------------------------------------------------------------------

def _truth_profile(name, half_span, step=1e-3):
    x = np.arange(-half_span, half_span + step / 2, step)
    E, eta = local_fields(preset(name), x, np.zeros_like(x))
    return ScanProfile(position=x, Ef=E, eta=eta, origin=(0.0, 0.0))


def test_flat_profile_has_no_peaks():
    prof = _truth_profile("S2", 24e-3)
    assert detect_peaks(prof, baseline_window=20e-3) == []
    assert detect_peaks(_truth_profile("ChickenPlain", 38e-3)) == []


def test_s5_truth_field_gives_two_peaks_at_intrusions():
    prof = _truth_profile("S5", 38e-3)
    peaks = detect_peaks(prof)
    assert len(peaks) == 2
    assert match_peaks(peaks, [SCAN_SPHERE_X, SCAN_HORSESHOE_APEX_X], 3e-3) == [True, True]
    assert peaks[0].elevation / preset("S5").matrix.E_f == pytest.approx(171.4 / 129.5 - 1, rel=0.05)


def test_chicken_lump_gives_one_peak():
    peaks = detect_peaks(_truth_profile("ChickenSphere", 38e-3))
    assert len(peaks) == 1
    assert abs(peaks[0].position) <= 3e-3


@given(st.floats(-50e3, 500e3))
@settings(max_examples=40, deadline=None)
def test_peaks_shift_invariant_with_fixed_reference(c):
    prof = _truth_profile("S5", 38e-3, step=2e-3)
    ref = float(np.median(prof.Ef))
    base = [p.position for p in detect_peaks(prof, reference=ref)]
    moved = ScanProfile(prof.position, prof.Ef + c, prof.eta)
    assert [p.position for p in detect_peaks(moved, reference=ref)] == base


@pytest.mark.parametrize("c", [-10e3, -1e3, 1e3, 10e3])
def test_peaks_shift_invariant_with_default_reference(c):
    prof = _truth_profile("S5", 38e-3, step=2e-3)
    base = [p.position for p in detect_peaks(prof)]
    moved = ScanProfile(prof.position, prof.Ef + c, prof.eta)
    assert [p.position for p in detect_peaks(moved)] == base


def test_short_profile_is_rejected():
    prof = _truth_profile("S5", 10e-3)
    with pytest.raises(DomainError):
        detect_peaks(prof, baseline_window=30e-3)


def test_scan_profile_validation_and_geometry():
    with pytest.raises(DomainError):
        ScanProfile([0.0, 0.0, 1.0], [1, 2, 3], [1, 2, 3])
    with pytest.raises(DomainError):
        ScanProfile([0.0, 1.0], [1, 2, 3], [1, 2, 3])
    prof = ScanProfile([0.0, 1.0, 2.0], [1, 2, 3], [1, 2, 3], origin=(-0.03, 0.01), direction=(0.6, 0.8))
    x, y = prof.world(0.5)
    assert (x, y) == pytest.approx((-0.03 + 0.3, 0.01 + 0.4))
    assert prof.arc_length(x, y) == pytest.approx(0.5)
    assert prof.to_csv().splitlines()[:2] == ["# schema_version=1 kind=scan_profile", "position,Ef,eta"]


def test_table_formatting():
    rows = [["S1", 282100.0, 1.4321], ["S2", math.nan, 3]]
    csv_text = format_csv(["case", "mean", "err"], rows)
    assert csv_text.splitlines() == ["case,mean,err", "S1,2.821e+05,1.432", "S2,nan,3"]
    table = format_table(["case", "mean", "err"], rows, title="t")
    lines = table.splitlines()
    assert lines[0] == "t" and set(lines[2]) <= {"-", " "}
    assert len({len(l) for l in lines[1:]}) == 1
