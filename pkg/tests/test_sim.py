import dataclasses
import io

import numpy as np
import pytest

import oracles
from drpalp.contact import Sphere, dr_force, effective_modulus, elastic_force
from drpalp.errors import ConfigError, DomainError
from drpalp.phantom import preset
from drpalp.sim import (STREAM_COLUMNS, LoadCycle, QuasiStaticRamp, SampleStream, SensorModel, SinusoidPoint,
                        SinusoidScan, resample_to_filter_rate, simulate)

TIP = Sphere(5e-3)
POINT = SinusoidPoint(z0=4e-3, z_a=1e-3, omega=2.0, duration=5.0)


def test_noiseless_stream_follows_contact_law():
    p = preset("S2")
    s = simulate(p, TIP, POINT, SensorModel.noiseless())
    expected = dr_force(TIP, p.matrix, s.d_true, s.ddot_true)
    np.testing.assert_allclose(s.F_meas, expected, rtol=1e-13, atol=0)
    np.testing.assert_array_equal(s.v_meas[::2], s.ddot_true[::2])
    peaks = np.isclose(s.d_true, 5e-3, rtol=0, atol=1e-12)
    assert peaks.any()
    np.testing.assert_allclose(s.F_meas[peaks], elastic_force(TIP, p.matrix, 5e-3), rtol=1e-12)


def test_lumped_truth_columns():
    p = preset("S2")
    s = simulate(p, TIP, POINT, SensorModel.noiseless())
    d, v = s.d_true, s.ddot_true
    F = s.kappa_true * d**1.5 + s.lambda_true * np.sqrt(d) * v
    np.testing.assert_allclose(F, s.F_meas, rtol=1e-12)


def test_same_seed_same_stream():
    p = preset("S2")
    a = simulate(p, TIP, POINT, SensorModel(seed=11))
    b = simulate(p, TIP, POINT, SensorModel(seed=11))
    c = simulate(p, TIP, POINT, SensorModel(seed=12))
    assert a.to_csv() == b.to_csv()
    assert not np.array_equal(a.F_meas, c.F_meas)


def test_noise_variances():
    traj = SinusoidPoint(z0=4e-3, z_a=1e-3, omega=2.0, duration=25.0)
    s = simulate(preset("S2"), TIP, traj, SensorModel(seed=5))
    clean = simulate(preset("S2"), TIP, traj, SensorModel.noiseless())
    # one robot tick per two force ticks
    ev = (s.v_meas[::2] - s.ddot_true[::2]) * 1e3
    assert ev.size >= 10_000
    assert np.var(ev) == pytest.approx(0.4489, rel=0.10)
    ef = s.F_meas - clean.F_meas
    assert np.var(ef) == pytest.approx(0.05**2, rel=0.10)


def test_ramp_peak_force():
    traj = QuasiStaticRamp(speed=50e-3 / 60.0, max_depth=2.2e-3)
    p = preset("S1")
    s = simulate(p, TIP, traj, SensorModel.noiseless())
    d_max = s.d_true.max()
    assert d_max == pytest.approx(2.2e-3, abs=1e-6)
    F_el = elastic_force(TIP, p.matrix, d_max)
    assert F_el == pytest.approx(3.66, abs=0.01)
    assert F_el == pytest.approx(oracles.sphere_bed_force(5e-3, effective_modulus(p.matrix), d_max), rel=1e-6)
    assert s.F_meas.max() == pytest.approx(dr_force(TIP, p.matrix, d_max, traj.speed), rel=1e-12)


def test_surface_offset_in_end_effector_height():
    p = preset("S2")
    q = dataclasses.replace(p, surface_z=10e-3)
    s = simulate(q, TIP, QuasiStaticRamp(speed=1e-3, max_depth=2e-3), SensorModel.noiseless())
    np.testing.assert_allclose(s.z_ee, 10e-3 - s.d_true, atol=1e-15)


def test_lost_contact_is_config_error():
    with pytest.raises(ConfigError):
        SinusoidPoint(z0=1e-3, z_a=1e-3, omega=2.0, duration=1.0)
    with pytest.raises(ConfigError):
        SinusoidScan(z0=1e-3, z_a=2e-3, omega=2.0, dwell=0.0, scan_speed=4e-3, scan_length=0.01)


def test_descent_reaches_sinusoid_smoothly():
    traj = dataclasses.replace(POINT, descend=True)
    t_in = traj.lead_in
    assert t_in == pytest.approx(4e-3 / (1e-3 * 4 * np.pi))
    t = np.array([0.0, t_in / 2, t_in - 1e-9, t_in, t_in + 1e-9])
    _, _, d, v, _ = traj.kinematics(t)
    assert d[0] == 0.0 and d[1] == pytest.approx(2e-3)
    np.testing.assert_allclose(d[2:], 4e-3, atol=1e-9)
    np.testing.assert_allclose(v, 1e-3 * 4 * np.pi, rtol=1e-6)
    s = simulate(preset("S2"), TIP, traj, SensorModel.noiseless())
    assert s.F_meas[0] == 0.0 and s.F_meas.max() > 1.0


def test_scan_keeps_contact_and_moves():
    traj = SinusoidScan(z0=3e-3, z_a=1e-3, omega=2.0, dwell=2.0, scan_speed=4e-3, scan_length=40e-3,
                        start=(-20e-3, 0.0))
    s = simulate(preset("S5"), TIP, traj, SensorModel(seed=1))
    assert s.d_true.min() > 0
    assert s.x[0] == pytest.approx(-20e-3) and s.x[-1] == pytest.approx(20e-3)
    assert np.all(np.diff(s.x) >= 0)


def test_trajectory_outside_phantom():
    traj = QuasiStaticRamp(speed=1e-3, max_depth=1e-3, x=0.03)
    with pytest.raises(DomainError):
        simulate(preset("S2"), TIP, traj, SensorModel())


def test_load_cycle_shape():
    traj = LoadCycle(speed=6e-3, max_depth=5e-3)
    t = np.linspace(0, traj.duration, 1001)
    _, _, d, v, _ = traj.kinematics(t)
    assert d.max() == pytest.approx(5e-3)
    assert d[0] == pytest.approx(d[-1])
    assert set(np.unique(v)) == {-6e-3, 6e-3}


def test_resample_decimates():
    s = simulate(preset("S2"), TIP, POINT, SensorModel(seed=2))
    r = resample_to_filter_rate(s, 2e-3)
    assert r.dt == pytest.approx(2e-3)
    assert len(r) == (len(s) - 1) // 2 + 1
    np.testing.assert_array_equal(r.F_meas, s.F_meas[::2])
    np.testing.assert_array_equal(r.v_meas, s.v_meas[::2])
    np.testing.assert_array_equal(r.x, s.x[::2])


def test_resample_identity_and_too_fast():
    s = simulate(preset("S2"), TIP, POINT, SensorModel(seed=2, force_rate=500.0))
    r = resample_to_filter_rate(s, 2e-3)
    np.testing.assert_array_equal(r.F_meas, s.F_meas)
    np.testing.assert_array_equal(r.t, s.t)
    with pytest.raises(DomainError):
        resample_to_filter_rate(s, 1e-3)


def test_csv_round_trip(tmp_path):
    s = simulate(preset("S2"), TIP, POINT, SensorModel(seed=4)).take(slice(0, 300))
    path = tmp_path / "s.csv"
    s.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# schema_version=1 kind=sample_stream")
    assert lines[1] == ",".join(STREAM_COLUMNS)
    back = SampleStream.from_csv(path)
    for c in STREAM_COLUMNS:
        np.testing.assert_allclose(getattr(back, c), getattr(s, c), rtol=1e-8, atol=1e-15)
    assert back.force_period == s.force_period


def test_csv_rejects_other_schema(tmp_path):
    s = simulate(preset("S2"), TIP, POINT, SensorModel(seed=4)).take(slice(0, 10))
    buf = io.StringIO()
    s.to_csv(buf)
    path = tmp_path / "bad.csv"
    path.write_text(buf.getvalue().replace("schema_version=1", "schema_version=7"))
    with pytest.raises(ConfigError):
        SampleStream.from_csv(path)
