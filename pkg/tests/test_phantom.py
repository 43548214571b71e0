import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drpalp.contact import MaterialParams
from drpalp.errors import ConfigError, DomainError
from drpalp.phantom import (PRESETS, SCAN_HORSESHOE_APEX_X, SCAN_SPHERE_X, HorseshoeIntrusion, PhantomSpec,
                            SphereIntrusion, local_fields, local_params, preset, smoothstep)


def test_preset_examples():
    s1 = preset("S1")
    assert s1.homogeneous and s1.matrix.E_f == 282.1e3
    s5 = preset("S5")
    assert s5.diameter == 80e-3 and len(s5.intrusions) == 2
    ch = preset("ChickenPlain")
    assert (ch.matrix.E_f, ch.matrix.eta) == (53.7e3, 623.0)
    with pytest.raises(ConfigError):
        preset("S9")


def test_far_point_is_matrix():
    p = preset("S5")
    assert local_params(p, 0.0, 30e-3) == p.matrix
    assert local_params(preset("S2"), 0.01, -0.02) == preset("S2").matrix


def test_sphere_apex_elevation():
    p = preset("S4")
    E = local_params(p, 0.0, 0.0).E_f
    assert E / p.matrix.E_f == pytest.approx(171.4 / 129.5, rel=1e-12)
    assert E / p.matrix.E_f - 1.0 == pytest.approx(0.32, abs=0.01)


def test_horseshoe_apex_elevation():
    p = preset("S3")
    E = local_params(p, 0.0, 0.0).E_f
    assert E / p.matrix.E_f - 1.0 == pytest.approx(0.10, abs=0.01)
    assert local_params(preset("S5"), SCAN_HORSESHOE_APEX_X, 0.0).E_f == pytest.approx(E)


def test_outside_footprint_raises():
    with pytest.raises(DomainError):
        local_params(preset("S2"), 0.03, 0.0)
    with pytest.raises(DomainError):
        local_params(preset("S4"), 0.0, 0.026)


def test_intrusion_must_fit():
    m = MaterialParams(1e5)
    inc = SphereIntrusion(center=(0.02, 0.0, -5e-3), radius=6e-3, material=m)
    with pytest.raises(DomainError):
        PhantomSpec(50e-3, 22e-3, m, (inc,))
    low = SphereIntrusion(center=(0.0, 0.0, -20e-3), radius=3e-3, material=m)
    with pytest.raises(DomainError):
        PhantomSpec(50e-3, 22e-3, m, (low,))


def test_scan_line_is_continuous():
    # bounded increments on a fine scan: a jump would show as one large step
    p = preset("S5")
    x = np.linspace(-35e-3, 35e-3, 14001)
    E, eta = local_fields(p, x, np.zeros_like(x))
    dx = x[1] - x[0]
    span = max(inc.material.E_f for inc in p.intrusions) - p.matrix.E_f
    # smoothstep slope is at most 1.5 / blend_length
    assert np.max(np.abs(np.diff(E))) <= 1.5 / 3e-3 * span * dx * 1.01
    assert np.all(np.isfinite(eta))


@given(st.floats(-0.039, 0.039), st.floats(-0.039, 0.039))
@settings(max_examples=200, deadline=None)
def test_blend_stays_between_matrix_and_intrusions(x, y):
    p = preset("S5")
    if not p.contains(x, y):
        return
    m = local_params(p, x, y)
    top_E = max(inc.material.E_f for inc in p.intrusions)
    top_eta = max(inc.material.eta for inc in p.intrusions)
    assert p.matrix.E_f <= m.E_f <= top_E
    assert p.matrix.eta <= m.eta <= top_eta
    assert m.nu == p.matrix.nu


@pytest.mark.parametrize("name", ["S1", "S2", "ChickenPlain"])
def test_homogeneous_presets_uniform(name):
    p = preset(name)
    rng = np.random.default_rng(3)
    r = p.diameter / 2 * np.sqrt(rng.uniform(size=200))
    th = rng.uniform(0, 2 * np.pi, 200)
    E, eta = local_fields(p, r * np.cos(th), r * np.sin(th))
    assert np.all(E == p.matrix.E_f) and np.all(eta == p.matrix.eta)


def test_every_preset_builds():
    for name in PRESETS:
        assert preset(name).name == name


def test_smoothstep_ends():
    assert smoothstep(0.0) == 0.0 and smoothstep(1.0) == 1.0
    assert smoothstep(-3.0) == 0.0 and smoothstep(4.0) == 1.0
    assert smoothstep(0.5) == 0.5


def test_horseshoe_geometry():
    hs = next(i for i in preset("S5").intrusions if isinstance(i, HorseshoeIntrusion))
    # closed end of the arc is the apex, the opening faces away from the sphere
    ax, ay = hs.apex
    assert ax == pytest.approx(SCAN_HORSESHOE_APEX_X)
    assert hs.horizontal_gap(ax, ay) == 0.0
    assert hs.horizontal_gap(hs.center[0] + hs.major_radius, hs.center[1]) > 0.0
    assert SCAN_SPHERE_X < ax
