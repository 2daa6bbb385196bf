import numpy as np
import pytest
from hypothesis import given, strategies as st

from magworm.hydro import (
    FLUID_PRESETS,
    Fluid,
    SlendernessError,
    rft_coefficients,
    segment_drag,
    sphere_drag,
)


def test_coefficients_values():
    c_t, c_n = rft_coefficients(1e-3, 20e-3, 100e-6)
    assert c_t == pytest.approx(1.1442e-3, rel=1e-4)
    assert c_n == pytest.approx(1.9358e-3, rel=1e-4)


@given(st.floats(1e-5, 1.0), st.floats(1e-3, 1.0), st.floats(1e-6, 1e-4))
def test_anisotropy_bounds(mu, L, d):
    if L / d < 2.0:
        return
    c_t, c_n = rft_coefficients(mu, L, d)
    assert 1.0 < c_n / c_t < 2.0


def test_mu_linearity():
    c_t1, c_n1 = rft_coefficients(1e-3, 20e-3, 100e-6)
    c_t2, c_n2 = rft_coefficients(2e-3, 20e-3, 100e-6)
    assert c_t2 == pytest.approx(2 * c_t1, rel=1e-12)
    assert c_n2 == pytest.approx(2 * c_n1, rel=1e-12)


def test_slenderness_error():
    with pytest.raises(SlendernessError):
        rft_coefficients(1e-3, 100e-6, 100e-6)


def test_segment_drag_values():
    c_t, c_n = rft_coefficients(1e-3, 20e-3, 100e-6)
    t = np.array([1.0, 0.0, 0.0])
    F_par = segment_drag(np.array([1e-3, 0, 0]), t, c_t, c_n, 0.5e-3)
    assert np.linalg.norm(F_par) == pytest.approx(5.72e-10, rel=1e-3)
    assert F_par[0] < 0
    F_perp = segment_drag(np.array([0, 1e-3, 0]), t, c_t, c_n, 0.5e-3)
    assert np.linalg.norm(F_perp) == pytest.approx(9.68e-10, rel=1e-3)


def test_segment_drag_zero():
    c_t, c_n = rft_coefficients(1e-3, 20e-3, 100e-6)
    F = segment_drag(np.zeros(3), np.array([1.0, 0, 0]), c_t, c_n, 0.5e-3)
    assert np.allclose(F, 0.0)


@given(st.floats(-1e-2, 1e-2), st.floats(-1e-2, 1e-2), st.floats(-1e-2, 1e-2))
def test_dissipativity(vx, vy, vz):
    c_t, c_n = rft_coefficients(1e-3, 20e-3, 100e-6)
    v = np.array([vx, vy, vz])
    F = segment_drag(v, np.array([1.0, 0, 0]), c_t, c_n, 0.5e-3)
    power = float(F @ v)
    assert power <= 0.0
    if np.linalg.norm(v) > 1e-9:
        assert power < 0.0


def test_frame_consistency():
    # drag depends only on the relative velocity
    c_t, c_n = rft_coefficients(1e-3, 20e-3, 100e-6)
    t = np.array([0.6, 0.8, 0.0])
    v = np.array([2e-3, -1e-3, 0.5e-3])
    U = np.array([1e-3, 1e-3, -1e-3])
    F1 = segment_drag(v - U, t, c_t, c_n, 0.5e-3)
    F2 = segment_drag((v + 5 * U) - (U + 5 * U), t, c_t, c_n, 0.5e-3)
    assert np.allclose(F1, F2, rtol=1e-12, atol=1e-24)


def test_normal_drag_exceeds_tangential():
    c_t, c_n = rft_coefficients(1e-3, 20e-3, 100e-6)
    t = np.array([1.0, 0.0, 0.0])
    speed = 1e-3
    F_t = np.linalg.norm(segment_drag(np.array([speed, 0, 0]), t, c_t, c_n, 1e-3))
    F_n = np.linalg.norm(segment_drag(np.array([0, speed, 0]), t, c_t, c_n, 1e-3))
    assert F_n >= F_t


def test_sphere_drag():
    F = sphere_drag(50e-6, np.array([1e-3, 0, 0]), 1e-3)
    assert np.linalg.norm(F) == pytest.approx(9.425e-10, rel=1e-3)
    assert np.allclose(sphere_drag(50e-6, np.zeros(3), 1e-3), 0.0)


def test_fluid_presets():
    assert FLUID_PRESETS["water"].dynamic_viscosity == pytest.approx(1.0e-3)
    assert FLUID_PRESETS["paper-fem"].dynamic_viscosity == pytest.approx(0.1e-3)
    assert FLUID_PRESETS["blood-mimic"].dynamic_viscosity == pytest.approx(3.5e-3)
    with pytest.raises(ValueError):
        Fluid(density=-1.0, dynamic_viscosity=1e-3)
