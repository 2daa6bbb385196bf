import math

import numpy as np
import pytest

from magworm.mechanics import (
    DegenerateEdgeError,
    RodState,
    bend_energy_arrays,
    bend_forces_arrays,
    cantilever_deflection,
    max_curvature,
    node_curvatures,
    stretch_energy_arrays,
    stretch_forces_arrays,
)

RNG = np.random.default_rng(7)


def straight_rod(n=11, l0=0.5e-3):
    x = np.zeros((n, 3))
    x[:, 0] = np.arange(n) * l0
    return x


def random_smooth_curve(n=12, l0=0.5e-3, amplitude=0.15):
    # gentle random bends so no edge degenerates
    x = straight_rod(n, l0)
    x[:, 1] += amplitude * l0 * np.cumsum(RNG.standard_normal(n))
    x[:, 2] += amplitude * l0 * np.cumsum(RNG.standard_normal(n))
    return x


def test_stretch_zero_at_rest():
    x = straight_rod()
    l0 = np.full(10, 0.5e-3)
    EA = np.full(10, 0.1728)
    f = stretch_forces_arrays(x, l0, EA)
    assert np.abs(f).max() <= 1e-12 * EA[0]


def test_stretch_one_percent_tension():
    # EA = E pi d^2/4 for d=100um, E=22MPa -> 0.1728 N; 1% strain -> 1.728e-3 N
    EA_val = 22e6 * math.pi * (100e-6) ** 2 / 4.0
    assert EA_val == pytest.approx(0.1728, abs=2e-4)
    x = straight_rod(3)
    x[2, 0] += 0.5e-3 * 0.01
    l0 = np.full(2, 0.5e-3)
    EA = np.full(2, EA_val)
    f = stretch_forces_arrays(x, l0, EA)
    assert np.linalg.norm(f[2]) == pytest.approx(EA_val * 0.01, rel=1e-12)
    assert f[2][0] < 0  # pulls back


def test_stretch_translation_invariance():
    x = random_smooth_curve()
    l0 = np.full(len(x) - 1, 0.5e-3)
    EA = np.full(len(x) - 1, 0.17)
    f1 = stretch_forces_arrays(x, l0, EA)
    f2 = stretch_forces_arrays(x + np.array([0.1, -0.2, 0.3]), l0, EA)
    assert np.allclose(f1, f2, atol=1e-18 + 1e-9 * np.abs(f1).max())


def test_degenerate_edge():
    x = straight_rod(3)
    x[1] = x[0]
    with pytest.raises(DegenerateEdgeError):
        stretch_forces_arrays(x, np.full(2, 0.5e-3), np.full(2, 0.17))


def test_bend_zero_on_straight():
    x = straight_rod()
    EI = np.full(len(x), 1.08e-10)
    vor = np.full(len(x), 0.5e-3)
    f = bend_forces_arrays(x, EI, vor)
    assert np.abs(f).max() <= 1e-25


def test_bend_gradient_matches_finite_differences():
    x = random_smooth_curve()
    n = len(x)
    EI = np.full(n, 1.08e-10)
    vor = np.full(n, 0.5e-3)
    f = bend_forces_arrays(x, EI, vor)
    h = 1e-9
    fd = np.zeros_like(f)
    for i in range(n):
        for k in range(3):
            xp = x.copy()
            xm = x.copy()
            xp[i, k] += h
            xm[i, k] -= h
            fd[i, k] = -(bend_energy_arrays(xp, EI, vor) - bend_energy_arrays(xm, EI, vor)) / (2 * h)
    scale = np.abs(f).max()
    assert np.abs(f - fd).max() <= 1e-6 * scale


def test_total_elastic_gradient_consistency():
    x = random_smooth_curve(10)
    n = len(x)
    l0 = np.full(n - 1, 0.5e-3)
    EA = np.full(n - 1, 0.17)
    EI = np.full(n, 1.08e-10)
    vor = np.full(n, 0.5e-3)

    def energy(xx):
        return (stretch_energy_arrays(xx, l0, EA) + bend_energy_arrays(xx, EI, vor))

    f = stretch_forces_arrays(x, l0, EA) + bend_forces_arrays(x, EI, vor)
    h = 1e-10
    fd = np.zeros_like(f)
    for i in range(n):
        for k in range(3):
            xp, xm = x.copy(), x.copy()
            xp[i, k] += h
            xm[i, k] -= h
            fd[i, k] = -(energy(xp) - energy(xm)) / (2 * h)
    assert np.abs(f - fd).max() <= 1e-6 * np.abs(f).max()


def test_internal_forces_conserve_momentum():
    x = random_smooth_curve(15)
    n = len(x)
    l0 = np.full(n - 1, 0.5e-3)
    EA = np.full(n - 1, 0.17)
    EI = np.full(n, 1.08e-10)
    vor = np.full(n, 0.5e-3)
    f = stretch_forces_arrays(x, l0, EA) + bend_forces_arrays(x, EI, vor)
    fmax = np.abs(f).max()
    assert np.linalg.norm(f.sum(axis=0)) <= 1e-12 * fmax * n
    # net torque about a random pivot
    pivot = np.array([0.01, -0.02, 0.005])
    tau = np.cross(x - pivot, f).sum(axis=0)
    assert np.linalg.norm(tau) <= 1e-12 * fmax * n * np.abs(x - pivot).max() * 10


def test_bend_force_rotation_equivariance():
    x = random_smooth_curve(9)
    n = len(x)
    EI = np.full(n, 1.08e-10)
    vor = np.full(n, 0.5e-3)
    f = bend_forces_arrays(x, EI, vor)
    ang = 0.7
    R = np.array([[math.cos(ang), -math.sin(ang), 0.0],
                  [math.sin(ang), math.cos(ang), 0.0],
                  [0.0, 0.0, 1.0]])
    f_rot = bend_forces_arrays(x @ R.T, EI, vor)
    assert np.abs(f_rot - f @ R.T).max() <= 1e-9 * np.abs(f).max()


def test_cantilever_deflection_values():
    assert cantilever_deflection(1e-8, 15e-3, 1.080e-10) == pytest.approx(104.2e-6, rel=1e-3)
    assert cantilever_deflection(0.0, 15e-3, 1.08e-10) == 0.0
    d1 = cantilever_deflection(1e-8, 10e-3, 1.08e-10)
    d2 = cantilever_deflection(1e-8, 20e-3, 1.08e-10)
    assert d2 == pytest.approx(8 * d1, rel=1e-12)


def test_max_curvature_straight():
    state = RodState(straight_rod(), np.zeros((11, 3)))
    assert max_curvature(state) == pytest.approx(0.0, abs=1e-9)


def test_max_curvature_circle():
    # nodes on a 2 mm circle, 20 nodes per semicircle -> 0.5/mm within 0.5%
    R = 2e-3
    theta = np.linspace(0.0, math.pi, 21)
    x = np.stack([R * np.cos(theta), R * np.sin(theta), np.zeros_like(theta)], axis=1)
    kappa = max_curvature(x)
    assert kappa == pytest.approx(1.0 / R, rel=5e-3)
    # all interior curvatures equal on a circle
    ks = node_curvatures(x)
    assert ks.std() / ks.mean() < 1e-9


def test_min_bend_radius_arithmetic():
    # a 1.1 mm minimum bend radius corresponds to 0.909/mm curvature
    assert 1.0 / 1.1e-3 == pytest.approx(0.909e3, rel=1e-3)


def test_rod_state_validation():
    with pytest.raises(ValueError):
        RodState(np.zeros((3, 3)), np.zeros((4, 3)))
    bad = np.zeros((3, 3))
    bad[1, 1] = np.nan
    with pytest.raises(ValueError):
        RodState(bad, np.zeros((3, 3)))
