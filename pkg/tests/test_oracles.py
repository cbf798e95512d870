import numpy as np
import pytest

from tlsph.materials import neo_hookean_S
from tlsph.oracles import (
    CableWave,
    affine_motion_oracle,
    cable_grid_history,
    cable_tip_history,
    energy_gradient_oracle,
    lattice_interior_mask,
)


# -- cable wave: exact tip history --------------------------------------------
#
# wave speed c = sqrt(200e9 / 8000) = 5000 m/s; moving quarter [7.5, 10].
# Characteristics: the free end rides at 5 m/s until the front released at
# x = 7.5 reflects off it (t = 2.5 m / c = 0.5 ms), then rests at zero until
# the wall-reflected wave arrives (t = (7.5 + 10) m / c = 3.5 ms) and pulls
# it back at -5 m/s.

def test_tip_velocity_plateaus():
    v, _ = cable_tip_history(np.array([0.0, 2.5e-4, 1.0e-3, 3.0e-3, 3.75e-3]))
    assert v[0] == 5.0
    assert v[1] == 5.0
    assert v[2] == 0.0
    assert v[3] == 0.0
    assert v[4] == -5.0


def test_tip_displacement_values():
    _, u = cable_tip_history(np.array([2.5e-4, 5.0e-4, 2.0e-3, 4.0e-3]))
    assert u[0] == pytest.approx(5.0 * 2.5e-4, rel=1e-12)
    assert u[1] == pytest.approx(2.5e-3, rel=1e-12)
    assert u[2] == pytest.approx(2.5e-3, rel=1e-12)   # at rest on the plateau
    assert u[3] == pytest.approx(0.0, abs=1e-15)      # pulled back by the return wave


def test_tip_plateau_breakpoints():
    wave = CableWave()
    assert wave.tip_plateau_breakpoints(4e-3) == pytest.approx([5e-4, 3.5e-3])
    plateaus = wave.tip_plateaus(2e-3)
    assert len(plateaus) == 2
    assert plateaus[0][2] == 5.0
    assert plateaus[1][2] == 0.0


def test_tip_history_range_validation():
    with pytest.raises(ValueError):
        cable_tip_history(np.array([-1e-6]))
    with pytest.raises(ValueError):
        cable_tip_history(np.array([4.1e-3]))


def test_displacement_is_exact_integral_of_velocity():
    # trapezoid over the plateau representation (knots doubled, one value per
    # side) integrates the piecewise-constant velocity exactly
    wave = CableWave()
    ts, vs = [], []
    for lo, hi, value in wave.tip_plateaus(4e-3):
        seg = np.linspace(lo, hi, 201)
        ts.extend(seg.tolist())
        vs.extend([value] * len(seg))
    ts, vs = np.array(ts), np.array(vs)
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (vs[1:] + vs[:-1]) * np.diff(ts))])
    _, u = wave.tip_history(ts)
    assert np.abs(integral - u).max() <= 1e-12 * np.abs(u).max()


def test_characteristics_and_grid_construction_agree():
    wave = CableWave()
    grid = cable_grid_history(n_cells=10000, t_end=0.004)
    x = grid["x_probe"]
    v_exact = wave.velocity(x, grid["times"])
    u_exact = wave.displacement(x, grid["times"])
    assert np.abs(v_exact - grid["velocity"]).max() <= 1e-3 * wave.v0
    assert np.abs(u_exact - grid["displacement"]).max() <= 1e-3 * np.abs(u_exact).max()


def test_momentum_conserved_until_wall_interaction():
    wave = CableWave()
    rho = 8000.0
    expected = rho * 5.0 * 2.5  # per unit cross-section area
    for t in (0.0, 2.5e-4, 7.5e-4, 1.4e-3):
        assert wave.momentum_per_area(rho, t=t) == pytest.approx(expected, rel=1e-12)


def test_velocity_field_interior_point():
    wave = CableWave()
    # before any wave reaches x = 5 (front from 7.5 arrives at t = 0.5 ms)
    assert wave.velocity(5.0, 2e-4) == 0.0
    # after the left-moving front passes, the mid state is v = 2.5
    assert wave.velocity(5.0, 8e-4) == 2.5


# -- affine motion oracle --------------------------------------------------------

def test_affine_oracle_fields():
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -2.0]])
    pos = np.zeros((5, 3))
    F, dFdt = affine_motion_oracle(A, np.zeros(3), pos)
    assert F.shape == (5, 3, 3)
    assert np.array_equal(F[3], np.eye(3) + A)
    assert np.array_equal(dFdt[0], A)


def test_affine_oracle_zero_matrix():
    F, dFdt = affine_motion_oracle(np.zeros((3, 3)), np.zeros(3), np.zeros((2, 3)))
    assert np.array_equal(F[0], np.eye(3))
    assert np.array_equal(dFdt[1], np.zeros((3, 3)))


def test_interior_mask():
    pos = np.array([[0.0, 0, 0], [0.5, 0.5, 0.5], [1.0, 1.0, 1.0]])
    mask = lattice_interior_mask(pos, 0.25)
    assert mask.tolist() == [False, True, False]


# -- finite-difference energy gradient ----------------------------------------------

def test_energy_gradient_zero_at_reference():
    S = energy_gradient_oracle(np.eye(3), 5e6, 2e6)
    assert np.abs(S).max() <= 1e-8 * 2e6


def test_energy_gradient_matches_closed_form_for_diagonal_stretch():
    lam, mu = 5e6, 2e6
    F = np.diag([1.2, 0.9, 1.05])
    # closed form for diagonal F: S_kk = mu (1 - 1/C_kk) + lam ln(J) / C_kk
    C = np.diag(F) ** 2
    J = np.prod(np.diag(F))
    expected = np.diag(mu * (1.0 - 1.0 / C) + lam * np.log(J) / C)
    S = energy_gradient_oracle(F, lam, mu)
    assert np.allclose(S, expected, rtol=1e-5)
    assert np.linalg.norm(S - expected) <= 1e-5 * np.linalg.norm(expected)


def test_energy_gradient_second_order_in_step():
    lam, mu = 5e6, 2e6
    rng = np.random.default_rng(14)
    F = np.eye(3) + rng.uniform(-0.2, 0.2, (3, 3))
    exact = neo_hookean_S(F, lam, mu)
    err_coarse = np.linalg.norm(energy_gradient_oracle(F, lam, mu, step=2e-3) - exact)
    err_fine = np.linalg.norm(energy_gradient_oracle(F, lam, mu, step=1e-3) - exact)
    assert 3.0 <= err_coarse / err_fine <= 5.0


def test_energy_gradient_rejects_inverted_state():
    with pytest.raises(ValueError):
        energy_gradient_oracle(np.diag([-1.0, 1.0, 1.0]), 1e6, 1e6)
