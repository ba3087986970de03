import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partobs.integrate import integrate_rk4, rk4_states, simulate
from partobs.models import (FAMILIES, BurgersConfig, HeatConfig, SweConfig, WaveConfig,
                            burgers_estimation_space, burgers_model, get_family,
                            heat_gramian_closed_form, heat_model, lgl_nodes, swe_estimation_space,
                            swe_model, wave_model)
from partobs.models.burgers import spline_matrix
from partobs.models.lgl import differentiation_matrix
from partobs.models.linpair import (closed_form_sigma, output_gramian_integral,
                                    printed_quadratic_form)
from partobs.models.swe import DryStateError, build_mesh, interpolation_matrix, sloped_bed
from partobs.models.wave import _laplacian, eigenmode

# --- heat -------------------------------------------------------------------------


def test_heat_propagate_matches_rk4():
    model = heat_model(HeatConfig(N=4, Nt=200))
    u0 = np.array([1.0, -0.5, 0.25, 0.1])
    exact = simulate(model, u0[None])[:, 0]
    numeric = rk4_states(model.rhs, model.sample_times, u0, 4)
    np.testing.assert_allclose(numeric, exact, atol=1e-9)


def test_heat_lift_restrict_round_trip():
    model = heat_model(HeatConfig(N=6))
    u = np.arange(1.0, 7.0)
    np.testing.assert_allclose(model.restrict(model.lift(u)), u, atol=1e-12)


def test_heat_closed_form_diagonal():
    cfg = HeatConfig()
    G = heat_gramian_closed_form(1, cfg)
    lam = (math.pi / cfg.L) ** 2
    assert G[0, 0] == pytest.approx(math.sin(math.pi * cfg.x0 / cfg.L) ** 2
                                    * (1 - math.exp(-2 * lam * cfg.T)) / (2 * lam))


def test_heat_config_validation():
    with pytest.raises(ValueError):
        HeatConfig(x0=0.0)
    with pytest.raises(ValueError):
        HeatConfig(N=0)


# --- linear pair ------------------------------------------------------------------


def test_linear_pair_printed_form_is_twice_the_integral():
    for delta in (0.01, 0.1):
        np.testing.assert_allclose(printed_quadratic_form(delta, 10.0),
                                   2 * output_gramian_integral(delta, 10.0), rtol=1e-14)
    assert closed_form_sigma(0.1, 10.0) == pytest.approx(0.05, rel=2e-2)


# --- wave -------------------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 5, 20])
def test_wave_eigenmodes(k):
    cfg = WaveConfig(N=20)
    phi = eigenmode(cfg, k)
    lam = -4 / cfg.h ** 2 * math.sin(k * math.pi / (2 * (cfg.N + 1))) ** 2
    np.testing.assert_allclose(_laplacian(phi, cfg.h), lam * phi, atol=1e-9 * abs(lam))


def test_wave_observation_and_inner():
    cfg = WaveConfig(N=10)
    wave = wave_model(cfg)
    u = np.concatenate([np.arange(1.0, 11.0), np.zeros(10)])
    assert wave.model.observe(u)[0] == pytest.approx(10.0 / cfg.h)
    assert wave.model.state_norm(u) == pytest.approx(math.sqrt(cfg.h * 385))
    with pytest.raises(ValueError):
        WaveConfig(N=1)


def test_wave_propagate_matches_rk4():
    cfg = WaveConfig(N=10, T=0.5, Nt=10, substeps=200)
    wave = wave_model(cfg)
    u0 = np.concatenate([eigenmode(cfg, 2), np.zeros(10)])
    verlet = simulate(wave.model, u0[None])[:, 0]
    rk = integrate_rk4(wave.model, u0, substeps=200).states
    np.testing.assert_allclose(verlet, rk, atol=1e-4)


# --- Burgers ----------------------------------------------------------------------


def test_spline_matrix_reproduces_linear_data():
    nodes = np.linspace(0, 2 * math.pi, 11)
    pts = [0.3, 1.7, 5.0]
    H = spline_matrix(nodes, pts)
    np.testing.assert_allclose(H @ (2 * nodes + 1), 2 * np.array(pts) + 1, atol=1e-12)
    np.testing.assert_allclose(H.sum(axis=1), 1.0, atol=1e-12)


def test_burgers_rhs_second_order():
    errs = []
    for n in (20, 40, 80):
        cfg = BurgersConfig(N=n)
        model = burgers_model(cfg)
        x = np.linspace(0, cfg.L, n + 1)[1:-1]
        u = np.sin(x)
        exact = -np.sin(x) * np.cos(x) - cfg.kappa * np.sin(x)
        errs.append(np.abs(model.rhs(0.0, u) - exact).max())
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_burgers_observation_converges_for_smooth_state():
    for n, tol in ((40, 1e-3), (80, 2e-4)):
        cfg = BurgersConfig(N=n)
        x = np.linspace(0, cfg.L, n + 1)[1:-1]
        y = burgers_model(cfg).observe(np.sin(x))
        np.testing.assert_allclose(y, np.sin(cfg.sensor_positions), atol=tol)


def test_burgers_estimation_space_has_zero_mean_constraint():
    space = burgers_estimation_space(BurgersConfig(N=40, KF=2))
    assert space.size == 4
    assert space.labels == ("alpha_1", "alpha_2", "beta_1", "beta_2")
    # alpha_0/2 + sum alpha_k = 0: every member vanishes at x = 0
    for b in space.basis:
        lifted = burgers_model(BurgersConfig(N=40)).lift(b)
        assert abs(float(lifted(0.0))) < 1e-12


def test_burgers_config_validation():
    with pytest.raises(ValueError):
        BurgersConfig(kappa=0.0)
    with pytest.raises(ValueError):
        BurgersConfig(sensors=(7.0,))


# --- Legendre-Gauss-Lobatto -------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 4, 7, 12])
def test_lgl_nodes_are_roots_of_derivative(n):
    x, w, D = lgl_nodes(n)
    assert x[0] == -1.0 and x[-1] == 1.0
    assert np.all(np.diff(x) > 0)
    if n >= 2:
        interior = np.sort(np.polynomial.legendre.Legendre.basis(n).deriv().roots())
        np.testing.assert_allclose(x[1:-1], interior, atol=1e-13)
    assert w.sum() == pytest.approx(2.0, rel=1e-14)
    # exact for polynomials of degree 2n - 1
    deg = 2 * n - 1
    assert w @ x ** (deg - 1 if deg % 2 else deg) == pytest.approx(
        2 / (deg if deg % 2 else deg + 1), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.lists(st.floats(-3, 3), min_size=1, max_size=11))
def test_lgl_derivative_exact_for_polynomials(n, coeffs):
    x, _, D = lgl_nodes(n)
    coeffs = coeffs[:n + 1]
    p = np.polynomial.Polynomial(coeffs)
    np.testing.assert_allclose(D @ p(x), p.deriv()(x), atol=1e-10 * (1 + np.abs(coeffs).sum()))


def test_differentiation_rows_sum_to_zero():
    D = differentiation_matrix(np.array([-1.0, -0.2, 0.5, 1.0]))
    np.testing.assert_allclose(D.sum(axis=1), 0.0, atol=1e-14)


# --- shallow water ----------------------------------------------------------------


def test_mesh_basics():
    mesh = build_mesh(5, 4)
    assert mesh.x.size == 21
    assert mesh.mass.sum() == pytest.approx(2.0, rel=1e-14)
    np.testing.assert_allclose(mesh.D @ mesh.x, 1.0, atol=1e-11)
    np.testing.assert_allclose(mesh.F @ np.ones(21), 1.0, atol=1e-13)


def test_interpolation_matrix():
    nodes = np.array([0.0, 0.5, 1.0])
    P = interpolation_matrix(nodes, [0.25, 1.0])
    np.testing.assert_allclose(P @ np.array([0.0, 1.0, 4.0]), [0.5, 4.0])


def test_lake_at_rest_flat_bed():
    cfg = SweConfig(elements=20, h0=lambda x: np.full_like(x, 0.3), bed=lambda x: 0 * x)
    model = swe_model(cfg)
    states = simulate(model, model.initial_state()[None])[:, 0]
    assert np.abs(states - states[0]).max() < 1e-12


def test_lake_at_rest_sloped_bed():
    cfg = SweConfig(elements=54, h0=lambda x: 0.35 - sloped_bed(x))
    model = swe_model(cfg)
    states = simulate(model, model.initial_state()[None])[:, 0]
    G = model.grid_size
    surface = states[:, :G] + sloped_bed(model.params["nodes"])
    assert np.abs(surface - 0.35).max() < 1e-6
    assert np.abs(states[:, G:]).max() < 1e-6


def test_swe_mass_conservation():
    model = swe_model(SweConfig(elements=54))
    states = simulate(model, model.initial_state()[None])[:, 0]
    mass = states[:, :model.grid_size] @ model.params["mass"]
    assert np.abs(mass / mass[0] - 1).max() < 1e-6


def test_swe_outflow_stays_finite():
    model = swe_model(SweConfig(elements=20, boundary="outflow"))
    states = simulate(model, model.initial_state()[None])[:, 0]
    assert np.all(np.isfinite(states))


def test_swe_dry_state_rejected():
    with pytest.raises(DryStateError, match="dry state"):
        swe_model(SweConfig(elements=10, h0=lambda x: x))


def test_swe_config_validation():
    with pytest.raises(ValueError):
        SweConfig(sensors=(1.5,))
    with pytest.raises(ValueError):
        SweConfig(boundary="periodic")
    with pytest.raises(ValueError):
        SweConfig(g=0.0)


def test_swe_estimation_space_perturbs_depth_only():
    cfg = SweConfig(elements=10, KF=2)
    space = swe_estimation_space(cfg)
    G = build_mesh(10, 4).x.size
    assert space.size == 5
    for b in space.basis:
        assert np.all(b[G:] == 0.0)


# --- registry -----------------------------------------------------------------------


def test_registry_lists_five_models():
    assert set(FAMILIES) == {"heat", "wave", "burgers", "swe", "linpair"}
    with pytest.raises(KeyError):
        get_family("advection")


@pytest.mark.parametrize("model_id", ["heat", "wave", "burgers", "linpair"])
def test_registry_builds(model_id):
    fam = get_family(model_id)
    model, space = fam.build(fam.config())
    assert space.basis[0].size == model.dim
