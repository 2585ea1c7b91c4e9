import numpy as np
import pytest

from mhdlab.ensembles import stokes_ensemble
from mhdlab.fields import Grid, ScalarField, VectorField, divergence, gradient, lp_norm, random_bandlimited
from mhdlab.stokes import solve_stokes, stokes_residual, verify_regularity

from conftest import random_solenoidal


def test_zero_forcing(grid16):
    sol = solve_stokes(VectorField.zeros(grid16))
    assert np.abs(sol.velocity.data).max() == 0 and np.abs(sol.pressure.data).max() == 0


def test_gradient_forcing_goes_to_pressure():
    g = Grid(16, 1.0)
    phi = ScalarField.from_function(g, lambda x, y, z: np.sin(2 * np.pi * x) + 0 * y + 0 * z)
    sol = solve_stokes(gradient(phi))
    assert np.abs(sol.velocity.data).max() < 1e-14
    assert np.allclose(sol.pressure.data, phi.data, atol=1e-13)


def test_unit_solenoidal_mode(grid16):
    F = VectorField.from_components(grid16, lambda x, y, z: np.sin(y) + 0 * x + 0 * z,
                                    lambda x, y, z: 0 * x, lambda x, y, z: 0 * x)
    sol = solve_stokes(F)
    assert np.allclose(sol.velocity.data, F.data, atol=1e-14)
    assert np.abs(sol.pressure.data).max() < 1e-14


def test_mean_discarded_and_reported(grid16, rng):
    data = random_bandlimited(grid16, rng, components=3) + np.array([1.0, -2.0, 0.5])[:, None, None, None]
    F = VectorField(grid16, data)
    sol = solve_stokes(F)
    assert np.allclose(sol.discarded_mean, [1.0, -2.0, 0.5])
    assert stokes_residual(F, sol) <= 1e-10 * lp_norm(F, 2)
    assert abs(sol.pressure.data.mean()) < 1e-14
    assert np.abs(divergence(sol.velocity).data).max() < 1e-12


def test_linearity(grid16, rng):
    A = VectorField(grid16, random_bandlimited(grid16, rng, components=3))
    B = VectorField(grid16, random_bandlimited(grid16, rng, components=3))
    lhs = solve_stokes(A * 2.0 + B)
    a, b = solve_stokes(A), solve_stokes(B)
    assert np.allclose(lhs.velocity.data, 2 * a.velocity.data + b.velocity.data, atol=1e-13)
    assert np.allclose(lhs.pressure.data, 2 * a.pressure.data + b.pressure.data, atol=1e-13)


def test_pure_gradient_ratio_is_one():
    g = Grid(16)
    phi = ScalarField(g, random_bandlimited(g, np.random.default_rng(3), 4))
    rep = verify_regularity(gradient(phi), 2)
    assert rep.ratio == pytest.approx(1.0, rel=1e-12)
    assert rep.hessian_norm < 1e-12 * rep.forcing_norm


def test_solenoidal_ratio_is_one(grid16, rng):
    rep = verify_regularity(random_solenoidal(grid16, rng), 2)
    assert rep.ratio == pytest.approx(1.0, rel=1e-12)


def test_degenerate_and_range(grid16):
    with pytest.raises(ValueError):
        verify_regularity(VectorField.zeros(grid16), 2)
    with pytest.raises(ValueError):
        verify_regularity(VectorField(grid16, np.ones((3,) + grid16.shape)), 1.0)


def test_sum_of_orthogonal_parts_can_exceed_one(grid16):
    # equal solenoidal and gradient parts: sum ratio sqrt 2, root-sum-square ratio 1
    x, y, z = grid16.coords
    sol = np.broadcast_to(np.sin(y), grid16.shape)
    grad = np.broadcast_to(np.cos(x), grid16.shape)
    F = VectorField(grid16, np.stack([sol + grad, 0 * sol, 0 * sol]))
    rep = verify_regularity(F, 2)
    assert rep.ratio == pytest.approx(np.sqrt(2), rel=1e-12)
    assert rep.rss_ratio == pytest.approx(1.0, rel=1e-12)


def test_ensemble_regressions():
    r2 = stokes_ensemble(7, 200, 16, 2.0)
    assert r2["rss_ratio"] <= 1 + 1e-8
    assert r2["residual"] <= 1e-10
    r4 = stokes_ensemble(7, 50, 16, 4.0)
    assert r4["ratio"] == pytest.approx(1.3905174689531572, rel=1e-10)
