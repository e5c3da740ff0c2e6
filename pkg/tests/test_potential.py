import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from conftest import random_rotation
from ldgdefects import qtensor as qt
from ldgdefects.errors import PropertyViolated
from ldgdefects.potential import (MaterialParams, bulk_f, bulk_grad, bulk_hessian, check_F_properties,
                                  hessian_bound, linfty_radius)


def test_constants_closed_form(params):
    assert params.s_star == 1.5
    assert params.kappa_star == pytest.approx(1.125 * np.pi, abs=1e-12)
    assert params.k == pytest.approx(0.4375, abs=1e-14)
    s = params.s_star
    assert abs(2 * s**3 - s**2 - 3 * s) < 1e-10


def test_k_matches_one_dimensional_minimisation(params):
    a, b, c = params.a, params.b, params.c
    reduced = lambda s: -a * s**2 / 3 - 2 * b * s**3 / 27 + c * s**4 / 9
    res = minimize_scalar(reduced, bracket=(0.5, 2.0), tol=1e-14)
    assert res.x == pytest.approx(params.s_star, abs=1e-6)
    assert params.k == pytest.approx(-res.fun, abs=1e-10)


def test_invalid_coefficients():
    with pytest.raises(ValueError):
        MaterialParams(-1.0, 1.0, 1.0)


def test_f_vanishes_on_manifold(params, rng):
    n = rng.normal(size=(500, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    P = qt.lift(n, params.s_star)
    assert np.max(np.abs(bulk_f(params, P))) < 1e-12
    assert np.max(np.abs(bulk_grad(params, P))) < 1e-12


def test_f_nonnegative(params, rng):
    d = rng.normal(size=(100_000, 5))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    q = d * rng.uniform(0, 10, size=(100_000, 1))
    assert bulk_f(params, q).min() >= -1e-12


def test_f_at_zero(params):
    assert bulk_f(params, np.zeros(5)) == pytest.approx(params.k, abs=1e-15)
    assert np.all(bulk_grad(params, np.zeros(5)) == 0.0)


def test_rotation_invariance(params, rng):
    q = rng.normal(size=(50, 5))
    R = random_rotation(rng)
    assert np.allclose(bulk_f(params, qt.rotate(q, R)), bulk_f(params, q), rtol=1e-11)


def test_gradient_against_finite_differences(params, rng):
    h = 1e-5
    for q in rng.normal(size=(100, 5)):
        fd = np.array([(bulk_f(params, q + h * d) - bulk_f(params, q - h * d)) / (2 * h) for d in np.eye(5)])
        g = bulk_grad(params, q)
        assert np.linalg.norm(fd - g) <= 1e-6 * max(1.0, np.linalg.norm(g))


def test_gradient_is_traceless_projection(params, rng):
    q = rng.normal(size=5)
    M = qt.to_matrix(q)
    raw = -params.a * M - params.b * M @ M + params.c * np.sum(M * M) * M
    G = qt.to_matrix(bulk_grad(params, q))
    assert abs(np.trace(G)) < 1e-12
    # adding a multiple of Id changes nothing in S0 components
    assert np.allclose(qt.from_matrix(raw), qt.from_matrix(raw + 3.7 * np.eye(3)))
    assert np.allclose(qt.from_matrix(raw), bulk_grad(params, q), atol=1e-12)


def test_hessian_against_gradient(params, rng):
    h = 1e-6
    for q in rng.normal(size=(20, 5)):
        fd = np.stack([(bulk_grad(params, q + h * d) - bulk_grad(params, q - h * d)) / (2 * h) for d in np.eye(5)],
                      axis=-1)
        H = bulk_hessian(params, q)
        assert np.allclose(H, H.T, atol=1e-12)
        assert np.allclose(H, fd, atol=1e-6)


def test_hessian_bound_dominates_samples(params, rng):
    r = linfty_radius(params)
    lam = hessian_bound(params, r)
    d = rng.normal(size=(2000, 5))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    q = d * rng.uniform(0, r, size=(2000, 1))
    assert np.max(np.abs(np.linalg.eigvalsh(bulk_hessian(params, q)))) <= lam


def test_linfty_outward_gradient(params, rng):
    r = linfty_radius(params)
    assert r == pytest.approx(np.sqrt(2 / 3) * params.s_star)
    d = rng.normal(size=(20_000, 5))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    q = d * rng.uniform(r * (1 + 1e-9), 10, size=(20_000, 1))
    assert np.all(np.sum(bulk_grad(params, q) * q, axis=-1) > 0)


def test_reduced_polynomial_minimum(params):
    # f restricted to s(nn - Id/3) + t (mm - pp)/sqrt(2), a biaxial slice
    n, m, p = np.eye(3)
    s_grid = np.linspace(0.0, 3.0, 601)
    t_grid = np.linspace(-1.0, 1.0, 401)
    S_, T_ = np.meshgrid(s_grid, t_grid, indexing="ij")
    q = S_[..., None] * qt.outer_unit(n) + T_[..., None] * qt.from_matrix(
        (np.outer(m, m) - np.outer(p, p)) / np.sqrt(2))
    f = bulk_f(params, q)
    i, j = np.unravel_index(np.argmin(f), f.shape)
    assert f[i, j] == pytest.approx(0.0, abs=1e-10)
    assert s_grid[i] == pytest.approx(params.s_star) and t_grid[j] == 0.0


def test_F_properties(params):
    rep = check_F_properties(params, samples=10_000, seed=0)
    assert rep.gamma0 > 0 and rep.gamma1 > 0 and rep.gamma2 > 0 and rep.gamma3 > 0
    assert rep.samples == 10_000


def test_F0_on_cone(params):
    rep = check_F_properties(params, samples=1000, seed=1)
    q = qt.oblate(np.array([0.0, 0.0, 1.0]), 1.0)
    q = q / qt.norm(q)
    assert bulk_f(params, q) >= rep.gamma0 * (1 - qt.phi(q, params.s_star)) ** 2


def test_F_properties_rejects_small_sample(params):
    with pytest.raises((ValueError, PropertyViolated)):
        check_F_properties(params, samples=10)


@pytest.mark.parametrize("abc", [(0.5, 1.0, 1.0), (2.0, 0.5, 3.0), (1.0, 4.0, 0.7)])
def test_other_materials(abc):
    p = MaterialParams(*abc)
    n = np.array([0.6, 0.0, 0.8])
    assert abs(bulk_f(p, qt.lift(n, p.s_star))) < 1e-12
    rep = check_F_properties(p, samples=2000, seed=3)
    assert rep.gamma0 > 0
