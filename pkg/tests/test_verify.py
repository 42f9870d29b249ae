import math

import numpy as np
import pytest

from duosphere import verify
from duosphere.errors import InvalidParameterError
from duosphere.params import ProblemParams
from duosphere.shooter import extend_by_symmetry, integrate_half


def inv_factor(params):
    return 1.0 + 1.0 / params.delta


def test_product_point_validation():
    verify.ProductPoint(x=np.array([1.0, 0.0, 0.0]), y=np.array([0.0, 1.0, 0.0]))
    with pytest.raises(InvalidParameterError):
        verify.ProductPoint(x=np.array([1.0, 1.0, 0.0]), y=np.array([0.0, 1.0, 0.0]))


def test_tangent_frame_orthonormal(rng):
    for n in (2, 3, 5):
        x = rng.standard_normal(n + 1)
        x /= np.linalg.norm(x)
        frame = verify.tangent_frame(x)
        assert frame.shape == (n + 1, n)
        gram = frame.T @ frame
        assert np.max(np.abs(gram - np.eye(n))) < 1e-12
        assert np.max(np.abs(frame.T @ x)) < 1e-12


def test_laplacian_identity_on_f(yamabe2, rng):
    # Delta f = -n (1 + 1/delta) f at O(h^2)
    h = 1e-3
    for _ in range(20):
        pt = verify.random_product_point(rng, yamabe2.n)
        lap = verify.product_laplacian_fd(lambda t: t, pt, yamabe2, h)
        exact = -yamabe2.n * inv_factor(yamabe2) * pt.f
        assert lap == pytest.approx(exact, abs=50 * h * h)


def test_gradient_identity_on_f(yamabe2, rng):
    # |grad f|^2 = (1 + 1/delta)(1 - f^2) at O(h^2)
    h = 1e-3
    for _ in range(20):
        pt = verify.random_product_point(rng, yamabe2.n)
        g2 = verify.gradient_sq_fd(lambda t: t, pt, yamabe2, h)
        exact = inv_factor(yamabe2) * (1.0 - pt.f**2)
        assert g2 == pytest.approx(exact, abs=50 * h * h)


def test_laplacian_constant_is_zero(yamabe2, rng):
    pt = verify.random_product_point(rng, yamabe2.n)
    assert verify.product_laplacian_fd(lambda t: 1.0, pt, yamabe2, 1e-3) == pytest.approx(
        0.0, abs=1e-9)


def test_chain_rule_identity_quadratic(yamabe2, rng):
    # Delta(phi o f) = phi'' |grad f|^2 + phi' Delta f for phi(t) = t^2
    h = 1e-3
    c = inv_factor(yamabe2)
    for _ in range(10):
        pt = verify.random_product_point(rng, yamabe2.n)
        f = pt.f
        lap = verify.product_laplacian_fd(lambda t: t * t, pt, yamabe2, h)
        exact = 2.0 * c * (1.0 - f * f) + 2.0 * f * (-yamabe2.n * c * f)
        assert lap == pytest.approx(exact, abs=100 * h * h)


def test_chain_rule_identity_degree_le_4(yamabe2, rng):
    h = 1e-3
    c = inv_factor(yamabe2)
    coeffs = [0.3, -1.2, 0.7, 0.25, -0.4]
    poly = np.polynomial.polynomial.Polynomial(coeffs)
    d1, d2 = poly.deriv(1), poly.deriv(2)
    for _ in range(10):
        pt = verify.random_product_point(rng, yamabe2.n)
        f = pt.f
        lap = verify.product_laplacian_fd(poly, pt, yamabe2, h)
        exact = d2(f) * c * (1.0 - f * f) + d1(f) * (-yamabe2.n * c * f)
        assert lap == pytest.approx(exact, abs=200 * h * h)


def test_fd_step_validation(yamabe2, rng):
    pt = verify.random_product_point(rng, yamabe2.n)
    with pytest.raises(InvalidParameterError):
        verify.product_laplacian_fd(lambda t: t, pt, yamabe2, 0.5)


def test_ode_residual_constant(yamabe2, integ):
    t = extend_by_symmetry(integrate_half(yamabe2, integ, 1.0), "even")
    assert verify.ode_residual(t).sup_residual < 1e-9


def test_ode_residual_detects_corruption(yamabe2, integ, rng):
    t = extend_by_symmetry(integrate_half(yamabe2, integ, 1.0), "even")
    t.w = t.w + 1e-3 * rng.standard_normal(t.w.shape)
    assert verify.ode_residual(t).sup_residual > 1.0


def test_ode_residual_half_trajectory(yamabe2, integ):
    rep = verify.ode_residual(integrate_half(yamabe2, integ, 2.0).trajectory)
    assert rep.sup_residual < 1e-6


def test_t_equation_residual(yamabe2, integ, yamabe_catalog):
    t1 = extend_by_symmetry(integrate_half(yamabe2, integ, 1.0), "even")
    assert verify.t_equation_residual(t1).sup_residual < 1e-8
    entry = yamabe_catalog.entry(1)
    assert verify.t_equation_residual(entry.trajectory).sup_residual <= 1e-5


def test_t_equation_detects_wrong_mu(yamabe2, integ, yamabe_catalog):
    entry = yamabe_catalog.entry(1)
    wrong = ProblemParams(n=yamabe2.n, delta=yamabe2.delta, p=yamabe2.p,
                          lam=yamabe2.lam * 1.5)
    rep = verify.t_equation_residual(entry.trajectory, wrong)
    assert rep.sup_residual > 1e-2


def test_pde_residual_trivial(yamabe2, integ):
    t1 = extend_by_symmetry(integrate_half(yamabe2, integ, 1.0), "even")
    rep = verify.pde_residual_sampled(t1, yamabe2, m=25, h=1e-3)
    assert rep.sup_residual <= 1e-10 + 0.1 * rep.h**2


def test_pde_residual_wrong_lambda_floor(yamabe2, integ, yamabe_catalog):
    entry = yamabe_catalog.entry(1)
    good = verify.pde_residual_sampled(entry.trajectory, yamabe2, m=25, h=2e-3)
    wrong_params = ProblemParams(n=yamabe2.n, delta=yamabe2.delta, p=yamabe2.p,
                                 lam=yamabe2.lam * 1.1)
    bad = verify.pde_residual_sampled(entry.trajectory, wrong_params, m=25, h=2e-3)
    assert bad.sup_residual > 50 * good.sup_residual
    assert bad.sup_residual > 0.01


def test_pde_residual_slope(yamabe2, yamabe_catalog):
    entry = yamabe_catalog.entry(1)
    rep = verify.pde_residual_sampled(entry.trajectory, yamabe2, m=40, h=2e-3)
    assert rep.slope == pytest.approx(2.0, abs=0.3)
