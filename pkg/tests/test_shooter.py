import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from duosphere import shooter
from duosphere.errors import (
    IntegrationFailureError,
    InvalidParameterError,
    SymmetryPreconditionError,
)
from duosphere.params import ProblemParams, derive_constants, yamabe_params


def test_nonlinearity_values():
    assert shooter.nonlinearity(1.0, 4.0) == 0.0
    assert shooter.nonlinearity(2.0, 4.0) == pytest.approx(6.0)
    assert shooter.nonlinearity(-2.0, 3.0) == pytest.approx(-2.0)
    assert shooter.nonlinearity(0.0, 2.5) == 0.0
    assert shooter.nonlinearity(-1.0, 3.3) == pytest.approx(0.0, abs=1e-15)


@given(w=st.floats(-30, 30), p=st.floats(2.05, 3.95))
def test_nonlinearity_odd(w, p):
    g = shooter.nonlinearity(w, p)
    gm = shooter.nonlinearity(-w, p)
    assert gm == pytest.approx(-g, rel=1e-12, abs=1e-12)


def test_nonlinearity_deriv_matches_difference_quotient():
    for w in (-2.0, -0.3, 0.4, 1.7):
        for p in (2.5, 3.0, 4.0):
            d = shooter.nonlinearity_deriv(w, p)
            h = 1e-6
            fd = (shooter.nonlinearity(w + h, p) - shooter.nonlinearity(w - h, p)) / (2 * h)
            assert d == pytest.approx(fd, rel=1e-7, abs=1e-7)


def test_startup_constant_solution():
    pp = yamabe_params(2, 1.0)
    w_eps, wp_eps = shooter.startup_expansion(1.0, pp, 1e-3)
    assert w_eps == 1.0
    assert wp_eps == 0.0


def test_startup_curvature_coefficient():
    # alpha=2, n=2, mu=1/3, p=4: c = -(1/3) g(2) / 2 = -1
    pp = yamabe_params(2, 1.0)
    eps = 1e-3
    w_eps, wp_eps = shooter.startup_expansion(2.0, pp, eps)
    assert (w_eps - 2.0) / (0.5 * eps * eps) == pytest.approx(-1.0, abs=1e-5)
    assert wp_eps / eps == pytest.approx(-1.0, abs=1e-5)


def test_startup_order():
    # moving the startup point changes the downstream solution by O(eps^4)
    pp = ProblemParams(n=3, delta=1.0, p=3.0, lam=2.0)
    ref_cfg = shooter.IntegratorConfig(eps_start=1e-6, rel_tol=1e-13, abs_tol=1e-13)
    ref = shooter.integrate_half(pp, ref_cfg, 2.0).w_mid
    errs = []
    eps_list = [2e-2, 1e-2, 5e-3]
    for eps in eps_list:
        cfg = shooter.IntegratorConfig(eps_start=eps, rel_tol=1e-13, abs_tol=1e-13,
                                       dense_points=30)
        errs.append(abs(shooter.integrate_half(pp, cfg, 2.0).w_mid - ref))
    for eps, err in zip(eps_list, errs):
        assert err <= 10.0 * eps**4
    assert errs[0] > errs[-1]


def test_integrate_half_constant_and_zero(yamabe2, integ):
    s1 = shooter.integrate_half(yamabe2, integ, 1.0)
    assert s1.zeros_half == 0
    assert s1.w_mid == pytest.approx(1.0, abs=1e-12)
    assert s1.wp_mid == pytest.approx(0.0, abs=1e-12)
    assert np.max(np.abs(s1.trajectory.w - 1.0)) < 1e-11
    s0 = shooter.integrate_half(yamabe2, integ, 0.0)
    assert s0.zeros_half == 0
    assert np.all(s0.trajectory.w == 0.0)


def test_positivity_below_threshold(yamabe2, integ):
    # initial energy <= 0 forces positivity on (0, pi/2): no zeros for
    # alpha up to (p/2)^{1/(p-2)} = sqrt(2)
    thr = derive_constants(yamabe2).alpha_threshold
    for alpha in np.linspace(1.0 + 1e-6, thr, 50):
        s = shooter.integrate_half(yamabe2, integ, float(alpha))
        assert s.zeros_half == 0
        assert np.min(s.trajectory.w[s.trajectory.grid < math.pi / 2]) > 0.0


def test_zeros_appear_for_large_alpha(yamabe2, integ):
    s = shooter.integrate_half(yamabe2, integ, 6.0)
    assert s.zeros_half >= 1
    assert s.alpha > derive_constants(yamabe2).alpha_threshold
    # independent fixed-step route agrees on the count and the midpoint value
    r, w, wp = shooter.integrate_fixed(yamabe2, 6.0, 8000, eps_start=1e-4)
    assert shooter.count_sign_changes(w) == s.zeros_half
    assert w[-1] == pytest.approx(s.w_mid, abs=1e-9)


def test_oddness(yamabe2, integ):
    sp = shooter.integrate_half(yamabe2, integ, 2.5)
    sm = shooter.integrate_half(yamabe2, integ, -2.5)
    assert np.max(np.abs(sp.trajectory.w + sm.trajectory.w)) < 1e-10
    assert sm.zeros_half == sp.zeros_half


def test_energy_profile_constant_solution(yamabe2, integ):
    s = shooter.integrate_half(yamabe2, integ, 1.0)
    e = shooter.energy_profile(s.trajectory)
    mu, p = yamabe2.mu, yamabe2.p
    assert np.max(np.abs(e - mu * (1.0 / p - 0.5))) < 1e-12


def test_initial_energy_formula(yamabe2, integ):
    mu, p = yamabe2.mu, yamabe2.p
    s = shooter.integrate_half(yamabe2, integ, 2.0)
    assert s.trajectory.energy[0] == pytest.approx(
        shooter.initial_energy(2.0, mu, p), abs=1e-14)
    thr = derive_constants(yamabe2).alpha_threshold
    assert shooter.initial_energy(thr, mu, p) == pytest.approx(0.0, abs=1e-14)


def test_energy_monotone_decreasing(yamabe2, integ):
    for alpha in (1.3, 3.0, 6.0):
        s = shooter.integrate_half(yamabe2, integ, alpha)
        e = s.trajectory.energy
        assert np.max(np.diff(e)) <= 1e-8


def test_energy_positive_at_zeros(yamabe2, integ):
    # zeros are simple: the energy there is w'^2/2 > 0 (linear interpolation
    # of the sampled arrays is accurate enough for a sign statement)
    s = shooter.integrate_half(yamabe2, integ, 6.0)
    spl_w = np.interp(s.zeros, s.trajectory.grid, s.trajectory.w)
    spl_e = np.interp(s.zeros, s.trajectory.grid, s.trajectory.energy)
    assert np.max(np.abs(spl_w)) < 1e-5
    assert np.all(spl_e > 1e-3)


def test_extend_even_constant(yamabe2, integ):
    s = shooter.integrate_half(yamabe2, integ, 1.0)
    t = shooter.extend_by_symmetry(s, "even")
    assert t.grid[0] == 0.0 and t.grid[-1] == pytest.approx(math.pi)
    assert np.max(np.abs(t.w - 1.0)) < 1e-11
    assert np.all(np.diff(t.grid) > 0)
    spacing = np.diff(t.grid[1:-1])
    assert np.max(np.abs(spacing - spacing[0])) < 1e-12


def test_extend_odd_zero_count(yamabe2, integ):
    # at the first antisymmetric alpha the reflected profile has 2j+1 zeros
    from scipy.optimize import brentq
    f = lambda a: shooter.integrate_half(yamabe2, integ, float(a)).w_mid
    a0 = brentq(f, 3.6, 4.0, xtol=1e-13)
    s = shooter.integrate_half(yamabe2, integ, a0)
    assert s.zeros_half == 0
    t = shooter.extend_by_symmetry(s, "odd")
    assert shooter.count_sign_changes(t.w) == 2 * s.zeros_half + 1
    assert t.wp[-1] == 0.0
    t.validate()


def test_extend_even_zero_count(yamabe2, integ):
    from scipy.optimize import brentq
    f = lambda a: shooter.integrate_half(yamabe2, integ, float(a)).wp_mid
    b0 = brentq(f, 7.7, 8.0, xtol=1e-13)
    s = shooter.integrate_half(yamabe2, integ, b0)
    assert s.zeros_half == 1
    t = shooter.extend_by_symmetry(s, "even")
    assert shooter.count_sign_changes(t.w) == 2 * s.zeros_half


def test_extend_precondition_errors(yamabe2, integ):
    s = shooter.integrate_half(yamabe2, integ, 2.0)
    with pytest.raises(SymmetryPreconditionError):
        shooter.extend_by_symmetry(s, "odd")
    with pytest.raises(SymmetryPreconditionError):
        shooter.extend_by_symmetry(s, "even")
    with pytest.raises(InvalidParameterError):
        shooter.extend_by_symmetry(s, "sideways")


def test_step_budget_enforced(yamabe2):
    tiny = shooter.IntegratorConfig(max_steps=50)
    with pytest.raises(IntegrationFailureError):
        shooter.integrate_half(yamabe2, tiny, 3.0)


def test_eigen_mode_integration_matches_cosine(integ):
    # beta_1 = n: the mode is exactly cos(r)
    rs, w, wp = shooter.integrate_eigen(2, 2.0, integ)
    assert np.max(np.abs(w - np.cos(rs))) < 1e-10


def test_fixed_step_orders(yamabe2):
    tight = shooter.IntegratorConfig(rel_tol=1e-13, abs_tol=1e-13)
    ref = shooter.integrate_half(yamabe2, tight, 3.0).w_mid
    errs = []
    for n_steps in (25, 50, 100, 200):
        _, w, _ = shooter.integrate_fixed(yamabe2, 3.0, n_steps, eps_start=1e-4)
        errs.append(abs(w[-1] - ref))
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.mean(slopes) >= 4.0


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        shooter.IntegratorConfig(eps_start=0.0)
    with pytest.raises(InvalidParameterError):
        shooter.IntegratorConfig(rel_tol=-1.0)
    with pytest.raises(InvalidParameterError):
        shooter.IntegratorConfig(dense_points=1)


def test_trajectory_invariants(yamabe2, integ):
    s = shooter.integrate_half(yamabe2, integ, 2.2)
    t = s.trajectory
    assert t.grid[0] == 0.0 and t.w[0] == 2.2 and t.wp[0] == 0.0
    t.validate()
    e = shooter.energy_profile(t)
    assert np.max(np.abs(e - t.energy)) == 0.0
