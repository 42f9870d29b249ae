"""Shooting integrator for the singular radial equation on [0, pi/2].

The reduced equation is

    w''(r) + (n-1) cot(r) w'(r) + mu (|w|^{p-2} w - w) = 0,
    w(0) = alpha, w'(0) = 0,

with mu = lambda / (1 + 1/delta).  Both r = 0 and r = pi are regular
singular points of the cot coefficient, so integration starts from series
data at r = eps: smoothness together with w'(0) = 0 forces
n w''(0) = -mu g(alpha), g(w) = sign(w)|w|^{p-1} - w.  Full-interval
solutions are built only by even/odd reflection about pi/2 (exact there by
uniqueness), never by integrating into the second singular endpoint.

Two independent integration routes are provided: the adaptive high-order
path (`integrate_half`, dense output, zero events) used everywhere, and a
self-contained fixed-step fifth-order Cash-Karp stepper (`integrate_fixed`)
kept free of any shared solver machinery so it can serve as a convergence
and zero-count oracle for the adaptive path.

Shots at distinct alpha values are independent pure computations and may be
dispatched concurrently by callers; a single trajectory is built
sequentially.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegrationFailureError, InvalidParameterError, SymmetryPreconditionError
from .params import ProblemParams

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "ShotResult",
    "nonlinearity",
    "nonlinearity_deriv",
    "startup_expansion",
    "integrate_half",
    "integrate_eigen",
    "integrate_fixed",
    "energy_profile",
    "initial_energy",
    "extend_by_symmetry",
    "count_sign_changes",
]

HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and startup offset for the singular shooting integrator.

    eps_start is the distance from the singular endpoint at which series
    startup data is imposed; the startup error in the trajectory scales like
    eps_start^4.  zero_boundary_window is the distance from pi/2 inside
    which a located zero is flagged ambiguous instead of being counted (the
    count dichotomy at the midpoint is genuinely unstable there).
    """

    eps_start: float = 1e-4
    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    max_steps: int = 2_000_000
    dense_points: int = 1201
    zero_boundary_window: float = 1e-9
    match_tol: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.eps_start < 0.1):
            raise InvalidParameterError(f"eps_start must lie in (0, 0.1), got {self.eps_start!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidParameterError("tolerances must be positive")
        if self.max_steps < 1 or self.dense_points < 3:
            raise InvalidParameterError("max_steps and dense_points must be sensible")


@dataclass(eq=False)
class Trajectory:
    """Sampled solution w, w', E on a strictly increasing grid in [0, pi]."""

    grid: np.ndarray
    w: np.ndarray
    wp: np.ndarray
    energy: np.ndarray
    alpha: float
    params: ProblemParams

    def validate(self, tol: float = 1e-9) -> None:
        if self.grid[0] != 0.0 or self.w[0] != self.alpha or self.wp[0] != 0.0:
            raise InvalidParameterError("trajectory does not start from (0, alpha, 0)")
        if np.any(np.diff(self.grid) <= 0):
            raise InvalidParameterError("trajectory grid is not strictly increasing")
        e = energy_profile(self)
        if np.max(np.abs(e - self.energy)) > tol:
            raise InvalidParameterError("stored energy disagrees with its definition")


@dataclass(eq=False)
class ShotResult:
    """Outcome of one half-interval shot."""

    alpha: float
    zeros_half: int
    zeros: np.ndarray
    w_mid: float
    wp_mid: float
    trajectory: Trajectory
    ambiguous_midzero: bool = False


def nonlinearity(w, p: float):
    """g(w) = sign(w)|w|^{p-1} - w; vanishes at 0 and +-1.

    Continuous for p > 2 (the |w|^{p-1} branch tends to 0 with w), and works
    elementwise on arrays.
    """
    return np.sign(w) * np.abs(w) ** (p - 1.0) - w


def nonlinearity_deriv(w, p: float):
    """g'(w) = (p-1)|w|^{p-2} - 1, continuous at 0 for p > 2."""
    return (p - 1.0) * np.abs(w) ** (p - 2.0) - 1.0


def startup_expansion(alpha: float, params: ProblemParams, eps: float) -> tuple[float, float]:
    """Series data (w(eps), w'(eps)) at the left singular endpoint.

    The regular solution has w = alpha + c r^2/2 + d r^4/24 + O(r^6) with
    n c = -mu g(alpha) forced by smoothness, so the returned values satisfy
    the advertised O(eps^4)/O(eps^3) bounds with margin.  The quartic term
    matters in practice: dropping it leaves an O(eps^3) deficit in w'(eps)
    that excites the singular mode and spoils the even symmetry of the
    data near r = 0 at amplitudes the residual checks can see.
    """
    c = -params.mu * float(nonlinearity(alpha, params.p)) / params.n
    gp = params.mu * float(nonlinearity_deriv(alpha, params.p))
    d = c * (2.0 * (params.n - 1) - 3.0 * gp) / (params.n + 2)
    e2, e4 = eps * eps, eps ** 4
    return alpha + 0.5 * c * e2 + d * e4 / 24.0, c * eps + d * eps * e2 / 6.0


def _startup_linear(beta: float, n: int, eps: float) -> tuple[float, float]:
    # linear-mode analog of the series: n w''(0) = -beta w(0), w(0) = 1
    c = -beta / n
    d = c * (2.0 * (n - 1) - 3.0 * beta) / (n + 2)
    return 1.0 + 0.5 * c * eps * eps + d * eps ** 4 / 24.0, c * eps + d * eps ** 3 / 6.0


def _rhs_nonlinear(n: int, mu: float, p: float):
    nm1 = n - 1.0
    pm1 = p - 1.0

    def rhs(r, y):
        w = y[0]
        wp = y[1]
        aw = -w if w < 0.0 else w
        g = (aw ** pm1 if w >= 0.0 else -(aw ** pm1)) - w
        return (wp, -nm1 * math.cos(r) / math.sin(r) * wp - mu * g)

    return rhs


def _rhs_linear(n: int, beta: float):
    nm1 = n - 1.0

    def rhs(r, y):
        return (y[1], -nm1 * math.cos(r) / math.sin(r) * y[1] - beta * y[0])

    return rhs


class _BudgetedRhs:
    """Wrap a derivative callback with a hard cap on evaluations."""

    def __init__(self, rhs, max_evals: int):
        self.rhs = rhs
        self.left = max_evals

    def __call__(self, r, y):
        self.left -= 1
        if self.left < 0:
            raise _BudgetExceeded
        return self.rhs(r, y)


class _BudgetExceeded(Exception):
    pass


def _zero_event(r, y):
    return y[0]


def _staggered_grid(config: IntegratorConfig) -> np.ndarray:
    """Dense sampling grid [0] + (j+1/2)h for j < dense_points, h = pi/(2 M).

    Staggering the uniform part half a cell off the endpoints makes every
    reflection about 0, pi/2 or pi land exactly on grid points, so reflected
    full-interval grids stay uniform straight through the midpoint and
    derivative stencils can mirror data across the singular endpoints.
    """
    m = config.dense_points
    h = HALF_PI / m
    return np.concatenate(([0.0], (np.arange(m) + 0.5) * h))


def _solve_adaptive(rhs, y0, r0: float, r1: float, config: IntegratorConfig, events=None):
    budget = _BudgetedRhs(rhs, config.max_steps)
    try:
        sol = solve_ivp(
            budget, (r0, r1), y0, method="DOP853", dense_output=True,
            rtol=config.rel_tol, atol=config.abs_tol, events=events,
        )
    except _BudgetExceeded:
        raise IntegrationFailureError(
            f"step budget {config.max_steps} exhausted on [{r0}, {r1}]"
        ) from None
    if not sol.success:
        raise IntegrationFailureError(f"integration failed: {sol.message}")
    return sol


def integrate_half(params: ProblemParams, config: IntegratorConfig, alpha: float) -> ShotResult:
    """Shoot from w(0) = alpha to pi/2 with dense output and zero events.

    Zeros are strict sign changes of w, refined on the dense output by the
    event machinery; any located within zero_boundary_window of pi/2 is
    reported via ambiguous_midzero instead of being counted.  Negative
    alpha is allowed (the equation is odd).  Raises IntegrationFailureError
    when the step budget is exhausted, which in practice signals a shot
    oscillating too fast for the budget (very large alpha or lambda).
    """
    eps = config.eps_start
    rs = _staggered_grid(config)
    if rs[1] < eps:
        raise InvalidParameterError(
            f"dense_points={config.dense_points} samples inside the startup offset "
            f"{eps}; lower dense_points or eps_start")
    if alpha == 0.0:
        z = np.zeros_like(rs)
        traj = Trajectory(grid=rs, w=z, wp=z.copy(), energy=z.copy(), alpha=0.0, params=params)
        return ShotResult(alpha=0.0, zeros_half=0, zeros=np.array([]), w_mid=0.0, wp_mid=0.0,
                          trajectory=traj)

    rhs = _rhs_nonlinear(params.n, params.mu, params.p)
    y0 = startup_expansion(alpha, params, eps)
    sol = _solve_adaptive(rhs, y0, eps, HALF_PI, config, events=_zero_event)

    zeros_all = sol.t_events[0]
    window = config.zero_boundary_window
    counted = zeros_all[zeros_all < HALF_PI - window]
    ambiguous = bool(np.any(zeros_all >= HALF_PI - window))

    dense = sol.sol(rs[1:])
    w = np.concatenate(([alpha], dense[0]))
    wp = np.concatenate(([0.0], dense[1]))
    traj = Trajectory(grid=rs, w=w, wp=wp, energy=np.empty(0), alpha=alpha, params=params)
    traj.energy = energy_profile(traj)

    w_mid, wp_mid = sol.y[0, -1], sol.y[1, -1]
    return ShotResult(alpha=alpha, zeros_half=len(counted), zeros=counted,
                      w_mid=float(w_mid), wp_mid=float(wp_mid), trajectory=traj,
                      ambiguous_midzero=ambiguous)


def integrate_eigen(n: int, beta: float, config: IntegratorConfig,
                    r_end: float | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate the linear mode equation w'' + (n-1)cot(r) w' + beta w = 0, w(0)=1.

    Used to cross-check the polynomial eigenfunctions by direct integration.
    Stops short of the right singular endpoint (default pi - 10 eps_start).
    Returns (r, w, w') on a dense grid including r = 0.
    """
    eps = config.eps_start
    if r_end is None:
        r_end = math.pi - 10.0 * eps
    rhs = _rhs_linear(n, beta)
    y0 = _startup_linear(beta, n, eps)
    sol = _solve_adaptive(rhs, y0, eps, r_end, config)
    rs = np.concatenate(([0.0], np.linspace(eps, r_end, config.dense_points)))
    dense = sol.sol(rs[1:])
    w = np.concatenate(([1.0], dense[0]))
    wp = np.concatenate(([0.0], dense[1]))
    return rs, w, wp


# ---------------------------------------------------------------------------
# fixed-step oracle route (Cash-Karp fifth order, no shared machinery)

_CK_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0),
    (-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0),
    (1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0, 44275.0 / 110592.0, 253.0 / 4096.0),
)
_CK_C = (0.0, 0.2, 0.3, 0.6, 1.0, 0.875)
_CK_B = (37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0)


def integrate_fixed(params: ProblemParams, alpha: float, num_steps: int,
                    eps_start: float = 1e-6, r_end: float = HALF_PI,
                    beta: float | None = None):
    """Fixed-step fifth-order integration from series startup at eps_start.

    Independent of the adaptive route (own tableau, own stepping loop).
    With ``beta`` set, integrates the linear mode equation from w(0) = 1
    instead of the nonlinear shot.  Returns (r, w, wp) arrays starting at
    eps_start.
    """
    if beta is None:
        rhs = _rhs_nonlinear(params.n, params.mu, params.p)
        y = startup_expansion(alpha, params, eps_start)
    else:
        rhs = _rhs_linear(params.n, beta)
        y = _startup_linear(beta, params.n, eps_start)
    rs = np.linspace(eps_start, r_end, num_steps + 1)
    h = (r_end - eps_start) / num_steps
    w_out = np.empty(num_steps + 1)
    wp_out = np.empty(num_steps + 1)
    w_out[0], wp_out[0] = y
    kk = [None] * 6
    for i in range(num_steps):
        r = rs[i]
        kk[0] = rhs(r, y)
        for s in range(1, 6):
            acc0 = y[0]
            acc1 = y[1]
            for a, k in zip(_CK_A[s], kk):
                acc0 += h * a * k[0]
                acc1 += h * a * k[1]
            kk[s] = rhs(r + _CK_C[s] * h, (acc0, acc1))
        y = (
            y[0] + h * sum(b * k[0] for b, k in zip(_CK_B, kk)),
            y[1] + h * sum(b * k[1] for b, k in zip(_CK_B, kk)),
        )
        w_out[i + 1], wp_out[i + 1] = y
    return rs, w_out, wp_out


def count_sign_changes(values: np.ndarray) -> int:
    """Strict sign changes along a sampled array (exact zeros are skipped)."""
    s = np.sign(values)
    s = s[s != 0]
    return int(np.sum(s[:-1] != s[1:]))


# ---------------------------------------------------------------------------
# energy and reflection

def initial_energy(alpha: float, mu: float, p: float) -> float:
    """E(0) = mu alpha^2/p (|alpha|^{p-2} - p/2); zero exactly at the positivity threshold."""
    return mu * alpha * alpha / p * (abs(alpha) ** (p - 2.0) - p / 2.0)


def energy_profile(t: Trajectory) -> np.ndarray:
    """E(r) = w'^2/2 + mu(|w|^p/p - w^2/2) on the trajectory grid."""
    mu, p = t.params.mu, t.params.p
    return 0.5 * t.wp**2 + mu * (np.abs(t.w) ** p / p - 0.5 * t.w**2)


def extend_by_symmetry(s: ShotResult, kind: str, match_tol: float = 1e-8) -> Trajectory:
    """Reflect a half shot about pi/2 into a full trajectory on [0, pi].

    kind='even' requires |w'(pi/2)| <= match_tol and mirrors w(pi-r) = w(r);
    kind='odd' requires |w(pi/2)| <= match_tol and mirrors w(pi-r) = -w(r).
    Either way w'(pi) = 0 holds exactly by construction.
    """
    if kind == "even":
        if abs(s.wp_mid) > match_tol:
            raise SymmetryPreconditionError(
                f"even reflection needs |w'(pi/2)| <= {match_tol}, got {abs(s.wp_mid):.3e}")
        sign = 1.0
    elif kind == "odd":
        if abs(s.w_mid) > match_tol:
            raise SymmetryPreconditionError(
                f"odd reflection needs |w(pi/2)| <= {match_tol}, got {abs(s.w_mid):.3e}")
        sign = -1.0
    else:
        raise InvalidParameterError(f"kind must be 'even' or 'odd', got {kind!r}")

    t = s.trajectory
    # the dense grid is staggered off pi/2, so the mirror image introduces no
    # duplicate midpoint and the merged grid stays uniform across it
    keep = t.grid < HALF_PI - 1e-15
    grid = np.concatenate((t.grid, math.pi - t.grid[keep][::-1]))
    w = np.concatenate((t.w, sign * t.w[keep][::-1]))
    wp = np.concatenate((t.wp, -sign * t.wp[keep][::-1]))
    energy = np.concatenate((t.energy, t.energy[keep][::-1]))
    return Trajectory(grid=grid, w=w, wp=wp, energy=energy, alpha=s.alpha, params=t.params)
