"""Discretized positive-solution branches bifurcating from u = 1.

The radial boundary value problem (the same equation as the shooter, with
Neumann/regularity data at both singular endpoints) is discretized by
second-order central differences on a uniform grid over [0, pi]; at the
endpoints the regularity limit n u'' + mu g(u) = 0 closes the stencil
through a symmetric ghost node.  The trivial branch u = 1 linearizes to an
operator whose kernel crossings mark the bifurcation values lambda_k, and
nontrivial branches are traced from (1, lambda_k) by a damped-Newton
corrector inside pseudo-arclength continuation, seeded along the polynomial
eigenfunctions.

Because the equation is invariant under r -> pi - r, both seed directions
+-t0 are genuinely different continuations (for odd modes they produce
mirror-image profiles); both are traced and recorded.

Branches for distinct k are independent computations; a single branch's
predictor-corrector loop is sequential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import eig, lu_factor, lu_solve, solve_banded

from . import eigen
from .errors import (
    InvalidParameterError,
    NewtonNoConvergenceError,
    SeedFailureError,
)
from .params import ProblemParams, bifurcation_lambda, critical_exponent
from .shooter import (
    HALF_PI,
    IntegratorConfig,
    Trajectory,
    integrate_half,
    nonlinearity,
    nonlinearity_deriv,
)

__all__ = [
    "BvpGrid",
    "DiscreteSolution",
    "Branch",
    "BranchPoint",
    "ContinuationConfig",
    "bvp_residual",
    "bvp_jacobian_banded",
    "trivial_linearization_spectrum",
    "kernel_crossing_lambdas",
    "newton_solve",
    "seed_solution",
    "branch_from",
    "solutions_at",
    "refine_solution",
    "shooting_solution",
    "interior_sign_changes",
]

NEWTON_TOL = 1e-10
TRIVIAL_TOL = 1e-8
DISTINCT_TOL = 1e-3


@dataclass(frozen=True)
class BvpGrid:
    """Uniform radial grid for the discretized boundary value problem.

    ``n_intervals`` cells over [0, pi] (so n_intervals + 1 nodes, endpoints
    included).  Carries the problem data except lambda, which varies along
    branches.
    """

    n: int
    delta: float
    p: float
    n_intervals: int

    def __post_init__(self):
        if self.n_intervals < 50:
            raise InvalidParameterError(f"grid needs >= 50 intervals, got {self.n_intervals}")
        if not self.p > 2:
            raise InvalidParameterError(f"p must exceed 2, got {self.p}")

    @property
    def h(self) -> float:
        return math.pi / self.n_intervals

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, math.pi, self.n_intervals + 1)

    @property
    def invariant_factor(self) -> float:
        return 1.0 + 1.0 / self.delta

    def mu(self, lam: float) -> float:
        return lam / self.invariant_factor

    def params(self, lam: float) -> ProblemParams:
        return ProblemParams(n=self.n, delta=self.delta, p=self.p, lam=lam)


@dataclass(eq=False)
class DiscreteSolution:
    """A converged grid profile at one lambda."""

    u: np.ndarray
    lam: float
    residual_norm: float
    positive: bool
    trivial: bool
    grid: BvpGrid
    iterations: int = 0

    @property
    def sup_deviation(self) -> float:
        return float(np.max(np.abs(self.u - 1.0)))


@dataclass(eq=False)
class BranchPoint:
    lam: float
    u: np.ndarray
    sup_deviation: float
    zero_count: int
    positive: bool


@dataclass(eq=False)
class Branch:
    """One traced bifurcation branch through (1, lambda_k).

    ``points`` are ordered by the continuation parameter t: the -t0 side
    reversed, then the +t0 side, so the full local curve is two-sided.
    ``termination`` maps side -> reason.
    """

    k: int
    lambda_k: float
    points: list[BranchPoint]
    termination: dict
    grid: BvpGrid


@dataclass(frozen=True)
class ContinuationConfig:
    t0: float = 1e-2
    ds0: float = 0.05
    ds_min: float = 1e-7
    ds_max: float = 0.5
    max_points: int = 500
    lambda_ceiling: float = 40.0
    lambda_floor: float = 1e-3
    max_newton: int = 12
    stop_on_positivity_loss: bool = True


def _cot(r: np.ndarray) -> np.ndarray:
    return np.cos(r) / np.sin(r)


def bvp_residual(grid: BvpGrid, u: np.ndarray, lam: float) -> np.ndarray:
    """Pointwise residual of the discretized equation (defined for any sign of u)."""
    h = grid.h
    mu = grid.mu(lam)
    r = grid.nodes
    res = np.empty_like(u)
    g = nonlinearity(u, grid.p)
    interior = slice(1, -1)
    upp = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / (h * h)
    up = (u[2:] - u[:-2]) / (2.0 * h)
    res[interior] = upp + (grid.n - 1) * _cot(r[interior]) * up + mu * g[interior]
    # ghost-node closure: u' = 0 at both ends and the regularity limit n u'' + mu g = 0
    res[0] = grid.n * 2.0 * (u[1] - u[0]) / (h * h) + mu * g[0]
    res[-1] = grid.n * 2.0 * (u[-2] - u[-1]) / (h * h) + mu * g[-1]
    return res


def bvp_jacobian_banded(grid: BvpGrid, u: np.ndarray, lam: float) -> np.ndarray:
    """Tridiagonal Jacobian in solve_banded layout (3, N+1)."""
    h = grid.h
    mu = grid.mu(lam)
    r = grid.nodes
    m = len(u)
    ab = np.zeros((3, m))
    gp = mu * nonlinearity_deriv(u, grid.p)
    cot = _cot(r[1:-1])
    ab[0, 2:] = 1.0 / (h * h) + (grid.n - 1) * cot / (2.0 * h)      # superdiag
    ab[1, 1:-1] = -2.0 / (h * h) + gp[1:-1]                          # diag
    ab[2, :-2] = 1.0 / (h * h) - (grid.n - 1) * cot / (2.0 * h)      # subdiag
    ab[1, 0] = -2.0 * grid.n / (h * h) + gp[0]
    ab[0, 1] = 2.0 * grid.n / (h * h)
    ab[1, -1] = -2.0 * grid.n / (h * h) + gp[-1]
    ab[2, -2] = 2.0 * grid.n / (h * h)
    return ab


def _jacobian_dense(grid: BvpGrid, u: np.ndarray, lam: float) -> np.ndarray:
    ab = bvp_jacobian_banded(grid, u, lam)
    m = len(u)
    out = np.zeros((m, m))
    idx = np.arange(m)
    out[idx, idx] = ab[1]
    out[idx[:-1], idx[:-1] + 1] = ab[0, 1:]
    out[idx[1:], idx[1:] - 1] = ab[2, :-1]
    return out


def _dresidual_dlambda(grid: BvpGrid, u: np.ndarray) -> np.ndarray:
    # residual depends on lambda only through mu = lambda / (1 + 1/delta)
    return nonlinearity(u, grid.p) / grid.invariant_factor


def _linear_operator_dense(grid: BvpGrid) -> np.ndarray:
    """Dense matrix of the radial second-order operator with ghost closure."""
    h = grid.h
    r = grid.nodes
    m = grid.n_intervals + 1
    out = np.zeros((m, m))
    for i in range(1, m - 1):
        c = (grid.n - 1) * math.cos(r[i]) / math.sin(r[i])
        out[i, i - 1] = 1.0 / (h * h) - c / (2.0 * h)
        out[i, i] = -2.0 / (h * h)
        out[i, i + 1] = 1.0 / (h * h) + c / (2.0 * h)
    out[0, 0] = -2.0 * grid.n / (h * h)
    out[0, 1] = 2.0 * grid.n / (h * h)
    out[-1, -1] = -2.0 * grid.n / (h * h)
    out[-1, -2] = 2.0 * grid.n / (h * h)
    return out


def trivial_linearization_spectrum(grid: BvpGrid, lam: float, n_modes: int = 8):
    """Signed eigenvalues of the linearization at u = 1, smallest magnitude first.

    The linearized operator is -Delta - lambda (p-2) acting on invariant
    functions; its discrete eigenvalues are (1 + 1/delta) beta_k^disc
    - lambda (p-2), so the smallest-magnitude one flips sign exactly when
    lambda crosses a discrete bifurcation value.  Returns (values, vectors)
    with vectors as columns matching values.
    """
    op = -grid.invariant_factor * _linear_operator_dense(grid) - lam * (grid.p - 2.0) * np.eye(grid.n_intervals + 1)
    vals, vecs = eig(op)
    if np.max(np.abs(vals.imag)) > 1e-6 * max(1.0, np.max(np.abs(vals.real))):
        raise InvalidParameterError("discrete linearization produced non-real spectrum")
    vals = vals.real
    order = np.argsort(np.abs(vals))[:n_modes]
    return vals[order], vecs[:, order].real


def kernel_crossing_lambdas(grid: BvpGrid, k_max: int = 6):
    """Discrete lambdas where the trivial-branch linearization gains kernel.

    Computed from the eigenvalues beta^disc of the (negated) radial operator:
    lambda_k^disc = beta_k^disc (1 + 1/delta) / (p - 2).  Also returns the
    matching eigenvectors, normalized to value 1 at r = 0.
    """
    op = -_linear_operator_dense(grid)
    vals, vecs = eig(op)
    vals = vals.real
    order = np.argsort(vals)
    betas = vals[order][:k_max + 1]
    vectors = vecs[:, order][:, :k_max + 1].real
    for j in range(vectors.shape[1]):
        if abs(vectors[0, j]) > 1e-12:
            vectors[:, j] /= vectors[0, j]
    lams = betas[1:] * grid.invariant_factor / (grid.p - 2.0)
    return lams, betas, vectors


def interior_sign_changes(v: np.ndarray) -> int:
    """Strict sign changes of a nodal vector, zeros skipped."""
    s = np.sign(v)
    s = s[s != 0]
    return int(np.sum(s[:-1] != s[1:]))


def newton_solve(grid: BvpGrid, initial: np.ndarray, lam: float,
                 tol: float = NEWTON_TOL, max_iter: int = 25) -> DiscreteSolution:
    """Damped Newton on the discrete equation at fixed lambda.

    Backtracks the step until the residual max-norm decreases; raises
    NewtonNoConvergenceError (with the residual history) if the budget runs
    out.  Solutions with sup|u - 1| <= 1e-8 are flagged trivial.  The
    effective tolerance floors at the roundoff level of the residual
    evaluation (the divided differences contribute eps/h^2), which matters
    on strongly refined grids.
    """
    u = np.asarray(initial, dtype=float).copy()
    if len(u) != grid.n_intervals + 1:
        raise InvalidParameterError("initial guess does not match the grid")
    floor = 8.0 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(u)))) / grid.h**2
    tol = max(tol, floor)
    history = []
    res = bvp_residual(grid, u, lam)
    norm = float(np.max(np.abs(res)))
    history.append(norm)
    for it in range(max_iter):
        if norm <= tol:
            break
        ab = bvp_jacobian_banded(grid, u, lam)
        step = solve_banded((1, 1), ab, -res)
        damping = 1.0
        while damping >= 2.0 ** -30:
            trial = u + damping * step
            tres = bvp_residual(grid, trial, lam)
            tnorm = float(np.max(np.abs(tres)))
            if tnorm < norm or (damping == 1.0 and tnorm < tol):
                u, res, norm = trial, tres, tnorm
                break
            damping *= 0.5
        else:
            raise NewtonNoConvergenceError(
                f"newton stalled at residual {norm:.2e} (lambda={lam})", history)
        history.append(norm)
    else:
        if norm > tol:
            raise NewtonNoConvergenceError(
                f"newton did not reach {tol} in {max_iter} iterations "
                f"(last residual {norm:.2e}, lambda={lam})", history)
    return DiscreteSolution(
        u=u, lam=lam, residual_norm=norm,
        positive=bool(np.min(u) > 0.0),
        trivial=bool(np.max(np.abs(u - 1.0)) <= TRIVIAL_TOL),
        grid=grid, iterations=len(history) - 1,
    )


def _rms_dot(du1, dl1, du2, dl2) -> float:
    return float(du1 @ du2) / len(du1) + dl1 * dl2


def _bordered_newton(grid: BvpGrid, u0: np.ndarray, lam0: float, constraint,
                     tol: float = NEWTON_TOL, max_iter: int = 14):
    """Newton on [bvp residual; scalar constraint] in (u, lambda).

    ``constraint(u, lam) -> (value, grad_u, grad_lam)``.  Returns
    (u, lam, residual_norm, iterations) or raises NewtonNoConvergenceError.
    The bordered matrix is factored densely: it stays well conditioned at
    folds where the plain Jacobian degenerates.
    """
    u, lam = u0.copy(), float(lam0)
    m = len(u)

    def merit(uu, ll):
        res = bvp_residual(grid, uu, ll)
        cval, cgu, cgl = constraint(uu, ll)
        return res, cval, cgu, cgl, max(float(np.max(np.abs(res))), abs(cval))

    res, cval, cgu, cgl, norm = merit(u, lam)
    history = [norm]
    for it in range(max_iter):
        if norm <= tol:
            return u, lam, norm, it
        big = np.zeros((m + 1, m + 1))
        big[:m, :m] = _jacobian_dense(grid, u, lam)
        big[:m, m] = _dresidual_dlambda(grid, u)
        big[m, :m] = cgu
        big[m, m] = cgl
        rhs = np.concatenate((-res, [-cval]))
        try:
            piv = lu_factor(big)
            step = lu_solve(piv, rhs)
        except Exception as exc:
            raise NewtonNoConvergenceError(f"bordered solve failed: {exc}", history) from exc
        damping = 1.0
        while damping >= 2.0 ** -16:
            u_t = u + damping * step[:m]
            lam_t = lam + damping * step[m]
            res_t, cval_t, cgu_t, cgl_t, norm_t = merit(u_t, lam_t)
            if norm_t < norm or norm_t <= tol:
                u, lam = u_t, lam_t
                res, cval, cgu, cgl, norm = res_t, cval_t, cgu_t, cgl_t, norm_t
                break
            damping *= 0.5
        else:
            raise NewtonNoConvergenceError(
                f"bordered newton stalled at {norm:.2e}", history)
        history.append(norm)
    if norm <= tol:
        return u, lam, norm, max_iter
    raise NewtonNoConvergenceError(
        f"bordered newton did not converge (last {history[-1]:.2e})", history)


def seed_solution(grid: BvpGrid, k: int, t: float):
    """Solve for the branch point at pinned eigen-amplitude t near (1, lambda_k).

    Solves the discrete equation together with <u - 1, w_k> = t <w_k, w_k>
    for (u, lambda), where w_k is the polynomial eigenfunction sampled at the
    nodes.  This realizes the local branch parametrization u(t) = 1 + t w_k
    + higher order without ever collapsing onto the trivial branch.
    """
    wk = eigen.eigenpoly(grid.n, k)(grid.nodes)
    lam_k = bifurcation_lambda(grid.n, k, grid.delta, grid.p)
    wnorm = float(wk @ wk)

    def constraint(u, lam):
        return float((u - 1.0) @ wk) - t * wnorm, wk, 0.0

    u0 = 1.0 + t * wk
    try:
        u, lam, norm, its = _bordered_newton(grid, u0, lam_k, constraint)
    except NewtonNoConvergenceError as exc:
        raise SeedFailureError(
            f"seed corrector failed for k={k}, t={t}: {exc}") from exc
    return DiscreteSolution(u=u, lam=lam, residual_norm=norm,
                            positive=bool(np.min(u) > 0.0),
                            trivial=False, grid=grid, iterations=its), wk


def _point(grid: BvpGrid, u: np.ndarray, lam: float) -> BranchPoint:
    return BranchPoint(lam=float(lam), u=u.copy(),
                       sup_deviation=float(np.max(np.abs(u - 1.0))),
                       zero_count=interior_sign_changes(u - 1.0),
                       positive=bool(np.min(u) > 0.0))


def _trace_side(grid: BvpGrid, cont: ContinuationConfig, first: DiscreteSolution,
                wk: np.ndarray, sign: float):
    """Pseudo-arclength march from a seeded point away from the trivial branch."""
    points = [_point(grid, first.u, first.lam)]
    # initial tangent along the kernel direction, lambda frozen
    tau_u = sign * wk / math.sqrt(_rms_dot(wk, 0.0, wk, 0.0))
    tau_l = 0.0
    u_cur, lam_cur = first.u, first.lam
    ds = cont.ds0
    reason = "max-points"
    while len(points) < cont.max_points:
        pred_u = u_cur + ds * tau_u
        pred_l = lam_cur + ds * tau_l

        def constraint(u, lam, _tu=tau_u, _tl=tau_l, _u0=u_cur, _l0=lam_cur, _ds=ds):
            val = _rms_dot(u - _u0, lam - _l0, _tu, _tl) - _ds
            return val, _tu / len(u), _tl

        try:
            u_new, lam_new, _, its = _bordered_newton(grid, pred_u, pred_l, constraint,
                                                      max_iter=cont.max_newton)
        except NewtonNoConvergenceError:
            ds *= 0.5
            if ds < cont.ds_min:
                reason = "step-failure"
                break
            continue
        if np.max(np.abs(u_new - 1.0)) <= TRIVIAL_TOL:
            # corrector slid back onto the trivial branch: shrink and retry
            ds *= 0.5
            if ds < cont.ds_min:
                reason = "collapsed-to-trivial"
                break
            continue
        du = u_new - u_cur
        dl = lam_new - lam_cur
        nrm = math.sqrt(_rms_dot(du, dl, du, dl))
        tau_u, tau_l = du / nrm, dl / nrm
        u_cur, lam_cur = u_new, lam_new
        points.append(_point(grid, u_cur, lam_cur))
        if not points[-1].positive and cont.stop_on_positivity_loss:
            reason = "positivity-loss"
            break
        if lam_cur > cont.lambda_ceiling:
            reason = "lambda-ceiling"
            break
        if lam_cur < cont.lambda_floor:
            reason = "lambda-floor"
            break
        if its <= 4:
            ds = min(ds * 1.4, cont.ds_max)
    return points, reason


def branch_from(k: int, grid: BvpGrid, cont: ContinuationConfig | None = None) -> Branch:
    """Trace the nontrivial branch through (1, lambda_k), both seed signs.

    Points are ordered along the local curve parameter: the -t0 side comes
    first (reversed), then the +t0 side.  Positivity is monitored; by
    default a side stops at its first non-positive point, which is still
    recorded and flagged.
    """
    if not (2.0 < grid.p < critical_exponent(grid.n)):
        raise InvalidParameterError(
            f"branch continuation needs subcritical p in (2, {critical_exponent(grid.n)}), "
            f"got p={grid.p}")
    cont = cont or ContinuationConfig()
    lam_k = bifurcation_lambda(grid.n, k, grid.delta, grid.p)
    sides, term = {}, {}
    for sign, tag in ((1.0, "plus"), (-1.0, "minus")):
        seed, wk = seed_solution(grid, k, sign * cont.t0)
        pts, reason = _trace_side(grid, cont, seed, wk, sign)
        sides[tag] = pts
        term[tag] = reason
    points = sides["minus"][::-1] + sides["plus"]
    return Branch(k=k, lambda_k=lam_k, points=points, termination=term, grid=grid)


def refine_solution(sol: DiscreteSolution, factor: int = 2) -> DiscreteSolution:
    """Re-converge a discrete solution on a factor-times finer grid."""
    fine = replace(sol.grid, n_intervals=sol.grid.n_intervals * factor)
    guess = np.interp(fine.nodes, sol.grid.nodes, sol.u)
    return newton_solve(fine, guess, sol.lam)


def shooting_solution(grid: BvpGrid, lam: float, alpha0: float, gamma0: float,
                      config: IntegratorConfig | None = None) -> Trajectory:
    """Independent two-sided shooting solve of the same boundary problem.

    Integrates from both singular endpoints (the equation is invariant under
    r -> pi - r, so the right shot is a left shot with initial value gamma)
    and Newton-matches value and derivative at pi/2 over (alpha, gamma).
    Returns the merged full trajectory; its grid stays uniform through the
    midpoint.  Serves as the oracle route for branch solutions.
    """
    config = config or IntegratorConfig()
    params = grid.params(lam)

    def mismatch(a, g):
        sl = integrate_half(params, config, a)
        sr = integrate_half(params, config, g)
        return np.array([sl.w_mid - sr.w_mid, sl.wp_mid + sr.wp_mid]), sl, sr

    x = np.array([alpha0, gamma0], dtype=float)
    f, sl, sr = mismatch(*x)
    for _ in range(30):
        if np.max(np.abs(f)) <= 1e-11:
            break
        jac = np.empty((2, 2))
        for j in range(2):
            dx = 1e-7 * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += dx
            fp, _, _ = mismatch(*xp)
            jac[:, j] = (fp - f) / dx
        x = x + np.linalg.solve(jac, -f)
        f, sl, sr = mismatch(*x)
    else:
        raise NewtonNoConvergenceError(
            f"two-sided shooting did not match at lambda={lam} "
            f"(mismatch {np.max(np.abs(f)):.2e})")

    tl, tr = sl.trajectory, sr.trajectory
    keep = tr.grid < HALF_PI - 1e-15
    grid_full = np.concatenate((tl.grid, math.pi - tr.grid[keep][::-1]))
    w = np.concatenate((tl.w, tr.w[keep][::-1]))
    wp = np.concatenate((tl.wp, -tr.wp[keep][::-1]))
    energy = np.concatenate((tl.energy, tr.energy[keep][::-1]))
    return Trajectory(grid=grid_full, w=w, wp=wp, energy=energy,
                      alpha=float(x[0]), params=params)


@dataclass(eq=False)
class SolutionAtLambda:
    """One deduplicated solution of the BVP at a requested lambda."""

    k: int
    side: str
    solution: DiscreteSolution
    polished: Trajectory | None = None

    @property
    def zero_count(self) -> int:
        return interior_sign_changes(self.solution.u - 1.0)


def _branch_crossings(points: list[BranchPoint], lam: float):
    for a, b in zip(points[:-1], points[1:]):
        if (a.lam - lam) * (b.lam - lam) <= 0.0 and (a.lam != b.lam):
            s = (lam - a.lam) / (b.lam - a.lam)
            yield (1.0 - s) * a.u + s * b.u


def solutions_at(lam: float, grid: BvpGrid, k_max: int,
                 cont: ContinuationConfig | None = None,
                 polish: bool = True) -> list[SolutionAtLambda]:
    """Distinct positive nontrivial solutions at one lambda from branches 1..k_max.

    Runs both sides of every branch with lambda_k < lam, converges each
    lambda-crossing at the exact target, discards non-positive or trivial
    profiles, deduplicates by sup-distance (> 1e-3 counts as distinct, which
    deliberately keeps mirror images apart), and optionally polishes each
    survivor by the independent two-sided shooting route.  Per-branch
    failures are recorded, not propagated.
    """
    cont = cont or ContinuationConfig()
    if cont.lambda_ceiling < lam * 1.05:
        cont = replace(cont, lambda_ceiling=lam * 1.05 + 1.0)
    found: list[SolutionAtLambda] = []
    for k in range(1, k_max + 1):
        lam_k = bifurcation_lambda(grid.n, k, grid.delta, grid.p)
        if lam_k >= lam:
            continue
        try:
            branch = branch_from(k, grid, cont)
        except (SeedFailureError, NewtonNoConvergenceError):
            continue
        mid = next(i for i, q in enumerate(branch.points)
                   if q.sup_deviation == min(x.sup_deviation for x in branch.points))
        for side, pts in (("minus", branch.points[:mid + 1][::-1]), ("plus", branch.points[mid:])):
            for guess in _branch_crossings(pts, lam):
                try:
                    sol = newton_solve(grid, guess, lam)
                except NewtonNoConvergenceError:
                    continue
                if sol.trivial or not sol.positive or sol.sup_deviation <= DISTINCT_TOL:
                    continue
                if any(np.max(np.abs(sol.u - other.solution.u)) <= DISTINCT_TOL
                       for other in found):
                    continue
                found.append(SolutionAtLambda(k=k, side=side, solution=sol))
    if polish:
        for item in found:
            try:
                item.polished = shooting_solution(
                    grid, lam, float(item.solution.u[0]), float(item.solution.u[-1]))
            except NewtonNoConvergenceError:
                item.polished = None
    return found
