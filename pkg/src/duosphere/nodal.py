"""Band scan and bisection catalog of nodal solutions.

The shooting map alpha -> (zero count on (0, pi/2), midpoint data) is piecewise
constant in the count: it jumps by one exactly at the alpha values whose shot
vanishes at pi/2.  Scanning (1, alpha_max] therefore yields bands of constant
count; refining a band boundary brackets an antisymmetric solution (root of
w(pi/2), odd reflection, 2j+1 total zeros), and inside each band the sign of
w'(pi/2) flips somewhere, bracketing a symmetric solution (root of w'(pi/2),
even reflection, 2(j+1) total zeros).  The catalog keeps the first such root in
each band, the numerical counterpart of the sup/inf selection that makes the
families canonical.

Shots are cached per alpha; distinct shots are independent and could be
dispatched concurrently, with catalog assembly as a single-owner reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import verify
from .errors import BracketError, CatalogIncompleteError
from .params import ProblemParams, derive_constants
from .shooter import (
    IntegratorConfig,
    ShotResult,
    Trajectory,
    count_sign_changes,
    extend_by_symmetry,
    integrate_half,
)

__all__ = [
    "ZeroBand",
    "ScanResult",
    "NodalSolution",
    "NodalCatalog",
    "scan_bands",
    "find_antisymmetric",
    "find_symmetric",
    "build_catalog",
]

MID_RESIDUAL_TOL = 1e-10
ODE_RESIDUAL_TOL = 1e-6
BOUNDARY_REFINE_TOL = 1e-7
ALPHA_HARD_CAP = 1e6


@dataclass(frozen=True)
class ZeroBand:
    """Maximal alpha interval on which the half-interval zero count is constant."""

    lo: float
    hi: float
    count: int


@dataclass(frozen=True)
class ScanResult:
    """Bands plus the refined boundary brackets between them.

    ``boundaries[j]`` is the (lo, hi) alpha bracket isolating the jump from
    count j to j+1; ``incomplete`` lists any gaps whose refinement budget ran
    out before adjacent counts differed by one (reported, not fatal).
    """

    bands: tuple[ZeroBand, ...]
    boundaries: tuple[tuple[float, float], ...]
    incomplete: tuple[tuple[float, float, int, int], ...] = ()


@dataclass(eq=False)
class NodalSolution:
    """A certified nodal solution with k sign changes on (0, pi)."""

    k: int
    alpha: float
    symmetry: str
    trajectory: Trajectory
    residual_mid: float
    residual_boundary: float
    residual_ode_sup: float
    zeros: np.ndarray = field(default_factory=lambda: np.array([]))


@dataclass(eq=False)
class NodalCatalog:
    params: ProblemParams
    entries: list[NodalSolution]
    alpha_max: float
    resolution: int
    tolerances: dict

    def entry(self, k: int) -> NodalSolution:
        for e in self.entries:
            if e.k == k:
                return e
        raise KeyError(f"no catalog entry with k={k}")


class _ShotCache:
    """Memoized integrate_half over one (params, config) pair."""

    def __init__(self, params: ProblemParams, config: IntegratorConfig):
        self.params = params
        self.config = config
        self._shots: dict[float, ShotResult] = {}

    def __call__(self, alpha: float) -> ShotResult:
        alpha = float(alpha)
        shot = self._shots.get(alpha)
        if shot is None:
            shot = integrate_half(self.params, self.config, alpha)
            self._shots[alpha] = shot
        return shot

    def count(self, alpha: float) -> int:
        return self(alpha).zeros_half


def _refine_boundary(shots: _ShotCache, lo: float, hi: float, budget: int = 200):
    """Bisect a count jump until it is a single +1 step inside a tight bracket.

    Returns (boundaries, incomplete): each boundary is (lo, hi, c_lo) with
    count(hi) = c_lo + 1 and hi - lo <= BOUNDARY_REFINE_TOL * max(1, hi).
    """
    out, bad = [], []
    stack = [(lo, hi)]
    while stack:
        a, b = stack.pop()
        ca, cb = shots.count(a), shots.count(b)
        if cb == ca:
            continue
        used = 0
        while (cb - ca > 1 or b - a > BOUNDARY_REFINE_TOL * max(1.0, b)) and used < budget:
            m = 0.5 * (a + b)
            cm = shots.count(m)
            if cm == ca:
                a = m
            elif cm == cb:
                b = m
            else:
                # more than one jump inside: split off the upper part
                stack.append((m, b))
                b, cb = m, cm
            used += 1
        if cb - ca == 1 and b - a <= BOUNDARY_REFINE_TOL * max(1.0, b):
            out.append((a, b, ca))
        else:
            bad.append((a, b, ca, cb))
    return sorted(out), bad


def scan_bands(params: ProblemParams, config: IntegratorConfig, alpha_max: float,
               initial_resolution: int = 64) -> ScanResult:
    """Partition (1, alpha_max] into constant-zero-count bands.

    Samples the count on a uniform alpha grid and refines every count jump by
    bisection until adjacent bands differ by exactly one.  The count is
    nondecreasing in alpha for this equation, which the refinement exploits;
    a jump that cannot be isolated within the budget is reported in
    ``incomplete`` rather than raising.
    """
    consts = derive_constants(params)
    if not alpha_max > consts.alpha_threshold:
        raise BracketError(
            f"alpha_max={alpha_max} must exceed the positivity threshold "
            f"{consts.alpha_threshold}")
    shots = _ShotCache(params, config)
    grid = np.linspace(1.0 + 1e-9, alpha_max, max(int(initial_resolution), 8))
    counts = [shots.count(a) for a in grid]

    boundaries, incomplete = [], []
    for i in range(len(grid) - 1):
        if counts[i + 1] != counts[i]:
            good, bad = _refine_boundary(shots, float(grid[i]), float(grid[i + 1]))
            boundaries.extend(good)
            incomplete.extend(bad)
    boundaries.sort()

    bands = []
    lo = float(grid[0])
    for a, b, c_lo in boundaries:
        bands.append(ZeroBand(lo=lo, hi=a, count=c_lo))
        lo = b
    bands.append(ZeroBand(lo=lo, hi=float(alpha_max), count=counts[-1]))
    return ScanResult(bands=tuple(bands),
                      boundaries=tuple((a, b) for a, b, _ in boundaries),
                      incomplete=tuple(incomplete))


def _certify(shot: ShotResult, kind: str, k: int, shots: _ShotCache) -> NodalSolution:
    traj = extend_by_symmetry(shot, kind, match_tol=shots.config.match_tol)
    n_changes = count_sign_changes(traj.w)
    expected = 2 * shot.zeros_half + 1 if kind == "odd" else 2 * shot.zeros_half
    if n_changes != expected or expected != k:
        raise BracketError(
            f"zero count mismatch for k={k}: reflected trajectory has {n_changes} "
            f"sign changes, parity arithmetic gives {expected}")
    report = verify.ode_residual(traj)
    mid = abs(shot.w_mid) if kind == "odd" else abs(shot.wp_mid)
    zeros = np.concatenate((shot.zeros, [math.pi / 2] if kind == "odd" else [],
                            math.pi - shot.zeros[::-1]))
    return NodalSolution(
        k=k, alpha=shot.alpha, symmetry=kind, trajectory=traj,
        residual_mid=mid, residual_boundary=abs(traj.wp[-1]),
        residual_ode_sup=report.sup_residual, zeros=zeros,
    )


def find_antisymmetric(bracket: tuple[float, float], params: ProblemParams,
                       config: IntegratorConfig, _shots: _ShotCache | None = None) -> NodalSolution:
    """Locate the odd-reflection solution whose shot vanishes at pi/2.

    The bracket endpoints must give w(pi/2) of opposite sign; the root is
    polished to |w(pi/2)| <= 1e-10 and reflected antisymmetrically, so the
    total zero count is 2j+1 with j the count strictly inside (0, pi/2).
    """
    shots = _shots if _shots is not None else _ShotCache(params, config)
    lo, hi = bracket
    if not shots(lo).w_mid * shots(hi).w_mid < 0:
        raise BracketError(f"no sign change of w(pi/2) on [{lo}, {hi}]")
    alpha = brentq(lambda a: shots(a).w_mid, lo, hi, xtol=1e-14, rtol=8.9e-16)
    shot = shots(alpha)
    if abs(shot.w_mid) > MID_RESIDUAL_TOL:
        raise BracketError(
            f"midpoint residual {abs(shot.w_mid):.2e} above {MID_RESIDUAL_TOL} at alpha={alpha}")
    return _certify(shot, "odd", 2 * shot.zeros_half + 1, shots)


def find_symmetric(bracket: tuple[float, float], params: ProblemParams,
                   config: IntegratorConfig, _shots: _ShotCache | None = None) -> NodalSolution:
    """Locate the even-reflection solution whose shot has w'(pi/2) = 0.

    The bracket endpoints must have equal zero counts and w'(pi/2) of
    opposite sign; the root is polished to |w'(pi/2)| <= 1e-10 and reflected
    evenly, giving 2(j+1) total zeros with j+1 the shared half count.
    """
    shots = _shots if _shots is not None else _ShotCache(params, config)
    lo, hi = bracket
    if shots.count(lo) != shots.count(hi):
        raise BracketError(
            f"bracket [{lo}, {hi}] spans a count jump "
            f"({shots.count(lo)} vs {shots.count(hi)})")
    if not shots(lo).wp_mid * shots(hi).wp_mid < 0:
        raise BracketError(f"no sign change of w'(pi/2) on [{lo}, {hi}]")
    alpha = brentq(lambda a: shots(a).wp_mid, lo, hi, xtol=1e-14, rtol=8.9e-16)
    shot = shots(alpha)
    if abs(shot.wp_mid) > MID_RESIDUAL_TOL:
        raise BracketError(
            f"midpoint slope residual {abs(shot.wp_mid):.2e} above {MID_RESIDUAL_TOL}")
    return _certify(shot, "even", 2 * shot.zeros_half, shots)


def _first_symmetric_bracket(shots: _ShotCache, lo: float, hi: float,
                             probes: int = 17) -> tuple[float, float] | None:
    """First sign change of w'(pi/2) inside an open band (numerical inf)."""
    pad = 1e-7 * max(1.0, hi)
    xs = np.linspace(lo + pad, hi - pad, probes)
    vals = [shots(x).wp_mid for x in xs]
    for i in range(len(xs) - 1):
        if vals[i] * vals[i + 1] < 0:
            return float(xs[i]), float(xs[i + 1])
    return None


def build_catalog(params: ProblemParams, config: IntegratorConfig, k_max: int,
                  alpha_max: float | None = None, initial_resolution: int = 64) -> NodalCatalog:
    """Certified nodal solutions for every k = 1 .. k_max.

    alpha_max adapts by doubling from 4x the positivity threshold until the
    scan shows zero counts up to k_max//2 + 1 (or the hard cap is hit).  Each
    entry is certified on three counts: the exact reflected zero count, the
    midpoint residual, and the independent equation residual of the verify
    module.  Raises CatalogIncompleteError with the partial catalog when some
    k cannot be realized.
    """
    consts = derive_constants(params)
    if k_max < 0:
        raise BracketError(f"k_max must be >= 0, got {k_max}")
    tolerances = {"mid": MID_RESIDUAL_TOL, "ode_sup": ODE_RESIDUAL_TOL,
                  "boundary_refine": BOUNDARY_REFINE_TOL}
    if k_max == 0:
        return NodalCatalog(params=params, entries=[], alpha_max=0.0,
                            resolution=initial_resolution, tolerances=tolerances)

    shots = _ShotCache(params, config)
    need_count = k_max // 2 + 1
    amax = alpha_max if alpha_max is not None else 4.0 * consts.alpha_threshold
    resolution = initial_resolution
    while True:
        scan = scan_bands(params, config, amax, resolution)
        max_count = max(b.count for b in scan.bands)
        if max_count >= need_count or alpha_max is not None or amax >= ALPHA_HARD_CAP:
            break
        amax *= 2.0
        resolution *= 2

    entries: list[NodalSolution] = []
    missing: list[int] = []

    # odd k = 2j+1 from the boundary between count-j and count-(j+1) bands
    by_count = {b.count: b for b in scan.bands}
    bmap = {}
    for (lo, hi) in scan.boundaries:
        bmap[shots.count(lo)] = (lo, hi)
    for k in range(1, k_max + 1, 2):
        j = (k - 1) // 2
        if j in bmap:
            entries.append(find_antisymmetric(bmap[j], params, config, _shots=shots))
        else:
            missing.append(k)

    # even k = 2m from the first w'(pi/2) root inside the count-m band
    for k in range(2, k_max + 1, 2):
        m = k // 2
        band = by_count.get(m)
        if band is None or band.hi >= amax - 1e-12:
            missing.append(k)
            continue
        bracket = None
        probes = 17
        while bracket is None and probes <= 257:
            bracket = _first_symmetric_bracket(shots, band.lo, band.hi, probes)
            probes = 2 * probes - 1
        if bracket is None:
            missing.append(k)
            continue
        entries.append(find_symmetric(bracket, params, config, _shots=shots))

    entries.sort(key=lambda e: e.k)
    catalog = NodalCatalog(params=params, entries=entries, alpha_max=amax,
                           resolution=resolution, tolerances=tolerances)
    if missing:
        raise CatalogIncompleteError(
            f"could not realize k in {sorted(missing)} below alpha_max={amax}",
            partial=catalog, missing=sorted(missing))

    alphas = [e.alpha for e in entries]
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise BracketError(f"catalog alphas not strictly increasing: {alphas}")
    for e in entries:
        if e.residual_ode_sup > ODE_RESIDUAL_TOL:
            raise BracketError(
                f"entry k={e.k} failed the equation residual gate: "
                f"{e.residual_ode_sup:.2e} > {ODE_RESIDUAL_TOL}")
    return catalog
