"""Polynomial eigenfunctions of the radial sphere Laplacian.

The linear problem w'' + (n-1) cot(r) w' + beta w = 0 with w(0) = 1,
w'(0) = 0 has a polynomial solution w(r) = p_k(cos r) exactly at
beta = beta_k = k(n+k-1).  Writing x = cos r, the operator acts on
monomials by

    H_beta(x^j) = (beta - beta_j) x^j + j(j-1) x^{j-2},

so the eigenfunction coefficients satisfy a two-term downward recursion
c_j = -(j+2)(j+1) c_{j+2} / (beta_k - beta_j), seeded with c_k = 1 and
normalized afterwards so that w(0) = sum c_j = 1.  The denominators
beta_k - beta_j = (k-j)(n+k+j-1) are nonzero positive integers for j < k,
and all coefficients are kept as exact rationals: the annihilation check
H_{beta_k}(p_k) = 0 holds coefficient-for-coefficient, not just to rounding.

Roots of p_k on (-1, 1) are isolated with exact Sturm sequences and then
polished in floating point; mapped through arccos they give the k simple
zeros of w in (0, pi).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidParameterError, RootRefinementError

__all__ = [
    "beta",
    "apply_H",
    "EigenPoly",
    "eigenpoly",
    "zero_count",
    "sturm_interlace",
    "InterlaceReport",
    "endpoint_parity",
]


def beta(n: int, k: int) -> int:
    """Eigenvalue beta_k = k(n+k-1) of the k-th invariant mode."""
    if k < 0:
        raise InvalidParameterError(f"mode index k must be >= 0, got {k!r}")
    return k * (n + k - 1)


def apply_H(beta_value, coeffs, n: int):
    """Apply the operator H_beta to a coefficient vector over monomials in cos r.

    ``coeffs[j]`` multiplies cos^j(r).  Works elementwise over exact
    (int/Fraction) or float coefficients and returns a list of the same
    arithmetic type; exact inputs give an exact result.
    """
    out = [0 * c for c in coeffs]
    for j, c in enumerate(coeffs):
        if c == 0:
            continue
        out[j] += (beta_value - beta(n, j)) * c
        if j >= 2:
            out[j - 2] += (j * (j - 1)) * c
    return out


@dataclass(frozen=True, eq=False)
class EigenPoly:
    """Eigenfunction w(r) = sum_j coeffs[j] cos^j(r) for beta = beta_k.

    Only powers with the parity of k are populated and the coefficients sum
    to 1 (so w(0) = 1).  ``exact`` carries the rational coefficients the
    float vector was rounded from.
    """

    n: int
    k: int
    coeffs: np.ndarray
    exact: tuple[Fraction, ...] = field(repr=False)

    @property
    def beta(self) -> int:
        return beta(self.n, self.k)

    def eval_x(self, x):
        """Value of the polynomial at x = cos r."""
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def __call__(self, r):
        return self.eval_x(np.cos(r))

    def deriv_x(self, x):
        dc = np.polynomial.polynomial.polyder(self.coeffs)
        return np.polynomial.polynomial.polyval(x, dc)


def eigenpoly(n: int, k: int) -> EigenPoly:
    """Construct w_{beta_k} by the downward monomial recursion, exactly."""
    if k < 1:
        raise InvalidParameterError(f"eigenpoly needs k >= 1, got {k!r}")
    bk = beta(n, k)
    exact = [Fraction(0)] * (k + 1)
    exact[k] = Fraction(1)
    for j in range(k - 2, -1, -2):
        # beta_k - beta_j = (k-j)(n+k+j-1) > 0 for j < k: never divides by zero
        exact[j] = -Fraction((j + 2) * (j + 1)) * exact[j + 2] / (bk - beta(n, j))
    total = sum(exact)
    exact = [c / total for c in exact]
    coeffs = np.array([float(c) for c in exact])
    return EigenPoly(n=n, k=k, coeffs=coeffs, exact=tuple(exact))


def annihilation_defect(poly: EigenPoly) -> Fraction:
    """Max |H_{beta_k}(poly)| coefficient, in exact arithmetic (0 for a true eigenfunction)."""
    image = apply_H(poly.beta, list(poly.exact), poly.n)
    return max((abs(c) for c in image), default=Fraction(0))


# ---------------------------------------------------------------------------
# exact Sturm-sequence root isolation on x in (-1, 1)

def _poly_trim(c: list[Fraction]) -> list[Fraction]:
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_deriv(c: list[Fraction]) -> list[Fraction]:
    return [c[j] * j for j in range(1, len(c))]


def _poly_eval(c: list[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for cj in reversed(c):
        acc = acc * x + cj
    return acc


def _poly_rem(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    a = a[:]
    db, lb = len(b) - 1, b[-1]
    while len(a) - 1 >= db and any(a):
        da, la = len(a) - 1, a[-1]
        if la == 0:
            a.pop()
            continue
        q = la / lb
        for i in range(db + 1):
            a[da - db + i] -= q * b[i]
        a.pop()
    return _poly_trim(a)


def _sturm_chain(c: list[Fraction]) -> list[list[Fraction]]:
    chain = [_poly_trim(c[:]), _poly_trim(_poly_deriv(c))]
    while len(chain[-1]) > 1:
        rem = _poly_rem(chain[-2], chain[-1])
        if not rem:
            break
        chain.append([-r for r in rem])
    return chain


def _variations(chain, x: Fraction) -> int:
    signs = []
    for poly in chain:
        v = _poly_eval(poly, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _isolate(chain, lo: Fraction, hi: Fraction, vlo: int, vhi: int, out: list):
    nroots = vlo - vhi
    if nroots == 0:
        return
    if nroots == 1:
        out.append((lo, hi))
        return
    mid = (lo + hi) / 2
    # mid is never a root in practice; if it is, nudge it
    while _poly_eval(chain[0], mid) == 0:
        mid = (lo + mid) / 2
    vmid = _variations(chain, mid)
    _isolate(chain, lo, mid, vlo, vmid, out)
    _isolate(chain, mid, hi, vmid, vhi, out)


def zero_count(poly: EigenPoly) -> tuple[int, np.ndarray]:
    """Count and locate the zeros of w_{beta_k} in (0, pi).

    Roots are isolated exactly on x = cos r in (-1, 1) by Sturm bisection,
    polished with brentq on the float polynomial, then mapped through
    arccos.  Raises RootRefinementError if a polished root is not simple or
    the polish fails to converge.
    """
    chain = _sturm_chain(list(poly.exact))
    lo, hi = Fraction(-1), Fraction(1)
    intervals: list[tuple[Fraction, Fraction]] = []
    _isolate(chain, lo, hi, _variations(chain, lo), _variations(chain, hi), intervals)

    roots_x = []
    for a, b in intervals:
        fa, fb = poly.eval_x(float(a)), poly.eval_x(float(b))
        aa, bb = Fraction(a), Fraction(b)
        # shrink exactly until the float endpoint values straddle zero
        while fa * fb > 0:
            mm = (aa + bb) / 2
            vm = _poly_eval(list(poly.exact), mm)
            if vm == 0:
                roots_x.append(float(mm))
                break
            if (_variations(chain, aa) - _variations(chain, mm)) == 1:
                bb = mm
            else:
                aa = mm
            fa, fb = poly.eval_x(float(aa)), poly.eval_x(float(bb))
        else:
            try:
                x0 = brentq(poly.eval_x, float(aa), float(bb), xtol=1e-15, rtol=8.9e-16)
            except ValueError as exc:
                raise RootRefinementError(f"root polish failed on [{aa}, {bb}]: {exc}") from exc
            roots_x.append(x0)

    for x0 in roots_x:
        if abs(poly.deriv_x(x0)) < 1e-8:
            raise RootRefinementError(f"root x={x0} of mode k={poly.k} is not numerically simple")

    roots_r = np.sort(np.arccos(np.array(sorted(roots_x), dtype=float)))
    return len(roots_r), roots_r


@dataclass(frozen=True)
class InterlaceReport:
    """Outcome of a Sturm interlacing check between modes m < l."""

    n: int
    m: int
    l: int
    ok: bool
    gaps_checked: int
    failed_gaps: tuple[tuple[float, float], ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def sturm_interlace(n: int, m: int, l: int) -> InterlaceReport:
    """Check that every gap between consecutive zeros of mode m holds a zero of mode l."""
    if not (1 <= m < l):
        raise InvalidParameterError(f"interlacing needs 1 <= m < l, got m={m}, l={l}")
    _, rm = zero_count(eigenpoly(n, m))
    _, rl = zero_count(eigenpoly(n, l))
    failed = []
    for a, b in zip(rm[:-1], rm[1:]):
        if not np.any((rl > a) & (rl < b)):
            failed.append((float(a), float(b)))
    return InterlaceReport(
        n=n, m=m, l=l, ok=not failed, gaps_checked=max(len(rm) - 1, 0),
        failed_gaps=tuple(failed),
    )


def endpoint_parity(poly: EigenPoly) -> tuple[str, float]:
    """Parity tag about pi/2 and the endpoint value w(pi).

    Even modes are symmetric with w(pi) = +1, odd modes antisymmetric with
    w(pi) = -1; both follow from the coefficient support parity and the
    normalization, so the value is computed exactly.
    """
    for j, c in enumerate(poly.exact):
        if c != 0 and (j - poly.k) % 2 != 0:
            raise InvalidParameterError(f"mode k={poly.k} has mixed-parity coefficients")
    w_pi = sum(c * (-1) ** j for j, c in enumerate(poly.exact))
    tag = "symmetric" if poly.k % 2 == 0 else "antisymmetric"
    return tag, float(w_pi)
