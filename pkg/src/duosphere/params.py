"""Closed-form parameter algebra for the invariant reduction on S^n x S^n.

Everything downstream derives from the quadruple (n, delta, p, lambda): the
reduced coefficient mu = lambda / (1 + 1/delta), the critical exponent
p_{2n} = 4n/(2n-2) of the 2n-dimensional product, the scalar curvature
n(n-1)(1 + 1/delta), and the bifurcation thresholds
lambda_k = k(k+n-1) (1 + 1/delta) / (p - 2).

Integer products like k(k+n-1) and n(n-1) are formed in integer arithmetic
before any float division, so interval-membership tests against the
thresholds are exact to double precision.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidParameterError

__all__ = [
    "ProblemParams",
    "DerivedConstants",
    "critical_exponent",
    "derive_constants",
    "yamabe_parameters",
    "yamabe_params",
    "bifurcation_lambda",
]


def _check_n(n: int) -> None:
    if not isinstance(n, int) or n < 2:
        raise InvalidParameterError(f"sphere dimension n must be an integer >= 2, got {n!r}")


def _check_delta(delta: float) -> None:
    if not delta > 0:
        raise InvalidParameterError(f"delta must be positive, got {delta!r}")


def critical_exponent(n: int) -> float:
    """p_{2n} = 4n/(2n-2), the critical exponent of the 2n-dimensional product."""
    _check_n(n)
    return (4 * n) / (2 * n - 2)


@dataclass(frozen=True)
class ProblemParams:
    """Problem data (n, delta, p, lambda); `lam` is the lambda coefficient."""

    n: int
    delta: float
    p: float
    lam: float

    def __post_init__(self):
        _check_n(self.n)
        _check_delta(self.delta)
        if not self.lam > 0:
            raise InvalidParameterError(f"lambda must be positive, got {self.lam!r}")
        pc = critical_exponent(self.n)
        if not (2.0 < self.p <= pc):
            raise InvalidParameterError(
                f"exponent p must lie in (2, {pc}] for n={self.n}, got {self.p!r}"
            )

    @property
    def mu(self) -> float:
        return self.lam / (1.0 + 1.0 / self.delta)


@dataclass(frozen=True)
class DerivedConstants:
    """Constants computed once from ProblemParams.

    mu              lambda / (1 + 1/delta)
    a2n             4(2n-1)/(2n-2)
    p2n             4n/(2n-2)
    scal            scalar curvature n(n-1)(1 + 1/delta) of the product metric
    alpha_threshold (p/2)^{1/(p-2)}; shots with alpha at or below it stay
                    positive on (0, pi/2) because the initial energy is <= 0
    """

    mu: float
    a2n: float
    p2n: float
    scal: float
    alpha_threshold: float


def derive_constants(params: ProblemParams) -> DerivedConstants:
    n = params.n
    mu = params.lam / (1.0 + 1.0 / params.delta)
    a2n = (4 * (2 * n - 1)) / (2 * n - 2)
    p2n = critical_exponent(n)
    scal = (n * (n - 1)) * (1.0 + 1.0 / params.delta)
    alpha_threshold = (params.p / 2.0) ** (1.0 / (params.p - 2.0))
    return DerivedConstants(mu=mu, a2n=a2n, p2n=p2n, scal=scal, alpha_threshold=alpha_threshold)


def yamabe_parameters(n: int, delta: float) -> tuple[float, float]:
    """(lambda_Y, p_crit) that turn the general equation into the Yamabe one.

    lambda_Y = n(n-1)(2n-2)(1 + 1/delta) / (4(2n-1)), i.e. scal / a2n, and
    p_crit = 4n/(2n-2).
    """
    _check_n(n)
    _check_delta(delta)
    num = n * (n - 1) * (2 * n - 2)
    den = 4 * (2 * n - 1)
    lam_y = num * (1.0 + 1.0 / delta) / den
    return lam_y, critical_exponent(n)


def yamabe_params(n: int, delta: float) -> ProblemParams:
    """ProblemParams preset for the critical (Yamabe) case."""
    lam_y, p_crit = yamabe_parameters(n, delta)
    return ProblemParams(n=n, delta=delta, p=p_crit, lam=lam_y)


def bifurcation_lambda(n: int, k: int, delta: float, p: float) -> float:
    """lambda_k = k(k+n-1)(1 + 1/delta)/(p-2), strictly increasing in k."""
    _check_n(n)
    _check_delta(delta)
    if not isinstance(k, int) or k < 1:
        raise InvalidParameterError(f"branch index k must be an integer >= 1, got {k!r}")
    if not p > 2:
        raise InvalidParameterError(f"exponent p must exceed 2, got {p!r}")
    return (k * (k + n - 1)) * (1.0 + 1.0 / delta) / (p - 2.0)
