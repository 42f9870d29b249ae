import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from duosphere import eigen
from duosphere.errors import InvalidParameterError


def test_beta_values():
    assert eigen.beta(2, 1) == 2
    assert eigen.beta(2, 3) == 12
    assert eigen.beta(3, 2) == 8
    assert eigen.beta(5, 0) == 0


def test_apply_H_monomial_rule():
    # H_{beta_1}(cos) = 0
    out = eigen.apply_H(2, [0, 1], n=2)
    assert out == [0, 0]
    # H_beta(cos^2) = (beta - beta_2) cos^2 + 2
    out = eigen.apply_H(7, [0, 0, 1], n=2)
    assert out == [2, 0, 7 - 6]
    # H_0(1) = 0
    assert eigen.apply_H(0, [1], n=4) == [0]


def test_eigenpoly_matches_known_low_modes():
    p1 = eigen.eigenpoly(3, 1)
    assert p1.exact == (Fraction(0), Fraction(1))
    for n in (2, 3, 5):
        p2 = eigen.eigenpoly(n, 2)
        assert p2.exact[2] == Fraction(n + 1, n)
        assert p2.exact[0] == Fraction(-1, n)


def test_eigenpoly_k3_is_the_recursion_solution():
    # the annihilating degree-3 polynomial is ((n+3)/n) x^3 - (3/n) x; for
    # n = 2 that is the classical degree-3 Legendre polynomial
    for n in (2, 3, 4, 7):
        p3 = eigen.eigenpoly(n, 3)
        assert p3.exact[3] == Fraction(n + 3, n)
        assert p3.exact[1] == Fraction(-3, n)
        assert eigen.annihilation_defect(p3) == 0
    xs = np.linspace(-1, 1, 101)
    legendre3 = 0.5 * (5 * xs**3 - 3 * xs)
    assert np.max(np.abs(eigen.eigenpoly(2, 3).eval_x(xs) - legendre3)) < 1e-14


def test_displayed_alternative_k3_fails_annihilation():
    # the (n+4)/(n-2), 6/(n-2) coefficient pattern is not in the kernel of
    # the monomial rule for any n > 2; the recursion version is
    n = 4
    alt = [Fraction(0), Fraction(-6, n - 2), Fraction(0), Fraction(n + 4, n - 2)]
    image = eigen.apply_H(eigen.beta(n, 3), alt, n=n)
    assert max(abs(c) for c in image) > 0


def test_annihilation_is_exact_across_grid():
    for n in range(2, 11):
        for k in range(1, 21):
            poly = eigen.eigenpoly(n, k)
            assert eigen.annihilation_defect(poly) == 0
            floats = eigen.apply_H(float(poly.beta), list(poly.coeffs), n=n)
            assert max(abs(c) for c in floats) <= 1e-9 * max(abs(poly.coeffs))


def test_normalization_and_endpoint_values():
    for n in (2, 4):
        for k in range(1, 13):
            poly = eigen.eigenpoly(n, k)
            assert poly.eval_x(1.0) == pytest.approx(1.0, abs=1e-12)
            tag, w_pi = eigen.endpoint_parity(poly)
            assert w_pi == (-1.0) ** k
            assert tag == ("symmetric" if k % 2 == 0 else "antisymmetric")


def test_zero_count_k1_is_midpoint():
    count, roots = eigen.zero_count(eigen.eigenpoly(5, 1))
    assert count == 1
    assert roots[0] == pytest.approx(math.pi / 2, abs=1e-14)


def test_zero_count_k2_analytic_roots():
    for n in (2, 3, 6):
        count, roots = eigen.zero_count(eigen.eigenpoly(n, 2))
        assert count == 2
        expected = sorted([math.acos(1 / math.sqrt(n + 1)), math.acos(-1 / math.sqrt(n + 1))])
        assert roots == pytest.approx(expected, abs=1e-12)


def test_zero_count_k4_against_grid_scan():
    poly = eigen.eigenpoly(2, 4)
    count, roots = eigen.zero_count(poly)
    assert count == 4
    # brute-force sign-change scan as the independent root oracle
    rs = np.linspace(1e-6, math.pi - 1e-6, 100_000)
    vals = poly(rs)
    flips = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    assert len(flips) == 4
    for r0, idx in zip(roots, flips):
        assert rs[idx] <= r0 <= rs[idx + 1]
    assert np.allclose(sorted(math.pi - roots), roots, atol=1e-10)


def test_zero_counts_match_mode_index():
    for n in (2, 3):
        for k in range(1, 13):
            count, roots = eigen.zero_count(eigen.eigenpoly(n, k))
            assert count == k
            assert np.all(np.diff(roots) > 0)


def test_sturm_interlacing_examples():
    rep = eigen.sturm_interlace(2, 1, 2)
    assert rep.ok and rep.gaps_checked == 0  # single root of cos has no gaps
    # the two roots of mode 2 straddle pi/2, the root of mode 1
    _, r2 = eigen.zero_count(eigen.eigenpoly(2, 2))
    assert r2[0] < math.pi / 2 < r2[1]
    rep = eigen.sturm_interlace(2, 2, 3)
    assert rep.ok and rep.gaps_checked == 1
    with pytest.raises(InvalidParameterError):
        eigen.sturm_interlace(2, 2, 2)


def test_interlacing_panel():
    for n in (2, 3):
        for m in range(1, 8):
            for l in range(m + 1, 9):
                assert eigen.sturm_interlace(n, m, l).ok


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 9), k=st.integers(1, 16))
def test_eigenpoly_properties(n, k):
    poly = eigen.eigenpoly(n, k)
    # parity support
    for j, c in enumerate(poly.exact):
        if (j - k) % 2 != 0:
            assert c == 0
    assert sum(poly.exact) == 1
    assert eigen.annihilation_defect(poly) == 0
