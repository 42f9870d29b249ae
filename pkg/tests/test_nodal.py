import math

import numpy as np
import pytest

from duosphere import nodal
from duosphere.errors import BracketError, CatalogIncompleteError
from duosphere.params import derive_constants
from duosphere.shooter import IntegratorConfig

# alpha values for the n=2, delta=1 critical case, pinned beforehand by a
# dense scan plus bisection on two independent integration routes (adaptive
# and fixed-step); frozen here as regression oracles
YAMABE2_ALPHAS = {
    1: 3.8088888871,
    2: 7.8678947396,
    3: 12.8629568696,
    4: 18.6351786874,
    5: 25.0895803873,
}


def test_scan_first_band_is_threshold_band(yamabe2, integ):
    scan = nodal.scan_bands(yamabe2, integ, alpha_max=6.0, initial_resolution=40)
    thr = derive_constants(yamabe2).alpha_threshold
    first = scan.bands[0]
    assert first.count == 0
    assert first.hi > thr  # the zero-count band strictly contains (1, sqrt 2]
    assert not scan.incomplete


def test_scan_band_counts_step_by_one(yamabe2, integ):
    scan = nodal.scan_bands(yamabe2, integ, alpha_max=15.0, initial_resolution=40)
    counts = [b.count for b in scan.bands]
    assert counts == sorted(counts)
    assert all(b - a == 1 for a, b in zip(counts, counts[1:]))
    for (lo, hi) in scan.boundaries:
        assert hi - lo <= nodal.BOUNDARY_REFINE_TOL * max(1.0, hi)


def test_scan_against_dense_oracle(yamabe2, integ):
    # a denser grid scan over a narrow window sees the same boundary
    scan = nodal.scan_bands(yamabe2, integ, alpha_max=5.0, initial_resolution=24)
    (lo, hi) = scan.boundaries[0]
    from duosphere.shooter import integrate_half
    dense = np.linspace(3.5, 4.2, 120)
    counts = np.array([integrate_half(yamabe2, integ, float(a)).zeros_half for a in dense])
    jump = dense[np.nonzero(np.diff(counts))[0][0]]
    assert jump <= lo <= hi <= jump + (dense[1] - dense[0]) + 1e-12


def test_find_antisymmetric_k1(yamabe2, integ):
    sol = nodal.find_antisymmetric((3.6, 4.0), yamabe2, integ)
    assert sol.k == 1
    assert sol.symmetry == "odd"
    assert sol.alpha == pytest.approx(YAMABE2_ALPHAS[1], abs=1e-7)
    assert sol.residual_mid <= 1e-10
    assert sol.residual_boundary == 0.0
    assert len(sol.zeros) == 1
    assert sol.zeros[0] == pytest.approx(math.pi / 2, abs=1e-12)


def test_find_antisymmetric_bad_bracket(yamabe2, integ):
    with pytest.raises(BracketError):
        nodal.find_antisymmetric((1.05, 1.3), yamabe2, integ)


def test_find_symmetric_k2(yamabe2, integ):
    sol = nodal.find_symmetric((7.0, 9.0), yamabe2, integ)
    assert sol.k == 2
    assert sol.symmetry == "even"
    assert sol.alpha == pytest.approx(YAMABE2_ALPHAS[2], abs=1e-7)
    assert sol.residual_mid <= 1e-10


def test_find_symmetric_rejects_count_jump(yamabe2, integ):
    with pytest.raises(BracketError):
        nodal.find_symmetric((3.0, 5.0), yamabe2, integ)  # spans a_0


def test_build_catalog_empty(yamabe2, integ):
    cat = nodal.build_catalog(yamabe2, integ, 0)
    assert cat.entries == []


def test_build_catalog_incomplete_when_capped(yamabe2, integ):
    with pytest.raises(CatalogIncompleteError) as exc:
        nodal.build_catalog(yamabe2, integ, 3, alpha_max=6.0)
    assert 3 in exc.value.missing
    partial = exc.value.partial
    assert any(e.k == 1 for e in partial.entries)


def test_catalog_entries_certified(yamabe_catalog):
    cat = yamabe_catalog
    assert [e.k for e in cat.entries] == [1, 2, 3, 4, 5]
    for e in cat.entries:
        assert e.alpha == pytest.approx(YAMABE2_ALPHAS[e.k], abs=1e-7)
        assert e.residual_mid <= 1e-10
        assert e.residual_ode_sup <= 1e-6
        assert (e.k % 2 == 1) == (e.symmetry == "odd")
        assert len(e.zeros) == e.k
    alphas = [e.alpha for e in cat.entries]
    assert alphas == sorted(alphas)
    assert all(b > a for a, b in zip(alphas, alphas[1:]))


def test_catalog_stability_under_resolution(yamabe2, integ, yamabe_catalog):
    # doubling the scan resolution reproduces the alphas
    cat2 = nodal.build_catalog(yamabe2, integ, 2, alpha_max=yamabe_catalog.alpha_max,
                               initial_resolution=2 * yamabe_catalog.resolution)
    for e2 in cat2.entries:
        e1 = yamabe_catalog.entry(e2.k)
        assert abs(e1.alpha - e2.alpha) <= 1e-8
