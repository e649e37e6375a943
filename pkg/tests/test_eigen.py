"""Ricci eigenvalue analysis and the minimum-eigenvalue cubic."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import riccilab as rl
from riccilab.eigen import (
    cubic_fuzz,
    eigen_table,
    min_eigenvalue_cubic,
    min_eigenvalue_cubic_factored,
    ricci_eigen,
    triviality_check,
)


def test_sphere_eigenvalues_and_ratio():
    for n in (2, 3, 4):
        s = rl.catalog_get(f"sphere_{n}")
        e = ricci_eigen(s, s.sample_points(1, seed=1)[0])
        np.testing.assert_allclose(e.eigenvalues, n - 1.0, atol=1e-10)
        assert e.ratio == pytest.approx(1.0 / n, abs=1e-10)


def test_gaussian_eigenvalues_zero():
    s = rl.catalog_get("gaussian_3")
    e = ricci_eigen(s, [0.5, -1.0, 2.0])
    np.testing.assert_allclose(e.eigenvalues, 0.0, atol=1e-12)
    assert e.ratio is None


def test_cigar_origin_equal_eigenvalues():
    # n=2 forces Ric = (R/2) g, so both eigenvalues are R/2 = 2 at the origin
    s = rl.catalog_get("cigar")
    e = ricci_eigen(s, [0.0, 0.0])
    np.testing.assert_allclose(e.eigenvalues, [2.0, 2.0], atol=1e-10)


def test_trace_consistency_over_samples():
    for name in ("sphere_3", "cigar", "hyperbolic_3"):
        s = rl.catalog_get(name)
        for e in eigen_table(s, s.sample_points(50, seed=2)):
            assert e.eigenvalues.sum() == pytest.approx(e.scalar, abs=1e-8)
            assert (e.eigenvalues ** 2).sum() == pytest.approx(e.ric_norm_sq, abs=1e-8)


# ---------------------------------------------------------------------------
# the cubic: frozen direct-substitution examples (computed by hand)


def test_cubic_equality_case_degenerate():
    # eigenvalues (0, 1, 1): R = 2, S = 2, lam = 0 -> 8 - 8 = 0
    assert min_eigenvalue_cubic(3, 0.0, 2.0, 2.0) == pytest.approx(0.0, abs=1e-14)


def test_cubic_equality_case_round():
    # eigenvalues (1, 1, 1): 27 - 27 + 12 - 18 + 6 = 0
    assert min_eigenvalue_cubic(3, 1.0, 3.0, 3.0) == pytest.approx(0.0, abs=1e-14)


def test_cubic_generic_value_both_forms():
    # eigenvalues (1, 2, 3): R = 6, S = 14 -> -8 in both forms
    assert min_eigenvalue_cubic(3, 1.0, 6.0, 14.0) == pytest.approx(-8.0, abs=1e-12)
    assert min_eigenvalue_cubic_factored(3, 1.0, 5.0, 13.0) == pytest.approx(-8.0, abs=1e-12)


def test_cubic_fuzz_agreement():
    out = cubic_fuzz(10000, seed=0)
    assert out["max_relative_deviation"] <= 1e-10


def test_cubic_fuzz_nonpositivity():
    out = cubic_fuzz(10000, seed=1, nonnegative=True)
    assert out["max_factored"] <= 1e-12


@settings(max_examples=300, deadline=None)
@given(st.integers(3, 5),
       st.lists(st.floats(-10.0, 10.0), min_size=3, max_size=5))
def test_cubic_forms_agree_property(n, eigs):
    eigs = (eigs + [0.0] * n)[:n]
    lam = min(eigs)
    r = sum(eigs)
    s = sum(e * e for e in eigs)
    poly = min_eigenvalue_cubic(n, lam, r, s)
    fact = min_eigenvalue_cubic_factored(n, lam, r - lam, s - lam ** 2)
    assert abs(poly - fact) <= 1e-9 * (1.0 + abs(poly))


def test_cubic_rejects_low_dimension():
    with pytest.raises(ValueError):
        min_eigenvalue_cubic(2, 0.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# triviality


def test_triviality_einstein_instances():
    for name in ("sphere_3", "hyperbolic_3", "sphere_4"):
        s = rl.catalog_get(name)
        out = triviality_check(s, s.sample_points(60, seed=3))
        assert out["einstein"]
        assert out["max_tracefree"] <= 1e-8


def test_triviality_cigar_uses_scalar_fallback():
    # the 2-D trace-free part vanishes identically; the meaningful signal is
    # that R is nonconstant
    s = rl.catalog_get("cigar")
    out = triviality_check(s, s.sample_points(60, seed=3))
    assert out["max_tracefree"] <= 1e-8
    assert not out["einstein"]
    assert out["scalar_spread"] > 0.1


def test_triviality_flat_torus():
    s = rl.catalog_get("flat_torus_2")
    out = triviality_check(s, s.sample_points(40, seed=4))
    assert out["einstein"]
