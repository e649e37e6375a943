"""Identity suite: spec'd examples, generic fuzz, and admissibility rules."""

import numpy as np
import pytest

import riccilab as rl
from riccilab.catalog import (
    SolitonInstance,
    as_one_form,
    random_chart_metric,
    random_potential,
    true_solitons,
)
from riccilab.errors import DimensionMismatch
from riccilab.identities import (
    ALL_TAGS,
    InstanceGeometry,
    RunConfig,
    admissible_tags,
    check_identity,
    first_integral_values,
    run_suite,
    _res_i5,
    _res_i9,
    _res_i10,
    _res_i12,
    _res_i13,
)


def _points(s, n=200, seed=0):
    return s.sample_points(n, seed=seed)


# ---------------------------------------------------------------------------
# example-level checks


def test_i1_sphere_3_both_sides_equal_mu():
    s = rl.catalog_get("sphere_3")
    rep = check_identity("I1", s, _points(s))
    assert rep.max_residual <= 1e-8
    # both sides equal mu = 6: f = 0, so R itself must be 6
    b = rl.curvature(s.metric, _points(s, 1)[0])
    assert b.scalar == pytest.approx(6.0, abs=1e-10)


def test_i5_gaussian_all_terms_vanish():
    s = rl.catalog_get("gaussian_2")
    geo = InstanceGeometry(s, _points(s))
    assert _res_i5(geo).max() <= 1e-9


def test_i4_cigar_first_integral_is_four():
    s = rl.catalog_get("cigar")
    geo = InstanceGeometry(s, _points(s))
    vals = first_integral_values(geo)
    assert np.std(vals) <= 1e-6
    assert np.mean(vals) == pytest.approx(4.0, abs=1e-4)     # CAS oracle value


def test_i13_reduces_to_i5_when_form_is_zero():
    s = rl.catalog_get("sphere_2")
    rep = check_identity("I13", s, _points(s))
    assert rep.max_residual <= 1e-8


def test_i13_gradient_one_form_consistency():
    s = rl.catalog_get("cigar")
    pts = _points(s, 100)
    geo_g = InstanceGeometry(s, pts)
    geo_w = InstanceGeometry(as_one_form(s), pts)
    assert np.abs(_res_i13(geo_g) - _res_i13(geo_w)).max() <= 1e-9


def test_non_example_fails_i1():
    s = rl.catalog_get("sphere_bad_f")
    rep = check_identity("I1", s, _points(s))
    assert not rep.passed
    assert rep.max_residual > 0.1


# ---------------------------------------------------------------------------
# admissibility


def test_admissibility_sphere_2():
    tags = admissible_tags(rl.catalog_get("sphere_2"))
    assert "I11" in tags and "I8" not in tags and "I7" not in tags and "I14" not in tags


def test_admissibility_sphere_3_count():
    assert len(admissible_tags(rl.catalog_get("sphere_3"))) == 13


def test_one_form_instance_gets_reduced_tag_set():
    tags = admissible_tags(as_one_form(rl.catalog_get("sphere_3")))
    assert "I13" in tags and "I10" in tags
    assert "I1" not in tags and "I12" not in tags


def test_inadmissible_raises():
    s = rl.catalog_get("sphere_2")
    with pytest.raises(DimensionMismatch):
        check_identity("I8", s, _points(s, 10))


# ---------------------------------------------------------------------------
# full-suite gates


@pytest.mark.parametrize("s", true_solitons(), ids=lambda s: s.name)
def test_suite_passes_on_catalog(s):
    reports = run_suite(s, RunConfig(samples=200, seed=0))
    for rep in reports:
        assert rep.passed, f"{rep.identity}: {rep.max_residual} {rep.note}"
        assert rep.max_residual <= 1e-5


def test_suite_deterministic():
    s = rl.catalog_get("cigar")
    r1 = run_suite(s, RunConfig(samples=64, seed=3))
    r2 = run_suite(s, RunConfig(samples=64, seed=3))
    assert [(a.identity, a.max_residual) for a in r1] == \
           [(b.identity, b.max_residual) for b in r2]


def test_suite_aggregates_errors_without_aborting():
    m = rl.get_metric("flat_torus_2")

    def broken(xs):
        raise RuntimeError("potential eval exploded")

    s = SolitonInstance(name="broken", metric=m, mu=0.0, potential=broken,
                        trivial=False, is_example=False)
    reports = run_suite(s, RunConfig(samples=16, seed=0))
    assert any(r.note for r in reports)
    assert all(r.identity in ALL_TAGS for r in reports)
    # curvature-only identities still pass
    passing = {r.identity for r in reports if r.passed}
    assert {"I9", "I10", "I14"} - passing == {"I14"} or {"I9", "I10"} <= passing


@pytest.mark.parametrize("s", true_solitons(), ids=lambda s: s.name)
def test_fd_mode_meets_relaxed_tolerance(s):
    if s.name == "sphere_4":
        # n=4 hyperspherical corners amplify the all-FD noise floor past 1e-4
        # (three sin^2 factors near 0.2 give ~1e4 frame amplification); the
        # dual-number lane is the contract there
        pytest.xfail("all-FD noise floor exceeds 1e-4 at sphere_4 chart corners")
    reports = run_suite(s, RunConfig(samples=100, seed=0, mode="fd"))
    for rep in reports:
        assert rep.passed, f"{rep.identity}: {rep.max_residual}"
        assert rep.max_residual <= 1e-4


# ---------------------------------------------------------------------------
# generic fuzz invariants (identities that hold for arbitrary smooth data)


@pytest.mark.parametrize("seed", range(20))
def test_i12_arbitrary_triples(seed):
    n = 2 + seed % 3
    m = random_chart_metric(n, seed=seed)
    s = SolitonInstance(name=f"fuzz{seed}", metric=m, mu=float(seed % 5) - 2.0,
                        potential=random_potential(n, seed + 500),
                        trivial=False, is_example=False)
    geo = InstanceGeometry(s, m.sample_points(40, seed=seed))
    assert _res_i12(geo).max() <= 1e-5


@pytest.mark.parametrize("seed", range(6))
def test_i10_i9_arbitrary_metrics(seed):
    n = 2 + seed % 3
    m = random_chart_metric(n, seed=seed + 50)
    s = SolitonInstance(name=f"fm{seed}", metric=m, mu=0.0,
                        potential=lambda xs: 0.0, trivial=True, is_example=False)
    geo = InstanceGeometry(s, m.sample_points(40, seed=seed))
    assert _res_i10(geo, count=5, seed=seed).max() <= 1e-5
    assert _res_i9(geo).max() <= 1e-5


def test_weyl_contraction_vs_riemann_contraction():
    # the trace-split consequence pinning the Weyl-term coefficient at 2:
    # R_ikjl Ric^kl = W_ikjl Ric^kl - (R^2 g - n R Ric + 2(n-1) RicSq
    #                                  - (n-1) S g) / ((n-1)(n-2))
    from riccilab.geometry import curvature_arrays
    n = 4
    m = random_chart_metric(n, seed=77)
    arr = curvature_arrays(m, m.sample_points(30, seed=8))
    ric_up = np.einsum("bka,bac,bcs->bks", arr.ginv, arr.ricci, arr.ginv)
    lhs = np.einsum("bikjs,bks->bij", arr.riemann, ric_up)
    wterm = np.einsum("bikjs,bks->bij", arr.weyl, ric_up)
    blocks = (arr.scalar[:, None, None] ** 2 * arr.g
              - n * arr.scalar[:, None, None] * arr.ricci
              + 2.0 * (n - 1) * arr.ric_sq
              - (n - 1) * arr.ric_norm_sq[:, None, None] * arr.g)
    rhs = wterm - blocks / ((n - 1) * (n - 2))
    assert np.abs(lhs - rhs).max() <= 1e-9


def test_worst_point_is_reported_inside_domain():
    s = rl.catalog_get("cigar")
    rep = check_identity("I5", s, _points(s, 100))
    assert s.metric.domain.contains(rep.worst_point[None, :])[0]
