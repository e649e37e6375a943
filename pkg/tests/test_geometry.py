"""Curvature engine: examples with closed-form oracles plus convention locks."""

import numpy as np
import pytest

import riccilab as rl
from riccilab import jets
from riccilab.catalog import random_chart_metric
from riccilab.errors import NonPositiveDefinite, OutOfDomain
from riccilab.geometry import (
    Box,
    ChartMetric,
    TensorValue,
    curvature_arrays,
    decomposition_reassembly,
    fd_first_multi,
    frame_max_abs,
    metric_jets,
    metric_values,
)
from riccilab.identities import InstanceGeometry, interchange_residual, random_one_forms

SQ3 = np.sqrt(3.0)


# ---------------------------------------------------------------------------
# christoffel


def test_flat_christoffels_vanish():
    m = rl.get_metric("flat_torus_2")
    gam = rl.christoffel(m, [0.3, -0.7])
    assert np.abs(gam.components).max() == 0.0


def test_sphere_christoffel_closed_form():
    # round-sphere oracle: Gamma^theta_phiphi = -sin(theta) cos(theta)
    m = rl.get_metric("sphere_2")
    gam = rl.christoffel(m, [np.pi / 3, 0.0]).components
    assert gam[0, 1, 1] == pytest.approx(-SQ3 / 4, abs=1e-13)      # -sin cos at pi/3
    assert gam[1, 0, 1] == pytest.approx(1.0 / np.tan(np.pi / 3), abs=1e-13)
    np.testing.assert_allclose(gam, np.swapaxes(gam, 1, 2), atol=1e-15)


def test_cigar_christoffels_vanish_at_origin():
    # conformal factor has zero gradient at the origin
    gam = rl.christoffel(rl.get_metric("cigar"), [0.0, 0.0])
    assert np.abs(gam.components).max() < 1e-14


def test_out_of_domain_raises():
    m = rl.get_metric("sphere_2")
    with pytest.raises(OutOfDomain):
        rl.christoffel(m, [0.05, 1.0])


def test_non_positive_definite_raises():
    bad = ChartMetric("bad", 2, Box([-1, -1], [1, 1]),
                      lambda xs: [[xs[0], 0.0], [0.0, 1.0]], evaluable_outside=True)
    with pytest.raises(NonPositiveDefinite):
        rl.christoffel(bad, [-0.5, 0.0])


# ---------------------------------------------------------------------------
# curvature bundle


@pytest.mark.parametrize("n", [2, 3, 4])
def test_unit_sphere_constant_curvature(n):
    m = rl.get_metric(f"sphere_{n}")
    for p in m.sample_points(10, seed=3):
        b = rl.curvature(m, p)
        assert b.scalar == pytest.approx(n * (n - 1), abs=1e-10)
        np.testing.assert_allclose(b.ricci.components,
                                   (n - 1) * b.metric.components, atol=1e-10)


def test_cigar_scalar_curvature():
    m = rl.get_metric("cigar")
    assert rl.curvature(m, [1.0, 0.0]).scalar == pytest.approx(2.0, abs=1e-12)
    assert rl.curvature(m, [0.0, 0.0]).scalar == pytest.approx(4.0, abs=1e-12)


def test_weyl_vanishes_low_dimensions():
    for name in ("sphere_2", "sphere_3", "hyperbolic_3", "cigar"):
        m = rl.get_metric(name)
        for p in m.sample_points(5, seed=1):
            b = rl.curvature(m, p)
            assert np.abs(b.weyl.components).max() <= 1e-8


def test_contraction_lock():
    # Ric_ik = g^{jl} R_ijkl, asserted as a self-test on a generic metric
    m = random_chart_metric(3, seed=5)
    arr = curvature_arrays(m, m.sample_points(20, seed=2))
    ric = np.einsum("bjl,bijkl->bik", arr.ginv, arr.riemann)
    assert np.abs(ric - arr.ricci).max() < 1e-9


def test_riemann_algebraic_symmetries():
    m = random_chart_metric(4, seed=11)
    arr = curvature_arrays(m, m.sample_points(10, seed=4))
    r = arr.riemann
    assert np.abs(r + np.einsum("bjikl->bijkl", r)).max() < 1e-10
    assert np.abs(r + np.einsum("bijlk->bijkl", r)).max() < 1e-10
    assert np.abs(r - np.einsum("bklij->bijkl", r)).max() < 1e-10


@pytest.mark.parametrize("seed,n", [(0, 2), (1, 3), (2, 4)])
def test_decomposition_reassembles_riemann(seed, n):
    m = random_chart_metric(n, seed=seed)
    arr = curvature_arrays(m, m.sample_points(25, seed=seed))
    gap = frame_max_abs(arr.g, decomposition_reassembly(arr) - arr.riemann, ("d",) * 4)
    assert gap.max() <= 1e-9


def test_weyl_trace_free_all_pairs():
    m = random_chart_metric(4, seed=21)
    arr = curvature_arrays(m, m.sample_points(15, seed=6))
    for axes in [(1, 3), (2, 4), (1, 2), (3, 4), (1, 4), (2, 3)]:
        sub = "bijkl"
        a, b = axes
        out = sub.replace(sub[a], "x").replace(sub[b], "y")
        tr = np.einsum(f"bxy,{out}->" + "".join(c for c in sub if c not in (sub[a], sub[b])),
                       arr.ginv, arr.weyl)
        assert np.abs(tr).max() <= 1e-8


def test_surface_einstein_identity():
    # n=2: Ric = (R/2) g identically
    for name in ("sphere_2", "cigar", "ellipsoid"):
        m = rl.get_metric(name)
        arr = curvature_arrays(m, m.sample_points(30, seed=7))
        gap = arr.ricci - 0.5 * arr.scalar[:, None, None] * arr.g
        assert frame_max_abs(arr.g, gap, ("d", "d")).max() <= 1e-8


# ---------------------------------------------------------------------------
# convention lock (interchange formula) and differentiation cross-checks


@pytest.mark.parametrize("name", ["sphere_2", "sphere_3", "hyperbolic_2",
                                  "cigar", "flat_torus_2", "ellipsoid"])
def test_interchange_convention_lock(name):
    m = rl.get_metric(name)
    s = rl.catalog_get(name) if name in rl.catalog_names() else None
    pts = m.sample_points(25, seed=9)
    if s is None:
        from riccilab.catalog import SolitonInstance
        s = SolitonInstance(name=name, metric=m, mu=0.0,
                            potential=lambda xs: 0.0, trivial=True, is_example=False)
    geo = InstanceGeometry(s, pts)
    for w in random_one_forms(m.dim, 20, seed=13):
        assert interchange_residual(geo, w).max() <= 1e-6


def test_dual_vs_finite_difference_first_derivatives():
    for name in ("sphere_2", "cigar", "hyperbolic_3"):
        m = rl.get_metric(name)
        pts = m.sample_points(15, seed=10)
        _, dg, _ = metric_jets(m, pts)
        (dg_fd,) = fd_first_multi(lambda q: (metric_values(m, q),), pts, 1e-4)
        scale = 1.0 + np.abs(dg).max()
        assert np.abs(dg - dg_fd).max() / scale < 1e-6


def test_fd_metric_mode_matches_dual():
    m = rl.get_metric("cigar")
    pts = m.sample_points(10, seed=3)
    a_dual = curvature_arrays(m, pts, mode="dual")
    a_fd = curvature_arrays(m, pts, mode="fd")
    assert np.abs(a_dual.scalar - a_fd.scalar).max() < 1e-8
    assert np.abs(a_dual.riemann - a_fd.riemann).max() < 1e-8


# ---------------------------------------------------------------------------
# covariant derivative operations


def test_metric_compatibility():
    for name in ("sphere_2", "cigar", "hyperbolic_3"):
        m = rl.get_metric(name)
        for p in m.sample_points(5, seed=12):
            field = lambda q: TensorValue(metric_values(m, q[None, :])[0], ("d", "d"))
            nab = rl.covariant_derivative(m, field, p)
            assert np.abs(nab.components).max() <= 1e-9


def test_leibniz_on_parallel_tensor():
    # nabla(f g) = (nabla f) x g for scalar f
    m = rl.get_metric("sphere_2")
    f = lambda q: np.sin(q[0]) * np.cos(q[1])
    p = np.array([1.1, 0.8])
    field = lambda q: TensorValue(f(q) * metric_values(m, q[None, :])[0], ("d", "d"))
    nab = rl.covariant_derivative(m, field, p).components
    df = rl.covariant_derivative(m, lambda q: np.array(f(q)), p).components
    g = metric_values(m, p[None, :])[0]
    expect = df[:, None, None] * g[None, :, :]
    assert np.abs(nab - expect).max() <= 1e-9


def test_gaussian_hessian_exact():
    s = rl.catalog_get("gaussian_2")
    h = rl.hessian(s.metric, s.potential, [1.7, -2.4]).components
    np.testing.assert_allclose(h, 0.5 * np.eye(2), atol=1e-14)


def test_constant_laplacian_zero():
    for name in ("sphere_3", "cigar"):
        m = rl.get_metric(name)
        p = m.sample_points(1, seed=1)[0]
        assert rl.laplacian_scalar(m, lambda xs: 4.2, p) == pytest.approx(0.0, abs=1e-14)


def test_schur_via_divergence():
    # 2 div Ric = dR on n > 2 charts
    m = rl.get_metric("sphere_3")
    geo = InstanceGeometry(rl.catalog_get("sphere_3"), m.sample_points(20, seed=14))
    gap = frame_max_abs(geo.arr.g, 2.0 * geo.div_ric - geo.dscal, ("d",))
    assert gap.max() <= 1e-6


def test_laplacian_tensor2_on_metric_field():
    # rough Laplacian of the (parallel) metric tensor vanishes
    m = rl.get_metric("sphere_2")
    field = lambda q: TensorValue(metric_values(m, q[None, :])[0], ("d", "d"))
    lap = rl.laplacian_tensor2(m, field, [1.2, 0.5])
    assert np.abs(lap.components).max() <= 1e-7


def test_tensor_value_symmetry_enforced():
    with pytest.raises(ValueError):
        TensorValue(np.array([[0.0, 1.0], [0.0, 0.0]]), ("d", "d"),
                    symmetric_pairs=((0, 1),))


def test_out_of_domain_with_stencil():
    # hard-bounded chart (no wider evaluation region): stencils must fit
    m = ChartMetric("hard", 2, Box([0.0, 0.0], [1.0, 1.0]),
                    lambda xs: [[1.0 + xs[0] * xs[0], 0.0], [0.0, 1.0 + xs[1] * xs[1]]])
    edge = np.array([1e-9, 0.5])              # inside, but a stencil pokes out
    with pytest.raises(OutOfDomain):
        rl.divergence_ric(m, edge)
    rl.divergence_ric(m, [0.5, 0.5])          # interior point is fine
