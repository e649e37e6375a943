"""Catalog fixtures: defining-equation residuals and instance metadata."""

import numpy as np
import pytest

import riccilab as rl
from riccilab.catalog import (
    SolitonInstance,
    as_one_form,
    catalog_entries,
    residual_norms,
    true_solitons,
)
from riccilab.errors import UnknownName

EXACT = ("sphere_2", "sphere_3", "sphere_4", "hyperbolic_2", "hyperbolic_3",
         "gaussian_2", "gaussian_3", "flat_torus_2", "flat_torus_3")


@pytest.mark.parametrize("name", EXACT)
def test_exact_instances_have_tiny_residual(name):
    s = rl.catalog_get(name)
    res = residual_norms(s, s.sample_points(200, seed=0))
    assert res.max() <= 1e-8


def test_cigar_residual():
    s = rl.catalog_get("cigar")
    res = residual_norms(s, s.sample_points(200, seed=0))
    assert res.max() <= 1e-6


def test_non_example_residual_large():
    s = rl.catalog_get("sphere_bad_f")
    res = residual_norms(s, s.sample_points(200, seed=0))
    assert res.max() >= 1e-2
    # spot value: residual = Hess cos(theta) = -cos(theta) g, so 1/2 at theta=pi/3
    point = rl.soliton_residual(s, [np.pi / 3, 0.0])
    assert np.abs(point.components).max() > 0.1


def test_sphere_instance_values():
    s = rl.catalog_get("sphere_2")
    assert s.mu == 2.0
    b = rl.curvature(s.metric, [1.0, 2.0])
    assert b.scalar == pytest.approx(2.0, abs=1e-12)


def test_gaussian_einstein_structure():
    s = rl.catalog_get("gaussian_2", mu=1.0)
    h = rl.hessian(s.metric, s.potential, [0.4, 0.9]).components
    np.testing.assert_allclose(h, 0.5 * np.eye(2), atol=1e-14)
    assert rl.curvature(s.metric, [0.4, 0.9]).scalar == 0.0


def test_gaussian_mu_rescaling():
    s = rl.catalog_get("gaussian_3", mu=-2.5)
    assert s.mu == -2.5
    assert s.soliton_class == "expanding"
    res = residual_norms(s, s.sample_points(50, seed=1))
    assert res.max() <= 1e-10


def test_class_tags_follow_mu_sign():
    for s in catalog_entries():
        expect = "contracting" if s.mu > 0 else ("expanding" if s.mu < 0 else "steady")
        assert s.soliton_class == expect


def test_trivial_flags():
    flags = {s.name: s.trivial for s in catalog_entries()}
    assert flags["sphere_3"] and flags["flat_torus_2"] and flags["hyperbolic_2"]
    assert not flags["cigar"] and not flags["gaussian_2"]


def test_unknown_name():
    with pytest.raises(UnknownName):
        rl.catalog_get("bryant")
    with pytest.raises(UnknownName):
        rl.get_metric("nope")


def test_fixed_mu_instances_reject_override():
    with pytest.raises(ValueError):
        rl.catalog_get("sphere_2", mu=3.0)


def test_exactly_one_soliton_datum():
    m = rl.get_metric("flat_torus_2")
    with pytest.raises(ValueError):
        SolitonInstance(name="x", metric=m, mu=0.0)
    with pytest.raises(ValueError):
        SolitonInstance(name="x", metric=m, mu=0.0,
                        potential=lambda xs: 0.0, one_form=lambda xs: [0.0, 0.0])


@pytest.mark.parametrize("name", ["cigar", "gaussian_2", "sphere_3"])
def test_gradient_and_one_form_residuals_agree(name):
    s = rl.catalog_get(name)
    w = as_one_form(s)
    pts = s.sample_points(100, seed=5)
    assert np.abs(residual_norms(s, pts) - residual_norms(w, pts)).max() <= 1e-9


def test_every_true_soliton_registered_passes_residual_gate():
    for s in true_solitons():
        res = residual_norms(s, s.sample_points(200, seed=0))
        assert res.max() <= 1e-6, s.name
