"""Jet arithmetic against closed-form derivatives."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riccilab import jets


def _value(expr, x, y):
    xs = jets.seed_variables(np.array([[x, y]]))
    return expr(xs[0], xs[1])


def test_polynomial_gradient_hessian():
    j = _value(lambda a, b: 3.0 * a * a * b + b ** 3 - 2.0 * a + 5.0, 1.5, -0.5)
    x, y = 1.5, -0.5
    assert j.val[0] == pytest.approx(3 * x * x * y + y ** 3 - 2 * x + 5)
    assert j.grad[0] == pytest.approx([6 * x * y - 2, 3 * x * x + 3 * y * y])
    np.testing.assert_allclose(j.hess[0], [[6 * y, 6 * x], [6 * x, 6 * y]], atol=1e-13)


def test_quotient_and_transcendentals():
    x, y = 0.7, 0.3
    j = _value(lambda a, b: jets.sin(a * b) / (1.0 + a * a), x, y)
    f = np.sin(x * y) / (1 + x * x)
    fx = (y * np.cos(x * y) * (1 + x * x) - 2 * x * np.sin(x * y)) / (1 + x * x) ** 2
    assert j.val[0] == pytest.approx(f, abs=1e-14)
    assert j.grad[0, 0] == pytest.approx(fx, abs=1e-12)


def test_log_exp_sqrt_chain():
    x, y = 1.2, 0.4
    j = _value(lambda a, b: jets.log(1.0 + a * a + b * b), x, y)
    r2 = x * x + y * y
    assert j.grad[0] == pytest.approx([2 * x / (1 + r2), 2 * y / (1 + r2)], abs=1e-14)
    hxx = (2 * (1 + r2) - 4 * x * x) / (1 + r2) ** 2
    assert j.hess[0, 0, 0] == pytest.approx(hxx, abs=1e-13)

    j = _value(lambda a, b: jets.exp(a) * jets.sqrt(1.0 + b * b), x, y)
    assert j.grad[0, 0] == pytest.approx(np.exp(x) * np.sqrt(1 + y * y), abs=1e-13)
    assert j.grad[0, 1] == pytest.approx(np.exp(x) * y / np.sqrt(1 + y * y), abs=1e-13)


def test_power_forms():
    x = 0.9
    j = _value(lambda a, b: a ** 3 + a ** 0.5 + 2.0 ** a, x, 0.0)
    assert j.grad[0, 0] == pytest.approx(3 * x * x + 0.5 / np.sqrt(x) + np.log(2) * 2 ** x,
                                         abs=1e-12)


def test_batched_evaluation_matches_scalar():
    pts = np.array([[0.3, 1.1], [0.8, -0.2], [1.4, 0.6]])
    xs = jets.seed_variables(pts)
    j = jets.sin(xs[0]) * jets.cos(xs[1]) + xs[0] / (1.0 + xs[1] ** 2)
    for i, (x, y) in enumerate(pts):
        xi = jets.seed_variables(np.array([[x, y]]))
        ji = jets.sin(xi[0]) * jets.cos(xi[1]) + xi[0] / (1.0 + xi[1] ** 2)
        assert j.val[i] == pytest.approx(ji.val[0])
        np.testing.assert_allclose(j.grad[i], ji.grad[0], atol=1e-15)
        np.testing.assert_allclose(j.hess[i], ji.hess[0], atol=1e-15)


def test_dispatch_on_plain_arrays():
    x = np.array([0.1, 0.4])
    np.testing.assert_allclose(jets.sin(x), np.sin(x))
    np.testing.assert_allclose(jets.exp(0.3), np.exp(0.3))


@settings(max_examples=200, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0),
       st.floats(-3.0, 3.0), st.floats(-3.0, 3.0))
def test_product_rule_property(x, y, a, b):
    xs = jets.seed_variables(np.array([[x, y]]))
    u = a * xs[0] + jets.sin(xs[1])
    v = jets.cos(xs[0]) + b * xs[1] * xs[1]
    prod = u * v
    np.testing.assert_allclose(
        prod.grad[0],
        u.val[0] * v.grad[0] + v.val[0] * u.grad[0],
        atol=1e-12, rtol=1e-12)
    expect_hess = (u.val[0] * v.hess[0] + v.val[0] * u.hess[0]
                   + np.outer(u.grad[0], v.grad[0]) + np.outer(v.grad[0], u.grad[0]))
    np.testing.assert_allclose(prod.hess[0], expect_hess, atol=1e-12, rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.2, 2.5))
def test_reciprocal_against_power(x):
    xs = jets.seed_variables(np.array([[x, 0.0]]))
    inv = 1.0 / xs[0]
    powed = xs[0] ** (-1.0)
    assert inv.val[0] == pytest.approx(powed.val[0])
    np.testing.assert_allclose(inv.grad[0], powed.grad[0], rtol=1e-12)
    np.testing.assert_allclose(inv.hess[0], powed.hess[0], rtol=1e-11)
