"""Osgood-class comparison functions and the sqrt-nonlinearity counterexample.

A continuous, nonnegative, concave comparison function phi on [0, delta)
with phi(0) = 0 is "Osgood" when int_0^delta dt/phi(t) diverges; that class
is exactly where the vanishing-or-positive dichotomy for Delta u = phi(u, .)
survives.  The certification here is a sampled sufficient test (phi(t) <= c t
near 0 for a stable c), deliberately conservative: a divergent integral with
superlinear phi near 0 (e.g. t log(1/t)) is declined rather than guessed.

The demo integrates the comparison ODE h' = C(phi(h) + h) from h(0) = 0 and
the second-order equation f'' = 12 sqrt(f), whose initial data (0, 0) admits
both the zero branch and f = x^4 — the loss of uniqueness that the Osgood
condition rules out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import FlagsUnverified


@dataclass
class OsgoodSpec:
    """A candidate comparison function with sampled flag verification."""

    phi: Callable[[float], float]
    delta: float
    concave_flag: bool = True
    nonneg_flag: bool = True
    osgood: bool | None = None     # set by the checker

    def sample_grid(self, count: int = 400) -> np.ndarray:
        return np.geomspace(1e-13, self.delta * (1.0 - 1e-9), count)


def _verify_flags(spec: OsgoodSpec) -> None:
    ts = spec.sample_grid()
    vals = np.array([spec.phi(float(t)) for t in ts])
    if abs(spec.phi(0.0)) > 1e-12:
        raise FlagsUnverified("phi(0) != 0")
    if spec.nonneg_flag and vals.min() < -1e-12:
        raise FlagsUnverified("phi takes negative values on the sample")
    if spec.concave_flag:
        # midpoint test on a uniform grid
        us = np.linspace(0.0, spec.delta * (1.0 - 1e-9), 101)
        pv = np.array([spec.phi(float(t)) for t in us])
        mid = np.array([spec.phi(float(0.5 * (us[i] + us[j])))
                        for i in range(0, 101, 10) for j in range(0, 101, 10)])
        pairs = [(i, j) for i in range(0, 101, 10) for j in range(0, 101, 10)]
        chord = np.array([0.5 * (pv[i] + pv[j]) for i, j in pairs])
        if np.min(mid - chord) < -1e-9 * (1.0 + np.abs(pv).max()):
            raise FlagsUnverified("midpoint concavity test failed")


def osgood_certify(spec: OsgoodSpec) -> bool:
    """Sampled sufficient divergence test: phi(t)/t stays bounded as t -> 0.

    Concavity with phi(0) = 0 makes phi(t)/t nonincreasing, so the test
    reduces to comparing the ratio on the smallest decades against a
    reference scale; growth by more than a fixed factor marks the integral
    int dt/phi as (possibly) convergent and certification is refused.
    """
    _verify_flags(spec)
    ts = spec.sample_grid()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.array([spec.phi(float(t)) / t for t in ts])
    ratio = ratio[np.isfinite(ratio)]
    if ratio.size == 0 or np.all(ratio <= 1e-300):
        spec.osgood = True          # phi == 0: integral diverges trivially
        return True
    k = max(4, ratio.size // 8)
    c_small = float(np.max(ratio[:k]))          # smallest t block
    c_large = float(np.max(ratio[-k:]))         # near-delta block
    certified = bool(c_small <= 4.0 * max(c_large, 1e-300))
    spec.osgood = certified
    return certified


@dataclass(frozen=True)
class CounterexampleDemo:
    """Outcomes of the uniqueness demo (see module docstring)."""

    comparison_final: float        # h(1) for the Osgood comparison ODE from 0
    zero_branch_final: float       # f(1) integrating f''=12 sqrt f from (0,0)
    quartic_branch_final: float    # f(1) from the perturbed start on f = x^4
    perturbation: float
    escape_final: float            # h(1) for the non-Osgood RHS from a seed ~0

    def to_dict(self) -> dict:
        return {
            "comparison_final": self.comparison_final,
            "zero_branch_final": self.zero_branch_final,
            "quartic_branch_final": self.quartic_branch_final,
            "perturbation": self.perturbation,
            "escape_final": self.escape_final,
        }


def ode_counterexample_demo(eps: float = 1e-2, c: float = 1.0) -> CounterexampleDemo:
    """Exhibit both solution branches of f'' = 12 sqrt(f) through (0, 0).

    The zero branch integrates the ODE from exactly (0,0); the quartic branch
    starts on the f = x^4 trajectory at x = eps (f = eps^4, f' = 4 eps^3) and
    reaches f(1) = 1 up to integrator error.  For contrast the first-order
    comparison ODE h' = c (K h + h) stays identically zero from h(0) = 0
    (Osgood/Lipschitz), while h' = c (12 sqrt(h) + h) escapes from any seed.
    """
    def quartic_rhs(t, y):
        return [y[1], 12.0 * np.sqrt(max(y[0], 0.0))]

    zero = solve_ivp(quartic_rhs, (0.0, 1.0), [0.0, 0.0],
                     method="RK45", rtol=1e-10, atol=1e-14)
    pert = solve_ivp(quartic_rhs, (eps, 1.0), [eps ** 4, 4.0 * eps ** 3],
                     method="RK45", rtol=1e-12, atol=1e-14)

    lipschitz = solve_ivp(lambda t, y: [c * (1.0 * y[0] + y[0])], (0.0, 1.0), [0.0],
                          method="RK45", rtol=1e-10, atol=1e-14)
    escape = solve_ivp(lambda t, y: [c * (12.0 * np.sqrt(max(y[0], 0.0)) + y[0])],
                       (0.0, 1.0), [1e-12], method="RK45", rtol=1e-10, atol=1e-14)

    return CounterexampleDemo(
        comparison_final=float(lipschitz.y[0, -1]),
        zero_branch_final=float(zero.y[0, -1]),
        quartic_branch_final=float(pert.y[0, -1]),
        perturbation=eps,
        escape_final=float(escape.y[0, -1]),
    )
