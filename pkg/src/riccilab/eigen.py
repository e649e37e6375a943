"""Pointwise Ricci eigenvalue analysis.

Eigenvalues are taken relative to the metric (generalized symmetric problem
det(Ric - lambda g) = 0), solved by congruence with the metric's Cholesky
factor and a symmetric solver.  The cubic in (lambda_min, R, S) that governs
the minimizing point of lambda_min/R is provided in both its expanded and
factored forms; the two agree identically and the factored form is
nonpositive whenever all eigenvalues are nonnegative with R > 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .catalog import SolitonInstance
from .geometry import curvature_arrays, frame_max_abs


@dataclass(frozen=True)
class EigenPoint:
    """Generalized Ricci eigenvalues at one sample point, ascending."""

    point: np.ndarray
    eigenvalues: np.ndarray
    scalar: float          # R = sum of eigenvalues
    ric_norm_sq: float     # S = sum of squared eigenvalues
    ratio: float | None    # lambda_min / R where R != 0


def ricci_eigen(s: SolitonInstance, p) -> EigenPoint:
    """Eigenvalues of Ric relative to g at a point, ascending order."""
    return eigen_table(s, np.atleast_2d(np.asarray(p, dtype=float)))[0]


def eigen_table(s: SolitonInstance, points: np.ndarray) -> list[EigenPoint]:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    s.metric.check_points(pts)
    arr = curvature_arrays(s.metric, pts)
    out = []
    for i in range(pts.shape[0]):
        vals = scipy.linalg.eigh(arr.ricci[i], arr.g[i], eigvals_only=True)
        r = float(arr.scalar[i])
        ratio = float(vals[0] / r) if abs(r) > 1e-12 else None
        out.append(EigenPoint(pts[i], vals, r, float(arr.ric_norm_sq[i]), ratio))
    return out


def min_eigenvalue_cubic(n: int, lam, r, s):
    """Expanded cubic R^3 - n*lam*R^2 + 2(n-1)*lam^2*R - (n-1)*S*R + (n-1)(n-2)*lam*S."""
    if n < 3:
        raise ValueError("cubic needs n >= 3")
    return (r ** 3 - n * lam * r ** 2 + 2 * (n - 1) * lam ** 2 * r
            - (n - 1) * s * r + (n - 1) * (n - 2) * lam * s)


def min_eigenvalue_cubic_factored(n: int, lam, r_rest, s_rest):
    """Same cubic in terms of the rest-sum R~ and rest-square-sum S~.

    (n-2) lam^2 ((n-1) lam - R~) + ((n-3) lam - R~) ((n-1) S~ - R~^2);
    with R~ = R - lam, S~ = S - lam^2 this equals the expanded form.
    """
    if n < 3:
        raise ValueError("cubic needs n >= 3")
    return ((n - 2) * lam ** 2 * ((n - 1) * lam - r_rest)
            + ((n - 3) * lam - r_rest) * ((n - 1) * s_rest - r_rest ** 2))


def cubic_fuzz(count: int, seed: int = 0, dims=(3, 4, 5), lo: float = -10.0,
               hi: float = 10.0, nonnegative: bool = False) -> dict:
    """Random-tuple agreement (and sign) check of the two cubic forms.

    Returns max relative deviation |poly - factored| / (1 + |poly|) and, for
    nonnegative draws, the max of the factored form (expected <= 0 up to
    rounding when lam is the minimum eigenvalue and R > 0).
    """
    rng = np.random.default_rng(seed)
    max_dev = 0.0
    max_factored = -np.inf
    for _ in range(count):
        n = int(rng.choice(dims))
        eigs = rng.uniform(0.0 if nonnegative else lo, hi, size=n)
        if nonnegative and eigs.sum() <= 0:
            eigs = np.abs(eigs) + 1e-3
        lam = eigs.min()
        r = eigs.sum()
        s = float((eigs ** 2).sum())
        poly = min_eigenvalue_cubic(n, lam, r, s)
        fact = min_eigenvalue_cubic_factored(n, lam, r - lam, s - lam ** 2)
        max_dev = max(max_dev, abs(poly - fact) / (1.0 + abs(poly)))
        if nonnegative:
            max_factored = max(max_factored, fact)
    out = {"count": count, "max_relative_deviation": max_dev}
    if nonnegative:
        out["max_factored"] = max_factored
    return out


def triviality_check(s: SolitonInstance, points: np.ndarray, tol: float = 1e-8) -> dict:
    """Einstein test: max |Ric - (R/n) g| in the orthonormal frame.

    On surfaces the trace-free part vanishes identically, so the check falls
    back to constancy of the scalar curvature over the sample.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    s.metric.check_points(pts)
    arr = curvature_arrays(s.metric, pts)
    n = s.dim
    tracefree = arr.ricci - (arr.scalar / n)[:, None, None] * arr.g
    max_tracefree = float(frame_max_abs(arr.g, tracefree, ("d", "d")).max())
    out = {"max_tracefree": max_tracefree, "dim": n}
    if n == 2:
        spread = float(np.abs(arr.scalar - arr.scalar.mean()).max())
        out["scalar_spread"] = spread
        out["einstein"] = bool(spread <= tol * max(1.0, abs(float(arr.scalar.mean()))))
        out["note"] = "n=2: trace-free part vanishes identically; tested R constancy"
    else:
        out["einstein"] = bool(max_tracefree <= tol)
    return out
