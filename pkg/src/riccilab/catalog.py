"""Named soliton instances and deliberate non-examples.

Every instance couples a chart metric with a potential function f (gradient
case) or a 1-form w (general case), a constant mu, and a class tag following
the sign of mu.  The defining residual of a gradient instance is

    Ric_ij + nabla^2_ij f - (mu/n) g_ij

and of a 1-form instance (halved so both normalizations coincide)

    [2 Ric_ij + nabla_i w_j + nabla_j w_i - (2 mu/n) g_ij] / 2.

The cigar potential sign was fixed by a CAS computation ahead of the build:
f = -log(1 + x^2 + y^2) is the zero-residual choice, and R + |grad f|^2 = 4
identically on that chart.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import jets
from .errors import UnknownName
from .geometry import (
    Box,
    ChartMetric,
    TensorValue,
    connection_arrays,
    curvature_arrays,
    frame_max_abs,
    metric_jets,
    one_form_jets,
    register_metric,
    scalar_jets,
)

CONTRACTING = "contracting"
STEADY = "steady"
EXPANDING = "expanding"


def classify(mu: float) -> str:
    if mu > 0:
        return CONTRACTING
    if mu < 0:
        return EXPANDING
    return STEADY


@dataclass(frozen=True)
class SolitonInstance:
    """A chart metric with soliton data (potential or 1-form) and constant mu."""

    name: str
    metric: ChartMetric
    mu: float
    potential: Optional[Callable] = None
    one_form: Optional[Callable] = None
    trivial: bool = False
    is_example: bool = True       # False for registered non-examples

    def __post_init__(self):
        if (self.potential is None) == (self.one_form is None):
            raise ValueError("exactly one of potential / one_form must be set")

    @property
    def soliton_class(self) -> str:
        return classify(self.mu)

    @property
    def dim(self) -> int:
        return self.metric.dim

    @property
    def gradient(self) -> bool:
        return self.potential is not None

    def sample_points(self, count: int, seed: int = 0) -> np.ndarray:
        return self.metric.sample_points(count, seed=seed)


def as_one_form(s: SolitonInstance) -> SolitonInstance:
    """Re-express a gradient instance with w = df (components nabla_i f)."""
    if not s.gradient:
        return s
    f = s.potential

    def w(xs):
        n = len(xs)
        y = f(xs)
        if not isinstance(y, jets.Jet2):
            return [0.0] * n
        # w_k = d_k f, rebuilt as jets so w itself stays differentiable
        return [_partial_jet(f, xs, k) for k in range(n)]

    return SolitonInstance(name=s.name + ":one-form", metric=s.metric, mu=s.mu,
                           one_form=w, trivial=s.trivial, is_example=s.is_example)


def _partial_jet(f: Callable, xs, k: int):
    """d_k f as a Jet2 over the same variables (degree drops by one: 3rd
    derivatives of f are not tracked, so the hessian slot of the result is
    exact only when f is at most cubic; the exact route below never uses it)."""
    y = f(xs)
    b = y.val.shape[0]
    n = y.grad.shape[1]
    out = jets.Jet2(y.grad[:, k].copy(), y.hess[:, k, :].copy(), np.zeros((b, n, n)))
    return out


# ---------------------------------------------------------------------------
# residual of the defining equation


def residual_arrays(s: SolitonInstance, points: np.ndarray, mode: str = "dual") -> np.ndarray:
    """Batched (B,n,n) defining-equation residual."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    arr = curvature_arrays(s.metric, pts, mode=mode)
    n = s.dim
    if s.gradient:
        _, df, d2f = scalar_jets(s.potential, pts)
        hess = d2f - np.einsum("bsij,bs->bij", arr.gamma, df)
        return arr.ricci + hess - (s.mu / n) * arr.g
    w, dw, _ = one_form_jets(s.one_form, pts)
    nabw = dw - np.einsum("bsij,bs->bij", arr.gamma, w)   # nabla_i w_j at [i,j]
    sym = nabw + np.swapaxes(nabw, 1, 2)
    return 0.5 * (2.0 * arr.ricci + sym - (2.0 * s.mu / n) * arr.g)


def soliton_residual(s: SolitonInstance, p) -> TensorValue:
    """Defining-equation residual at a single point, as a (0,2) tensor."""
    pts = np.atleast_2d(np.asarray(p, dtype=float))
    s.metric.check_points(pts)
    return TensorValue(residual_arrays(s, pts)[0], ("d", "d"))


def residual_norms(s: SolitonInstance, points: np.ndarray, mode: str = "dual") -> np.ndarray:
    """Frame max-abs of the residual at each sample point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g = metric_jets(s.metric, pts)[0]
    return frame_max_abs(g, residual_arrays(s, pts, mode=mode), ("d", "d"))


# ---------------------------------------------------------------------------
# built-in charts

_TWO_PI = 2.0 * np.pi


def _sphere_metric(n: int) -> ChartMetric:
    """Unit round sphere in hyperspherical coordinates (theta_1..theta_{n-1}, phi)."""

    def g(xs):
        rows = [[0.0] * n for _ in range(n)]
        rows[0][0] = 1.0
        factor = 1.0
        for k in range(1, n):
            factor = factor * jets.sin(xs[k - 1]) ** 2
            rows[k][k] = factor
        return rows

    lo = [0.2] * (n - 1) + [0.0]
    hi = [np.pi - 0.2] * (n - 1) + [_TWO_PI]
    big = 1e9
    ev = Box(np.array([0.05] * (n - 1) + [-big]),
             np.array([np.pi - 0.05] * (n - 1) + [big]))
    return ChartMetric(f"sphere_{n}", n, Box(np.array(lo), np.array(hi)), g,
                       eval_box=ev)


def _hyperbolic_metric(n: int) -> ChartMetric:
    """Hyperbolic space in the half-space chart, g = (sum dx_i^2) / x_n^2."""

    def g(xs):
        c = 1.0 / (xs[n - 1] * xs[n - 1])
        rows = [[0.0] * n for _ in range(n)]
        for k in range(n):
            rows[k][k] = c
        return rows

    lo = [-2.0] * (n - 1) + [0.5]
    hi = [2.0] * (n - 1) + [2.5]
    big = 1e9
    ev = Box(np.array([-big] * (n - 1) + [1e-4]), np.full(n, big))
    return ChartMetric(f"hyperbolic_{n}", n, Box(np.array(lo), np.array(hi)), g,
                       eval_box=ev)


def _flat_metric(name: str, n: int, half_side: float, evaluable_outside: bool) -> ChartMetric:
    def g(xs):
        rows = [[0.0] * n for _ in range(n)]
        for k in range(n):
            rows[k][k] = 1.0
        return rows

    box = Box(np.full(n, -half_side), np.full(n, half_side))
    return ChartMetric(name, n, box, g, evaluable_outside=evaluable_outside)


def _cigar_metric() -> ChartMetric:
    def g(xs):
        c = 1.0 / (1.0 + xs[0] * xs[0] + xs[1] * xs[1])
        return [[c, 0.0], [0.0, c]]

    box = Box(np.array([-6.0, -6.0]), np.array([6.0, 6.0]))
    return ChartMetric("cigar", 2, box, g, evaluable_outside=True)


def _spheroid_metric(a: float = 1.0, b: float = 1.3) -> ChartMetric:
    """Surface of revolution x = a sin(t) cos(p), y = a sin(t) sin(p), z = b cos(t)."""

    def g(xs):
        st = jets.sin(xs[0])
        ct = jets.cos(xs[0])
        return [[a * a * ct * ct + b * b * st * st, 0.0], [0.0, a * a * st * st]]

    box = Box(np.array([0.2, 0.0]), np.array([np.pi - 0.2, _TWO_PI]))
    ev = Box(np.array([0.05, -1e9]), np.array([np.pi - 0.05, 1e9]))
    return ChartMetric("ellipsoid", 2, box, g, eval_box=ev)


# ---------------------------------------------------------------------------
# catalog registry


def random_chart_metric(n: int, seed: int, amplitude: float = 0.12) -> ChartMetric:
    """Perturbed-flat smooth metric for fuzz checks; PD by small amplitude."""
    rng = np.random.default_rng(seed)
    amp = rng.uniform(-amplitude, amplitude, size=(n, n, n))
    amp = 0.5 * (amp + np.swapaxes(amp, 0, 1))
    freq = rng.uniform(0.4, 1.1, size=(n, n, n))
    phase = rng.uniform(0.0, _TWO_PI, size=(n, n, n))

    def g(xs):
        rows = [[0.0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                e = 1.0 if i == j else 0.0
                for k in range(n):
                    e = e + amp[i, j, k] * jets.sin(freq[i, j, k] * xs[k] + phase[i, j, k])
                rows[i][j] = e
                rows[j][i] = e
        return rows

    box = Box(np.full(n, -2.0), np.full(n, 2.0))
    return ChartMetric(f"fuzz_{n}_{seed}", n, box, g, evaluable_outside=True)


def random_potential(n: int, seed: int, amplitude: float = 0.7):
    """Smooth pseudo-random scalar field usable as a generic potential."""
    rng = np.random.default_rng(seed)
    amp = rng.uniform(-amplitude, amplitude, size=n)
    freq = rng.uniform(0.3, 1.0, size=n)
    phase = rng.uniform(0.0, _TWO_PI, size=n)
    quad = rng.uniform(-0.2, 0.2, size=n)

    def f(xs):
        e = 0.0
        for k in range(n):
            e = e + amp[k] * jets.sin(freq[k] * xs[k] + phase[k]) + quad[k] * xs[k] * xs[k]
        return e

    return f


_CATALOG: dict[str, SolitonInstance] = {}


def register_instance(s: SolitonInstance) -> SolitonInstance:
    _CATALOG[s.name] = s
    return s


def catalog_get(name: str, mu: Optional[float] = None) -> SolitonInstance:
    """Fetch an instance by name; `mu` rescales the Gaussian family's constant."""
    try:
        base = _CATALOG[name]
    except KeyError:
        raise UnknownName(f"no soliton instance named '{name}'") from None
    if mu is None or mu == base.mu:
        return base
    if not name.startswith("gaussian_"):
        raise ValueError(f"instance '{name}' has fixed mu={base.mu}")
    return _gaussian_instance(base.dim, mu)


def catalog_names() -> list[str]:
    return sorted(_CATALOG)


def catalog_entries() -> list[SolitonInstance]:
    return [_CATALOG[k] for k in catalog_names()]


def true_solitons() -> list[SolitonInstance]:
    return [s for s in catalog_entries() if s.is_example]


def _gaussian_instance(n: int, mu: float) -> SolitonInstance:
    metric = _metric_cache[f"gaussian_{n}"]

    def f(xs):
        s = xs[0] * xs[0]
        for k in range(1, n):
            s = s + xs[k] * xs[k]
        return (mu / (2.0 * n)) * s

    return SolitonInstance(name=f"gaussian_{n}", metric=metric, mu=mu,
                           potential=f, trivial=(mu == 0.0))


_metric_cache: dict[str, ChartMetric] = {}


def _zero_potential(xs):
    return 0.0


def _build_catalog() -> None:
    for n in (2, 3, 4):
        m = register_metric(_sphere_metric(n))
        _metric_cache[m.name] = m
        register_instance(SolitonInstance(
            name=f"sphere_{n}", metric=m, mu=float(n * (n - 1)),
            potential=_zero_potential, trivial=True))
    for n in (2, 3):
        m = register_metric(_hyperbolic_metric(n))
        _metric_cache[m.name] = m
        register_instance(SolitonInstance(
            name=f"hyperbolic_{n}", metric=m, mu=float(-n * (n - 1)),
            potential=_zero_potential, trivial=True))
        mt = register_metric(_flat_metric(f"flat_torus_{n}", n, np.pi, evaluable_outside=True))
        _metric_cache[mt.name] = mt
        register_instance(SolitonInstance(
            name=f"flat_torus_{n}", metric=mt, mu=0.0,
            potential=_zero_potential, trivial=True))
        mg = register_metric(_flat_metric(f"gaussian_{n}", n, 5.0, evaluable_outside=True))
        _metric_cache[mg.name] = mg
        register_instance(_gaussian_instance(n, 1.0))

    cig = register_metric(_cigar_metric())
    _metric_cache[cig.name] = cig

    def cigar_f(xs):
        return -jets.log(1.0 + xs[0] * xs[0] + xs[1] * xs[1])

    register_instance(SolitonInstance(
        name="cigar", metric=cig, mu=0.0, potential=cigar_f, trivial=False))

    register_metric(_spheroid_metric())

    # non-example: round sphere with a potential that does not solve the equation
    def bad_f(xs):
        return jets.cos(xs[0])

    register_instance(SolitonInstance(
        name="sphere_bad_f", metric=_metric_cache["sphere_2"], mu=2.0,
        potential=bad_f, trivial=False, is_example=False))


_build_catalog()
