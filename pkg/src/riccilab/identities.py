"""Residual suite for the differential identities satisfied by gradient solitons.

Fixed tag meanings (scalar curvature R, Ricci tensor Ric, |Ric|^2 = S,
potential f, constant mu, dimension n; residual = LHS - RHS of each):

I1   R + lap f = mu
I2   grad_i R = 2 Ric_ij grad^j f
I3   nab_j Ric_ik - nab_i Ric_jk = R_ijks grad^s f
I4   R + |grad f|^2 - (2 mu/n) f is constant (residual: deviation from mean)
I5   lap R = <grad R, grad f> + (2 mu/n) R - 2 S
I6   lap Ric_ij = <grad Ric_ij, grad f> + (2 mu/n) Ric_ij - 2 R_ikjs Ric^ks
I7   I6 with the Riemann contraction split into Weyl and trace blocks (n >= 3;
     the Weyl term drops for n = 3 where it vanishes identically)
I8   2 div Ric = dR (n >= 3)
I9   trace split of the Riemann tensor reassembles it; Weyl = 0 for n <= 3
I10  nab_i nab_j w_k - nab_j nab_i w_k = R_ijks w^s for arbitrary 1-forms w
I11  surface (n = 2) relations: Hess f = ((mu - R)/2) g;  dR = R df;
     lap R = <grad R, grad f> + mu R - R^2
I12  g^{kj} nab_k [2 (Ric_ij + Hess_ij f - mu g_ij/n) e^{-f}]
       = grad_i (R + 2 lap f - |grad f|^2 + 2 mu f/n) e^{-f}   (any smooth f)
I13  lap R = <grad R, w> + (2 mu/n) R - 2 S with the soliton 1-form w
I14  expanded vs factored minimum-eigenvalue cubic on curvature data (n >= 3)

Residuals are reported as max-abs components in a g-orthonormal frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .catalog import SolitonInstance
from .errors import DimensionMismatch
from .geometry import (
    covariant_from_partials,
    curvature_arrays,
    fd_first_multi,
    fd_second_multi,
    frame_max_abs,
    layer_steps,
    one_form_jets,
    scalar_jets,
    second_covariant_down,
)
from .eigen import min_eigenvalue_cubic, min_eigenvalue_cubic_factored

ALL_TAGS = tuple(f"I{k}" for k in range(1, 15))

#: default pass tolerances, dual-number differentiation
TOL_DUAL = {
    "I1": 1e-8, "I2": 1e-6, "I3": 1e-6, "I4": 1e-7,
    "I5": 1e-5, "I6": 1e-5, "I7": 1e-5, "I8": 1e-6,
    "I9": 1e-8, "I10": 1e-6, "I11": 1e-5, "I12": 1e-6,
    "I13": 1e-5, "I14": 1e-10,
}
#: finite-difference metric mode relaxes by one decade
TOL_FD = {k: 10.0 * v for k, v in TOL_DUAL.items()}

_NEEDS_POTENTIAL = {"I1", "I2", "I3", "I4", "I5", "I6", "I7", "I8", "I11", "I12"}


def admissible_tags(s: SolitonInstance) -> list[str]:
    """Identity tags applicable to an instance's dimension and soliton data."""
    out = []
    for tag in ALL_TAGS:
        if tag in ("I7", "I8", "I14") and s.dim < 3:
            continue
        if tag == "I11" and s.dim != 2:
            continue
        if tag in _NEEDS_POTENTIAL and not s.gradient:
            continue
        if tag == "I13" and not (s.gradient or s.one_form is not None):
            continue
        out.append(tag)
    return out


@dataclass(frozen=True)
class RunConfig:
    samples: int = 200
    seed: int = 0
    mode: str = "dual"                 # "dual" | "fd"
    tolerances: dict = field(default_factory=dict)
    interchange_forms: int = 20

    def tolerance(self, tag: str) -> float:
        if tag in self.tolerances:
            return float(self.tolerances[tag])
        base = TOL_DUAL if self.mode == "dual" else TOL_FD
        return base[tag]


@dataclass(frozen=True)
class IdentityReport:
    identity: str
    instance: str
    samples: int
    max_residual: float
    mean_residual: float
    worst_point: np.ndarray
    tolerance: float
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "instance": self.instance,
            "samples": self.samples,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "worst_point": [float(x) for x in np.atleast_1d(self.worst_point)],
            "tolerance": self.tolerance,
            "pass": self.passed,
            "note": self.note,
        }


class InstanceGeometry:
    """All differential data shared by the identities, computed lazily.

    Center curvature comes from exact jets; curvature derivatives come from
    one (gradient) or two (Laplacian) finite-difference layers, each run as a
    single batched stencil pass over the whole sample.
    """

    def __init__(self, s: SolitonInstance, points: np.ndarray, mode: str = "dual"):
        self.instance = s
        self.mode = mode
        self.step1, self.step2 = layer_steps(mode)
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        s.metric.check_points(self.points, stencil=3 * self.step2)
        self.arr = curvature_arrays(s.metric, self.points, mode=mode)
        self.n = s.dim

    # -- soliton data -------------------------------------------------------

    @cached_property
    def f_data(self):
        if not self.instance.gradient:
            raise DimensionMismatch("instance has no potential function")
        return scalar_jets(self.instance.potential, self.points)

    @cached_property
    def df(self) -> np.ndarray:
        return self.f_data[1]

    @cached_property
    def gradf_up(self) -> np.ndarray:
        return np.einsum("bij,bj->bi", self.arr.ginv, self.df)

    @cached_property
    def hess_f(self) -> np.ndarray:
        _, df, d2f = self.f_data
        return d2f - np.einsum("bsij,bs->bij", self.arr.gamma, df)

    @cached_property
    def lap_f(self) -> np.ndarray:
        return np.einsum("bij,bij->b", self.arr.ginv, self.hess_f)

    @cached_property
    def omega(self) -> np.ndarray:
        """Soliton 1-form components (w = df for gradient instances)."""
        if self.instance.gradient:
            return self.df
        return one_form_jets(self.instance.one_form, self.points)[0]

    # -- curvature derivatives ----------------------------------------------

    def _ric_scalar_fields(self, q: np.ndarray):
        a = curvature_arrays(self.instance.metric, q, mode=self.mode)
        return a.ricci, a.scalar

    @property
    def _scaled_steps(self) -> bool:
        return self.mode == "dual"

    @cached_property
    def _first_layer(self):
        return fd_first_multi(self._ric_scalar_fields, self.points, self.step1,
                              scale_steps=self._scaled_steps)

    @cached_property
    def _second_layer(self):
        return fd_second_multi(self._ric_scalar_fields, self.points, self.step2,
                               scale_steps=self._scaled_steps)

    @property
    def dric(self) -> np.ndarray:
        return self._first_layer[0]

    @property
    def dscal(self) -> np.ndarray:
        return self._first_layer[1]

    @cached_property
    def nabla_ric(self) -> np.ndarray:
        """nab_a Ric_ij, axes (B, a, i, j)."""
        return covariant_from_partials(self.arr.gamma, self.arr.ricci,
                                       self.dric, ("d", "d"))

    @cached_property
    def lap_ric(self) -> np.ndarray:
        nab2 = second_covariant_down(self.arr.gamma, self.arr.dgamma,
                                     self.arr.ricci, self.dric,
                                     self._second_layer[0], 2)
        return np.einsum("bca,bcaij->bij", self.arr.ginv, nab2)

    @cached_property
    def lap_scal(self) -> np.ndarray:
        nab2 = second_covariant_down(self.arr.gamma, self.arr.dgamma,
                                     self.arr.scalar, self.dscal,
                                     self._second_layer[1], 0)
        return np.einsum("bca,bca->b", self.arr.ginv, nab2)

    @cached_property
    def div_ric(self) -> np.ndarray:
        return np.einsum("bjk,bkij->bi", self.arr.ginv, self.nabla_ric)

    def frame(self, comp: np.ndarray, valence: tuple[str, ...]) -> np.ndarray:
        return frame_max_abs(self.arr.g, comp, valence)


# ---------------------------------------------------------------------------
# per-identity residual evaluators: InstanceGeometry -> (B,) framed residuals


def _res_i1(geo: InstanceGeometry) -> np.ndarray:
    s = geo.instance
    return np.abs(geo.arr.scalar + geo.lap_f - s.mu)


def _res_i2(geo: InstanceGeometry) -> np.ndarray:
    res = geo.dscal - 2.0 * np.einsum("bij,bj->bi", geo.arr.ricci, geo.gradf_up)
    return geo.frame(res, ("d",))


def _res_i3(geo: InstanceGeometry) -> np.ndarray:
    nr = geo.nabla_ric
    # lhs_ijk = nab_j Ric_ik - nab_i Ric_jk
    lhs = np.einsum("bjik->bijk", nr) - nr
    rhs = np.einsum("bijkl,bls,bs->bijk", geo.arr.riemann, geo.arr.ginv, geo.df)
    return geo.frame(lhs - rhs, ("d", "d", "d"))


def _res_i4(geo: InstanceGeometry) -> np.ndarray:
    s = geo.instance
    f = geo.f_data[0]
    grad2 = np.einsum("bi,bi->b", geo.df, geo.gradf_up)
    v = geo.arr.scalar + grad2 - (2.0 * s.mu / geo.n) * f
    return np.abs(v - v.mean())


def first_integral_values(geo: InstanceGeometry) -> np.ndarray:
    """The pointwise values of R + |grad f|^2 - (2 mu/n) f (I4's conserved scalar)."""
    s = geo.instance
    grad2 = np.einsum("bi,bi->b", geo.df, geo.gradf_up)
    return geo.arr.scalar + grad2 - (2.0 * s.mu / geo.n) * geo.f_data[0]


def _res_i5(geo: InstanceGeometry) -> np.ndarray:
    s = geo.instance
    adv = np.einsum("ba,ba->b", geo.dscal, geo.gradf_up)
    res = (geo.lap_scal - adv - (2.0 * s.mu / geo.n) * geo.arr.scalar
           + 2.0 * geo.arr.ric_norm_sq)
    return np.abs(res)


def _ric_up(geo: InstanceGeometry) -> np.ndarray:
    return np.einsum("bka,bac,bcs->bks", geo.arr.ginv, geo.arr.ricci, geo.arr.ginv)


def _res_i6(geo: InstanceGeometry) -> np.ndarray:
    s = geo.instance
    ric_up = _ric_up(geo)
    adv = np.einsum("baij,ba->bij", geo.nabla_ric, geo.gradf_up)
    contraction = np.einsum("bikjs,bks->bij", geo.arr.riemann, ric_up)
    res = (geo.lap_ric - adv - (2.0 * s.mu / geo.n) * geo.arr.ricci
           + 2.0 * contraction)
    return geo.frame(res, ("d", "d"))


def _res_i7(geo: InstanceGeometry) -> np.ndarray:
    s, n = geo.instance, geo.n
    if n < 3:
        raise DimensionMismatch("I7 needs n >= 3")
    arr = geo.arr
    ric_up = _ric_up(geo)
    adv = np.einsum("baij,ba->bij", geo.nabla_ric, geo.gradf_up)
    blocks = (arr.scalar[:, None, None] ** 2 * arr.g
              - n * arr.scalar[:, None, None] * arr.ricci
              + 2.0 * (n - 1) * arr.ric_sq
              - (n - 1) * arr.ric_norm_sq[:, None, None] * arr.g)
    rhs = (adv + (2.0 * s.mu / n) * arr.ricci
           + 2.0 / ((n - 1) * (n - 2)) * blocks)
    if n > 3:
        # -2 W_ikjs Ric^ks; the displayed coefficient in the source derivation
        # is 1 but its own proof (and the n = 3 case) fix it at 2
        rhs = rhs - 2.0 * np.einsum("bikjs,bks->bij", arr.weyl, ric_up)
    return geo.frame(geo.lap_ric - rhs, ("d", "d"))


def _res_i8(geo: InstanceGeometry) -> np.ndarray:
    if geo.n < 3:
        raise DimensionMismatch("I8 needs n >= 3")
    return geo.frame(2.0 * geo.div_ric - geo.dscal, ("d",))


def _res_i9(geo: InstanceGeometry) -> np.ndarray:
    from .geometry import decomposition_reassembly
    arr = geo.arr
    res = geo.frame(decomposition_reassembly(arr) - arr.riemann, ("d",) * 4)
    if geo.n <= 3:
        res = np.maximum(res, geo.frame(arr.weyl, ("d",) * 4))
    return res


def random_one_forms(n: int, count: int, seed: int) -> list[Callable]:
    """Deterministic smooth pseudo-random 1-forms for the interchange check."""
    from . import jets as jm
    rng = np.random.default_rng(seed)
    forms = []
    for _ in range(count):
        amp = rng.uniform(-1.0, 1.0, size=(n, n))
        freq = rng.uniform(-1.2, 1.2, size=(n, n))
        phase = rng.uniform(0.0, 2.0 * np.pi, size=(n, n))
        lin = rng.uniform(-0.5, 0.5, size=(n, n))

        def w(xs, amp=amp, freq=freq, phase=phase, lin=lin):
            out = []
            for k in range(n):
                e = 0.0
                for j in range(n):
                    e = e + amp[k, j] * jm.sin(freq[k, j] * xs[j] + phase[k, j])
                    e = e + lin[k, j] * xs[j]
                out.append(e)
            return out

        forms.append(w)
    return forms


def interchange_residual(geo: InstanceGeometry, w: Callable) -> np.ndarray:
    """Framed residual of nab_i nab_j w_k - nab_j nab_i w_k - R_ijks w^s."""
    arr = geo.arr
    wv, dw, d2w = one_form_jets(w, geo.points)
    nab2 = second_covariant_down(arr.gamma, arr.dgamma, wv, dw, d2w, 1)
    anti = nab2 - nab2.swapaxes(1, 2)
    rhs = np.einsum("bijkl,bls,bs->bijk", arr.riemann, arr.ginv, wv)
    return geo.frame(anti - rhs, ("d", "d", "d"))


def _res_i10(geo: InstanceGeometry, count: int = 20, seed: int = 0) -> np.ndarray:
    res = np.zeros(geo.points.shape[0])
    for w in random_one_forms(geo.n, count, seed):
        res = np.maximum(res, interchange_residual(geo, w))
    return res


def _res_i11(geo: InstanceGeometry) -> np.ndarray:
    if geo.n != 2:
        raise DimensionMismatch("I11 needs n = 2")
    s, arr = geo.instance, geo.arr
    r_a = geo.frame(geo.hess_f - 0.5 * (s.mu - geo.arr.scalar)[:, None, None] * arr.g,
                    ("d", "d"))
    r_b = geo.frame(geo.dscal - arr.scalar[:, None] * geo.df, ("d",))
    adv = np.einsum("ba,ba->b", geo.dscal, geo.gradf_up)
    r_c = np.abs(geo.lap_scal - adv - s.mu * arr.scalar + arr.scalar ** 2)
    return np.maximum(np.maximum(r_a, r_b), r_c)


def divergence_pair_fields(s: SolitonInstance, mode: str = "dual"):
    """Field pair for I12: the weighted 2-tensor and its companion scalar."""
    n = s.dim

    def fields(q: np.ndarray):
        a = curvature_arrays(s.metric, q, mode=mode)
        fval, df, d2f = scalar_jets(s.potential, q)
        hess = d2f - np.einsum("bsij,bs->bij", a.gamma, df)
        lap = np.einsum("bij,bij->b", a.ginv, hess)
        grad2 = np.einsum("bij,bi,bj->b", a.ginv, df, df)
        weight = np.exp(-fval)
        t2 = 2.0 * (a.ricci + hess - (s.mu / n) * a.g) * weight[:, None, None]
        scal = a.scalar + 2.0 * lap - grad2 + 2.0 * s.mu * fval / n
        return t2, scal

    return fields


def _res_i12(geo: InstanceGeometry) -> np.ndarray:
    s, arr = geo.instance, geo.arr
    fields = divergence_pair_fields(s, geo.mode)
    t2, scal = fields(geo.points)
    dt2, dscal = fd_first_multi(fields, geo.points, geo.step1,
                                scale_steps=geo._scaled_steps)
    nab = covariant_from_partials(arr.gamma, t2, dt2, ("d", "d"))
    lhs = np.einsum("bkj,bkij->bi", arr.ginv, nab)
    weight = np.exp(-geo.f_data[0])
    rhs = dscal * weight[:, None]
    return geo.frame(lhs - rhs, ("d",))


def _res_i13(geo: InstanceGeometry) -> np.ndarray:
    s = geo.instance
    omega_up = np.einsum("bac,bc->ba", geo.arr.ginv, geo.omega)
    adv = np.einsum("ba,ba->b", geo.dscal, omega_up)
    res = (geo.lap_scal - adv - (2.0 * s.mu / geo.n) * geo.arr.scalar
           + 2.0 * geo.arr.ric_norm_sq)
    return np.abs(res)


def _res_i14(geo: InstanceGeometry) -> np.ndarray:
    if geo.n < 3:
        raise DimensionMismatch("I14 needs n >= 3")
    arr = geo.arr
    res = np.zeros(geo.points.shape[0])
    for i in range(geo.points.shape[0]):
        lam = float(scipy.linalg.eigh(arr.ricci[i], arr.g[i], eigvals_only=True)[0])
        r, sq = float(arr.scalar[i]), float(arr.ric_norm_sq[i])
        poly = min_eigenvalue_cubic(geo.n, lam, r, sq)
        fact = min_eigenvalue_cubic_factored(geo.n, lam, r - lam, sq - lam ** 2)
        res[i] = abs(poly - fact) / (1.0 + abs(poly))
    return res


_EVALUATORS = {
    "I1": _res_i1, "I2": _res_i2, "I3": _res_i3, "I4": _res_i4,
    "I5": _res_i5, "I6": _res_i6, "I7": _res_i7, "I8": _res_i8,
    "I9": _res_i9, "I11": _res_i11, "I12": _res_i12, "I13": _res_i13,
    "I14": _res_i14,
}


# ---------------------------------------------------------------------------
# public entry points


def check_identity(tag: str, s: SolitonInstance, points: np.ndarray,
                   tol: Optional[float] = None, mode: str = "dual",
                   geo: Optional[InstanceGeometry] = None,
                   config: Optional[RunConfig] = None) -> IdentityReport:
    """Evaluate one identity over a sample set and report residual statistics."""
    if tag not in ALL_TAGS:
        raise KeyError(f"unknown identity tag '{tag}'")
    cfg = config or RunConfig(mode=mode)
    if tag not in admissible_tags(s):
        raise DimensionMismatch(f"{tag} not admissible for instance '{s.name}'")
    if geo is None:
        geo = InstanceGeometry(s, points, mode=cfg.mode)
    if tag == "I10":
        res = _res_i10(geo, count=cfg.interchange_forms, seed=cfg.seed)
    else:
        res = _EVALUATORS[tag](geo)
    tolerance = float(tol) if tol is not None else cfg.tolerance(tag)
    worst = int(np.argmax(res))
    return IdentityReport(
        identity=tag,
        instance=s.name,
        samples=geo.points.shape[0],
        max_residual=float(res.max()),
        mean_residual=float(res.mean()),
        worst_point=geo.points[worst].copy(),
        tolerance=tolerance,
        passed=bool(res.max() <= tolerance),
    )


def run_suite(s: SolitonInstance, config: Optional[RunConfig] = None,
              points: Optional[np.ndarray] = None) -> list[IdentityReport]:
    """Run every admissible identity for the instance; never aborts mid-suite."""
    cfg = config or RunConfig()
    if points is None:
        points = s.sample_points(cfg.samples, seed=cfg.seed)
    geo = InstanceGeometry(s, points, mode=cfg.mode)
    reports = []
    for tag in admissible_tags(s):
        try:
            reports.append(check_identity(tag, s, points, mode=cfg.mode,
                                          geo=geo, config=cfg))
        except Exception as exc:  # aggregate, do not abort
            reports.append(IdentityReport(
                identity=tag, instance=s.name, samples=np.atleast_2d(points).shape[0],
                max_residual=float("nan"), mean_residual=float("nan"),
                worst_point=np.full(s.dim, np.nan), tolerance=cfg.tolerance(tag),
                passed=False, note=f"{type(exc).__name__}: {exc}"))
    return reports
