"""Pointwise curvature engine for coordinate-chart metrics.

Conventions
-----------
Christoffel symbols:  Gamma^k_ij = (1/2) g^{ks} (d_i g_sj + d_j g_si - d_s g_ij).

Riemann (0,4) tensor:

    R_ijkl = g_ls (d_j Gamma^s_ik - d_i Gamma^s_jk
                   + Gamma^s_ja Gamma^a_ik - Gamma^s_ia Gamma^a_jk)

chosen so that the second-derivative interchange on a 1-form reads

    nabla_i nabla_j w_k - nabla_j nabla_i w_k = R_ijk{}^s w_s

and the Ricci contraction Ric_ik = g^{jl} R_ijkl is positive on the round
sphere (Ric = (n-1) g).  Both facts are locked by tests; the orthodox
trace-removal split of the Riemann tensor (scalar block with a leading
minus, Ricci block, Weyl remainder) holds verbatim in this convention.

Differentiation: metric components, potentials, and 1-forms are evaluated
through second-order jets (exact first/second derivatives).  Derived fields
(curvature tensors) are differentiated by 4th-order central differences
with per-axis steps scaled by max(1, |x|); one FD layer for third metric
derivatives, a wider-step second layer for fourth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from . import jets
from .errors import NonPositiveDefinite, OutOfDomain, UnknownName

EPS = float(np.finfo(float).eps)
#: step for the FD layer producing third metric derivatives (grad of curvature)
FD1_STEP = EPS ** (1.0 / 3.0)
#: step for the FD layer producing fourth metric derivatives (Laplacian of curvature)
FD2_STEP = EPS ** (1.0 / 6.0)
#: steps used when the metric itself is differentiated by finite differences
#: (6th-order stencils, so the curvature noise floor stays ~1e-11)
FD_METRIC_STEP1 = EPS ** (1.0 / 7.0)
FD_METRIC_STEP2 = EPS ** (1.0 / 8.0)
#: outer-layer steps for "fd" metric mode: the differentiated fields carry
#: rough pointwise noise well above machine epsilon, so the steps must grow
FD1_STEP_FDMODE = 2e-3
FD2_STEP_FDMODE = 1.5e-2


def layer_steps(mode: str) -> tuple[float, float]:
    """(first, second) FD-layer base steps for curvature-derived fields."""
    if mode == "dual":
        return FD1_STEP, FD2_STEP
    return FD1_STEP_FDMODE, FD2_STEP_FDMODE

_SLOT_LETTERS = "ijklmpq"


# ---------------------------------------------------------------------------
# domain boxes and tensor containers


@dataclass(frozen=True)
class Box:
    """Axis-aligned coordinate box."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if self.lo.shape != self.hi.shape or np.any(self.lo >= self.hi):
            raise ValueError("box needs lo < hi per axis")

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def scale(self) -> np.ndarray:
        return np.maximum(1.0, np.maximum(np.abs(self.lo), np.abs(self.hi)))

    def margin(self) -> np.ndarray:
        """Sampling margin: four widest stencil steps per axis."""
        return 4.0 * 2.0 * FD2_STEP * self.scale()

    def contains(self, points: np.ndarray, slack: float = 0.0) -> np.ndarray:
        p = np.atleast_2d(points)
        return np.all((p >= self.lo - slack) & (p <= self.hi + slack), axis=1)

    def sample(self, count: int, seed: int = 0, shrink: bool = True) -> np.ndarray:
        """Low-discrepancy (Halton) sample of the box interior."""
        lo, hi = self.lo, self.hi
        if shrink:
            m = self.margin()
            lo, hi = lo + m, hi - m
        unit = qmc.Halton(d=self.dim, scramble=True, seed=seed).random(count)
        return lo + unit * (hi - lo)


@dataclass(frozen=True)
class TensorValue:
    """Dense component block at a point with declared slot variances."""

    components: np.ndarray
    valence: tuple[str, ...]
    symmetric_pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float)
        object.__setattr__(self, "components", comp)
        if comp.ndim != len(self.valence):
            raise ValueError("component rank does not match valence length")
        if any(v not in ("u", "d") for v in self.valence):
            raise ValueError("valence entries must be 'u' or 'd'")
        for a, b in self.symmetric_pairs:
            swapped = np.swapaxes(comp, a, b)
            denom = 1.0 + np.abs(comp).max()
            if np.abs(comp - swapped).max() > 1e-12 * denom:
                raise ValueError(f"declared symmetry in slots ({a},{b}) violated")

    @property
    def rank(self) -> int:
        return len(self.valence)


# ---------------------------------------------------------------------------
# chart metrics


MetricFunc = Callable[[Sequence], Sequence]


@dataclass(frozen=True)
class ChartMetric:
    """A coordinate chart with a twice-differentiable metric component map.

    ``g`` maps a sequence of n scalar-like coordinates (floats, arrays, or
    jets) to an n x n nested sequence of components, so the same callable
    serves plain evaluation and exact jet differentiation.
    """

    name: str
    dim: int
    domain: Box
    g: MetricFunc
    evaluable_outside: bool = False
    #: region where g stays evaluable/positive-definite, when wider than the
    #: sampling box (e.g. the azimuth of a sphere chart); None means `domain`
    eval_box: Box | None = None

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("chart dimension must be >= 2")
        if self.domain.dim != self.dim:
            raise ValueError("domain dimension mismatch")

    def evaluation_box(self) -> Box | None:
        """Box that geodesics must stay inside; None if unconstrained."""
        if self.evaluable_outside:
            return None
        return self.eval_box if self.eval_box is not None else self.domain

    def validate(self, samples: int = 32, seed: int = 0) -> None:
        """Check symmetry and positive-definiteness on a sampled set."""
        pts = self.domain.sample(samples, seed=seed)
        g = metric_values(self, pts)
        if np.abs(g - np.swapaxes(g, 1, 2)).max() > 1e-12 * (1.0 + np.abs(g).max()):
            raise ValueError(f"metric '{self.name}' is not symmetric")
        _cholesky(g, self.name)

    def check_points(self, points: np.ndarray, stencil: float = 0.0) -> None:
        """Require points inside the chart box; with ``stencil`` > 0, also
        require the per-axis stencil extent to stay inside the evaluation
        region (which may be wider than the sampling box)."""
        pts = np.atleast_2d(points)
        if pts.shape[1] != self.dim:
            raise OutOfDomain(f"points have dimension {pts.shape[1]}, chart has {self.dim}")
        if self.evaluable_outside:
            return
        inside = self.domain.contains(pts)
        if not np.all(inside):
            bad = pts[~inside][0]
            raise OutOfDomain(f"point {bad} outside chart '{self.name}'")
        if stencil:
            ebox = self.eval_box if self.eval_box is not None else self.domain
            ext = stencil * np.maximum(1.0, np.abs(pts)).max(axis=0)
            ok = np.all((pts >= ebox.lo + ext) & (pts <= ebox.hi - ext), axis=1)
            if not np.all(ok):
                bad = pts[~ok][0]
                raise OutOfDomain(
                    f"stencil around {bad} leaves the evaluable region of '{self.name}'")

    def sample_points(self, count: int, seed: int = 0) -> np.ndarray:
        return self.domain.sample(count, seed=seed)


_METRICS: dict[str, ChartMetric] = {}


def register_metric(metric: ChartMetric, validate: bool = True) -> ChartMetric:
    if validate:
        metric.validate()
    _METRICS[metric.name] = metric
    return metric


def get_metric(name: str) -> ChartMetric:
    try:
        return _METRICS[name]
    except KeyError:
        raise UnknownName(f"no metric named '{name}'") from None


def metric_names() -> list[str]:
    return sorted(_METRICS)


# ---------------------------------------------------------------------------
# metric evaluation (values and exact jets)


def _entry_values(entry, batch: int) -> np.ndarray:
    if isinstance(entry, jets.Jet2):
        return entry.val
    return np.broadcast_to(np.asarray(entry, dtype=float), (batch,))


def metric_values(m: ChartMetric, points: np.ndarray) -> np.ndarray:
    """Metric components g_ij at a batch of points, shape (B, n, n)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    b, n = pts.shape
    rows = m.g([pts[:, k] for k in range(n)])
    out = np.empty((b, n, n))
    for i in range(n):
        for j in range(n):
            out[:, i, j] = _entry_values(rows[i][j], b)
    return out


def metric_jets(m: ChartMetric, points: np.ndarray, mode: str = "dual"):
    """Return (g, dg, d2g) with dg[a,i,j] = d_a g_ij and d2g[a,b,i,j] = d_a d_b g_ij."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if mode == "fd":
        return _metric_jets_fd(m, pts)
    b, n = pts.shape
    xs = jets.seed_variables(pts)
    rows = m.g(xs)
    g = np.empty((b, n, n))
    dg = np.zeros((b, n, n, n))
    d2g = np.zeros((b, n, n, n, n))
    for i in range(n):
        for j in range(n):
            e = rows[i][j]
            if isinstance(e, jets.Jet2):
                g[:, i, j] = e.val
                dg[:, :, i, j] = e.grad
                d2g[:, :, :, i, j] = e.hess
            else:
                g[:, i, j] = np.broadcast_to(np.asarray(e, dtype=float), (b,))
    return g, dg, d2g


def _metric_jets_fd(m: ChartMetric, pts: np.ndarray):
    """Finite-difference backend: 6th-order stencils on the metric components."""
    g = metric_values(m, pts)
    (dg,) = fd_first_multi(lambda q: (metric_values(m, q),), pts,
                           FD_METRIC_STEP1, order=6)
    (d2g,) = fd_second_multi(lambda q: (metric_values(m, q),), pts,
                             FD_METRIC_STEP2, order=6)
    d2g = 0.5 * (d2g + np.swapaxes(d2g, 1, 2))
    return g, dg, d2g


def _cholesky(g: np.ndarray, name: str = "") -> np.ndarray:
    try:
        return np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NonPositiveDefinite(
            f"metric{' ' + repr(name) if name else ''} is not positive-definite"
        ) from None


# ---------------------------------------------------------------------------
# finite-difference layers for derived fields

# central stencils: offsets and weights for f' (divide by h) and f'' (by h^2)
_FD_FIRST = {
    4: (np.array([-2.0, -1.0, 1.0, 2.0]),
        np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
    6: (np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]),
        np.array([-1.0, 9.0, -45.0, 45.0, -9.0, 1.0]) / 60.0),
}
_FD_SECOND = {
    4: (np.array([-2.0, -1.0, 0.0, 1.0, 2.0]),
        np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0),
    6: (np.array([-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]),
        np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0),
}


def _steps(pts: np.ndarray, base: float, scaled: bool = True) -> np.ndarray:
    if not scaled:
        return np.full_like(pts, base)
    return base * np.maximum(1.0, np.abs(pts))


def fd_first_multi(fn, pts: np.ndarray, base_step: float = FD1_STEP, order: int = 4,
                   scale_steps: bool = True):
    """Central-difference partial derivatives of each array returned by ``fn``.

    ``fn`` maps an (M, n) batch to a tuple of arrays with leading axis M;
    returns matching arrays with an extra derivative axis after the batch.
    Steps scale per axis with max(1, |x|) unless ``scale_steps`` is off
    (noise-dominated fields want absolute steps).
    """
    offs, wts = _FD_FIRST[order]
    b, n = pts.shape
    h = _steps(pts, base_step, scale_steps)          # (B, n)
    eye = np.eye(n)
    disp = offs[None, None, :, None] * h[:, :, None, None] * eye[None, :, None, :]
    stencil = (pts[:, None, None, :] + disp).reshape(-1, n)
    vals = fn(stencil)
    out = []
    for v in vals:
        v = v.reshape(b, n, offs.size, *v.shape[1:])
        d = np.einsum("o,bao...->ba...", wts, v)
        out.append(d / h.reshape(b, n, *([1] * (d.ndim - 2))))
    return tuple(out)


def fd_second_multi(fn, pts: np.ndarray, base_step: float = FD2_STEP, order: int = 4,
                    scale_steps: bool = True):
    """Second partials d2T[a,b,...]: central diagonal stencil, composed mixed."""
    offs1, wts1 = _FD_FIRST[order]
    offs2, wts2 = _FD_SECOND[order]
    b, n = pts.shape
    h = _steps(pts, base_step, scale_steps)
    eye = np.eye(n)

    disp = offs2[None, None, :, None] * h[:, :, None, None] * eye[None, :, None, :]
    diag_pts = (pts[:, None, None, :] + disp).reshape(-1, n)

    pairs = [(a, c) for a in range(n) for c in range(a + 1, n)]
    k1 = offs1.size
    mixed_pts = np.empty((b, len(pairs), k1, k1, n)) if pairs else None
    for idx, (a, c) in enumerate(pairs):
        da = offs1[:, None, None] * h[:, a][None, None, :]
        dc = offs1[None, :, None] * h[:, c][None, None, :]
        block = np.repeat(pts[None, None, :, :], k1, axis=0)
        block = np.repeat(block, k1, axis=1)                    # (k1,k1,B,n)
        block[..., a] += da
        block[..., c] += dc
        mixed_pts[:, idx] = np.moveaxis(block, 2, 0)

    chunks = [diag_pts]
    if pairs:
        chunks.append(mixed_pts.reshape(-1, n))
    vals = fn(np.concatenate(chunks, axis=0))

    out = []
    ndiag = b * n * offs2.size
    for v in vals:
        comp = v.shape[1:]
        d2 = np.zeros((b, n, n, *comp))
        vd = v[:ndiag].reshape(b, n, offs2.size, *comp)
        diag = np.einsum("o,bao...->ba...", wts2, vd)
        diag = diag / (h ** 2).reshape(b, n, *([1] * len(comp)))
        for a in range(n):
            d2[:, a, a] = diag[:, a]
        if pairs:
            vm = v[ndiag:].reshape(b, len(pairs), k1, k1, *comp)
            mixed = np.einsum("o,p,bqop...->bq...", wts1, wts1, vm)
            for idx, (a, c) in enumerate(pairs):
                val = mixed[:, idx] / (h[:, a] * h[:, c]).reshape(b, *([1] * len(comp)))
                d2[:, a, c] = val
                d2[:, c, a] = val
        out.append(d2)
    return tuple(out)


# ---------------------------------------------------------------------------
# curvature assembly


@dataclass
class CurvArrays:
    """Batched curvature data at sample points (internal workhorse)."""

    points: np.ndarray
    g: np.ndarray          # (B,n,n)
    ginv: np.ndarray
    gamma: np.ndarray      # (B,k,i,j)
    dgamma: np.ndarray     # (B,a,k,i,j) = d_a Gamma^k_ij
    riemann: np.ndarray    # (B,i,j,k,l)
    ricci: np.ndarray
    scalar: np.ndarray     # (B,)
    ric_sq: np.ndarray     # (B,i,k) = R_ij g^{jl} R_lk
    ric_norm_sq: np.ndarray  # (B,)
    weyl: np.ndarray

    @property
    def dim(self) -> int:
        return self.g.shape[-1]


def connection_arrays(ginv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    t = np.einsum("bisj->bsij", dg) + np.einsum("bjsi->bsij", dg) - dg
    return 0.5 * np.einsum("bks,bsij->bkij", ginv, t)


def curvature_arrays(m: ChartMetric, points: np.ndarray, mode: str = "dual") -> CurvArrays:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g, dg, d2g = metric_jets(m, pts, mode=mode)
    l = _cholesky(g, m.name)
    del l
    ginv = np.linalg.inv(g)
    gamma = connection_arrays(ginv, dg)

    dginv = -np.einsum("bkp,bapq,bqs->baks", ginv, dg, ginv)
    t = np.einsum("bisj->bsij", dg) + np.einsum("bjsi->bsij", dg) - dg
    dt = np.einsum("baisj->basij", d2g) + np.einsum("bajsi->basij", d2g) - d2g
    dgamma = 0.5 * (np.einsum("baks,bsij->bakij", dginv, t)
                    + np.einsum("bks,basij->bakij", ginv, dt))

    # M^s_ijk = d_j Gamma^s_ik - d_i Gamma^s_jk + Gamma^s_ja Gamma^a_ik - Gamma^s_ia Gamma^a_jk
    mm = (np.einsum("bjsik->bsijk", dgamma)
          - np.einsum("bisjk->bsijk", dgamma)
          + np.einsum("bsja,baik->bsijk", gamma, gamma)
          - np.einsum("bsia,bajk->bsijk", gamma, gamma))
    riemann = np.einsum("bls,bsijk->bijkl", g, mm)

    ricci = np.einsum("bjl,bijkl->bik", ginv, riemann)
    scalar = np.einsum("bik,bik->b", ginv, ricci)
    ric_sq = np.einsum("bij,bjl,blk->bik", ricci, ginv, ricci)
    ric_norm_sq = np.einsum("bik,bik->b", ginv, ric_sq)
    weyl = _weyl_part(g, riemann, ricci, scalar)
    return CurvArrays(pts, g, ginv, gamma, dgamma, riemann, ricci,
                      scalar, ric_sq, ric_norm_sq, weyl)


def _gg_block(g: np.ndarray) -> np.ndarray:
    return np.einsum("bik,bjl->bijkl", g, g) - np.einsum("bil,bjk->bijkl", g, g)


def _ric_block(g: np.ndarray, ric: np.ndarray) -> np.ndarray:
    return (np.einsum("bik,bjl->bijkl", ric, g)
            - np.einsum("bil,bjk->bijkl", ric, g)
            + np.einsum("bjl,bik->bijkl", ric, g)
            - np.einsum("bjk,bil->bijkl", ric, g))


def _weyl_part(g, riemann, ricci, scalar):
    n = g.shape[-1]
    if n <= 2:
        return np.zeros_like(riemann)
    sblock = -scalar[:, None, None, None, None] / ((n - 1) * (n - 2)) * _gg_block(g)
    rblock = _ric_block(g, ricci) / (n - 2)
    return riemann - sblock - rblock


def decomposition_reassembly(arr: CurvArrays) -> np.ndarray:
    """Scalar block + Ricci block + Weyl, which must reproduce the Riemann tensor.

    For n = 2 the curvature is pure scalar: R_ijkl = (R/2)(g_ik g_jl - g_il g_jk).
    """
    n = arr.dim
    if n == 2:
        return 0.5 * arr.scalar[:, None, None, None, None] * _gg_block(arr.g)
    sblock = -arr.scalar[:, None, None, None, None] / ((n - 1) * (n - 2)) * _gg_block(arr.g)
    return sblock + _ric_block(arr.g, arr.ricci) / (n - 2) + arr.weyl


# ---------------------------------------------------------------------------
# covariant calculus on component arrays


def covariant_from_partials(gamma: np.ndarray, comp: np.ndarray, dcomp: np.ndarray,
                            valence: tuple[str, ...]) -> np.ndarray:
    """Assemble nabla_a T from partial derivatives: dcomp[a, ...] plus Gamma terms."""
    k = len(valence)
    slots = _SLOT_LETTERS[:k]
    out = dcomp.copy()
    for pos, var in enumerate(valence):
        p = slots[pos]
        tsub = "b" + slots[:pos] + "s" + slots[pos + 1:]
        if var == "d":
            out -= np.einsum(f"bsa{p},{tsub}->ba{slots}", gamma, comp)
        else:
            out += np.einsum(f"b{p}as,{tsub}->ba{slots}", gamma, comp)
    return out


def second_covariant_down(gamma: np.ndarray, dgamma: np.ndarray, comp: np.ndarray,
                          dcomp: np.ndarray, d2comp: np.ndarray, k: int) -> np.ndarray:
    """nabla_b nabla_a of an all-covariant k-tensor; output axes (B, b, a, slots)."""
    valence = ("d",) * k
    slots = _SLOT_LETTERS[:k]
    u = covariant_from_partials(gamma, comp, dcomp, valence)       # (B,a,slots)
    # d_b of (nabla_a T): differentiate the assembly term by term
    dnab = d2comp.copy()                                           # (B,b,a,slots)
    for pos in range(k):
        p = slots[pos]
        tsub = "b" + slots[:pos] + "s" + slots[pos + 1:]
        dtsub = "bc" + slots[:pos] + "s" + slots[pos + 1:]
        dnab -= np.einsum(f"bcsa{p},{tsub}->bca{slots}", dgamma, comp)
        dnab -= np.einsum(f"bsa{p},{dtsub}->bca{slots}", gamma, dcomp)
    # correct the (k+1)-slot tensor U = nabla T for the outer derivative
    out = dnab - np.einsum(f"btca,bt{slots}->bca{slots}", gamma, u)
    for pos in range(k):
        p = slots[pos]
        usub = "ba" + slots[:pos] + "t" + slots[pos + 1:]
        out -= np.einsum(f"btc{p},{usub}->bca{slots}", gamma, u)
    return out


def frame_max_abs(g: np.ndarray, comp: np.ndarray, valence: tuple[str, ...]) -> np.ndarray:
    """Max-abs component in a g-orthonormal frame (coordinate-invariant norm)."""
    k = len(valence)
    if k == 0:
        return np.abs(comp)
    l = _cholesky(g)
    e = np.linalg.inv(np.swapaxes(l, 1, 2))          # rows of e^T are frame covectors
    lt = np.swapaxes(l, 1, 2)
    slots = _SLOT_LETTERS[:k]
    out = comp
    for pos, var in enumerate(valence):
        p = slots[pos]
        cur = "b" + slots[:pos] + "s" + slots[pos + 1:]
        mat = "bs" + p
        basis = e if var == "d" else lt
        out = np.einsum(f"{cur},{mat}->b{slots}", out, basis)
    return np.abs(out).reshape(out.shape[0], -1).max(axis=1)


# ---------------------------------------------------------------------------
# exact jets of scalar and 1-form fields


def scalar_jets(f: Callable, points: np.ndarray):
    """(f, df, d2f) of a generic-arithmetic scalar field, exact via jets."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    b, n = pts.shape
    xs = jets.seed_variables(pts)
    y = f(xs)
    if isinstance(y, jets.Jet2):
        return y.val.copy(), y.grad.copy(), y.hess.copy()
    val = np.broadcast_to(np.asarray(y, dtype=float), (b,)).copy()
    return val, np.zeros((b, n)), np.zeros((b, n, n))


def one_form_jets(w: Callable, points: np.ndarray):
    """(w, dw, d2w) of a 1-form given as coords -> sequence of n entries."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    b, n = pts.shape
    xs = jets.seed_variables(pts)
    entries = w(xs)
    val = np.zeros((b, n))
    dw = np.zeros((b, n, n))      # dw[a,k] = d_a w_k
    d2w = np.zeros((b, n, n, n))  # d2w[a,c,k]
    for k in range(n):
        e = entries[k]
        if isinstance(e, jets.Jet2):
            val[:, k] = e.val
            dw[:, :, k] = e.grad
            d2w[:, :, :, k] = e.hess
        else:
            val[:, k] = np.broadcast_to(np.asarray(e, dtype=float), (b,))
    return val, dw, d2w


# ---------------------------------------------------------------------------
# public single-point operations


@dataclass(frozen=True)
class CurvatureBundle:
    """All curvature data of a chart metric at one point."""

    riemann: TensorValue
    ricci: TensorValue
    scalar: float
    weyl: TensorValue
    ric_sq: TensorValue
    ric_norm_sq: float
    christoffel: TensorValue
    metric: TensorValue
    inverse_metric: TensorValue


def _point(m: ChartMetric, p, stencil: float = 0.0) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(p, dtype=float))
    m.check_points(pts, stencil=stencil)
    return pts


def christoffel(m: ChartMetric, p) -> TensorValue:
    """Levi-Civita connection coefficients Gamma^k_ij at p, valence (u,d,d)."""
    pts = _point(m, p)
    g, dg, _ = metric_jets(m, pts)
    ginv = np.linalg.inv(_assert_pd(g, m.name))
    gamma = connection_arrays(ginv, dg)
    return TensorValue(gamma[0], ("u", "d", "d"), symmetric_pairs=((1, 2),))


def _assert_pd(g: np.ndarray, name: str) -> np.ndarray:
    _cholesky(g, name)
    return g


def curvature(m: ChartMetric, p, mode: str = "dual") -> CurvatureBundle:
    """Full curvature bundle at a point (Riemann, Ricci, scalar, Weyl, ...)."""
    pts = _point(m, p)
    arr = curvature_arrays(m, pts, mode=mode)
    return CurvatureBundle(
        riemann=TensorValue(arr.riemann[0], ("d",) * 4),
        ricci=TensorValue(arr.ricci[0], ("d", "d"), symmetric_pairs=((0, 1),)),
        scalar=float(arr.scalar[0]),
        weyl=TensorValue(arr.weyl[0], ("d",) * 4),
        ric_sq=TensorValue(arr.ric_sq[0], ("d", "d"), symmetric_pairs=((0, 1),)),
        ric_norm_sq=float(arr.ric_norm_sq[0]),
        christoffel=TensorValue(arr.gamma[0], ("u", "d", "d"), symmetric_pairs=((1, 2),)),
        metric=TensorValue(arr.g[0], ("d", "d"), symmetric_pairs=((0, 1),)),
        inverse_metric=TensorValue(arr.ginv[0], ("u", "u"), symmetric_pairs=((0, 1),)),
    )


def _field_components(field: Callable, pts: np.ndarray):
    """Evaluate a point -> TensorValue (or scalar/array) field on a batch."""
    first = field(pts[0])
    if isinstance(first, TensorValue):
        valence = first.valence
        shape = first.components.shape
        out = np.empty((pts.shape[0], *shape))
        out[0] = first.components
        for i in range(1, pts.shape[0]):
            out[i] = field(pts[i]).components
        return out, valence
    arr0 = np.asarray(first, dtype=float)
    out = np.empty((pts.shape[0], *arr0.shape))
    out[0] = arr0
    for i in range(1, pts.shape[0]):
        out[i] = np.asarray(field(pts[i]), dtype=float)
    return out, ("d",) * arr0.ndim


def covariant_derivative(m: ChartMetric, field: Callable, p) -> TensorValue:
    """nabla of a tensor field (one extra covariant slot, placed first).

    The field is any callable point -> TensorValue; scalars reduce to the
    coordinate gradient.  Partial derivatives use the first FD layer.
    """
    pts = _point(m, p, stencil=2 * FD1_STEP)
    g, dg, _ = metric_jets(m, pts)
    gamma = connection_arrays(np.linalg.inv(_assert_pd(g, m.name)), dg)
    comp, valence = _field_components(field, pts)
    (dcomp,) = fd_first_multi(lambda q: (_field_components(field, q)[0],), pts, FD1_STEP)
    nab = covariant_from_partials(gamma, comp, dcomp, valence)
    return TensorValue(nab[0], ("d", *valence))


def hessian(m: ChartMetric, f: Callable, p) -> TensorValue:
    """nabla^2 f as a symmetric (0,2) tensor, exact via jets."""
    pts = _point(m, p)
    g, dg, _ = metric_jets(m, pts)
    gamma = connection_arrays(np.linalg.inv(_assert_pd(g, m.name)), dg)
    _, df, d2f = scalar_jets(f, pts)
    hess = d2f - np.einsum("bsij,bs->bij", gamma, df)
    return TensorValue(hess[0], ("d", "d"), symmetric_pairs=((0, 1),))


def laplacian_scalar(m: ChartMetric, f: Callable, p) -> float:
    """g^{ij} nabla^2_ij f at p."""
    pts = _point(m, p)
    g, dg, _ = metric_jets(m, pts)
    ginv = np.linalg.inv(_assert_pd(g, m.name))
    gamma = connection_arrays(ginv, dg)
    _, df, d2f = scalar_jets(f, pts)
    hess = d2f - np.einsum("bsij,bs->bij", gamma, df)
    return float(np.einsum("bij,bij->b", ginv, hess)[0])


def laplacian_tensor2(m: ChartMetric, field: Callable, p) -> TensorValue:
    """Rough Laplacian g^{ab} nabla_a nabla_b T of a (0,2) tensor field."""
    pts = _point(m, p, stencil=2 * FD2_STEP)
    arr = curvature_arrays(m, pts)
    comp, valence = _field_components(field, pts)
    if valence != ("d", "d"):
        raise ValueError("laplacian_tensor2 expects a (0,2) field")
    getter = lambda q: (_field_components(field, q)[0],)
    (dcomp,) = fd_first_multi(getter, pts, FD1_STEP)
    (d2comp,) = fd_second_multi(getter, pts, FD2_STEP)
    nab2 = second_covariant_down(arr.gamma, arr.dgamma, comp, dcomp, d2comp, 2)
    lap = np.einsum("bca,bcaij->bij", arr.ginv, nab2)
    return TensorValue(lap[0], ("d", "d"))


def divergence_ric(m: ChartMetric, p, mode: str = "dual") -> TensorValue:
    """(div Ric)_i = g^{jk} nabla_k R_ij at p."""
    step = layer_steps(mode)[0]
    pts = _point(m, p, stencil=3 * step)
    arr = curvature_arrays(m, pts, mode=mode)
    (dric,) = fd_first_multi(lambda q: (curvature_arrays(m, q, mode=mode).ricci,),
                             pts, step, scale_steps=(mode == "dual"))
    nab = covariant_from_partials(arr.gamma, arr.ricci, dric, ("d", "d"))
    div = np.einsum("bjk,bkij->bi", arr.ginv, nab)
    return TensorValue(div[0], ("d",))
