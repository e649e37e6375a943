"""Geodesics, parallel frames, Jacobi fields, and the index form.

A fan of unit-speed rays is integrated from a base point as one adaptive
4(5) Runge-Kutta system; each ray carries its parallel orthonormal frame
E_1..E_{n-1} (orthogonal to the velocity) and the Jacobi fields Y_i with
Y_i(0) = 0, (cov d/dt Y_i)(0) = E_i.  The geodesic-sphere area density is
the Gram determinant square root

    J(theta, r) = sqrt(det g(Y_i, Y_j))

with J ~ r^{n-1} as r -> 0 and the first conjugate point where det hits 0.
The directional curvature form A(Y, Y) = R(Y, gamma', Y, gamma') drives both
the Jacobi equation (cov)^2 Y + A# Y = 0 and the index form

    I(Y, Y) = int_0^L |Y'|^2 - A(Y, Y) dt .
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import simpson, solve_ivp

from .catalog import SolitonInstance
from .errors import (
    ConjugatePoint,
    EndpointNonzero,
    LeftDomain,
    NonContracting,
)
from .geometry import (
    ChartMetric,
    connection_arrays,
    curvature_arrays,
    metric_jets,
    metric_values,
)

_RTOL = 1e-11
_ATOL = 1e-12


@dataclass(frozen=True)
class GeodesicState:
    position: np.ndarray
    velocity: np.ndarray
    arclength: float


@dataclass(frozen=True)
class JacobiBundle:
    """Frame and Jacobi data of one ray at a given arclength."""

    arclength: float
    frame: np.ndarray          # (n-1, n) parallel orthonormal fields
    jacobi: np.ndarray         # (n-1, n) Jacobi fields
    jacobi_deriv: np.ndarray   # (n-1, n) covariant derivatives of the Jacobi fields
    gram: np.ndarray           # (n-1, n-1) g(Y_i, Y_j)


def _orthonormal_basis(g: np.ndarray, first: np.ndarray) -> np.ndarray:
    """Complete a unit vector to a g-orthonormal basis (rows), Gram-Schmidt."""
    n = g.shape[0]
    basis = [first]
    for k in range(n):
        v = np.zeros(n)
        v[k] = 1.0
        for b in basis:
            v = v - (b @ g @ v) * b
        nrm = float(np.sqrt(v @ g @ v))
        if nrm > 1e-8:
            basis.append(v / nrm)
        if len(basis) == n:
            break
    if len(basis) != n:
        raise RuntimeError("failed to complete orthonormal basis")
    return np.array(basis)


def unit_direction(m: ChartMetric, p: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Normalize a tangent vector to unit g-length at p."""
    g = metric_values(m, p)[0]
    theta = np.asarray(theta, dtype=float)
    nrm = float(np.sqrt(theta @ g @ theta))
    if nrm == 0:
        raise ValueError("zero direction")
    return theta / nrm


def circle_directions(m: ChartMetric, p: np.ndarray, count: int = 64):
    """Uniform-angle direction set on a surface; weights sum to 2*pi."""
    g = metric_values(m, p)[0]
    basis = np.linalg.inv(np.linalg.cholesky(g).T)    # columns g-orthonormal
    ang = 2.0 * np.pi * np.arange(count) / count
    dirs = (basis @ np.stack([np.cos(ang), np.sin(ang)])).T
    w = np.full(count, 2.0 * np.pi / count)
    return dirs, w


def lebedev26_directions(m: ChartMetric, p: np.ndarray):
    """Lebedev-style 26-point spherical rule (degree 7); weights sum to 4*pi."""
    pts, wts = [], []
    for k in range(3):
        for s in (1.0, -1.0):
            v = np.zeros(3)
            v[k] = s
            pts.append(v)
            wts.append(1.0 / 21.0)
    for a in range(3):
        for b in range(a + 1, 3):
            for sa in (1.0, -1.0):
                for sb in (1.0, -1.0):
                    v = np.zeros(3)
                    v[a], v[b] = sa, sb
                    pts.append(v / np.sqrt(2.0))
                    wts.append(4.0 / 105.0)
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            for sz in (1.0, -1.0):
                pts.append(np.array([sx, sy, sz]) / np.sqrt(3.0))
                wts.append(27.0 / 840.0)
    g = metric_values(m, p)[0]
    basis = np.linalg.inv(np.linalg.cholesky(g).T)
    dirs = np.array([basis @ v for v in pts])
    return dirs, 4.0 * np.pi * np.array(wts)


def default_directions(m: ChartMetric, p: np.ndarray, count: int = 64):
    if m.dim == 2:
        return circle_directions(m, p, count)
    if m.dim == 3:
        return lebedev26_directions(m, p)
    raise ValueError("direction quadrature provided for n = 2 and n = 3 charts")


# ---------------------------------------------------------------------------
# ray fans


class RayFan:
    """Dense solution of geodesics + frames + Jacobi fields for a direction fan."""

    def __init__(self, m: ChartMetric, p: np.ndarray, dirs: np.ndarray, length: float):
        self.metric = m
        self.origin = np.asarray(p, dtype=float)
        self.n = m.dim
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        g0 = metric_values(m, self.origin)[0]
        norms = np.sqrt(np.einsum("di,ij,dj->d", dirs, g0, dirs))
        self.dirs = dirs / norms[:, None]
        self.count = self.dirs.shape[0]
        self.length = float(length)
        self._solve()

    # state layout per ray: x(n), v(n), E((n-1)n), Y((n-1)n), Z((n-1)n)
    @property
    def _size(self) -> int:
        n = self.n
        return 2 * n + 3 * (n - 1) * n

    def _initial_state(self) -> np.ndarray:
        n, d = self.n, self.count
        g0 = metric_values(self.metric, self.origin)[0]
        y0 = np.zeros((d, self._size))
        orient = np.empty(d)
        for idx in range(d):
            theta = self.dirs[idx]
            frame = _orthonormal_basis(g0, theta)[1:]     # (n-1, n)
            y0[idx, :n] = self.origin
            y0[idx, n:2 * n] = theta
            y0[idx, 2 * n:2 * n + (n - 1) * n] = frame.ravel()
            # Y(0) = 0; Z(0) = E(0)
            z0 = 2 * n + 2 * (n - 1) * n
            y0[idx, z0:] = frame.ravel()
            # orientation making the signed density ~ +r^{n-1} near r = 0
            orient[idx] = np.sign(np.linalg.det(np.column_stack([*frame, theta])))
        self._orient = orient
        return y0.ravel()

    def _rhs(self, t: float, yflat: np.ndarray) -> np.ndarray:
        n, d = self.n, self.count
        y = yflat.reshape(d, self._size)
        x = y[:, :n]
        v = y[:, n:2 * n]
        nf = (n - 1) * n
        e = y[:, 2 * n:2 * n + nf].reshape(d, n - 1, n)
        yy = y[:, 2 * n + nf:2 * n + 2 * nf].reshape(d, n - 1, n)
        z = y[:, 2 * n + 2 * nf:].reshape(d, n - 1, n)
        arr = curvature_arrays(self.metric, x)
        gam = arr.gamma
        dv = -np.einsum("bkij,bi,bj->bk", gam, v, v)
        de = -np.einsum("bkij,bi,baj->bak", gam, v, e)
        dy = z - np.einsum("bkij,bi,baj->bak", gam, v, yy)
        acurv = np.einsum("piqkr,pq,pr->pik", arr.riemann, v, v)
        dz = (-np.einsum("bkij,bi,baj->bak", gam, v, z)
              - np.einsum("bks,bsi,bai->bak", arr.ginv, acurv, yy))
        out = np.empty_like(y)
        out[:, :n] = v
        out[:, n:2 * n] = dv
        out[:, 2 * n:2 * n + nf] = de.reshape(d, nf)
        out[:, 2 * n + nf:2 * n + 2 * nf] = dy.reshape(d, nf)
        out[:, 2 * n + 2 * nf:] = dz.reshape(d, nf)
        return out.ravel()

    def _exit_event(self, box):
        lo, hi = box.lo, box.hi
        n, d, size = self.n, self.count, self._size

        def event(t, yflat):
            x = yflat.reshape(d, size)[:, :n]
            return float(min((x - lo).min(), (hi - x).min()))

        event.terminal = True
        event.direction = -1.0
        return event

    def _solve(self):
        box = self.metric.evaluation_box()
        events = None if box is None else [self._exit_event(box)]
        sol = solve_ivp(self._rhs, (0.0, self.length), self._initial_state(),
                        method="RK45", rtol=_RTOL, atol=_ATOL,
                        dense_output=True, events=events)
        if events and sol.t_events[0].size:
            raise LeftDomain(float(sol.t_events[0][0]))
        if not sol.success:
            raise RuntimeError(f"geodesic integration failed: {sol.message}")
        self.sol = sol

    # -- dense evaluation ---------------------------------------------------

    def states(self, ts: np.ndarray):
        n, d = self.n, self.count
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        raw = self.sol.sol(ts)                  # (d*size, T)
        y = raw.reshape(d, self._size, ts.size)
        nf = (n - 1) * n
        return {
            "t": ts,
            "x": np.moveaxis(y[:, :n, :], 2, 1),            # (d, T, n)
            "v": np.moveaxis(y[:, n:2 * n, :], 2, 1),
            "E": np.moveaxis(y[:, 2 * n:2 * n + nf, :], 2, 1).reshape(d, ts.size, n - 1, n),
            "Y": np.moveaxis(y[:, 2 * n + nf:2 * n + 2 * nf, :], 2, 1).reshape(d, ts.size, n - 1, n),
            "Z": np.moveaxis(y[:, 2 * n + 2 * nf:, :], 2, 1).reshape(d, ts.size, n - 1, n),
        }

    def gram(self, r: float) -> np.ndarray:
        st = self.states([r])
        x = st["x"][:, 0]
        yy = st["Y"][:, 0]
        g = metric_values(self.metric, x)
        return np.einsum("dai,dij,dbj->dab", yy, g, yy)

    def signed_density(self, r) -> np.ndarray:
        """Oriented volume det(Y_1, ..., Y_{n-1}, v) sqrt(det g); equals
        sqrt(det Gram) before the first conjugate point and crosses zero there.
        Shape (count,) for scalar r, (count, len(r)) otherwise."""
        rs = np.atleast_1d(np.asarray(r, dtype=float))
        st = self.states(rs)
        x = st["x"].reshape(-1, self.n)
        g = metric_values(self.metric, x).reshape(self.count, rs.size, self.n, self.n)
        cols = np.concatenate([st["Y"], st["v"][:, :, None, :]], axis=2)  # (d,T,n,n) rows=vectors
        vol = np.linalg.det(np.swapaxes(cols, 2, 3))      # columns = vectors
        out = self._orient[:, None] * vol * np.sqrt(np.linalg.det(g))
        return out[:, 0] if np.isscalar(r) or np.asarray(r).ndim == 0 else out

    def density(self, r) -> np.ndarray:
        """J(theta, r) for every ray; ConjugatePoint if the signed volume <= 0."""
        out = self.signed_density(r)
        if np.any(out <= 0):
            rs = np.atleast_1d(np.asarray(r, dtype=float))
            flat = np.atleast_2d(out.reshape(self.count, -1))
            bad = np.argwhere(flat <= 0)[0]
            raise ConjugatePoint(
                f"density nonpositive at r={rs[bad[1]]:.6g} (ray {bad[0]})")
        return out

    def frame_error(self, r: float) -> np.ndarray:
        st = self.states([r])
        x = st["x"][:, 0]
        e = st["E"][:, 0]
        g = metric_values(self.metric, x)
        gr = np.einsum("dai,dij,dbj->dab", e, g, e)
        return np.abs(gr - np.eye(self.n - 1)).reshape(self.count, -1).max(axis=1)

    def speed_error(self, ts: np.ndarray) -> float:
        st = self.states(ts)
        x = st["x"].reshape(-1, self.n)
        v = st["v"].reshape(-1, self.n)
        g = metric_values(self.metric, x)
        sp = np.einsum("bi,bij,bj->b", v, g, v)
        return float(np.abs(sp - 1.0).max())

    def jacobi_residual(self, ts: np.ndarray, h: float = 1e-4) -> float:
        """Max |cov^2 Y + A# Y| by finite differences of the dense solution."""
        worst = 0.0
        for t in np.atleast_1d(ts):
            stm, st0, stp = (self.states([t + s]) for s in (-h, 0.0, h))
            x0 = st0["x"][:, 0]
            v0 = st0["v"][:, 0]
            arr = curvature_arrays(self.metric, x0)
            # covariant second derivative from the Z field (already covariant once)
            dz = (stp["Z"][:, 0] - stm["Z"][:, 0]) / (2.0 * h)
            covz = dz + np.einsum("bkij,bi,baj->bak", arr.gamma, v0, st0["Z"][:, 0])
            acurv = np.einsum("piqkr,pq,pr->pik", arr.riemann, v0, v0)
            rhs = np.einsum("bks,bsi,bai->bak", arr.ginv, acurv, st0["Y"][:, 0])
            worst = max(worst, float(np.abs(covz + rhs).max()))
        return worst


# ---------------------------------------------------------------------------
# public operations


def integrate_geodesic(m: ChartMetric, p, theta, length: float,
                       samples: int = 200) -> list[GeodesicState]:
    """Unit-speed geodesic from p with initial direction theta.

    Uses the adaptive 4(5) pair with tight tolerances; raises LeftDomain with
    the exit arclength if the trajectory reaches the chart boundary.
    """
    p = np.asarray(p, dtype=float)
    m.check_points(p[None, :])
    theta = unit_direction(m, p, np.asarray(theta, dtype=float))
    n = m.dim

    def rhs(t, y):
        x, v = y[:n], y[n:]
        g, dg, _ = metric_jets(m, x[None, :])
        gam = connection_arrays(np.linalg.inv(g), dg)[0]
        return np.concatenate([v, -np.einsum("kij,i,j->k", gam, v, v)])

    events = None
    box = m.evaluation_box()
    if box is not None:
        lo, hi = box.lo, box.hi

        def exit_event(t, y):
            return float(min((y[:n] - lo).min(), (hi - y[:n]).min()))

        exit_event.terminal = True
        exit_event.direction = -1.0
        events = [exit_event]

    sol = solve_ivp(rhs, (0.0, length), np.concatenate([p, theta]),
                    method="RK45", rtol=_RTOL, atol=_ATOL,
                    dense_output=True, events=events)
    if events and sol.t_events[0].size:
        raise LeftDomain(float(sol.t_events[0][0]))
    ts = np.linspace(0.0, length, samples + 1)
    vals = sol.sol(ts)
    return [GeodesicState(vals[:n, i].copy(), vals[n:, i].copy(), float(ts[i]))
            for i in range(ts.size)]


def jacobi_fan(m: ChartMetric, p, dirs, length: float) -> RayFan:
    return RayFan(m, np.asarray(p, dtype=float), dirs, length)


def jacobi_density(m: ChartMetric, p, theta, r: float,
                   fan: Optional[RayFan] = None) -> dict:
    """Geodesic-sphere density J(theta, r) plus the Jacobi bundle behind it."""
    if fan is None:
        fan = RayFan(m, np.asarray(p, dtype=float), np.asarray(theta, dtype=float)[None, :], r)
    j = float(fan.density(r)[0])
    st = fan.states([r])
    bundle = JacobiBundle(
        arclength=float(r),
        frame=st["E"][0, 0],
        jacobi=st["Y"][0, 0],
        jacobi_deriv=st["Z"][0, 0],
        gram=fan.gram(r)[0],
    )
    return {"J": j, "bundle": bundle, "fan": fan}


def first_conjugate_point(m: ChartMetric, p, theta, r_max: float,
                          tol: float = 1e-10) -> float:
    """First zero of the signed Jacobi volume, located by bisection."""
    fan = RayFan(m, np.asarray(p, dtype=float),
                 np.asarray(theta, dtype=float)[None, :], r_max)
    grid = np.linspace(1e-3, r_max, 200)
    vals = fan.signed_density(grid)[0]
    idx = np.argwhere(vals <= 0)
    if idx.size == 0:
        raise ConjugatePoint(f"no conjugate point up to r={r_max}")
    hi = float(grid[idx[0, 0]])
    lo = float(grid[idx[0, 0] - 1]) if idx[0, 0] > 0 else 1e-3
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fan.signed_density(np.array([mid]))[0, 0] > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def spherical_mean(m: ChartMetric, p, u: Callable, r: float,
                   directions=None, fan: Optional[RayFan] = None) -> float:
    """h(r) = int u J dtheta / int J dtheta over the direction quadrature."""
    p = np.asarray(p, dtype=float)
    if directions is None:
        dirs, w = default_directions(m, p)
    else:
        dirs, w = directions
    if fan is None:
        fan = RayFan(m, p, dirs, r)
    st = fan.states([r])
    x = st["x"][:, 0]
    j = fan.density(r)
    uvals = np.array([float(u(x[i])) for i in range(x.shape[0])])
    return float((w * uvals * j).sum() / (w * j).sum())


def sphere_area(fan: RayFan, w: np.ndarray, r) -> np.ndarray:
    """S(r) = int J dtheta for the fan's direction weights."""
    rs = np.atleast_1d(np.asarray(r, dtype=float))
    j = fan.density(rs)
    j = j.reshape(fan.count, rs.size)
    return (w[:, None] * j).sum(axis=0)


def geodiff_check(m: ChartMetric, p, r_list, directions=None) -> list[float]:
    """max_theta |d/dr log(J/S)| at each radius, by 4th-order differences.

    The differentiation step is the r_list spacing, shrunk near r = 0 to keep
    the stencil inside (0, r]; J is evaluated from the dense fan solution.
    """
    p = np.asarray(p, dtype=float)
    if directions is None:
        dirs, w = default_directions(m, p)
    else:
        dirs, w = directions
    r_list = np.atleast_1d(np.asarray(r_list, dtype=float))
    spacing = float(np.diff(np.sort(r_list)).min()) if r_list.size > 1 else float(r_list[0]) / 4.0
    r_hi = float(r_list.max())
    fan = RayFan(m, p, dirs, r_hi + 2.5 * spacing)

    weights = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
    offs = np.array([-2.0, -1.0, 1.0, 2.0])
    out = []
    for r in r_list:
        h = min(spacing, r / 3.0)
        rs = r + offs * h
        logj = np.log(fan.density(rs).reshape(fan.count, 4))
        logs = np.log(sphere_area(fan, w, rs))
        dlogj = (weights[None, :] * logj).sum(axis=1) / h
        dlogs = float((weights * logs).sum() / h)
        out.append(float(np.abs(dlogj - dlogs).max()))
    return out


def log_area_derivative_identity(m: ChartMetric, p, r: float, directions=None) -> float:
    """|d/dr log S - spherical mean of d/dr log J| at radius r (exact in quadrature)."""
    p = np.asarray(p, dtype=float)
    dirs, w = default_directions(m, p) if directions is None else directions
    h = min(0.02, r / 4.0)
    fan = RayFan(m, p, dirs, r + 2.5 * h)
    weights = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
    rs = r + np.array([-2.0, -1.0, 1.0, 2.0]) * h
    j = fan.density(np.append(rs, r)).reshape(fan.count, 5)
    jr = j[:, 4]
    dlogj = (weights[None, :] * np.log(j[:, :4])).sum(axis=1) / h
    dlogs = float((weights * np.log(sphere_area(fan, w, rs))).sum() / h)
    mean_dlogj = float((w * dlogj * jr).sum() / (w * jr).sum())
    return abs(dlogs - mean_dlogj)


def ball_volume_area_ratio(m: ChartMetric, p, r: float, directions=None) -> float:
    """Vol(B_r) / S(r) via cumulative quadrature of S."""
    p = np.asarray(p, dtype=float)
    dirs, w = default_directions(m, p) if directions is None else directions
    fan = RayFan(m, p, dirs, r)
    ts = np.linspace(1e-6, r, 201)
    s = sphere_area(fan, w, ts)
    vol = float(simpson(s, x=ts))
    return vol / float(s[-1])


def index_form(m: ChartMetric, p, theta, length: float, field: Callable,
               field_prime: Optional[Callable] = None, nodes: int = 801) -> float:
    """I(Y,Y) for Y = sum_i h_i(t) E_i along the geodesic from p.

    ``field`` maps arclength to the (n-1,) frame coefficients h_i and must
    vanish at both endpoints; ``field_prime`` may supply dh/dt analytically,
    otherwise a 4th-order difference of ``field`` is used.
    """
    p = np.asarray(p, dtype=float)
    theta = np.asarray(theta, dtype=float)
    h0 = np.atleast_1d(np.asarray(field(0.0), dtype=float))
    hL = np.atleast_1d(np.asarray(field(length), dtype=float))
    if max(np.abs(h0).max(), np.abs(hL).max()) > 1e-8:
        raise EndpointNonzero("variation field must vanish at t=0 and t=L")

    fan = RayFan(m, p, theta[None, :], length)
    ts = np.linspace(0.0, length, nodes)
    st = fan.states(ts)
    x = st["x"][0]
    v = st["v"][0]
    e = st["E"][0]                                     # (T, n-1, n)
    arr = curvature_arrays(m, x)
    acurv = np.einsum("piqkr,pq,pr->pik", arr.riemann, v, v)
    aframe = np.einsum("tai,tik,tbk->tab", e, acurv, e)

    hvals = np.array([np.atleast_1d(field(t)) for t in ts], dtype=float)
    if field_prime is not None:
        hdot = np.array([np.atleast_1d(field_prime(t)) for t in ts], dtype=float)
    else:
        dt = ts[1] - ts[0]
        hdot = np.gradient(hvals, dt, axis=0, edge_order=2)
    integrand = (hdot ** 2).sum(axis=1) - np.einsum("ta,tab,tb->t", hvals, aframe, hvals)
    return float(simpson(integrand, x=ts))


def sine_field(length: float, component: int, total: int):
    """The classical comparison field h(t) = sin(pi t / L) on one frame leg."""
    freq = np.pi / length

    def h(t):
        out = np.zeros(total)
        out[component] = np.sin(freq * t)
        return out

    def hp(t):
        out = np.zeros(total)
        out[component] = freq * np.cos(freq * t)
        return out

    return h, hp


def diameter_bound(s: SolitonInstance, c_f: float, check_samples: int = 200) -> float:
    """Upper bound sqrt(n pi^2 (n - 1 + 2 C) / mu) on minimal-loop length.

    Requires mu > 0 and C >= max |f| over the sampled chart (the chart max is
    all that is checkable on a coordinate box; for noncompact instances the
    caller owns the global bound).
    """
    if s.mu <= 0:
        raise NonContracting("diameter estimate needs a contracting instance (mu > 0)")
    if s.gradient:
        from .geometry import scalar_jets
        pts = s.sample_points(check_samples, seed=0)
        fmax = float(np.abs(scalar_jets(s.potential, pts)[0]).max())
        if c_f < fmax - 1e-12:
            raise ValueError(f"C={c_f} is below max|f|={fmax:.6g} on the sampled chart")
    n = s.dim
    return float(np.sqrt(n * np.pi ** 2 * (n - 1 + 2.0 * c_f) / s.mu))
