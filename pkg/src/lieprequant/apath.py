"""A-paths, A-homotopies via the b-equation, the xi-flow and concatenation.

An A-path is stored as its base path samples plus fiber coordinates
``a[i]`` expressed in the chart of sample ``i``.  Families are stacked rows
over a :class:`SphereGrid`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from ._fields import T, SymField
from .algebroid import Algebroid, Connection
from .geometry import Atlas, BasePath, GeometryError, SphereGrid, grid_derivative

TAU_PATH = 1e-4
TAU_ODE = 1e-6
TAU_HOM = 1e-3


class APathError(ValueError):
    pass


class DivergenceError(APathError):
    pass


class EndpointMismatch(APathError):
    pass


def _transform(A: Algebroid, src, dst, X_src, v) -> np.ndarray:
    return np.einsum("...ij,...j->...i", A.fiber_map(src, dst, X_src), v)


@dataclass(frozen=True, eq=False)
class APath:
    algebroid: Algebroid
    base: BasePath
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.base.n + 1, self.algebroid.rank):
            raise APathError("fiber samples must be (N+1, r)")

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def charts(self) -> np.ndarray:
        return self.base.charts

    @property
    def coords(self) -> np.ndarray:
        return self.base.coords

    def anchored(self) -> np.ndarray:
        return np.einsum("nui,ni->nu", self.algebroid.anchor(self.charts, self.coords), self.values)

    def residual(self) -> float:
        """``max_i |rho(gamma_i) a_i - gamma'(t_i)|``."""
        if self.algebroid.dimension == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.anchored() - self.base.velocity(), axis=-1)))

    def reversed(self) -> "APath":
        return APath(self.algebroid, self.base.reversed(), -self.values[::-1])

    def values_in(self, chart: int) -> np.ndarray:
        return _transform(self.algebroid, self.charts, chart, self.coords, self.values)

    @classmethod
    def zero(cls, A: Algebroid, chart: int, point, n: int) -> "APath":
        return cls(A, BasePath.constant(A.atlas, chart, point, n), np.zeros((n + 1, A.rank)))

    @classmethod
    def lift(cls, A: Algebroid, base: BasePath, extra=None) -> "APath":
        """Least-norm lift ``a = rho^+ gamma'`` (the tangent lift when ``rho = I``).

        ``extra`` adds a component in the kernel directions, e.g. the scalar of
        an extension.
        """
        vel = base.velocity()
        rho = A.anchor(base.charts, base.coords)
        a = np.einsum("niu,nu->ni", np.linalg.pinv(rho), vel) if A.dimension else np.zeros((base.n + 1, A.rank))
        if extra is not None:
            a = a + np.asarray(extra, dtype=float)
        return cls(A, base, a)


@dataclass(frozen=True, eq=False)
class APathFamily:
    """Rows ``a_{eps_j}`` over a grid of base paths; ``values[j, i]`` in the chart of sample ``(j, i)``."""

    algebroid: Algebroid
    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != self.grid.shape + (self.algebroid.rank,):
            raise APathError("family values must be (M+1, N+1, r)")

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape

    def row(self, j: int) -> APath:
        return APath(self.algebroid, self.grid.row(j), self.values[j])

    def residual(self) -> float:
        if self.algebroid.dimension == 0:
            return 0.0
        g = self.grid
        vel = grid_derivative(g.atlas, g.charts, g.coords, axis=1)
        rho = self.algebroid.anchor(g.charts, g.coords)
        return float(np.max(np.linalg.norm(np.einsum("...ui,...i->...u", rho, self.values) - vel, axis=-1)))

    @classmethod
    def from_rows(cls, rows: list[APath]) -> "APathFamily":
        grid = SphereGrid.from_rows([r.base for r in rows])
        return cls(rows[0].algebroid, grid, np.stack([r.values for r in rows]))

    @classmethod
    def lift(cls, A: Algebroid, grid: SphereGrid, extra=None) -> "APathFamily":
        """Row-wise least-norm lift ``a = rho^+ d_t g`` (the right-translated derivative for ``TM``)."""
        vel = grid_derivative(grid.atlas, grid.charts, grid.coords, axis=1)
        if A.dimension:
            rho = A.anchor(grid.charts, grid.coords)
            a = np.einsum("...iu,...u->...i", np.linalg.pinv(rho), vel)
        else:
            a = np.zeros(grid.shape + (A.rank,))
        if extra is not None:
            a = a + extra
        return cls(A, grid, a)

    @classmethod
    def constant(cls, a: APath, n_eps: int) -> "APathFamily":
        grid = SphereGrid(a.algebroid.atlas, np.tile(a.charts, (n_eps + 1, 1)), np.tile(a.coords, (n_eps + 1, 1, 1)))
        return cls(a.algebroid, grid, np.tile(a.values, (n_eps + 1, 1, 1)))


# --------------------------------------------------------------------------
# the b-equation
# --------------------------------------------------------------------------

_MID_INTERIOR = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0
_MID_FIRST = np.array([5.0, 15.0, -5.0, 1.0]) / 16.0
_MID_LAST = np.array([1.0, -5.0, 15.0, 5.0]) / 16.0


def _midpoint_stencils(n: int):
    """For each step ``i -> i+1``: 4 sample indices and cubic weights for the midpoint."""
    idx = np.zeros((n, 4), dtype=int)
    w = np.zeros((n, 4))
    for i in range(n):
        if i == 0:
            idx[i], w[i] = np.arange(4), _MID_FIRST
        elif i == n - 1:
            idx[i], w[i] = np.arange(n - 3, n + 1), _MID_LAST
        else:
            idx[i], w[i] = np.arange(i - 1, i + 3), _MID_INTERIOR
    return idx, w


def _equation_data(A: Algebroid, conn: Connection, family: APathFamily, chart: int):
    """Source ``S`` and matrix ``L`` of ``db/dt = S + L b`` with everything in ``chart``."""
    g = family.grid
    target = np.full(g.shape, chart)
    with np.errstate(all="ignore"):
        X = g.atlas.transition(g.charts, target, g.coords)
        a = _transform(A, g.charts, target, g.coords, family.values)
        da_de = grid_derivative(g.atlas, g.charts, g.coords, axis=0, values=family.values,
                                fiber_map=A.fiber_map, target=target)
        dg_de = grid_derivative(g.atlas, g.charts, g.coords, axis=0, target=target)
        ok = np.all(np.isfinite(X), axis=-1) & g.atlas.contains(target, np.where(np.isfinite(X), X, 0.0))
        Xs = np.where(ok[..., None], X, 0.0)
        Gam = conn.christoffel(target, Xs)
        rho = A.anchor(target, Xs)
        C = A.structure_at(target, Xs)
    S = da_de + np.einsum("...u,...uik,...i->...k", dg_de, Gam, a)
    L = -np.einsum("...uj,...uik,...i->...kj", rho, Gam, a) - np.einsum("...ijk,...i->...kj", C, a)
    return S, L


def solve_b(A: Algebroid, connection: Connection | None, family: APathFamily, blowup: float = 1e6) -> np.ndarray:
    """Solve ``d_t b - d_eps a = T(a, b)``, ``b(eps, 0) = 0`` row by row with RK4.

    Returns ``b[j, i]`` in the chart of sample ``(j, i)``.
    """
    conn = connection or Connection.flat(A)
    g = family.grid
    M1, N1 = g.shape
    n = N1 - 1
    if n < 3 or M1 < 6:
        raise APathError("solve_b needs at least 4 samples in t and 6 in eps")
    charts_used = np.unique(g.charts)
    nc = A.atlas.n_charts
    S_all = np.zeros((nc,) + g.shape + (A.rank,))
    L_all = np.zeros((nc,) + g.shape + (A.rank, A.rank))
    for c in charts_used:
        S_all[c], L_all[c] = _equation_data(A, conn, family, int(c))
    idx, w = _midpoint_stencils(n)
    rows = np.arange(M1)
    h = 1.0 / n
    b = np.zeros((M1, A.rank))
    out = np.zeros(g.shape + (A.rank,))
    for i in range(n):
        c = g.charts[:, i]
        if i > 0:
            prev = g.charts[:, i - 1]
            moved = prev != c
            if np.any(moved):
                X_prev = g.atlas.transition(c[moved], prev[moved], g.coords[moved, i])
                b[moved] = _transform(A, prev[moved], c[moved], X_prev, b[moved])
        S0, L0 = S_all[c, rows, i], L_all[c, rows, i]
        S1, L1 = S_all[c, rows, i + 1], L_all[c, rows, i + 1]
        Sm = np.einsum("k,jk...->j...", w[i], S_all[c[:, None], rows[:, None], idx[i][None, :]])
        Lm = np.einsum("k,jk...->j...", w[i], L_all[c[:, None], rows[:, None], idx[i][None, :]])
        k1 = S0 + np.einsum("jkl,jl->jk", L0, b)
        k2 = Sm + np.einsum("jkl,jl->jk", Lm, b + 0.5 * h * k1)
        k3 = Sm + np.einsum("jkl,jl->jk", Lm, b + 0.5 * h * k2)
        k4 = S1 + np.einsum("jkl,jl->jk", L1, b + h * k3)
        b = b + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(b)) or np.max(np.abs(b)) > blowup:
            raise DivergenceError(f"b grew beyond {blowup:g} at step {i}")
        nxt = g.charts[:, i + 1]
        moved = nxt != c
        stored = b.copy()
        if np.any(moved):
            stored[moved] = _transform(A, c[moved], nxt[moved], g.atlas.transition(nxt[moved], c[moved], g.coords[moved, i + 1]), b[moved])
        out[:, i + 1] = stored
    return out


@dataclass(frozen=True)
class HomotopyReport:
    verdict: bool
    residual: float
    threshold: float
    b: np.ndarray

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "residual": self.residual, "threshold": self.threshold}


def is_homotopy(A: Algebroid, family: APathFamily, connection: Connection | None = None, tol: float = TAU_HOM) -> HomotopyReport:
    """Verdict ``max_j |b(eps_j, 1)| <= tol * max(1, |a|_inf)``."""
    b = solve_b(A, connection, family)
    residual = float(np.max(np.linalg.norm(b[:, -1], axis=-1)))
    scale = max(1.0, float(np.max(np.abs(family.values), initial=0.0)))
    return HomotopyReport(residual <= tol * scale, residual, tol * scale, b)


# --------------------------------------------------------------------------
# variations and the xi-flow
# --------------------------------------------------------------------------


class VariationField:
    """Time-dependent section ``eta(t, x)`` per chart, vanishing at ``t = 0`` and ``t = 1``."""

    def __init__(self, algebroid: Algebroid, fields):
        fields = tuple(fields)
        if len(fields) != algebroid.atlas.n_charts:
            raise APathError("one field per chart is required")
        for f in fields:
            if f.shape != (algebroid.rank,) or not f.time_dependent:
                raise APathError("variation fields are time-dependent sections of shape (r,)")
            for t0 in (0, 1):
                if any(sp.simplify(e.subs(T, t0)) != 0 for e in f.array):
                    raise APathError("variation must vanish at t = 0 and t = 1")
        self.algebroid = algebroid
        self.fields = fields
        self.dt = tuple(f.time_derivative() for f in fields)
        self.dx = tuple(f.jacobian() for f in fields)

    def _eval(self, fields, charts, t, X):
        d = self.algebroid.dimension
        X = np.asarray(X, dtype=float).reshape(-1, d) if d else np.zeros((np.size(t), 0))
        t = np.broadcast_to(np.asarray(t, dtype=float), (X.shape[0],))
        charts = np.broadcast_to(np.asarray(charts), (X.shape[0],))
        out = np.zeros((X.shape[0],) + fields[0].shape)
        for c in np.unique(charts):
            m = charts == c
            out[m] = fields[int(c)](t[m], X[m])
        return out

    def value(self, charts, t, X):
        return self._eval(self.fields, charts, t, X)

    def time_derivative(self, charts, t, X):
        return self._eval(self.dt, charts, t, X)

    def jacobian(self, charts, t, X):
        """``J[n, mu, k] = d_mu eta^k``."""
        return self._eval(self.dx, charts, t, X)

    @classmethod
    def from_expressions(cls, A: Algebroid, exprs) -> "VariationField":
        from ._fields import coordinate_symbols, parse_expr

        arr = sp.Array([parse_expr(e, A.dimension) for e in exprs])
        f = SymField(arr, coordinate_symbols(A.dimension), time_dependent=True)
        return cls(A, [f] * A.atlas.n_charts)


@dataclass(frozen=True)
class Variation:
    """Tangent vector to A-path space along a path: base part ``dgamma`` and fiber part ``da``."""

    base: np.ndarray
    fiber: np.ndarray

    def norm(self) -> float:
        return float(np.sqrt(np.mean(np.sum(self.base**2, -1)) + np.mean(np.sum(self.fiber**2, -1))))

    def scaled(self, s: float) -> "Variation":
        return Variation(self.base * s, self.fiber * s)


def _xi_rhs(A: Algebroid, eta: VariationField, charts, t, X, a):
    rho = A.anchor(charts, X)
    e = eta.value(charts, t, X)
    dX = np.einsum("nui,ni->nu", rho, e)
    da = (
        eta.time_derivative(charts, t, X)
        + A.bracket(charts, X, a, e)
        + np.einsum("nuk,nu->nk", eta.jacobian(charts, t, X), np.einsum("nui,ni->nu", rho, a))
    )
    return dX, da


def xi_generator(A: Algebroid, eta: VariationField, a0: APath) -> Variation:
    """The infinitesimal action ``X_eta`` at ``a0``."""
    dX, da = _xi_rhs(A, eta, a0.charts, a0.base.times, a0.coords, a0.values)
    return Variation(dX, da)


def xi_flow(A: Algebroid, eta: VariationField, a0: APath, eps_max: float = 1.0, steps: int = 64) -> APath:
    """Flow ``a0`` along the action of ``eta`` for parameter ``eps_max``.

    The base moves by the flow of ``rho(eta_t)`` and the fiber obeys
    ``da/deps = d_t eta + [a, eta] + (d eta)(rho a)``, the equation of the
    xi-section restricted to the path (the extension terms cancel).
    """
    charts = a0.charts.copy()
    X = a0.coords.copy()
    a = a0.values.copy()
    t = a0.base.times
    h = eps_max / steps
    atlas = A.atlas
    for _ in range(steps):
        k1x, k1a = _xi_rhs(A, eta, charts, t, X, a)
        k2x, k2a = _xi_rhs(A, eta, charts, t, X + 0.5 * h * k1x, a + 0.5 * h * k1a)
        k3x, k3a = _xi_rhs(A, eta, charts, t, X + 0.5 * h * k2x, a + 0.5 * h * k2a)
        k4x, k4a = _xi_rhs(A, eta, charts, t, X + h * k3x, a + h * k3a)
        X = X + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        a = a + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        if not np.all(atlas.contains(charts, X)):
            raise GeometryError("xi-flow left the atlas")
        new, Xn = atlas.canonical(charts, X)
        moved = new != charts
        if np.any(moved):
            a[moved] = _transform(A, charts[moved], new[moved], X[moved], a[moved])
        charts, X = new, Xn
    return APath(A, BasePath(atlas, charts, X), a)


# --------------------------------------------------------------------------
# concatenation and resampling
# --------------------------------------------------------------------------


def bump(s):
    """Degree-7 smoothstep: monotone, first three derivatives zero at both ends.

    The vanishing third derivative keeps a concatenation C^3 at the junction,
    which the fourth-order velocity stencils need to stay accurate there.
    """
    s = np.asarray(s, dtype=float)
    return s**4 * (35 - 84 * s + 70 * s**2 - 20 * s**3)


def bump_speed(s):
    s = np.asarray(s, dtype=float)
    return 140 * s**3 * (1 - s) ** 3


_NODES = 6


def _lagrange(x, k_nodes: int = _NODES):
    """Lagrange weights on nodes ``0..k-1`` at positions ``x``."""
    x = np.asarray(x, dtype=float)[..., None]
    nodes = np.arange(float(k_nodes))
    w = np.ones(x.shape[:-1] + (k_nodes,))
    for k in range(k_nodes):
        for m in range(k_nodes):
            if m != k:
                w[..., k] *= (x[..., 0] - nodes[m]) / (nodes[k] - nodes[m])
    return w


def resample(atlas: Atlas, charts, coords, s, values=None, fiber_map=None):
    """Quintic interpolation of chart-tagged samples at times ``s`` in ``[0, 1]``.

    Each output is expressed in the chart of the nearest-left source sample.
    """
    n = len(charts) - 1
    k = _NODES
    if n < k - 1:
        raise APathError(f"resampling needs at least {k} samples")
    s = np.asarray(s, dtype=float)
    i = np.clip(np.floor(s * n).astype(int), 0, n - 1)
    start = np.clip(i - k // 2 + 1, 0, n - k + 1)
    nodes = start[:, None] + np.arange(k)[None, :]
    w = _lagrange(s * n - start)
    tgt = np.broadcast_to(charts[i][:, None], nodes.shape)
    pts = atlas.transition(charts[nodes], tgt, coords[nodes])
    X = np.einsum("nk,nkd->nd", w, pts)
    out_vals = None
    if values is not None:
        vals = values[nodes]
        if fiber_map is not None:
            vals = np.einsum("nkij,nkj->nki", fiber_map(charts[nodes], tgt, coords[nodes]), vals)
        out_vals = np.einsum("nk,nkr->nr", w, vals)
    return charts[i].copy(), X, out_vals


def _same_point(atlas: Atlas, c0, x0, c1, x1, tol: float) -> bool:
    y = atlas.transition(np.array([c1]), np.array([c0]), np.asarray(x1, float)[None])[0]
    return float(np.linalg.norm(y - x0)) <= tol


def _concat_parts(first, second, n_out: int):
    """Sample times of the two halves of a concatenation and their bump reparametrization."""
    u = np.linspace(0.0, 1.0, n_out + 1)
    lo = u <= 0.5
    s_lo, s_hi = bump(2 * u[lo]), bump(2 * u[~lo] - 1)
    v_lo, v_hi = 2 * bump_speed(2 * u[lo]), 2 * bump_speed(2 * u[~lo] - 1)
    return lo, (s_lo, v_lo), (s_hi, v_hi)


def concatenate_paths(p1: BasePath, p2: BasePath, tol: float = 1e-10) -> BasePath:
    """``p1`` after ``p2``: runs ``p2`` first, then ``p1``."""
    atlas = p1.atlas
    if not _same_point(atlas, *p1.start(), *p2.end(), tol=tol):
        raise EndpointMismatch("end of the first path differs from the start of the second")
    n_out = p1.n + p2.n
    lo, (s2, _), (s1, _) = _concat_parts(p2, p1, n_out)
    c2, X2, _ = resample(atlas, p2.charts, p2.coords, s2)
    c1, X1, _ = resample(atlas, p1.charts, p1.coords, s1)
    return BasePath(atlas, np.concatenate([c2, c1]), np.concatenate([X2, X1]))


def concatenate(a1: APath, a2: APath, tol: float = 1e-10) -> APath:
    """``a1`` after ``a2`` with the bump reparametrization on each half."""
    A = a1.algebroid
    atlas = A.atlas
    if not _same_point(atlas, *a1.base.start(), *a2.base.end(), tol=tol):
        raise EndpointMismatch("end of the first path differs from the start of the second")
    n_out = a1.n + a2.n
    lo, (s2, v2), (s1, v1) = _concat_parts(a2, a1, n_out)
    c2, X2, b2 = resample(atlas, a2.charts, a2.coords, s2, a2.values, A.fiber_map)
    c1, X1, b1 = resample(atlas, a1.charts, a1.coords, s1, a1.values, A.fiber_map)
    base = BasePath(atlas, np.concatenate([c2, c1]), np.concatenate([X2, X1]))
    vals = np.concatenate([v2[:, None] * b2, v1[:, None] * b1])
    return APath(A, base, vals)


def reverse(a: APath) -> APath:
    return a.reversed()


def dR_lift(group_path) -> APath:
    """Right-translated derivative ``a(t) = dR_{g(t)^{-1}} g'(t)`` of a path in an s-fiber."""
    return group_path.groupoid.right_derivative(group_path)
