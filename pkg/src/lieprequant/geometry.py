"""Chart-based manifolds, 2-forms, sampled paths and spheres, and quadrature.

Points are carried as ``(chart, coords)`` pairs.  Grids store one chart index
per sample; derivatives along a grid axis are taken with 5-point fourth-order
stencils after moving every stencil neighbour into the chart of the sample
being differentiated, so the result is a genuine coordinate derivative in that
chart.  Double integrals use composite Simpson in both grid directions.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.integrate import simpson

from ._fields import SymField, coordinate_symbols, parse_expr


class GeometryError(ValueError):
    pass


class PointOutsideOverlap(GeometryError):
    pass


class ChartDomainError(GeometryError):
    pass


class EndpointDriftError(GeometryError):
    pass


class QuadratureDegeneracyWarning(UserWarning):
    pass


# --------------------------------------------------------------------------
# Atlases
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    name: str
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    radius: float = math.inf

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        inside = np.all((X > np.asarray(self.lower)) & (X < np.asarray(self.upper)), axis=-1)
        if math.isfinite(self.radius):
            inside &= np.linalg.norm(X, axis=-1) <= self.radius
        return inside


class Atlas:
    """A finite atlas from the closed catalog: euclidean(d), sphere2, torus2, products."""

    def __init__(self, kind: str, dimension: int, charts: Sequence[Chart], factors: Sequence["Atlas"] = ()):
        self.kind = kind
        self.dimension = dimension
        self.charts = tuple(charts)
        self.factors = tuple(factors)

    # -- catalog ---------------------------------------------------------
    @classmethod
    def euclidean(cls, d: int) -> "Atlas":
        inf = (math.inf,) * d
        return cls(f"euclidean({d})", d, [Chart("R%d" % d, tuple(-x for x in inf), inf)])

    @classmethod
    def point(cls) -> "Atlas":
        return cls.euclidean(0)

    @classmethod
    def sphere2(cls) -> "Atlas":
        return cls(
            "sphere2",
            2,
            [Chart("north", (-2.5, -2.5), (2.5, 2.5), 2.0), Chart("south", (-2.5, -2.5), (2.5, 2.5), 2.0)],
        )

    @classmethod
    def torus2(cls) -> "Atlas":
        # single periodic chart; coordinates are kept on the universal cover
        return cls("torus2", 2, [Chart("T2", (-math.inf,) * 2, (math.inf,) * 2)])

    @classmethod
    def product(cls, first: "Atlas", second: "Atlas") -> "Atlas":
        charts = [
            Chart(f"{a.name}x{b.name}", a.lower + b.lower, a.upper + b.upper)
            for a in first.charts
            for b in second.charts
        ]
        return cls(f"product({first.kind},{second.kind})", first.dimension + second.dimension, charts, (first, second))

    def __repr__(self) -> str:
        return f"Atlas({self.kind})"

    @property
    def n_charts(self) -> int:
        return len(self.charts)

    @property
    def is_product(self) -> bool:
        return bool(self.factors)

    @property
    def has_embedding(self) -> bool:
        if self.is_product:
            return all(f.has_embedding for f in self.factors)
        return self.kind in ("sphere2",) or self.kind.startswith("euclidean")

    def _split_chart(self, idx):
        nb = self.factors[1].n_charts
        idx = np.asarray(idx)
        return idx // nb, idx % nb

    def _join_chart(self, i1, i2):
        return np.asarray(i1) * self.factors[1].n_charts + np.asarray(i2)

    # -- chart maps ----------------------------------------------------------
    def contains(self, charts, X) -> np.ndarray:
        charts = np.broadcast_to(np.asarray(charts), np.shape(X)[:-1])
        out = np.zeros(charts.shape, dtype=bool)
        for c in np.unique(charts):
            m = charts == c
            out[m] = self.charts[int(c)].contains(np.asarray(X)[m])
        return out

    def transition(self, src, dst, X) -> np.ndarray:
        """Map coordinates ``X`` from charts ``src`` to charts ``dst`` (vectorized)."""
        X = np.asarray(X, dtype=float)
        src = np.broadcast_to(np.asarray(src), X.shape[:-1])
        dst = np.broadcast_to(np.asarray(dst), X.shape[:-1])
        if self.is_product:
            a, b = self.factors
            s1, s2 = self._split_chart(src)
            d1, d2 = self._split_chart(dst)
            return np.concatenate(
                [a.transition(s1, d1, X[..., : a.dimension]), b.transition(s2, d2, X[..., a.dimension :])], axis=-1
            )
        if self.kind == "sphere2":
            flip = src != dst
            if not np.any(flip):
                return X.copy()
            out = X.copy()
            r2 = np.sum(X[flip] ** 2, axis=-1, keepdims=True)
            out[flip] = X[flip] / r2
            return out
        return X.copy()

    def jacobian(self, src, dst, X) -> np.ndarray:
        """``d(dst coords)/d(src coords)`` at ``X`` given in ``src`` coordinates."""
        X = np.asarray(X, dtype=float)
        shape = X.shape[:-1]
        d = self.dimension
        src = np.broadcast_to(np.asarray(src), shape)
        dst = np.broadcast_to(np.asarray(dst), shape)
        if self.is_product:
            a, b = self.factors
            s1, s2 = self._split_chart(src)
            d1, d2 = self._split_chart(dst)
            J = np.zeros(shape + (d, d))
            J[..., : a.dimension, : a.dimension] = a.jacobian(s1, d1, X[..., : a.dimension])
            J[..., a.dimension :, a.dimension :] = b.jacobian(s2, d2, X[..., a.dimension :])
            return J
        J = np.broadcast_to(np.eye(d), shape + (d, d)).copy()
        if self.kind == "sphere2":
            flip = src != dst
            if np.any(flip):
                Y = X[flip]
                r2 = np.sum(Y**2, axis=-1)[:, None, None]
                J[flip] = (np.eye(2) * r2 - 2.0 * Y[:, :, None] * Y[:, None, :]) / r2**2
        return J

    def canonical(self, charts, X) -> tuple[np.ndarray, np.ndarray]:
        """Re-express points in their preferred chart (sphere: the chart with |z| <= 1)."""
        X = np.asarray(X, dtype=float)
        charts = np.broadcast_to(np.asarray(charts), X.shape[:-1]).astype(int)
        if self.is_product:
            a, b = self.factors
            s1, s2 = self._split_chart(charts)
            c1, X1 = a.canonical(s1, X[..., : a.dimension])
            c2, X2 = b.canonical(s2, X[..., a.dimension :])
            return self._join_chart(c1, c2).astype(int), np.concatenate([X1, X2], axis=-1)
        if self.kind == "sphere2":
            far = np.sum(X**2, axis=-1) > 1.0
            new = np.where(far, 1 - charts, charts)
            return new, self.transition(charts, new, X)
        return charts.copy(), X.copy()

    # -- embeddings (sphere2, euclidean and their products) --------------------
    def to_ambient(self, charts, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        charts = np.broadcast_to(np.asarray(charts), X.shape[:-1])
        if self.is_product:
            a, b = self.factors
            s1, s2 = self._split_chart(charts)
            return np.concatenate([a.to_ambient(s1, X[..., : a.dimension]), b.to_ambient(s2, X[..., a.dimension :])], -1)
        if self.kind == "sphere2":
            r2 = np.sum(X**2, axis=-1)
            den = 1.0 + r2
            sign = np.where(charts == 0, 1.0, -1.0)
            return np.stack([2 * X[..., 0] / den, 2 * X[..., 1] / den, sign * (1.0 - r2) / den], axis=-1)
        if self.kind.startswith("euclidean"):
            return X.copy()
        raise GeometryError(f"{self.kind} has no ambient embedding")

    def from_ambient(self, P) -> tuple[np.ndarray, np.ndarray]:
        """Canonical chart coordinates of ambient points."""
        P = np.asarray(P, dtype=float)
        if self.is_product:
            a, b = self.factors
            na = a.ambient_dimension
            c1, X1 = a.from_ambient(P[..., :na])
            c2, X2 = b.from_ambient(P[..., na:])
            return self._join_chart(c1, c2).astype(int), np.concatenate([X1, X2], axis=-1)
        if self.kind == "sphere2":
            P = P / np.linalg.norm(P, axis=-1, keepdims=True)
            north = P[..., 2] >= 0.0
            den = np.where(north, 1.0 + P[..., 2], 1.0 - P[..., 2])
            X = P[..., :2] / den[..., None]
            return np.where(north, 0, 1).astype(int), X
        if self.kind.startswith("euclidean"):
            return np.zeros(P.shape[:-1], dtype=int), P.copy()
        raise GeometryError(f"{self.kind} has no ambient embedding")

    @property
    def ambient_dimension(self) -> int:
        if self.is_product:
            return sum(f.ambient_dimension for f in self.factors)
        return 3 if self.kind == "sphere2" else self.dimension


def transition_point(atlas: Atlas, from_chart: int, to_chart: int, point) -> np.ndarray:
    """Coordinates in ``to_chart`` of the point given in ``from_chart``."""
    X = np.asarray(point, dtype=float).reshape(1, -1)
    if not atlas.charts[from_chart].contains(X)[0]:
        raise PointOutsideOverlap(f"{point} is not in chart {atlas.charts[from_chart].name}")
    Y = atlas.transition(from_chart, to_chart, X)
    if not atlas.charts[to_chart].contains(Y)[0]:
        raise PointOutsideOverlap(f"{point} is outside the overlap of charts {from_chart} and {to_chart}")
    return Y[0]


# --------------------------------------------------------------------------
# 2-forms
# --------------------------------------------------------------------------


class TwoFormField:
    """A 2-form given per chart by an antisymmetric coefficient matrix field."""

    def __init__(self, atlas: Atlas, coefficients: Sequence[SymField], closed: bool = True, name: str = "form"):
        if len(coefficients) != atlas.n_charts:
            raise GeometryError("one coefficient field per chart is required")
        d = atlas.dimension
        for f in coefficients:
            if f.shape != (d, d):
                raise GeometryError(f"coefficient field must be {d}x{d}")
            M = sp.Matrix(f.array.tolist())
            if M + M.T != sp.zeros(d, d):
                raise GeometryError("coefficients must be antisymmetric")
        self.atlas = atlas
        self.coefficients = tuple(coefficients)
        self.closed = closed
        self.name = name

    def matrix(self, charts, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        shape = X.shape[:-1]
        charts = np.broadcast_to(np.asarray(charts), shape)
        flatX = X.reshape(int(np.prod(shape)), self.atlas.dimension)
        flatC = charts.reshape(-1)
        out = np.zeros((flatX.shape[0], self.atlas.dimension, self.atlas.dimension))
        for c in np.unique(flatC):
            m = flatC == c
            out[m] = self.coefficients[int(c)](flatX[m])
        return out.reshape(shape + out.shape[1:])

    def scaled(self, factor: float) -> "TwoFormField":
        return TwoFormField(self.atlas, [f.scaled(factor) for f in self.coefficients], self.closed, f"{factor}*{self.name}")

    def __add__(self, other: "TwoFormField") -> "TwoFormField":
        return TwoFormField(
            self.atlas,
            [a + b for a, b in zip(self.coefficients, other.coefficients)],
            self.closed and other.closed,
            f"{self.name}+{other.name}",
        )

    def exterior_derivative_residual(self, charts, X, step: float = 1e-4) -> float:
        """Max |d omega| by central differences at the given points."""
        d = self.atlas.dimension
        if d < 3:
            return 0.0
        X = np.atleast_2d(np.asarray(X, dtype=float))
        charts = np.broadcast_to(np.asarray(charts), X.shape[:-1])
        dW = np.zeros(X.shape[:-1] + (d, d, d))
        for mu in range(d):
            e = np.zeros(d)
            e[mu] = step
            dW[..., mu, :, :] = (self.matrix(charts, X + e) - self.matrix(charts, X - e)) / (2 * step)
        res = dW + np.transpose(dW, (0, 2, 3, 1)) + np.transpose(dW, (0, 3, 1, 2))
        return float(np.max(np.abs(res)))

    def transformation_residual(self, src: int, dst: int, X) -> float:
        """Max deviation from the pullback rule ``Omega_src = J^T Omega_dst J`` on an overlap."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = self.atlas.transition(src, dst, X)
        J = self.atlas.jacobian(src, dst, X)
        lhs = self.matrix(src, X)
        rhs = np.einsum("nai,nab,nbj->nij", J, self.matrix(dst, Y), J)
        return float(np.max(np.abs(lhs - rhs)))


def eval_two_form(form: TwoFormField, chart: int, point, v, w) -> float:
    X = np.asarray(point, dtype=float).reshape(1, -1)
    if not form.atlas.charts[chart].contains(X)[0]:
        raise ChartDomainError(f"{point} is outside chart {form.atlas.charts[chart].name}")
    W = form.matrix(chart, X)[0]
    v, w = np.asarray(v, dtype=float), np.asarray(w, dtype=float)
    # written so that swapping v and w flips the sign bit for bit
    return float(0.5 * (v @ W @ w - w @ W @ v))


def _antisym(coef: sp.Expr, d: int, i: int = 0, j: int = 1) -> sp.Array:
    M = sp.zeros(d, d)
    M[i, j] = coef
    M[j, i] = -coef
    return sp.Array(M.tolist())


def zero_form(atlas: Atlas) -> TwoFormField:
    d = atlas.dimension
    syms = coordinate_symbols(d)
    return TwoFormField(atlas, [SymField(sp.Array(sp.zeros(d, d).tolist()), syms) for _ in atlas.charts], name="0")


def coordinate_form(atlas: Atlas, i: int = 0, j: int = 1, scale: float = 1.0) -> TwoFormField:
    """``scale * dx_i ^ dx_j`` on a single-chart atlas."""
    if atlas.n_charts != 1:
        raise GeometryError("coordinate forms are defined on single-chart atlases")
    d = atlas.dimension
    return TwoFormField(atlas, [SymField(_antisym(sp.nsimplify(scale), d, i, j), coordinate_symbols(d))], name="dx^dy")


def polynomial_form(atlas: Atlas, coefficients: dict[tuple[int, int], str], closed: bool | None = None) -> TwoFormField:
    """Single-chart form from ``{(i, j): expression}`` upper-triangular entries."""
    if atlas.n_charts != 1:
        raise GeometryError("polynomial forms are defined on single-chart atlases")
    d = atlas.dimension
    M = sp.zeros(d, d)
    for (i, j), text in coefficients.items():
        e = parse_expr(text, d)
        M[i, j] += e
        M[j, i] -= e
    form = TwoFormField(atlas, [SymField(sp.Array(M.tolist()), coordinate_symbols(d))], name="polynomial")
    if closed is None:
        form.closed = _symbolically_closed(M, coordinate_symbols(d))
    else:
        form.closed = closed
    return form


def _symbolically_closed(M: sp.Matrix, syms) -> bool:
    d = len(syms)
    for a in range(d):
        for b in range(a + 1, d):
            for c in range(b + 1, d):
                e = sp.diff(M[b, c], syms[a]) + sp.diff(M[c, a], syms[b]) + sp.diff(M[a, b], syms[c])
                if sp.simplify(e) != 0:
                    return False
    return True


def _sphere_area_entries(scale) -> list[sp.Array]:
    u, v = coordinate_symbols(2)
    density = sp.nsimplify(scale) / (sp.pi * (1 + u**2 + v**2) ** 2)
    return [_antisym(density, 2), _antisym(-density, 2)]


def scaled_area_form(atlas: Atlas, scale: float = 1.0) -> TwoFormField:
    """``scale`` times the unit-sphere area form divided by ``4 pi`` (total integral ``scale``)."""
    if atlas.kind != "sphere2":
        raise GeometryError("scaled_area needs the sphere2 atlas")
    syms = coordinate_symbols(2)
    return TwoFormField(atlas, [SymField(e, syms) for e in _sphere_area_entries(scale)], name=f"{scale}*area")


def product_sum_form(atlas: Atlas, scales: Sequence[float]) -> TwoFormField:
    """``s1 pr1*sigma + s2 pr2*sigma`` on sphere2 x sphere2 with normalized area forms."""
    if not (atlas.is_product and all(f.kind == "sphere2" for f in atlas.factors)):
        raise GeometryError("sum_on_product needs sphere2 x sphere2")
    syms = coordinate_symbols(4)
    s1, s2 = scales
    coeffs = []
    for c in range(atlas.n_charts):
        c1, c2 = (int(x) for x in atlas._split_chart(c))
        M = sp.zeros(4, 4)
        for k, (cf, s) in enumerate(((c1, s1), (c2, s2))):
            a, b = syms[2 * k], syms[2 * k + 1]
            dens = sp.nsimplify(s) / (sp.pi * (1 + a**2 + b**2) ** 2) * (1 if cf == 0 else -1)
            M[2 * k, 2 * k + 1] = dens
            M[2 * k + 1, 2 * k] = -dens
        coeffs.append(SymField(sp.Array(M.tolist()), syms))
    return TwoFormField(atlas, coeffs, name=f"{s1}*s1+{s2}*s2")


# --------------------------------------------------------------------------
# Sampled paths and spheres
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BasePath:
    """Samples ``gamma(t_i)``, ``t_i = i/N``, each tagged with its chart."""

    atlas: Atlas
    charts: np.ndarray
    coords: np.ndarray
    smoothness: str = "C2"

    def __post_init__(self):
        charts = np.asarray(self.charts, dtype=int)
        coords = np.asarray(self.coords, dtype=float)
        object.__setattr__(self, "charts", charts)
        object.__setattr__(self, "coords", coords)
        if coords.ndim != 2 or coords.shape[1] != self.atlas.dimension or charts.shape != coords.shape[:1]:
            raise GeometryError("path samples must be (N+1, d) with one chart per sample")
        if len(charts) > 1 and not np.all(_neighbours_share_chart(self.atlas, charts, coords, axis=0)):
            raise GeometryError("consecutive samples do not share a chart")

    @property
    def n(self) -> int:
        return len(self.charts) - 1

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n + 1)

    def start(self) -> tuple[int, np.ndarray]:
        return int(self.charts[0]), self.coords[0].copy()

    def end(self) -> tuple[int, np.ndarray]:
        return int(self.charts[-1]), self.coords[-1].copy()

    def velocity(self) -> np.ndarray:
        return grid_derivative(self.atlas, self.charts, self.coords, axis=0)

    def second_difference_bound(self) -> float:
        """Max |second difference| * N^2, the C^2 heuristic."""
        if self.n < 2:
            return 0.0
        acc = grid_derivative(self.atlas, self.charts, self.coords, axis=0, order=2)
        return float(np.max(np.linalg.norm(acc, axis=-1)))

    def ambient(self) -> np.ndarray:
        return self.atlas.to_ambient(self.charts, self.coords)

    def point_in(self, index: int, chart: int) -> np.ndarray:
        return self.atlas.transition(self.charts[index], chart, self.coords[index][None])[0]

    def reversed(self) -> "BasePath":
        return BasePath(self.atlas, self.charts[::-1], self.coords[::-1])

    @classmethod
    def constant(cls, atlas: Atlas, chart: int, point, n: int) -> "BasePath":
        return cls(atlas, np.full(n + 1, chart), np.tile(np.asarray(point, float), (n + 1, 1)))

    @classmethod
    def from_ambient(cls, atlas: Atlas, P) -> "BasePath":
        charts, X = atlas.from_ambient(P)
        return cls(atlas, charts, X)


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Samples ``g(eps_j, t_i)`` on an ``(M+1) x (N+1)`` grid, rows indexed by eps."""

    atlas: Atlas
    charts: np.ndarray
    coords: np.ndarray
    basepointed: bool = False

    def __post_init__(self):
        charts = np.asarray(self.charts, dtype=int)
        coords = np.asarray(self.coords, dtype=float)
        object.__setattr__(self, "charts", charts)
        object.__setattr__(self, "coords", coords)
        if coords.ndim != 3 or coords.shape[:2] != charts.shape or coords.shape[2] != self.atlas.dimension:
            raise GeometryError("grid samples must be (M+1, N+1, d) with one chart per sample")
        for axis in (0, 1):
            if not np.all(_neighbours_share_chart(self.atlas, charts, coords, axis=axis)):
                raise GeometryError("neighbouring grid samples do not share a chart")
        if self.basepointed and self.boundary_drift() > 1e-12:
            raise GeometryError("grid marked basepointed but its boundary is not a single point")

    @property
    def shape(self) -> tuple[int, int]:
        return self.charts.shape

    def row(self, j: int) -> BasePath:
        return BasePath(self.atlas, self.charts[j], self.coords[j])

    def boundary_drift(self) -> float:
        P = self._boundary_points()
        return float(np.max(np.linalg.norm(P - P[0], axis=-1)))

    def _boundary_points(self) -> np.ndarray:
        c0 = int(self.charts[0, 0])
        edges_c = np.concatenate([self.charts[0], self.charts[-1], self.charts[:, 0], self.charts[:, -1]])
        edges_x = np.concatenate([self.coords[0], self.coords[-1], self.coords[:, 0], self.coords[:, -1]])
        return self.atlas.transition(edges_c, np.full(len(edges_c), c0), edges_x)

    def endpoint_drift(self) -> float:
        """Variation of the columns t=0 and t=1 (fixed-endpoint homotopy check)."""
        drift = 0.0
        for col in (0, -1):
            c0 = int(self.charts[0, col])
            X = self.atlas.transition(self.charts[:, col], c0, self.coords[:, col])
            drift = max(drift, float(np.max(np.linalg.norm(X - X[0], axis=-1))))
        return drift

    def ambient(self) -> np.ndarray:
        return self.atlas.to_ambient(self.charts, self.coords)

    @classmethod
    def from_ambient(cls, atlas: Atlas, P, basepointed: bool = False) -> "SphereGrid":
        charts, X = atlas.from_ambient(P)
        return cls(atlas, charts, X, basepointed)

    @classmethod
    def from_rows(cls, rows: Sequence[BasePath], basepointed: bool = False) -> "SphereGrid":
        return cls(rows[0].atlas, np.stack([r.charts for r in rows]), np.stack([r.coords for r in rows]), basepointed)


def _neighbours_share_chart(atlas: Atlas, charts, coords, axis: int) -> np.ndarray:
    """Whether each sample's successor along ``axis`` lies in the sample's chart."""
    n = charts.shape[axis]
    if n < 2:
        return np.ones(1, dtype=bool)
    idx = np.arange(n - 1)
    c_here = np.take(charts, idx, axis=axis)
    c_next = np.take(charts, idx + 1, axis=axis)
    x_next = np.take(coords, idx + 1, axis=axis)
    moved = atlas.transition(c_next, c_here, x_next)
    return atlas.contains(c_here, moved)


# --------------------------------------------------------------------------
# Stencils
# --------------------------------------------------------------------------

_D1 = {
    "c": ((-2, -1, 0, 1, 2), (1.0, -8.0, 0.0, 8.0, -1.0)),
    0: ((0, 1, 2, 3, 4), (-25.0, 48.0, -36.0, 16.0, -3.0)),
    1: ((-1, 0, 1, 2, 3), (-3.0, -10.0, 18.0, -6.0, 1.0)),
    -2: ((-3, -2, -1, 0, 1), (-1.0, 6.0, -18.0, 10.0, 3.0)),
    -1: ((-4, -3, -2, -1, 0), (3.0, -16.0, 36.0, -48.0, 25.0)),
}
_D2 = {
    "c": ((-2, -1, 0, 1, 2), (-1.0, 16.0, -30.0, 16.0, -1.0)),
    0: ((0, 1, 2, 3, 4, 5), (45.0, -154.0, 214.0, -156.0, 61.0, -10.0)),
    1: ((-1, 0, 1, 2, 3, 4), (10.0, -15.0, -4.0, 14.0, -6.0, 1.0)),
    -2: ((-4, -3, -2, -1, 0, 1), (1.0, -6.0, 14.0, -4.0, -15.0, 10.0)),
    -1: ((-5, -4, -3, -2, -1, 0), (-10.0, 61.0, -156.0, 214.0, -154.0, 45.0)),
}


def _stencil_table(n: int, order: int):
    """Per-index (offsets, weights) arrays of shape (n, k)."""
    table = _D1 if order == 1 else _D2
    k = 6 if order == 2 else 5
    offs = np.zeros((n, k), dtype=int)
    wts = np.zeros((n, k))
    for i in range(n):
        key = 0 if i == 0 else 1 if i == 1 else -1 if i == n - 1 else -2 if i == n - 2 else "c"
        o, w = table[key]
        o = np.array(o + (0,) * (k - len(o)))
        w = np.array(w + (0.0,) * (k - len(w)))
        offs[i], wts[i] = o, w
    return offs, wts


def grid_derivative(
    atlas: Atlas,
    charts,
    coords,
    axis: int,
    spacing: float | None = None,
    *,
    values=None,
    fiber_map: Callable | None = None,
    target=None,
    order: int = 1,
) -> np.ndarray:
    """Fourth-order finite difference along ``axis`` of a chart-tagged grid.

    Without ``values`` the grid positions are differentiated; with ``values``
    (fiber vectors tagged by the same charts) those are differentiated, with
    ``fiber_map(src, dst, X)`` moving a neighbour's vector into the target
    chart.  ``target`` gives the chart in which each derivative is expressed
    (default: the sample's own chart).
    """
    charts = np.asarray(charts)
    coords = np.asarray(coords, dtype=float)
    n = charts.shape[axis]
    if n < 6:
        raise GeometryError("at least 6 samples are needed along a differentiated axis")
    h = spacing if spacing is not None else 1.0 / (n - 1)
    target = charts if target is None else np.asarray(target)
    offs, wts = _stencil_table(n, order)
    shape = [1] * charts.ndim
    shape[axis] = n
    base_idx = np.arange(n).reshape(shape)
    out = None
    for k in range(offs.shape[1]):
        o = offs[:, k].reshape(shape)
        w = wts[:, k].reshape(shape)
        if not np.any(w):
            continue
        nb = np.broadcast_to(base_idx + o, charts.shape)
        nb_charts = np.take_along_axis(charts, nb, axis=axis)
        nb_coords = np.take_along_axis(coords, nb[..., None], axis=axis)
        if values is None:
            term = atlas.transition(nb_charts, target, nb_coords)
        else:
            vals = np.asarray(values)
            extra = vals.ndim - charts.ndim
            nb_vals = np.take_along_axis(vals, nb.reshape(nb.shape + (1,) * extra), axis=axis)
            if fiber_map is None:
                term = nb_vals
            else:
                F = fiber_map(nb_charts, target, nb_coords)
                term = np.einsum("...ij,...j->...i", F, nb_vals)
        w = np.broadcast_to(w, charts.shape).reshape(charts.shape + (1,) * (term.ndim - charts.ndim))
        out = w * term if out is None else out + w * term
    return out / (12.0 * h**order)


# --------------------------------------------------------------------------
# Quadrature
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Integral:
    value: float
    warnings: tuple[str, ...] = ()

    def __float__(self) -> float:
        return self.value


def simpson2(values: np.ndarray) -> float:
    """Composite Simpson over the unit square; ``values[j, i]`` at ``(eps_j, t_i)``."""
    M, N = values.shape[0] - 1, values.shape[1] - 1
    inner = simpson(values, dx=1.0 / N, axis=1)
    return float(simpson(inner, dx=1.0 / M))


def simpson1(values: np.ndarray) -> float:
    return float(simpson(np.asarray(values), dx=1.0 / (len(values) - 1), axis=0))


def pullback_density(form: TwoFormField, grid: SphereGrid) -> tuple[np.ndarray, float]:
    """``omega(d_t g, d_eps g)`` on the grid and the fraction of degenerate samples."""
    dt = grid_derivative(grid.atlas, grid.charts, grid.coords, axis=1)
    de = grid_derivative(grid.atlas, grid.charts, grid.coords, axis=0)
    W = form.matrix(grid.charts, grid.coords)
    density = np.einsum("...i,...ij,...j->...", dt, W, de)
    zero = (np.linalg.norm(dt, axis=-1) < 1e-14) | (np.linalg.norm(de, axis=-1) < 1e-14)
    return density, float(np.mean(zero))


def integrate_over_sphere(form: TwoFormField, grid: SphereGrid) -> Integral:
    """Integral of ``omega(d_t g, d_eps g)`` over the unit square."""
    if form.atlas is not grid.atlas and form.atlas.kind != grid.atlas.kind:
        raise GeometryError("form and grid live on different atlases")
    density, degenerate = pullback_density(form, grid)
    notes = ()
    if degenerate > 0.5:
        notes = (f"quadrature degeneracy: {degenerate:.0%} of samples have a vanishing derivative stencil",)
        warnings.warn(notes[0], QuadratureDegeneracyWarning, stacklevel=2)
    return Integral(simpson2(density), notes)


def integrate_over_homotopy(form: TwoFormField, grid: SphereGrid, tol: float = 1e-12) -> Integral:
    """Same quadrature as :func:`integrate_over_sphere` for a fixed-endpoint homotopy."""
    drift = grid.endpoint_drift()
    if drift > tol:
        raise EndpointDriftError(f"endpoint columns vary by {drift:.3e}")
    return integrate_over_sphere(form, grid)
