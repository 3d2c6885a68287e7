"""Desk-scale groupoids, multiplicative forms, their infinitesimal data and theta reconstruction.

Three kinds are supported:

* ``pair``: arrows ``(x, y)`` of ``M x M`` with ``t = pr1``, ``s = pr2``; arrow
  coordinates live on the product atlas.
* ``bundle_of_circles``: arrows ``(x, angle)``; angles are kept on the
  universal cover and multiply by addition.
* ``matrix_group``: a closed matrix group given by a basis of its Lie
  algebra; the base is a point.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import sympy as sp

from ._fields import SymField, coordinate_symbols
from .algebroid import (
    Algebroid,
    Cochain,
    bundle_of_abelian_algebras,
    d_A,
    lie_algebra,
    tangent,
)
from .apath import APath, Variation
from .geometry import Atlas, BasePath, TwoFormField, grid_derivative, simpson1


class GroupoidError(ValueError):
    pass


class SourceDriftError(GroupoidError):
    pass


class TransgressionMismatch(GroupoidError):
    pass


def so3_basis() -> list[np.ndarray]:
    L = []
    for i, j, k in ((1, 2, 0), (2, 0, 1), (0, 1, 2)):
        E = np.zeros((3, 3))
        E[i, j], E[j, i] = -1.0, 1.0
        L.append(E)
    return L


def _random_sphere_points(rng, n):
    P = rng.normal(size=(n, 3))
    return P / np.linalg.norm(P, axis=-1, keepdims=True)


class DeskGroupoid:
    def __init__(self, kind: str, atlas: Atlas | None = None, basis: Sequence[np.ndarray] | None = None):
        if kind not in ("pair", "bundle_of_circles", "matrix_group"):
            raise GroupoidError(f"unsupported groupoid kind {kind!r}")
        self.kind = kind
        if kind == "matrix_group":
            self.basis = [np.asarray(b, dtype=float) for b in basis]
            self.atlas = Atlas.point()
            self._basis_mat = np.stack([b.ravel() for b in self.basis], axis=1)
        else:
            self.atlas = atlas
            self.basis = None
        if kind == "pair":
            self.arrow_atlas = Atlas.product(atlas, atlas)
        elif kind == "bundle_of_circles":
            self.arrow_atlas = Atlas.product(atlas, Atlas.euclidean(1))
        else:
            self.arrow_atlas = None
        self._algebroid = None

    @classmethod
    def pair(cls, atlas: Atlas) -> "DeskGroupoid":
        return cls("pair", atlas)

    @classmethod
    def bundle_of_circles(cls, atlas: Atlas) -> "DeskGroupoid":
        return cls("bundle_of_circles", atlas)

    @classmethod
    def matrix_group(cls, basis: Sequence[np.ndarray]) -> "DeskGroupoid":
        return cls("matrix_group", basis=basis)

    def __repr__(self) -> str:
        base = "point" if self.kind == "matrix_group" else self.atlas.kind
        return f"DeskGroupoid({self.kind}, {base})"

    @property
    def d(self) -> int:
        return self.atlas.dimension

    # -- Lie algebra coordinates (matrix groups) ----------------------------
    def algebra_coords(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        flat = X.reshape(X.shape[:-2] + (-1,))
        coef, *_ = np.linalg.lstsq(self._basis_mat, flat.reshape(-1, flat.shape[-1]).T, rcond=None)
        return coef.T.reshape(X.shape[:-2] + (len(self.basis),))

    def algebra_element(self, a) -> np.ndarray:
        return np.einsum("...i,ijk->...jk", np.asarray(a, dtype=float), np.stack(self.basis))

    def algebroid(self) -> Algebroid:
        if self._algebroid is None:
            if self.kind == "pair":
                self._algebroid = tangent(self.atlas)
            elif self.kind == "bundle_of_circles":
                self._algebroid = bundle_of_abelian_algebras(self.atlas, 1)
            else:
                # right-invariant fields bracket with the opposite of the commutator
                r = len(self.basis)
                C = np.zeros((r, r, r))
                for i in range(r):
                    for j in range(r):
                        comm = self.basis[i] @ self.basis[j] - self.basis[j] @ self.basis[i]
                        C[i, j] = -self.algebra_coords(comm)
                C = np.where(np.abs(C) < 1e-13, 0.0, C)
                C = 0.5 * (C - np.transpose(C, (1, 0, 2)))
                self._algebroid = lie_algebra(C, name="matrix_lie_algebra")
        return self._algebroid

    # -- structure maps ----------------------------------------------------
    # arrows: pair/circles -> (charts, coords) on the arrow atlas; matrix -> (n, k, k)
    def source(self, g):
        if self.kind == "pair":
            c, X = g
            _, c2 = self.arrow_atlas._split_chart(c)
            return c2, X[..., self.d :]
        if self.kind == "bundle_of_circles":
            c, X = g
            c1, _ = self.arrow_atlas._split_chart(c)
            return c1, X[..., : self.d]
        return None

    def target(self, g):
        if self.kind == "pair":
            c, X = g
            c1, _ = self.arrow_atlas._split_chart(c)
            return c1, X[..., : self.d]
        return self.source(g)

    def unit(self, charts, X):
        X = np.asarray(X, dtype=float)
        charts = np.broadcast_to(np.asarray(charts), X.shape[:-1])
        if self.kind == "pair":
            return self.arrow_atlas._join_chart(charts, charts), np.concatenate([X, X], axis=-1)
        if self.kind == "bundle_of_circles":
            return self.arrow_atlas._join_chart(charts, 0), np.concatenate([X, np.zeros(X.shape[:-1] + (1,))], -1)
        n = X.shape[0] if X.ndim > 1 else 1
        return np.broadcast_to(np.eye(self.basis[0].shape[0]), (n,) + self.basis[0].shape).copy()

    def multiply(self, g, h):
        """``g h`` for composable arrows (``s(g) = t(h)``)."""
        if self.kind == "pair":
            (cg, Xg), (ch, Xh) = g, h
            cx, _ = self.arrow_atlas._split_chart(cg)
            _, cz = self.arrow_atlas._split_chart(ch)
            return self.arrow_atlas._join_chart(cx, cz), np.concatenate([Xg[..., : self.d], Xh[..., self.d :]], -1)
        if self.kind == "bundle_of_circles":
            (cg, Xg), (ch, Xh) = g, h
            return cg, np.concatenate([Xg[..., : self.d], Xg[..., self.d :] + Xh[..., self.d :]], -1)
        return g @ h

    def inverse(self, g):
        if self.kind == "pair":
            c, X = g
            c1, c2 = self.arrow_atlas._split_chart(c)
            return self.arrow_atlas._join_chart(c2, c1), np.concatenate([X[..., self.d :], X[..., : self.d]], -1)
        if self.kind == "bundle_of_circles":
            c, X = g
            return c, np.concatenate([X[..., : self.d], -X[..., self.d :]], -1)
        return np.linalg.inv(g)

    def multiply_tangent(self, g, h, U, V):
        """``dm(U, V)`` for tangent vectors ``U`` at ``g`` and ``V`` at ``h`` with ``ds U = dt V``."""
        if self.kind == "pair":
            return np.concatenate([U[..., : self.d], V[..., self.d :]], -1)
        if self.kind == "bundle_of_circles":
            return np.concatenate([U[..., : self.d], U[..., self.d :] + V[..., self.d :]], -1)
        return U @ h + g @ V

    def same_arrow(self, g, h) -> np.ndarray:
        """Distance between arrows (angles compared modulo 2 pi)."""
        if self.kind == "matrix_group":
            return np.max(np.abs(g - h), axis=(-2, -1))
        (cg, Xg), (ch, Xh) = g, h
        Y = self.arrow_atlas.transition(ch, cg, Xh)
        diff = Xg - Y
        if self.kind == "bundle_of_circles":
            diff[..., self.d :] = (diff[..., self.d :] + np.pi) % (2 * np.pi) - np.pi
        return np.max(np.abs(diff), axis=-1)

    # -- sampling ------------------------------------------------------------
    def _sample_points(self, rng, n):
        if self.atlas.kind == "sphere2":
            return self.atlas.from_ambient(_random_sphere_points(rng, n))
        if self.atlas.is_product and self.atlas.has_embedding:
            P = np.concatenate([_random_sphere_points(rng, n) if f.kind == "sphere2" else rng.uniform(-1, 1, (n, f.dimension))
                                for f in self.atlas.factors], axis=-1)
            return self.atlas.from_ambient(P)
        return np.zeros(n, dtype=int), rng.uniform(-1.5, 1.5, size=(n, self.d))

    def sample_composable(self, rng: np.random.Generator, n: int):
        """Random composable ``(g, h)`` with composable tangent pairs ``(U1, V1)``, ``(U2, V2)``."""
        if self.kind == "matrix_group":
            g, h = (np.stack([scipy.linalg.expm(self.algebra_element(a)) for a in rng.normal(size=(n, len(self.basis)))])
                    for _ in range(2))
            vec = lambda base: np.einsum("nij,njk->nik", self.algebra_element(rng.normal(size=(n, len(self.basis)))), base)
            return g, h, (vec(g), vec(h)), (vec(g), vec(h))
        d = self.d
        cx, x = self._sample_points(rng, n)
        if self.kind == "pair":
            cy, y = self._sample_points(rng, n)
            cz, z = self._sample_points(rng, n)
            g = (self.arrow_atlas._join_chart(cx, cy), np.concatenate([x, y], -1))
            h = (self.arrow_atlas._join_chart(cy, cz), np.concatenate([y, z], -1))

            def pair_vectors():
                v1, v2, v3 = (rng.normal(size=(n, d)) for _ in range(3))
                return np.concatenate([v1, v2], -1), np.concatenate([v2, v3], -1)

            U1, V1 = pair_vectors()
            U2, V2 = pair_vectors()
            return g, h, (U1, V1), (U2, V2)
        th1, th2 = rng.uniform(-np.pi, np.pi, (2, n, 1))
        ch = self.arrow_atlas._join_chart(cx, 0)
        g = (ch, np.concatenate([x, th1], -1))
        h = (ch, np.concatenate([x, th2], -1))

        def circle_vectors():
            v = rng.normal(size=(n, d))
            return np.concatenate([v, rng.normal(size=(n, 1))], -1), np.concatenate([v, rng.normal(size=(n, 1))], -1)

        U1, V1 = circle_vectors()
        U2, V2 = circle_vectors()
        return g, h, (U1, V1), (U2, V2)

    def axiom_residuals(self, rng: np.random.Generator, n: int = 1000) -> dict:
        """Associativity, unit and inverse laws on random samples."""
        g, h, _, _ = self.sample_composable(rng, n)
        if self.kind == "matrix_group":
            k = self.sample_composable(rng, n)[0]
            unit = self.unit(None, np.zeros((n, 0)))
        elif self.kind == "pair":
            cz, z = self.source(h)
            cw, w = self._sample_points(rng, n)
            k = (self.arrow_atlas._join_chart(cz, cw), np.concatenate([z, w], -1))
        else:
            k = (g[0], np.concatenate([g[1][..., : self.d], rng.uniform(-np.pi, np.pi, (n, 1))], -1))
        assoc = self.same_arrow(self.multiply(self.multiply(g, h), k), self.multiply(g, self.multiply(h, k)))
        if self.kind == "matrix_group":
            left = self.same_arrow(self.multiply(unit, g), g)
            right = self.same_arrow(self.multiply(g, unit), g)
            inv = self.same_arrow(self.multiply(g, self.inverse(g)), unit)
        else:
            ut = self.unit(*self.target(g))
            us = self.unit(*self.source(g))
            left = self.same_arrow(self.multiply(ut, g), g)
            right = self.same_arrow(self.multiply(g, us), g)
            inv = self.same_arrow(self.multiply(g, self.inverse(g)), ut)
        return {k_: float(np.max(v)) for k_, v in
                (("associativity", assoc), ("left_unit", left), ("right_unit", right), ("inverse", inv))}

    # -- the algebroid inside the groupoid ------------------------------------
    def unit_frames(self, charts, X):
        """Tangent vectors at units: ``du(d/dx^mu)`` (n, d, D) and the frame of ``ker ds`` (n, r, D)."""
        X = np.asarray(X, dtype=float)
        n, d = X.shape[0], self.d
        if self.kind == "pair":
            du = np.concatenate([np.eye(d), np.eye(d)], -1)
            alpha = np.concatenate([np.eye(d), np.zeros((d, d))], -1)
        elif self.kind == "bundle_of_circles":
            du = np.concatenate([np.eye(d), np.zeros((d, 1))], -1)
            alpha = np.concatenate([np.zeros((1, d)), np.ones((1, 1))], -1)
        else:
            return np.zeros((n, 0) + self.basis[0].shape), np.broadcast_to(np.stack(self.basis), (n,) + (len(self.basis),) + self.basis[0].shape)
        return np.broadcast_to(du, (n,) + du.shape), np.broadcast_to(alpha, (n,) + alpha.shape)

    # -- right translation of s-fiber paths -------------------------------
    def right_derivative(self, path: "GroupPath", drift_tol: float = 1e-10) -> APath:
        A = self.algebroid()
        if self.kind == "pair":
            c, X = path.arrows
            cs, xs = self.source((c, X))
            ys = self.atlas.transition(cs, np.full_like(cs, cs[0]), xs)
            if np.max(np.abs(ys - ys[0])) > drift_tol:
                raise SourceDriftError("path leaves the source fiber")
            ct, xt = self.target((c, X))
            base = BasePath(self.atlas, ct, xt)
            return APath(A, base, base.velocity())
        if self.kind == "matrix_group":
            g = np.asarray(path.arrows, dtype=float)
            n = g.shape[0] - 1
            flat = g.reshape(n + 1, -1)
            dg = grid_derivative(Atlas.euclidean(flat.shape[1]), np.zeros(n + 1, dtype=int), flat, axis=0).reshape(g.shape)
            a = self.algebra_coords(np.einsum("nij,njk->nik", dg, np.linalg.inv(g)))
            base = BasePath.constant(self.atlas, 0, np.zeros(0), n)
            return APath(A, base, a)
        raise GroupoidError("right translation is implemented for pair and matrix groupoids")


@dataclass(frozen=True, eq=False)
class GroupPath:
    """Samples of a path of arrows in one s-fiber, starting at a unit."""

    groupoid: DeskGroupoid
    arrows: object


def pair_path(G: DeskGroupoid, path: BasePath, source_chart: int, source) -> GroupPath:
    """``g(t) = (gamma(t), x)`` in the pair groupoid."""
    n = path.n + 1
    src = np.tile(np.asarray(source, dtype=float), (n, 1))
    charts = G.arrow_atlas._join_chart(path.charts, np.full(n, source_chart))
    return GroupPath(G, (charts, np.concatenate([path.coords, src], -1)))


def one_parameter_path(G: DeskGroupoid, X, n: int) -> GroupPath:
    t = np.linspace(0.0, 1.0, n + 1)
    return GroupPath(G, np.stack([scipy.linalg.expm(s * np.asarray(X, dtype=float)) for s in t]))


# --------------------------------------------------------------------------
# Forms on groupoids
# --------------------------------------------------------------------------


class GroupoidForm:
    """A 1- or 2-form on the arrow space; ``evaluate(g, *vectors)`` is vectorized."""

    def __init__(self, groupoid: DeskGroupoid, degree: int, evaluator: Callable, field: TwoFormField | None = None,
                 name: str = "form"):
        if degree not in (1, 2):
            raise GroupoidError("forms of degree 1 or 2 only")
        self.groupoid = groupoid
        self.degree = degree
        self._evaluator = evaluator
        self.field = field
        self.name = name

    def evaluate(self, g, *vectors) -> np.ndarray:
        return self._evaluator(g, *vectors)


def _shift_symbols(expr_array: sp.Array, src, dst) -> sp.Array:
    return expr_array.subs(dict(zip(src, dst)), simultaneous=True)


def _block_form(G: DeskGroupoid, form: TwoFormField, s1: float, s2: float) -> TwoFormField:
    atlas = G.arrow_atlas
    d = G.d
    syms = coordinate_symbols(2 * d)
    base_syms = coordinate_symbols(d)
    fields = []
    for c in range(atlas.n_charts):
        c1, c2 = (int(v) for v in atlas._split_chart(c))
        M = sp.zeros(2 * d, 2 * d)
        W1 = _shift_symbols(form.coefficients[c1].array, base_syms, syms[:d])
        W2 = _shift_symbols(form.coefficients[c2].array, base_syms, syms[d:])
        for i in range(d):
            for j in range(d):
                M[i, j] = sp.nsimplify(s1) * W1[i, j]
                M[d + i, d + j] = sp.nsimplify(s2) * W2[i, j]
        fields.append(SymField(sp.Array(M.tolist()), syms))
    return TwoFormField(atlas, fields, closed=form.closed, name=f"{s1}pr1*{form.name}+{s2}pr2*{form.name}")


def _from_field(G: DeskGroupoid, F: TwoFormField, name: str) -> GroupoidForm:
    def evaluator(g, U, V):
        c, X = g
        return np.einsum("ni,nij,nj->n", U, F.matrix(c, X), V)

    return GroupoidForm(G, 2, evaluator, F, name)


def pullback_combination(G: DeskGroupoid, form: TwoFormField, s1: float, s2: float) -> GroupoidForm:
    """``s1 pr1* omega + s2 pr2* omega`` on the pair groupoid."""
    if G.kind != "pair":
        raise GroupoidError("pullback combinations live on pair groupoids")
    return _from_field(G, _block_form(G, form, s1, s2), f"{s1}pr1*+{s2}pr2*")


def pair_groupoid_form(form: TwoFormField) -> GroupoidForm:
    """``pr1* omega - pr2* omega`` on ``M x M``."""
    G = DeskGroupoid.pair(form.atlas)
    return pullback_combination(G, form, 1.0, -1.0)


def angle_form(G: DeskGroupoid) -> GroupoidForm:
    """The fiber angle 1-form ``d(angle)`` on a bundle of circles."""
    if G.kind != "bundle_of_circles":
        raise GroupoidError("angle form needs a bundle of circles")
    return GroupoidForm(G, 1, lambda g, U: U[..., G.d], name="dangle")


def circle_form(G: DeskGroupoid, beta: Sequence[float]) -> GroupoidForm:
    """``beta ^ d(angle)`` for a constant 1-form ``beta`` on the base (closed and multiplicative)."""
    beta = np.asarray(beta, dtype=float)
    d = G.d

    def evaluator(g, U, V):
        return (U[..., :d] @ beta) * V[..., d] - (V[..., :d] @ beta) * U[..., d]

    return GroupoidForm(G, 2, evaluator, name="beta^dangle")


def right_invariant_form(G: DeskGroupoid, c: np.ndarray) -> GroupoidForm:
    """``omega_g(U, V) = c(U g^-1, V g^-1)`` on a matrix group."""
    c = np.asarray(c, dtype=float)

    def evaluator(g, U, V):
        gi = np.linalg.inv(g)
        a = G.algebra_coords(U @ gi)
        b = G.algebra_coords(V @ gi)
        return np.einsum("ni,ij,nj->n", a, c, b)

    return GroupoidForm(G, 2, evaluator, name="right-invariant")


def multiplicativity_residual(G: DeskGroupoid, form: GroupoidForm, rng: np.random.Generator, samples: int = 1000) -> float:
    """``max |m* w - pr1* w - pr2* w|`` over random composable pairs and tangent lifts."""
    g, h, (U1, V1), (U2, V2) = G.sample_composable(rng, samples)
    gh = G.multiply(g, h)
    W1 = G.multiply_tangent(g, h, U1, V1)
    if form.degree == 1:
        res = form.evaluate(gh, W1) - form.evaluate(g, U1) - form.evaluate(h, V1)
    else:
        W2 = G.multiply_tangent(g, h, U2, V2)
        res = form.evaluate(gh, W1, W2) - form.evaluate(g, U1, U2) - form.evaluate(h, V1, V2)
    return float(np.max(np.abs(res)))


def _unit_evaluations(G: DeskGroupoid, form: GroupoidForm, charts, X):
    """``(omega(alpha_i, alpha_j), omega(alpha_i, du e_mu))`` at units."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    charts = np.broadcast_to(np.asarray(charts), (n,))
    du, alpha = G.unit_frames(charts, X)
    u = G.unit(charts, X)
    r, d = alpha.shape[1], du.shape[1]
    cc = np.zeros((n, r, r))
    rs = np.zeros((n, r, d))
    for i in range(r):
        for j in range(r):
            cc[:, i, j] = form.evaluate(u, alpha[:, i], alpha[:, j])
        for mu in range(d):
            rs[:, i, mu] = form.evaluate(u, alpha[:, i], du[:, mu])
    return cc, rs


def induced_cocycle(G: DeskGroupoid, form: GroupoidForm) -> Cochain:
    """``c(a, b) = omega(a, b)`` for ``a, b`` in ``ker ds`` at the units."""
    A = G.algebroid()
    if form.degree != 2:
        raise GroupoidError("induced cocycles come from 2-forms")
    if G.kind == "pair" and form.field is not None:
        d = G.d
        syms = coordinate_symbols(2 * d)
        base_syms = coordinate_symbols(d)
        fields = []
        for c in range(G.atlas.n_charts):
            cc = int(G.arrow_atlas._join_chart(c, c))
            W = form.field.coefficients[cc].array
            block = sp.Array([[W[i, j] for j in range(d)] for i in range(d)])
            fields.append(SymField(_shift_symbols(block, syms[d:], base_syms), base_syms))
        return Cochain(A, 2, fields)
    # constant data: matrix groups, or bundles of circles (rank one, so the cocycle vanishes)
    x = np.zeros((1, G.d))
    cc, _ = _unit_evaluations(G, form, 0, x)
    arr = sp.Array(np.round(cc[0], 15).tolist()).applyfunc(sp.nsimplify)
    return Cochain(A, 2, [SymField(arr, coordinate_symbols(G.d)) for _ in range(A.atlas.n_charts)])


# --------------------------------------------------------------------------
# rho^* and the multiplicativity identities
# --------------------------------------------------------------------------


@dataclass(eq=False)
class InfinitesimalData:
    """The bundle map ``rho*: A -> T*M`` as a field ``(n, r, d)`` plus an optional transgression ``l``."""

    algebroid: Algebroid
    evaluator: Callable
    l: Cochain | None = None
    step: float = 1e-3

    def matrix(self, charts, X) -> np.ndarray:
        return self.evaluator(charts, np.atleast_2d(np.asarray(X, dtype=float)))

    def derivative(self, charts, X) -> np.ndarray:
        """``D[n, nu, i, mu] = d_nu rho*_{i mu}`` by fourth-order central differences."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = X.shape[1]
        h = self.step
        out = np.zeros((X.shape[0], d) + self.matrix(charts, X).shape[1:])
        for nu in range(d):
            e = np.zeros(d)
            e[nu] = h
            out[:, nu] = (
                -self.matrix(charts, X + 2 * e) + 8 * self.matrix(charts, X + e)
                - 8 * self.matrix(charts, X - e) + self.matrix(charts, X - 2 * e)
            ) / (12 * h)
        return out

    @classmethod
    def from_cochain(cls, A: Algebroid, c2: Cochain) -> "InfinitesimalData":
        """``rho*(e_i)_mu = c(e_i, e_mu)`` for an algebroid whose first ``d`` frame vectors are ``TM``."""
        d = A.dimension
        if A.tangent_block != d:
            raise GroupoidError("needs a tangent-type leading block")

        def evaluator(charts, X):
            return c2.values(charts, X)[:, :, :d]

        return cls(A, evaluator)


def rho_star(G: DeskGroupoid, form: GroupoidForm) -> InfinitesimalData:
    """``<rho*(a), X> = omega(a, du X)`` at units."""
    A = G.algebroid()

    def evaluator(charts, X):
        return _unit_evaluations(G, form, charts, X)[1]

    return InfinitesimalData(A, evaluator)


@dataclass(frozen=True)
class MultiplicativeReport:
    mult_c1: float
    mult_c2: float
    c_omega: float

    def to_json(self) -> dict:
        return {"mult_c1": self.mult_c1, "mult_c2": self.mult_c2, "c_omega": self.c_omega}


def rho_star_residuals(G: DeskGroupoid, form: GroupoidForm, charts, X) -> MultiplicativeReport:
    """Residuals of the two infinitesimal identities and of ``c(a, b) = <rho* a, rho b>``."""
    data = rho_star(G, form)
    A = data.algebroid
    X = np.atleast_2d(np.asarray(X, dtype=float))
    charts = np.broadcast_to(np.asarray(charts), X.shape[:1])
    d = A.dimension
    if d == 0:
        return MultiplicativeReport(0.0, 0.0, 0.0)
    R = data.matrix(charts, X)  # (n, r, d)
    rho = A.anchor(charts, X)  # (n, d, r)
    P = np.einsum("niu,nuj->nij", R, rho)  # <rho* e_i, rho e_j>
    c1 = float(np.max(np.abs(P + np.transpose(P, (0, 2, 1)))))

    DR = data.derivative(charts, X)  # (n, nu, i, mu)
    _, dRho_f = A._structure_jacobians
    dRho = A._per_chart(dRho_f, charts, X)  # (n, nu, mu, j)
    C = A.structure_at(charts, X)
    lhs = np.einsum("nijk,nku->niju", C, R)
    # L_X eta for X = rho(e_i), eta = rho*(e_j): X^nu d_nu eta_mu + eta_nu d_mu X^nu
    lie = np.einsum("nvi,nvju->niju", rho, DR) + np.einsum("njv,nuvi->niju", R, dRho)
    dP = np.einsum("nuiv,nvj->niju", DR, rho) + np.einsum("niv,nuvj->niju", R, dRho)
    c2 = float(np.max(np.abs(lhs - (lie - np.transpose(lie, (0, 2, 1, 3)) + dP))))

    cw = induced_cocycle(G, form).values(charts, X)
    c3 = float(np.max(np.abs(cw - P)))
    return MultiplicativeReport(c1, c2, c3)


# --------------------------------------------------------------------------
# Path-space functionals and theta
# --------------------------------------------------------------------------


def f_l(A: Algebroid, l: Cochain, a: APath) -> float:
    """``int_0^1 <l(gamma(t)), a(t)> dt``."""
    return simpson1(np.einsum("ni,ni->n", l.values(a.charts, a.coords), a.values))


def sigma_tilde(A: Algebroid, rho_star_data: InfinitesimalData, a: APath, variation: Variation) -> float:
    """``int_0^1 <rho*(a(t)), dp(X(t))> dt``: only the base part of the variation enters."""
    if A.dimension == 0:
        return 0.0
    R = rho_star_data.matrix(a.charts, a.coords)
    return simpson1(np.einsum("ni,niu,nu->n", a.values, R, variation.base))


def _perturbed(a: APath, variation: Variation, h: float) -> APath:
    base = BasePath(a.base.atlas, a.charts, a.coords + h * variation.base)
    return APath(a.algebroid, base, a.values + h * variation.fiber)


def directional_f_l(A: Algebroid, l: Cochain, a: APath, variation: Variation, step: float = 1e-5) -> float:
    """Forward difference of ``f_l`` along the variation, with one Richardson step."""
    f0 = f_l(A, l, a)
    D1 = (f_l(A, l, _perturbed(a, variation, step)) - f0) / step
    D2 = (f_l(A, l, _perturbed(a, variation, step / 2)) - f0) / (step / 2)
    return 2 * D2 - D1


def theta_eval(A: Algebroid, c2: Cochain, l: Cochain, a: APath, variation: Variation,
               rho_star_data: InfinitesimalData, tol: float = 1e-6, step: float = 1e-5) -> float:
    """``theta(X) = d f_l(X) - sigma~(X)`` on a representative path.

    ``l`` must transgress ``c2`` in the sense ``d_A l + c2 = 0`` (the sign that makes
    theta vanish on the action directions with the differential used here).
    """
    if A.dimension:
        dl = d_A(A, l).values(a.charts, a.coords)
        mismatch = float(np.max(np.abs(dl + c2.values(a.charts, a.coords))))
    else:
        mismatch = float(np.max(np.abs(d_A(A, l).values(0, np.zeros((1, 0))) + c2.values(0, np.zeros((1, 0))))))
    if mismatch > tol:
        raise TransgressionMismatch(f"d_A l + c2 has residual {mismatch:.3e}")
    return directional_f_l(A, l, a, variation, step) - sigma_tilde(A, rho_star_data, a, variation)
