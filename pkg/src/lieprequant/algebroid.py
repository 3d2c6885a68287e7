"""Lie algebroids in frame presentation, their cochain complex and central extensions.

An algebroid of rank ``r`` over an atlas is given per chart by the anchor
``rho[mu, i]`` (``d x r``) and structure functions ``C[i, j, k] = c^k_ij`` of a
local frame, all as closed-form fields so that every derivative used below is
exact.  Fiber coordinates change between charts by ``blockdiag(J, I)``: the
first ``tangent_block`` components transform like tangent vectors and the rest
are scalars.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import sympy as sp

from ._fields import SymField, constant_field, coordinate_symbols, flat_points, parse_expr, zeros_field
from .geometry import Atlas, TwoFormField


class AlgebroidError(ValueError):
    pass


class MissingDerivativeError(AlgebroidError):
    pass


class AnchorRankInstability(AlgebroidError):
    pass


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def _antisymmetrize(entries: dict, r: int, p: int) -> sp.Array:
    """Fill an antisymmetric rank-``p`` array from values on increasing index tuples."""
    if p == 0:
        return sp.Array(entries.get((), sp.Integer(0)))
    arr = sp.MutableDenseNDimArray.zeros(*(r,) * p)
    for idx, value in entries.items():
        for perm in itertools.permutations(range(p)):
            arr[tuple(idx[k] for k in perm)] = _perm_sign(perm) * value
    return arr.as_immutable()


_points = flat_points


class Algebroid:
    def __init__(
        self,
        atlas: Atlas,
        rank: int,
        anchors: Sequence[SymField],
        structure: Sequence[SymField],
        tangent_block: int = 0,
        kind: str = "custom",
        base: "Algebroid | None" = None,
        cocycle: "Cochain | None" = None,
    ):
        d = atlas.dimension
        if len(anchors) != atlas.n_charts or len(structure) != atlas.n_charts:
            raise AlgebroidError("one anchor and one structure field per chart is required")
        for a, c in zip(anchors, structure):
            if a.shape != (d, rank) or c.shape != (rank, rank, rank):
                raise AlgebroidError("anchor must be d x r and structure r x r x r")
            if any(sp.simplify(c.array[i, j, k] + c.array[j, i, k]) != 0
                   for i in range(rank) for j in range(rank) for k in range(rank)):
                raise AlgebroidError("structure functions must be antisymmetric in the lower indices")
        self.atlas = atlas
        self.rank = rank
        self.anchors = tuple(anchors)
        self.structure = tuple(structure)
        self.tangent_block = tangent_block
        self.kind = kind
        self.base = base
        self.cocycle = cocycle

    def __repr__(self) -> str:
        return f"Algebroid({self.kind}, rank={self.rank}, base={self.atlas.kind})"

    @property
    def dimension(self) -> int:
        return self.atlas.dimension

    # -- pointwise data --------------------------------------------------------
    def _per_chart(self, fields, charts, X):
        d = self.dimension
        X = np.asarray(X, dtype=float)
        shape = X.shape[:-1]
        flatX = X.reshape(int(np.prod(shape)), d)
        flatC = np.broadcast_to(np.asarray(charts), shape).reshape(-1)
        out = np.zeros((flatX.shape[0],) + fields[0].shape)
        for c in np.unique(flatC):
            m = flatC == c
            out[m] = fields[int(c)](flatX[m])
        return out.reshape(shape + fields[0].shape)

    def anchor(self, charts, X) -> np.ndarray:
        return self._per_chart(self.anchors, charts, X)

    def structure_at(self, charts, X) -> np.ndarray:
        return self._per_chart(self.structure, charts, X)

    def fiber_map(self, src, dst, X) -> np.ndarray:
        """Fiber coordinate change from chart ``src`` to ``dst`` at ``X`` (``src`` coordinates)."""
        X = np.asarray(X, dtype=float)
        shape = X.shape[:-1]
        F = np.broadcast_to(np.eye(self.rank), shape + (self.rank, self.rank)).copy()
        k = self.tangent_block
        if k and self.atlas.n_charts > 1:
            F[..., :k, :k] = self.atlas.jacobian(src, dst, X)
        return F

    def bracket(self, charts, X, a, b) -> np.ndarray:
        """Bracket of the constant-coefficient extensions of ``a`` and ``b``."""
        C = self.structure_at(charts, X)
        return np.einsum("...ijk,...i,...j->...k", C, a, b)

    @functools.cached_property
    def _structure_jacobians(self):
        return tuple(f.jacobian() for f in self.structure), tuple(f.jacobian() for f in self.anchors)

    def jacobiator(self, charts, X) -> np.ndarray:
        """``J[i, j, k, n]``: the ``e_n`` component of the cyclic sum of ``[e_i, [e_j, e_k]]``."""
        dC, _ = self._structure_jacobians
        X = _points(X, self.dimension)
        charts = np.broadcast_to(np.asarray(charts), X.shape[:1])
        C = self.structure_at(charts, X)
        rho = self.anchor(charts, X)
        DC = self._per_chart(dC, charts, X)  # (n, mu, i, j, k)
        # [e_i, [e_j, e_k]]^n = C^m_jk C^n_im + rho^mu_i d_mu C^n_jk
        term = np.einsum("zjkm,zimn->zijkn", C, C) + np.einsum("zui,zujkn->zijkn", rho, DC)
        return term + np.transpose(term, (0, 2, 3, 1, 4)) + np.transpose(term, (0, 3, 1, 2, 4))

    def anchor_residual(self, charts, X) -> float:
        """Max of ``|rho([e_i, e_j]) - [rho(e_i), rho(e_j)]|`` at the points."""
        X = _points(X, self.dimension)
        charts = np.broadcast_to(np.asarray(charts), X.shape[:1])
        if self.dimension == 0:
            return 0.0
        _, dR = self._structure_jacobians
        C = self.structure_at(charts, X)
        rho = self.anchor(charts, X)
        DR = self._per_chart(dR, charts, X)  # (n, nu, mu, i)
        lhs = np.einsum("nijk,nuk->nuij", C, rho)
        vf = np.einsum("nvi,nvuj->nuij", rho, DR)
        return float(np.max(np.abs(lhs - (vf - np.transpose(vf, (0, 1, 3, 2))))))


@dataclass(eq=False)
class Cochain:
    """An antisymmetric ``p``-form on the fiber, per chart, with coefficients ``c[i1..ip]``."""

    algebroid: Algebroid
    degree: int
    fields: tuple

    def __post_init__(self):
        self.fields = tuple(self.fields)
        r = self.algebroid.rank
        if len(self.fields) != self.algebroid.atlas.n_charts:
            raise AlgebroidError("one coefficient field per chart is required")
        for f in self.fields:
            if isinstance(f, SymField) and f.shape != (r,) * self.degree:
                raise AlgebroidError(f"degree-{self.degree} cochain needs shape {(r,) * self.degree}")

    @property
    def symbolic(self) -> bool:
        return all(isinstance(f, SymField) for f in self.fields)

    def values(self, charts, X) -> np.ndarray:
        d = self.algebroid.dimension
        X = np.asarray(X, dtype=float)
        shape = X.shape[:-1]
        flatX = X.reshape(int(np.prod(shape)), d)
        flatC = np.broadcast_to(np.asarray(charts), shape).reshape(-1)
        out = np.zeros((flatX.shape[0],) + (self.algebroid.rank,) * self.degree)
        for c in np.unique(flatC):
            m = flatC == c
            out[m] = self.fields[int(c)](flatX[m])
        return out.reshape(shape + out.shape[1:])

    def evaluate(self, charts, X, *vectors) -> np.ndarray:
        """``c(v1, ..., vp)`` with vectors broadcast against the points."""
        if len(vectors) != self.degree:
            raise AlgebroidError(f"expected {self.degree} vectors")
        out = self.values(charts, X)
        lead = out.shape[:out.ndim - self.degree]
        r = self.algebroid.rank
        out = out.reshape((-1,) + (r,) * self.degree)
        for v in vectors:
            v = np.broadcast_to(np.asarray(v, dtype=float), lead + (r,)).reshape(-1, r)
            out = np.einsum("zi,zi...->z...", v, out)
        return out.reshape(lead)

    def pair(self, charts, X, a, b) -> np.ndarray:
        """Vectorized ``c(a, b)`` for a degree-2 cochain."""
        return np.einsum("...i,...ij,...j->...", a, self.values(charts, X), b)

    def scaled(self, factor: float) -> "Cochain":
        return Cochain(self.algebroid, self.degree, [f.scaled(factor) for f in self.fields])

    def __add__(self, other: "Cochain") -> "Cochain":
        return Cochain(self.algebroid, self.degree, [a + b for a, b in zip(self.fields, other.fields)])

    def __sub__(self, other: "Cochain") -> "Cochain":
        return self + other.scaled(-1)

    def on(self, algebroid: Algebroid) -> "Cochain":
        return Cochain(algebroid, self.degree, self.fields)


def zero_cochain(A: Algebroid, degree: int) -> Cochain:
    return Cochain(A, degree, [zeros_field((A.rank,) * degree, A.dimension) for _ in range(A.atlas.n_charts)])


def cochain_from_expressions(A: Algebroid, degree: int, entries: dict, chart_entries: Sequence[dict] | None = None) -> Cochain:
    """Cochain from ``{(i1<...<ip): expression}`` on every chart (or per chart)."""
    per_chart = chart_entries or [entries] * A.atlas.n_charts
    syms = coordinate_symbols(A.dimension)
    fields = []
    for ent in per_chart:
        vals = {tuple(k) if not isinstance(k, int) else (k,): parse_expr(v, A.dimension) for k, v in ent.items()}
        fields.append(SymField(_antisymmetrize(vals, A.rank, degree), syms))
    return Cochain(A, degree, fields)


def cochain_from_form(A: Algebroid, form: TwoFormField) -> Cochain:
    """The 2-cochain ``c(v, w) = omega(v, w)`` on a tangent-type algebroid."""
    if A.tangent_block != A.dimension or A.rank != A.dimension:
        raise AlgebroidError("a 2-form defines a cochain on the tangent algebroid only")
    return Cochain(A, 2, form.coefficients)


def cochain_as_form(c: Cochain) -> TwoFormField:
    A = c.algebroid
    if A.rank != A.dimension:
        raise AlgebroidError("only tangent-type cochains are forms")
    return TwoFormField(A.atlas, c.fields, name="c")


def random_polynomial_cochain(A: Algebroid, degree: int, rng: np.random.Generator, poly_degree: int = 1) -> Cochain:
    """Cochain with random polynomial coefficients of total degree ``poly_degree``, same on every chart."""
    syms = coordinate_symbols(A.dimension)
    monos = [sp.Integer(1)]
    if A.dimension:
        monos = sorted(sp.itermonomials(syms, poly_degree), key=sp.default_sort_key)
    entries = {}
    for idx in itertools.combinations(range(A.rank), degree):
        coeffs = rng.integers(-3, 4, size=len(monos))
        entries[idx] = sum(int(c) * m for c, m in zip(coeffs, monos))
    arr = _antisymmetrize(entries, A.rank, degree)
    return Cochain(A, degree, [SymField(arr, syms) for _ in range(A.atlas.n_charts)])


# --------------------------------------------------------------------------
# Differential
# --------------------------------------------------------------------------


def d_A(A: Algebroid, c: Cochain) -> Cochain:
    """The algebroid differential on frame coefficients.

    For increasing indices ``i_0 < ... < i_p``::

        (dc)_{i_0..i_p} = sum_{a<b} (-1)^(a+b) C^k_{i_a i_b} c_{k, ..^a..^b..}
                        + sum_a (-1)^a rho^mu_{i_a} d_mu c_{..^a..}
    """
    if c.degree > 2:
        raise AlgebroidError("d_A is implemented up to degree 2 cochains")
    if not c.symbolic:
        raise MissingDerivativeError("cochain has no analytic derivatives")
    r, p = A.rank, c.degree
    syms = coordinate_symbols(A.dimension)
    fields = []
    for chart in range(A.atlas.n_charts):
        C = A.structure[chart].array
        rho = A.anchors[chart].array
        cf = c.fields[chart].array
        dcf = sp.derive_by_array(cf, syms) if A.dimension else None
        entries = {}
        for idx in itertools.combinations(range(r), p + 1):
            total = sp.Integer(0)
            for a, b in itertools.combinations(range(p + 1), 2):
                rest = tuple(idx[m] for m in range(p + 1) if m not in (a, b))
                sign = (-1) ** (a + b)
                for k in range(r):
                    coef = C[idx[a], idx[b], k]
                    if coef != 0:
                        total += sign * coef * cf[(k,) + rest]
            if A.dimension:
                for a in range(p + 1):
                    rest = tuple(idx[m] for m in range(p + 1) if m != a)
                    for mu in range(A.dimension):
                        if rho[mu, idx[a]] != 0:
                            total += (-1) ** a * rho[mu, idx[a]] * dcf[(mu,) + rest]
            entries[idx] = sp.expand(total)
        fields.append(SymField(_antisymmetrize(entries, r, p + 1), syms))
    return Cochain(A, p + 1, fields)


def _sample(A: Algebroid, sample_points):
    if isinstance(sample_points, tuple) and len(sample_points) == 2:
        charts, X = sample_points
    else:
        X = sample_points
        charts = 0
    X = _points(X, A.dimension)
    return np.broadcast_to(np.asarray(charts), X.shape[:1]), X


def _dA_max(A: Algebroid, c: Cochain, sample_points) -> tuple[float, np.ndarray]:
    charts, X = _sample(A, sample_points)
    vals = d_A(A, c).values(charts, X).reshape(len(X), -1)
    per_point = np.max(np.abs(vals), axis=1) if vals.size else np.zeros(len(X))
    return float(np.max(per_point, initial=0.0)), per_point


@dataclass(frozen=True)
class CocycleReport:
    residual: float
    verdict: bool
    tolerance: float
    witness: tuple | None = None

    def to_json(self) -> dict:
        return {"residual": self.residual, "verdict": self.verdict, "tolerance": self.tolerance,
                "witness": None if self.witness is None else [self.witness[0], list(self.witness[1])]}


def is_cocycle(A: Algebroid, c2: Cochain, sample_points, tol: float = 1e-6) -> CocycleReport:
    if c2.degree != 2:
        raise AlgebroidError("is_cocycle expects a 2-cochain")
    charts, X = _sample(A, sample_points)
    res, per_point = _dA_max(A, c2, (charts, X))
    k = int(np.argmax(per_point)) if len(per_point) else 0
    witness = (int(charts[k]), X[k].tolist()) if res > tol else None
    return CocycleReport(res, res <= tol, tol, witness)


def jacobi_residual(A: Algebroid, x, triple=None, chart: int = 0) -> float:
    """Norm of the cyclic Jacobi sum for a frame triple (or the max over all triples)."""
    X = _points(x, A.dimension)[:1]
    J = A.jacobiator(np.array([chart]), X)[0]
    if triple is None:
        return float(np.max(np.abs(J), initial=0.0))
    i, j, k = triple
    return float(np.linalg.norm(J[i, j, k]))


def max_jacobi_residual(A: Algebroid, sample_points) -> float:
    charts, X = _sample(A, sample_points)
    if A.rank == 0:
        return 0.0
    return float(np.max(np.abs(A.jacobiator(charts, X)), initial=0.0))


# --------------------------------------------------------------------------
# Catalog
# --------------------------------------------------------------------------


def _zero_structure(r: int, d: int) -> SymField:
    return zeros_field((r, r, r), d)


def tangent(atlas: Atlas) -> Algebroid:
    d = atlas.dimension
    eye = constant_field(np.eye(d), d) if d else zeros_field((0, 0), 0)
    return Algebroid(atlas, d, [eye] * atlas.n_charts, [_zero_structure(d, d)] * atlas.n_charts, tangent_block=d, kind="tangent")


def lie_algebra(structure_constants, name: str = "lie_algebra") -> Algebroid:
    C = np.asarray(structure_constants, dtype=float)
    r = C.shape[0]
    if C.shape != (r, r, r):
        raise AlgebroidError("structure constants must be r x r x r")
    if not np.array_equal(C, -np.transpose(C, (1, 0, 2))):
        raise AlgebroidError("structure constants must be antisymmetric in the lower indices")
    field = SymField(sp.Array(C.tolist()).applyfunc(sp.nsimplify), ())
    return Algebroid(Atlas.point(), r, [zeros_field((0, r), 0)], [field], kind=name)


def so3_constants() -> np.ndarray:
    C = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        C[i, j, k] = 1.0
        C[j, i, k] = -1.0
    return C


def heisenberg_constants() -> np.ndarray:
    C = np.zeros((3, 3, 3))
    C[0, 1, 2], C[1, 0, 2] = 1.0, -1.0
    return C


def bundle_of_abelian_algebras(atlas: Atlas, rank: int) -> Algebroid:
    d = atlas.dimension
    return Algebroid(atlas, rank, [zeros_field((d, rank), d)] * atlas.n_charts,
                     [_zero_structure(rank, d)] * atlas.n_charts, kind="abelian_bundle")


def a_omega(atlas: Atlas, form: TwoFormField) -> Algebroid:
    """``TM + R`` with bracket ``[(X,f),(Y,g)] = ([X,Y], X(g) - Y(f) + omega(X,Y))``."""
    T = tangent(atlas)
    Ac = central_extension(T, cochain_from_form(T, form))
    Ac.kind = "a_omega"
    return Ac


def catalog_algebroid(kind: str, **params) -> Algebroid:
    if kind == "tangent":
        return tangent(params["atlas"])
    if kind == "lie_algebra":
        return lie_algebra(params["structure_constants"], params.get("name", "lie_algebra"))
    if kind == "a_omega":
        return a_omega(params["atlas"], params["form"])
    if kind == "bundle_of_abelian_algebras":
        return bundle_of_abelian_algebras(params["atlas"], params["rank"])
    raise AlgebroidError(f"unknown algebroid kind {kind!r}")


# --------------------------------------------------------------------------
# Central extensions
# --------------------------------------------------------------------------


def central_extension(A: Algebroid, c2: Cochain) -> Algebroid:
    """``A_c = A + R`` with bracket ``([a,b], L_a g - L_b f + c(a,b))`` and anchor ``rho(a)``."""
    if c2.degree != 2 or not c2.symbolic:
        raise AlgebroidError("central extensions need a symbolic 2-cochain")
    r, d = A.rank, A.dimension
    syms = coordinate_symbols(d)
    anchors, structure = [], []
    for chart in range(A.atlas.n_charts):
        rho = sp.Matrix(A.anchors[chart].array.tolist()) if d else sp.zeros(0, r)
        anchors.append(SymField(sp.Array(rho.row_join(sp.zeros(d, 1)).tolist()) if d else zeros_field((0, r + 1), 0).array, syms))
        C = sp.MutableDenseNDimArray.zeros(r + 1, r + 1, r + 1)
        Cold, cf = A.structure[chart].array, c2.fields[chart].array
        for i in range(r):
            for j in range(r):
                for k in range(r):
                    C[i, j, k] = Cold[i, j, k]
                C[i, j, r] = cf[i, j]
        structure.append(SymField(C.as_immutable(), syms))
    return Algebroid(A.atlas, r + 1, anchors, structure, A.tangent_block, kind="extension", base=A, cocycle=c2)


def pullback(c: Cochain, Ac: Algebroid) -> Cochain:
    """``pi^* c`` on an extension ``A_c`` (zero whenever the central direction is inserted)."""
    r = c.algebroid.rank
    fields = []
    for f in c.fields:
        arr = sp.MutableDenseNDimArray.zeros(*(r + 1,) * c.degree) if c.degree else None
        if c.degree == 0:
            fields.append(f)
            continue
        for idx in itertools.product(range(r), repeat=c.degree):
            arr[idx] = f.array[idx]
        fields.append(SymField(arr.as_immutable(), f.symbols))
    return Cochain(Ac, c.degree, fields)


def canonical_transgression(Ac: Algebroid) -> Cochain:
    """``l_c(a, lambda) = lambda`` on an extension."""
    if Ac.base is None or Ac.rank != Ac.base.rank + 1:
        raise AlgebroidError("input is not a central extension")
    e = [0.0] * (Ac.rank - 1) + [1.0]
    return Cochain(Ac, 1, [constant_field(e, Ac.dimension) for _ in range(Ac.atlas.n_charts)])


@dataclass(frozen=True)
class TransgressionCheck:
    unit_value: float
    residual: float
    opposite_residual: float

    def to_json(self) -> dict:
        return {"unit_value": self.unit_value, "residual": self.residual, "opposite_residual": self.opposite_residual}


def transgression_check(Ac: Algebroid, sample_points) -> TransgressionCheck:
    """``l_c(i(1))`` and the residuals ``|d l_c - pi^* c|`` and ``|d l_c + pi^* c|``."""
    l = canonical_transgression(Ac)
    charts, X = _sample(Ac, sample_points)
    unit = np.zeros(Ac.rank)
    unit[-1] = 1.0
    value = float(l.evaluate(charts[:1], X[:1], unit[None])[0])
    dl = d_A(Ac, l).values(charts, X)
    pc = pullback(Ac.cocycle, Ac).values(charts, X)
    return TransgressionCheck(value, float(np.max(np.abs(dl - pc))), float(np.max(np.abs(dl + pc))))


# --------------------------------------------------------------------------
# Isotropy
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IsotropyAlgebra:
    basis: np.ndarray  # r x q, orthonormal columns spanning ker rho(x)
    structure: np.ndarray  # q x q x q
    jacobi_residual: float
    singular_values: np.ndarray

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]

    @property
    def is_abelian(self) -> bool:
        return bool(np.all(np.abs(self.structure) < 1e-12))


def isotropy_algebra(A: Algebroid, x, chart: int = 0, zero_tol: float = 1e-10, guard: float = 1e-6) -> IsotropyAlgebra:
    X = _points(x, A.dimension)[:1]
    r = A.rank
    rho = A.anchor(np.array([chart]), X)[0]
    if A.dimension and r:
        _, s, Vt = np.linalg.svd(rho)
    else:
        s, Vt = np.zeros(0), np.eye(r)
    unstable = s[(s > zero_tol) & (s < guard)]
    if unstable.size:
        raise AnchorRankInstability(f"anchor singular value {unstable[0]:.3e} is inside the guard band")
    rank = int(np.sum(s > zero_tol))
    K = Vt[rank:].T
    C = A.structure_at(np.array([chart]), X)[0]
    Ck = np.einsum("ijk,ia,jb,kc->abc", C, K, K, K)
    q = K.shape[1]
    if q:
        term = np.einsum("bcm,amn->abcn", Ck, Ck)
        J = term + np.transpose(term, (1, 2, 0, 3)) + np.transpose(term, (2, 0, 1, 3))
        jac = float(np.max(np.abs(J)))
    else:
        jac = 0.0
    return IsotropyAlgebra(K, Ck, jac, s)


# --------------------------------------------------------------------------
# Connections and torsion
# --------------------------------------------------------------------------


@dataclass(eq=False)
class Connection:
    """Christoffel coefficients ``G[mu, i, k] = Gamma^k_{mu i}`` per chart."""

    algebroid: Algebroid
    fields: tuple

    def __post_init__(self):
        self.fields = tuple(self.fields)

    @classmethod
    def flat(cls, A: Algebroid) -> "Connection":
        return cls(A, [zeros_field((A.dimension, A.rank, A.rank), A.dimension)] * A.atlas.n_charts)

    @classmethod
    def random(cls, A: Algebroid, rng: np.random.Generator, scale: float = 0.3) -> "Connection":
        """Random coefficients, affine in the coordinates, independently per chart."""
        d, r = A.dimension, A.rank
        syms = coordinate_symbols(d)
        fields = []
        for _ in range(A.atlas.n_charts):
            c0 = rng.normal(scale=scale, size=(d, r, r))
            c1 = rng.normal(scale=scale, size=(d, d, r, r))
            arr = sp.MutableDenseNDimArray.zeros(d, r, r) if d else None
            if not d:
                fields.append(zeros_field((0, r, r), 0))
                continue
            for mu, i, k in itertools.product(range(d), range(r), range(r)):
                arr[mu, i, k] = sp.Float(c0[mu, i, k]) + sum(sp.Float(c1[nu, mu, i, k]) * syms[nu] for nu in range(d))
            fields.append(SymField(arr.as_immutable(), syms))
        return cls(A, fields)

    def christoffel(self, charts, X) -> np.ndarray:
        return self.algebroid._per_chart(self.fields, charts, X)

    def covariant(self, charts, X, v, s) -> np.ndarray:
        """``Gamma(v, s)^k = v^mu Gamma^k_{mu i} s^i`` (the connection term along ``v``)."""
        return np.einsum("...u,...uik,...i->...k", v, self.christoffel(charts, X), s)


def a_torsion(A: Algebroid, connection: Connection, x, a, b, chart: int = 0) -> np.ndarray:
    """``T(a, b) = nabla_rho(a) b - nabla_rho(b) a - [a, b]`` on constant-coefficient extensions."""
    X = _points(x, A.dimension)[:1]
    ch = np.array([chart])
    a = np.asarray(a, dtype=float)[None]
    b = np.asarray(b, dtype=float)[None]
    rho = A.anchor(ch, X)
    ra = np.einsum("nui,ni->nu", rho, a)
    rb = np.einsum("nui,ni->nu", rho, b)
    T = connection.covariant(ch, X, ra, b) - connection.covariant(ch, X, rb, a) - A.bracket(ch, X, a, b)
    return T[0]
