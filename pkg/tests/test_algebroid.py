import itertools

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from lieprequant import algebroid as alg
from lieprequant import geometry as geo
from lieprequant._fields import SymField, constant_field, coordinate_symbols, zeros_field

from conftest import unit_sphere_points


def de_rham_oracle(c: alg.Cochain, X):
    """Exterior derivative of a form on R^d, written out with sympy and evaluated pointwise."""
    d, p = c.algebroid.dimension, c.degree
    syms = coordinate_symbols(d)
    arr = c.fields[0].array
    out = np.zeros((len(X),) + (d,) * (p + 1))
    for idx in itertools.combinations(range(d), p + 1):
        expr = 0
        for a in range(p + 1):
            rest = tuple(idx[m] for m in range(p + 1) if m != a)
            expr += (-1) ** a * sp.diff(arr[rest] if p else arr[()], syms[idx[a]])
        f = sp.lambdify(syms, expr, "numpy")
        vals = np.broadcast_to(np.asarray(f(*X.T), dtype=float), (len(X),))
        for perm in itertools.permutations(range(p + 1)):
            out[(slice(None),) + tuple(idx[k] for k in perm)] = alg._perm_sign(perm) * vals
    return out


@pytest.fixture(scope="module")
def r3():
    return alg.tangent(geo.Atlas.euclidean(3))


def test_d_of_x_dy_is_area(plane):
    T = alg.tangent(plane)
    l = alg.cochain_from_expressions(T, 1, {(1,): "x"})
    dl = alg.d_A(T, l)
    assert dl.evaluate(0, np.array([[0.3, -0.7]]), [1, 0], [0, 1])[0] == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("degree", [0, 1, 2])
def test_tangent_differential_matches_de_rham(r3, rng, degree):
    c = alg.random_polynomial_cochain(r3, degree, rng, poly_degree=2)
    X = rng.uniform(-2, 2, size=(20, 3))
    got = alg.d_A(r3, c).values(0, X)
    assert np.max(np.abs(got - de_rham_oracle(c, X))) < 1e-12


def test_lie_algebra_differential_is_chevalley_eilenberg():
    A = alg.lie_algebra(alg.so3_constants(), "so3")
    l = alg.cochain_from_expressions(A, 1, {(0,): 2, (1,): -1, (2,): 5})
    dl = alg.d_A(A, l).values(0, np.zeros((1, 0)))[0]
    # dl(e_i, e_j) = -l([e_i, e_j])
    expected = -np.einsum("ijk,k->ij", alg.so3_constants(), [2.0, -1.0, 5.0])
    assert np.allclose(dl, expected, atol=1e-14)


@given(seed=st.integers(0, 2**32 - 1), degree=st.integers(0, 1))
def test_d_squared_vanishes_on_tangent(seed, degree):
    A = alg.tangent(geo.Atlas.euclidean(3))
    rng = np.random.default_rng(seed)
    c = alg.random_polynomial_cochain(A, degree, rng, poly_degree=2)
    X = rng.uniform(-3, 3, size=(8, 3))
    assert np.max(np.abs(alg.d_A(A, alg.d_A(A, c)).values(0, X))) < 1e-10


@given(seed=st.integers(0, 2**32 - 1))
def test_d_squared_vanishes_on_a_omega(seed):
    P = geo.Atlas.euclidean(2)
    A = alg.a_omega(P, geo.polynomial_form(P, {(0, 1): "1 + x*y"}))
    rng = np.random.default_rng(seed)
    l = alg.random_polynomial_cochain(A, 0, rng, poly_degree=3)
    X = rng.uniform(-2, 2, size=(8, 2))
    assert np.max(np.abs(alg.d_A(A, alg.d_A(A, l)).values(0, X))) < 1e-10


def test_differential_beyond_degree_two_is_refused(r3, rng):
    c = alg.random_polynomial_cochain(r3, 3, rng)
    with pytest.raises(alg.AlgebroidError):
        alg.d_A(r3, c)


def test_area_cochain_is_cocycle(sphere_tangent, rng):
    A, c = sphere_tangent
    X = unit_sphere_points(rng, 30)[:, :2]
    rep = alg.is_cocycle(A, c, X * 0.9)
    assert rep.verdict and rep.residual < 1e-12 and rep.witness is None


def test_non_cocycle_has_unit_residual_and_witness(r3, rng):
    c = alg.cochain_from_expressions(r3, 2, {(1, 2): "x"})
    rep = alg.is_cocycle(r3, c, rng.uniform(-1, 1, size=(10, 3)))
    assert rep.residual == pytest.approx(1.0, abs=1e-14)
    assert not rep.verdict and rep.witness is not None
    Ac = alg.central_extension(r3, c)
    assert alg.max_jacobi_residual(Ac, rng.uniform(-1, 1, size=(5, 3))) == pytest.approx(1.0, abs=1e-14)


def test_extension_of_cocycle_satisfies_jacobi(sphere, area, rng):
    Ac = alg.a_omega(sphere, area)
    X = unit_sphere_points(rng, 20)[:, :2]
    assert alg.max_jacobi_residual(Ac, (1, X)) < 1e-12
    assert Ac.anchor_residual(0, X) < 1e-12


def test_extension_anchor_ignores_central_direction(sphere_tangent, rng):
    A, c = sphere_tangent
    Ac = alg.central_extension(A, c)
    X = rng.uniform(-1, 1, size=(6, 2))
    rho = Ac.anchor(0, X)
    assert np.array_equal(rho[..., :2], A.anchor(0, X))
    assert np.all(rho[..., 2] == 0)


def test_central_extension_of_tangent_equals_a_omega(sphere, area, rng):
    T = alg.tangent(sphere)
    E = alg.central_extension(T, alg.cochain_from_form(T, area))
    F = alg.a_omega(sphere, area)
    X = rng.uniform(-1, 1, size=(10, 2))
    for ch in (0, 1):
        assert np.array_equal(E.anchor(ch, X), F.anchor(ch, X))
        assert np.array_equal(E.structure_at(ch, X), F.structure_at(ch, X))


def test_a_omega_bracket_has_form_in_central_slot(plane):
    A = alg.a_omega(plane, geo.coordinate_form(plane, 0, 1, 3.0))
    b = A.bracket(0, np.zeros((1, 2)), np.array([[1.0, 0, 0]]), np.array([[0, 1.0, 0]]))[0]
    assert np.allclose(b, [0, 0, 3.0])


def test_transgression_sign(plane):
    Ac = alg.a_omega(plane, geo.coordinate_form(plane))
    chk = alg.transgression_check(Ac, np.array([[0.1, 0.2], [-1.0, 0.5]]))
    assert chk.unit_value == 1.0
    # the canonical 1-cochain differentiates to minus the pulled-back cocycle
    assert chk.residual == pytest.approx(2.0, abs=1e-14)
    assert chk.opposite_residual < 1e-14
    dl = alg.d_A(Ac, alg.canonical_transgression(Ac))
    assert dl.evaluate(0, np.zeros((1, 2)), [1, 0, 0], [0, 1, 0])[0] == -1.0


def test_transgression_needs_extension(plane):
    with pytest.raises(alg.AlgebroidError):
        alg.canonical_transgression(alg.tangent(plane))


def test_heisenberg_bracket():
    A = alg.lie_algebra(alg.heisenberg_constants(), "heis")
    e = np.eye(3)
    x = np.zeros((1, 0))
    assert np.allclose(A.bracket(0, x, e[:1], e[1:2])[0], e[2])
    assert np.allclose(A.bracket(0, x, e[1:2], e[:1])[0], -e[2])
    assert np.allclose(A.bracket(0, x, e[:1], e[2:])[0], 0)
    assert alg.jacobi_residual(A, x) == 0.0


def test_lie_algebra_rejects_non_antisymmetric():
    C = np.zeros((2, 2, 2))
    C[0, 1, 0] = 1.0
    with pytest.raises(alg.AlgebroidError):
        alg.lie_algebra(C)


@pytest.mark.parametrize("kind,params", [
    ("tangent", {"atlas": geo.Atlas.torus2()}),
    ("lie_algebra", {"structure_constants": alg.so3_constants()}),
    ("bundle_of_abelian_algebras", {"atlas": geo.Atlas.euclidean(2), "rank": 4}),
])
def test_catalog(kind, params):
    A = alg.catalog_algebroid(kind, **params)
    assert isinstance(A, alg.Algebroid)
    with pytest.raises(alg.AlgebroidError):
        alg.catalog_algebroid("groupoid_of_doom")


def test_isotropy_dimensions(sphere, area, plane):
    assert alg.isotropy_algebra(alg.tangent(plane), [0.2, 0.1]).dimension == 0
    iso = alg.isotropy_algebra(alg.a_omega(sphere, area), [0.3, -0.2])
    assert iso.dimension == 1 and iso.is_abelian
    so3 = alg.isotropy_algebra(alg.lie_algebra(alg.so3_constants()), np.zeros(0))
    assert so3.dimension == 3 and not so3.is_abelian and so3.jacobi_residual < 1e-14
    ab = alg.isotropy_algebra(alg.bundle_of_abelian_algebras(plane, 2), [0.0, 0.0])
    assert ab.dimension == 2 and ab.is_abelian


def test_isotropy_guard_band(plane):
    syms = coordinate_symbols(2)
    rho = SymField(sp.Array([[1, 0], [0, sp.Float(1e-8)]]), syms)
    A = alg.Algebroid(plane, 2, [rho], [zeros_field((2, 2, 2), 2)])
    with pytest.raises(alg.AnchorRankInstability):
        alg.isotropy_algebra(A, [0.0, 0.0])


def test_structure_must_be_antisymmetric(plane):
    syms = coordinate_symbols(2)
    C = sp.MutableDenseNDimArray.zeros(2, 2, 2)
    C[0, 1, 0] = 1
    with pytest.raises(alg.AlgebroidError):
        alg.Algebroid(plane, 2, [constant_field(np.eye(2), 2)], [SymField(C.as_immutable(), syms)])


def test_torsion_of_flat_connection_on_so3():
    A = alg.lie_algebra(alg.so3_constants())
    T = alg.a_torsion(A, alg.Connection.flat(A), np.zeros(0), [1, 0, 0], [0, 1, 0])
    assert np.allclose(T, [0, 0, -1])


def test_torsion_is_antisymmetric(plane, rng):
    A = alg.a_omega(plane, geo.coordinate_form(plane))
    conn = alg.Connection.random(A, rng)
    a, b = rng.normal(size=3), rng.normal(size=3)
    x = [0.4, -0.3]
    assert np.allclose(alg.a_torsion(A, conn, x, a, b), -alg.a_torsion(A, conn, x, b, a), atol=1e-14)


def test_cochain_arithmetic(r3, rng):
    c = alg.random_polynomial_cochain(r3, 2, rng)
    X = rng.uniform(-1, 1, size=(4, 3))
    assert np.allclose((c - c).values(0, X), 0)
    assert np.allclose((c + c.scaled(2.0)).values(0, X), 3 * c.values(0, X))
    v, w = rng.normal(size=3), rng.normal(size=3)
    assert np.allclose(c.evaluate(0, X, v, w), -c.evaluate(0, X, w, v))


def test_cochain_shape_checked(r3):
    with pytest.raises(alg.AlgebroidError):
        alg.Cochain(r3, 2, [zeros_field((2, 2), 3)])
