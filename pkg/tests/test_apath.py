import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lieprequant import algebroid as alg
from lieprequant import apath as ap
from lieprequant import geometry as geo
from lieprequant import spheres


def line_path(atlas, f, n=64):
    t = np.linspace(0, 1, n + 1)
    return geo.BasePath(atlas, np.zeros(n + 1, int), f(t))


def plane_family(atlas, f, n_t=64, n_eps=16):
    eps = np.linspace(0, 1, n_eps + 1)[:, None]
    t = np.linspace(0, 1, n_t + 1)[None, :]
    X = f(eps, t)
    return geo.SphereGrid(atlas, np.zeros(X.shape[:2], int), X)


def test_lift_of_line_is_its_velocity(plane):
    A = alg.tangent(plane)
    p = line_path(plane, lambda t: np.stack([2 * t, 1 - t], -1))
    a = ap.APath.lift(A, p)
    assert np.allclose(a.values, [2.0, -1.0], atol=1e-12)
    assert a.residual() < 1e-12
    assert a.reversed().residual() < 1e-12


def test_lift_extra_goes_to_kernel(plane):
    Ac = alg.a_omega(plane, geo.coordinate_form(plane))
    p = line_path(plane, lambda t: np.stack([np.sin(t), t**2], -1))
    extra = np.zeros((p.n + 1, 3))
    extra[:, 2] = 0.7
    a = ap.APath.lift(Ac, p, extra)
    assert a.residual() < 1e-6
    assert np.allclose(a.values[:, 2], 0.7)


def test_apath_shape_checked(plane):
    A = alg.tangent(plane)
    with pytest.raises(ap.APathError):
        ap.APath(A, line_path(plane, lambda t: np.stack([t, t], -1)), np.zeros((3, 2)))


def test_fixed_endpoint_family_is_homotopy(plane):
    A = alg.tangent(plane)
    g = plane_family(plane, lambda e, t: np.stack(np.broadcast_arrays(t, e * t * (1 - t)), -1))
    rep = ap.is_homotopy(A, ap.APathFamily.lift(A, g))
    assert rep.verdict and rep.residual < 1e-10


def test_b_equals_endpoint_variation_on_flat_plane(plane):
    # b(eps, t) = d_eps gamma(eps, t) - d_eps gamma(eps, 0) for the flat tangent algebroid
    A = alg.tangent(plane)
    g = plane_family(plane, lambda e, t: np.stack(np.broadcast_arrays(t, e * t**2), -1))
    b = ap.solve_b(A, None, ap.APathFamily.lift(A, g))
    t = np.linspace(0, 1, 65)
    assert np.allclose(b[..., 1], np.broadcast_to(t**2, b.shape[:2]), atol=1e-8)
    rep = ap.is_homotopy(A, ap.APathFamily.lift(A, g))
    assert not rep.verdict and rep.residual == pytest.approx(1.0, abs=1e-8)


def test_solve_b_needs_resolution(plane):
    A = alg.tangent(plane)
    g = plane_family(plane, lambda e, t: np.stack(np.broadcast_arrays(t, e * t), -1), n_t=2, n_eps=2)
    with pytest.raises(ap.APathError):
        ap.solve_b(A, None, ap.APathFamily(A, g, np.zeros((3, 3, 2))))


def test_solve_b_divergence_guard(plane):
    A = alg.tangent(plane)
    g = plane_family(plane, lambda e, t: np.stack(np.broadcast_arrays(t, e * t), -1))
    with pytest.raises(ap.DivergenceError):
        ap.solve_b(A, None, ap.APathFamily.lift(A, g), blowup=1e-3)


def test_sphere_generator_lift_is_homotopy_of_tangent_paths(sphere):
    A = alg.tangent(sphere)
    fam = ap.APathFamily.lift(A, spheres.sphere_generator(80, 80))
    assert fam.residual() < 1e-6
    assert ap.is_homotopy(A, fam).verdict


def test_constant_family(plane):
    A = alg.tangent(plane)
    a = ap.APath.lift(A, line_path(plane, lambda t: np.stack([t, 0 * t], -1)))
    fam = ap.APathFamily.constant(a, 8)
    assert fam.shape == (9, 65)
    assert np.allclose(fam.row(5).values, a.values)


def test_variation_must_vanish_at_ends(plane):
    A = alg.tangent(plane)
    with pytest.raises(ap.APathError):
        ap.VariationField.from_expressions(A, ["t", "0"])
    ap.VariationField.from_expressions(A, ["t*(1-t)", "x*sin(pi*t)"])


def test_xi_generator_is_derivative_of_flow(plane):
    A = alg.a_omega(plane, geo.coordinate_form(plane))
    eta = ap.VariationField.from_expressions(A, ["t*(1-t)*y", "sin(pi*t)", "t*(1-t)*x"])
    p = line_path(plane, lambda t: np.stack([np.cos(t), t], -1))
    extra = np.zeros((p.n + 1, 3))
    extra[:, 2] = 0.2
    a0 = ap.APath.lift(A, p, extra)
    gen = ap.xi_generator(A, eta, a0)
    eps = 1e-4
    plus = ap.xi_flow(A, eta, a0, eps, steps=4)
    minus = ap.xi_flow(A, eta, a0, -eps, steps=4)
    assert np.allclose((plus.coords - minus.coords) / (2 * eps), gen.base, atol=1e-7)
    assert np.allclose((plus.values - minus.values) / (2 * eps), gen.fiber, atol=1e-7)


def test_xi_flow_stays_an_apath_with_fixed_ends(plane):
    A = alg.a_omega(plane, geo.coordinate_form(plane))
    eta = ap.VariationField.from_expressions(A, ["t*(1-t)", "t*(1-t)*x", "0"])
    a0 = ap.APath.lift(A, line_path(plane, lambda t: np.stack([t, t**2], -1), n=128))
    a1 = ap.xi_flow(A, eta, a0, 0.5)
    assert a1.residual() < 1e-5
    assert np.allclose(a1.coords[[0, -1]], a0.coords[[0, -1]], atol=1e-14)


def test_variation_norm_and_scaling():
    v = ap.Variation(np.ones((4, 2)), np.zeros((4, 3)))
    assert v.norm() == pytest.approx(np.sqrt(2))
    assert v.scaled(3).norm() == pytest.approx(3 * np.sqrt(2))


def test_bump_profile():
    s = np.linspace(0, 1, 1001)
    b = ap.bump(s)
    assert b[0] == 0 and b[-1] == 1
    assert np.all(np.diff(b) >= 0)
    fd = np.gradient(b, s, edge_order=2)
    assert np.max(np.abs(fd - ap.bump_speed(s))) < 1e-3


@given(coeffs=st.lists(st.floats(-3, 3), min_size=6, max_size=6), s=st.floats(0, 1))
def test_resample_reproduces_quintics(coeffs, s):
    atlas = geo.Atlas.euclidean(1)
    t = np.linspace(0, 1, 21)
    poly = np.polynomial.Polynomial(coeffs)
    _, X, _ = ap.resample(atlas, np.zeros(21, int), poly(t)[:, None], np.array([s]))
    assert X[0, 0] == pytest.approx(poly(s), abs=1e-9)


def test_concatenation_is_an_apath(plane):
    A = alg.tangent(plane)
    p1 = line_path(plane, lambda t: np.stack([1 + t, t**2], -1), n=128)
    p2 = line_path(plane, lambda t: np.stack([np.sin(np.pi * t / 2), 0 * t], -1), n=128)
    a = ap.concatenate(ap.APath.lift(A, p1), ap.APath.lift(A, p2))
    assert a.n == 256
    assert np.allclose(a.coords[0], [0, 0]) and np.allclose(a.coords[-1], [2, 1])
    assert a.residual() < 1e-4
    base = ap.concatenate_paths(p1, p2)
    assert np.allclose(base.coords, a.coords)


def test_concatenation_endpoint_mismatch(plane):
    A = alg.tangent(plane)
    p1 = line_path(plane, lambda t: np.stack([t, t], -1))
    p2 = line_path(plane, lambda t: np.stack([t, 0 * t], -1))
    with pytest.raises(ap.EndpointMismatch):
        ap.concatenate(ap.APath.lift(A, p1), ap.APath.lift(A, p2))
    with pytest.raises(ap.EndpointMismatch):
        ap.concatenate_paths(p1, p2)


def test_concatenation_across_charts(sphere):
    # corners of piecewise great circles are only C^2, so the residual decays slowly
    A = alg.tangent(sphere)
    res = []
    for n in (80, 160):
        p = spheres.sphere_path([[1, 0, 0], [0, 1, 0], [0, 0, -1]], n)
        q = spheres.sphere_path([[0, 0, -1], [0, -1, 0], [1, 0, 0]], n)
        a = ap.concatenate(ap.APath.lift(A, q), ap.APath.lift(A, p))
        res.append(a.residual())
    assert res[1] < 1e-2 and res[1] < res[0] / 8
    assert np.allclose(a.base.ambient()[[0, -1]], [[1, 0, 0], [1, 0, 0]], atol=1e-12)
