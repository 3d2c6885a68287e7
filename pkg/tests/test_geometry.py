import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lieprequant import geometry as geo
from lieprequant import spheres
from conftest import unit_sphere_points

finite = st.floats(-3, 3, allow_nan=False)


def inversion(z):
    z = np.asarray(z, float)
    return z / np.dot(z, z)


def north_density(z):
    return 1.0 / (np.pi * (1 + np.dot(z, z)) ** 2)


# -- transitions ---------------------------------------------------------------


def test_euclidean_transition_is_identity():
    E = geo.Atlas.euclidean(2)
    assert np.allclose(geo.transition_point(E, 0, 0, [0.3, 0.7]), [0.3, 0.7])


@pytest.mark.parametrize("z", [[1.0, 0.0], [2.0, 0.0], [0.6, -0.8], [0.7, 1.1]])
def test_stereographic_transition_matches_inversion(sphere, z):
    assert np.allclose(geo.transition_point(sphere, 0, 1, z), inversion(z), atol=1e-14)


def test_transition_outside_overlap_raises(sphere):
    with pytest.raises(geo.PointOutsideOverlap):
        geo.transition_point(sphere, 0, 1, [0.1, 0.0])


@given(st.floats(0.55, 1.9), st.floats(0, 2 * np.pi))
def test_transitions_are_mutually_inverse(r, phi):
    S = geo.Atlas.sphere2()
    z = np.array([[r * np.cos(phi), r * np.sin(phi)]])
    back = S.transition(np.array([1]), np.array([0]), S.transition(np.array([0]), np.array([1]), z))
    assert np.max(np.abs(back - z)) <= 1e-10


@given(st.floats(0.6, 1.8), st.floats(0, 2 * np.pi))
def test_transition_jacobian_matches_finite_differences(r, phi):
    S = geo.Atlas.sphere2()
    z = np.array([r * np.cos(phi), r * np.sin(phi)])
    J = S.jacobian(np.array([0]), np.array([1]), z[None])[0]
    h = 1e-6
    fd = np.stack([
        (S.transition(np.array([0]), np.array([1]), (z + h * e)[None])[0]
         - S.transition(np.array([0]), np.array([1]), (z - h * e)[None])[0]) / (2 * h)
        for e in np.eye(2)
    ], axis=1)
    assert np.max(np.abs(J - fd)) <= 1e-6


def test_ambient_round_trip(sphere, rng):
    P = unit_sphere_points(rng, 200)
    c, X = sphere.from_ambient(P)
    assert np.max(np.abs(sphere.to_ambient(c, X) - P)) < 1e-13
    assert np.all(np.linalg.norm(X, axis=-1) <= 1.0 + 1e-12)


# -- forms ---------------------------------------------------------------------


def test_coordinate_form_values(plane):
    w = geo.coordinate_form(plane)
    assert geo.eval_two_form(w, 0, [0, 0], [1, 0], [0, 1]) == 1.0
    assert geo.eval_two_form(w, 0, [0, 0], [1, 0], [1, 0]) == 0.0


def test_area_form_at_north_origin(sphere, area):
    assert geo.eval_two_form(area, 0, [0, 0], [1, 0], [0, 1]) == pytest.approx(north_density(np.zeros(2)), abs=1e-15)
    assert geo.eval_two_form(area, 0, [0, 0], [1, 0], [0, 1]) == pytest.approx(1 / np.pi)


@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_area_coefficient_matches_closed_form(x, y):
    S = geo.Atlas.sphere2()
    w = geo.scaled_area_form(S, 1.0)
    z = np.array([x, y])
    assert geo.eval_two_form(w, 0, z, [1, 0], [0, 1]) == pytest.approx(north_density(z), rel=1e-12)


@given(st.lists(finite, min_size=2, max_size=2), st.lists(finite, min_size=2, max_size=2))
def test_eval_is_antisymmetric(v, w):
    S = geo.Atlas.sphere2()
    form = geo.scaled_area_form(S, 1.0)
    p = [0.2, -0.4]
    assert geo.eval_two_form(form, 0, p, v, w) == -geo.eval_two_form(form, 0, p, w, v)


def test_eval_outside_chart_raises(area):
    with pytest.raises(geo.ChartDomainError):
        geo.eval_two_form(area, 0, [3.0, 0.0], [1, 0], [0, 1])


def test_area_form_transforms_between_charts(area, rng):
    r = rng.uniform(0.6, 1.8, 50)
    phi = rng.uniform(0, 2 * np.pi, 50)
    X = np.stack([r * np.cos(phi), r * np.sin(phi)], -1)
    assert area.transformation_residual(0, 1, X) <= 1e-8


def test_area_form_is_closed_numerically(sphere, area, rng):
    c, X = sphere.from_ambient(unit_sphere_points(rng, 30))
    assert area.exterior_derivative_residual(c, X) <= 1e-5


def test_polynomial_form_detects_non_closed():
    E3 = geo.Atlas.euclidean(3)
    assert not geo.polynomial_form(E3, {(1, 2): "x0"}).closed
    assert geo.polynomial_form(E3, {(0, 1): "x0**2 + 1"}).closed


# -- paths and grids -----------------------------------------------------------


def test_base_path_endpoints(sphere):
    p = spheres.equator_loop(100)
    c0, x0 = p.start()
    c1, x1 = p.end()
    assert np.allclose(sphere.to_ambient(np.array([c0]), x0[None])[0], spheres.EAST)
    assert np.allclose(sphere.to_ambient(np.array([c1]), x1[None])[0], spheres.EAST)
    assert p.reversed().start()[0] == c1


def test_sphere_generator_is_basepointed():
    g = spheres.sphere_generator(60, 60)
    assert g.basepointed
    assert g.boundary_drift() <= 1e-14


def test_sphere_grid_rejects_false_basepoint_marker(sphere):
    g = spheres.hemisphere_filling(40, 40)
    with pytest.raises(geo.GeometryError):
        geo.SphereGrid(sphere, g.charts, g.coords, basepointed=True)


# -- integrals -------------------------------------------------------------------


def test_zero_form_integrates_to_zero(sphere):
    assert geo.integrate_over_sphere(geo.zero_form(sphere), spheres.sphere_generator(50, 50)).value == 0.0


@pytest.mark.parametrize("lam", [1.0, 2.0])
def test_full_sphere_integral(sphere, lam):
    g = spheres.sphere_generator(200, 200)
    assert geo.integrate_over_sphere(geo.scaled_area_form(sphere, lam), g).value == pytest.approx(lam, abs=1e-4 * lam)


@pytest.mark.parametrize("lam", [1.0, 3.0])
def test_hemisphere_homotopy_integral(sphere, lam):
    g = spheres.hemisphere_filling(200, 200)
    val = geo.integrate_over_homotopy(geo.scaled_area_form(sphere, lam), g).value
    assert val == pytest.approx(0.5 * lam, abs=1e-4 * lam)


@pytest.mark.parametrize("beta", [0.3, 1.0, 2.0, 2.9])
def test_cap_integral_matches_cap_area(area, beta):
    val = geo.integrate_over_homotopy(area, spheres.cap_filling(beta, 160, 160)).value
    assert val == pytest.approx(2 * np.pi * (1 - np.cos(beta)) / (4 * np.pi), abs=1e-6)


def test_lower_hemisphere_has_opposite_sign(area):
    assert geo.integrate_over_homotopy(area, spheres.hemisphere_filling(120, 120, lower=True)).value == pytest.approx(-0.5, abs=1e-5)


def test_epsilon_constant_homotopy_is_zero(area):
    p = spheres.latitude_loop(1.0, 80)
    g = geo.SphereGrid.from_rows([p] * 41)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", geo.QuadratureDegeneracyWarning)
        assert abs(geo.integrate_over_homotopy(area, g).value) <= 1e-14


def test_degenerate_grid_warns(area, sphere):
    c, x = sphere.from_ambient(spheres.EAST[None])
    p = geo.BasePath.constant(sphere, int(c[0]), x[0], 40)
    g = geo.SphereGrid.from_rows([p] * 41)
    res = geo.integrate_over_sphere(area, g)
    assert res.value == 0.0 and res.warnings


def test_endpoint_drift_raises(area):
    g = spheres.cap_filling(1.0, 40, 40)
    coords = g.coords.copy()
    coords[5, 0] += 1e-6
    bad = geo.SphereGrid(g.atlas, g.charts, coords)
    with pytest.raises(geo.EndpointDriftError):
        geo.integrate_over_homotopy(area, bad)


def test_chart_independence(sphere, area):
    g = spheres.hemisphere_filling(200, 200)
    # the same grid with every sample re-expressed in the other chart where it is allowed
    flip = 1 - g.charts
    inside = (np.linalg.norm(g.coords, axis=-1) > 0.55) & (np.linalg.norm(g.coords, axis=-1) < 1.8)
    charts = np.where(inside, flip, g.charts)
    coords = sphere.transition(g.charts, charts, g.coords)
    other = geo.SphereGrid(sphere, charts, coords)
    a = geo.integrate_over_homotopy(area, g).value
    b = geo.integrate_over_homotopy(area, other).value
    assert abs(a - b) <= 1e-8


def test_quadrature_order(area):
    vals = [geo.integrate_over_sphere(area, spheres.sphere_generator(n, n)).value for n in (50, 100, 200)]
    for n, (a, b) in zip((50, 100), zip(vals, vals[1:])):
        assert abs(a - b) <= 20.0 * n**-3


def test_product_factor_spheres_integrate_to_scales():
    P = geo.Atlas.product(geo.Atlas.sphere2(), geo.Atlas.sphere2())
    w = geo.product_sum_form(P, [1.0, np.sqrt(2)])
    s1, s2 = spheres.product_factor_spheres(120, 120)
    assert geo.integrate_over_sphere(w, s1).value == pytest.approx(1.0, abs=1e-5)
    assert geo.integrate_over_sphere(w, s2).value == pytest.approx(np.sqrt(2), abs=1e-5)
