import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lieprequant import algebroid as alg
from lieprequant import apath as ap
from lieprequant import geometry as geo
from lieprequant import groupoid as gr
from lieprequant import monodromy as mo
from lieprequant import spheres


# -- period groups -----------------------------------------------------------

def test_integer_generators_reduce_to_one():
    P = mo.reduce_period_group([2.0, 3.0])
    assert P.classification == "discrete" and P.generator == pytest.approx(1.0, abs=1e-12)
    assert P.is_discrete


def test_one_and_root_two_are_indiscrete():
    P = mo.reduce_period_group([1.0, math.sqrt(2)])
    assert P.classification == "indiscrete" and not P.is_discrete
    assert P.terminated_by == "unresolved" and P.iterations == 12


def test_cap_stops_reduction():
    P = mo.reduce_period_group([1.0, math.sqrt(2)], cap=3)
    assert P.classification == "indiscrete" and P.terminated_by == "cap" and P.iterations == 3


@pytest.mark.parametrize("gens", [[], [0.0], [1e-12, -3e-11]])
def test_trivial(gens):
    P = mo.reduce_period_group(gens)
    assert P.classification == "trivial" and P.generator is None and P.is_discrete


def test_signs_ignored():
    P = mo.reduce_period_group([-4 * math.pi, 8 * math.pi, 12 * math.pi])
    assert P.generator == pytest.approx(4 * math.pi, rel=1e-12)


@given(a=st.floats(0.1, 10.0), ks=st.lists(st.integers(1, 40), min_size=1, max_size=4))
def test_commensurable_generators_are_discrete(a, ks):
    P = mo.reduce_period_group([a * k for k in ks])
    assert P.classification == "discrete"
    assert P.generator == pytest.approx(a * math.gcd(*ks), rel=1e-9)


@given(a=st.floats(0.1, 10.0), ks=st.lists(st.integers(1, 40), min_size=1, max_size=4),
       noise=st.floats(-1e-11, 1e-11))
def test_reduction_tolerates_noise_below_tolerance(a, ks, noise):
    gens = [a * k * (1 + noise) for k in ks]
    P = mo.reduce_period_group(gens)
    assert P.classification == "discrete"
    assert P.generator == pytest.approx(a * math.gcd(*ks), rel=1e-8)


def test_distance_to_period():
    P = mo.reduce_period_group([0.5])
    assert P.distance_to_period(1.26) == pytest.approx(0.24)
    assert mo.reduce_period_group([]).distance_to_period(-0.3) == pytest.approx(0.3)
    assert mo.reduce_period_group([1.0, math.sqrt(2)]).distance_to_period(0.123) == 0.0


def test_structural_group():
    S = mo.StructuralGroup(mo.reduce_period_group([2.0]))
    assert S.modulus == 2.0 and S.reduce(-0.5) == pytest.approx(1.5) and S.describe() == "R/2Z"
    assert S.distance(5.1, 1.0) == pytest.approx(0.1)
    assert mo.StructuralGroup(mo.reduce_period_group([])).describe() == "R"
    assert mo.StructuralGroup(mo.reduce_period_group([1.0, math.sqrt(2)])).describe() == "R/(dense subgroup)"


def test_to_json_round_trip_fields():
    d = mo.reduce_period_group([2.0, 3.0]).to_json()
    assert d["classification"] == "discrete" and d["generators"] == [2.0, 3.0] and d["cap"] == 50


# -- periods of forms ----------------------------------------------------------

@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_sphere_period_is_lambda(sphere, lam):
    A = alg.tangent(sphere)
    c = alg.cochain_from_form(A, geo.scaled_area_form(sphere, lam))
    G = gr.DeskGroupoid.pair(sphere)
    P = mo.period_group_at(G, c, None, [spheres.sphere_generator(120, 120)], tol=1e-6)
    assert P.classification == "discrete" and P.generator == pytest.approx(lam, abs=1e-6)


@pytest.mark.parametrize("scales,verdict", [([1.0, 2.0], "integrable"), ([1.0, math.sqrt(2)], "non_integrable")])
def test_product_integrability(scales, verdict):
    P = geo.Atlas.product(geo.Atlas.sphere2(), geo.Atlas.sphere2())
    c = alg.cochain_from_form(alg.tangent(P), geo.product_sum_form(P, scales))
    rep = mo.integrability_verdict(gr.DeskGroupoid.pair(P), c, [None], [spheres.product_factor_spheres(60, 60)])
    assert rep.verdict == verdict


def test_integrability_flags_jumps(sphere):
    A = alg.tangent(sphere)
    G = gr.DeskGroupoid.pair(sphere)
    c = alg.cochain_from_form(A, geo.scaled_area_form(sphere, 1.0))
    g1 = spheres.sphere_generator(60, 60)
    rep = mo.integrability_verdict(G, c, [None, None], [[g1], [g1]])
    assert rep.verdict == "integrable" and rep.max_jump == 0.0
    rep = mo.integrability_verdict(G, c, [None, None], [[g1], []])
    assert rep.verdict == "inconclusive"


def test_no_right_translation_for_circle_bundle(sphere):
    G = gr.DeskGroupoid.bundle_of_circles(sphere)
    c = alg.zero_cochain(G.algebroid(), 2)
    with pytest.raises(gr.GroupoidError):
        mo.right_translated_form(G, c)


# -- monodromy scalar ------------------------------------------------------------

@pytest.mark.parametrize("seed", [1, 5])
def test_monodromy_matches_integral(sphere, seed):
    w = geo.scaled_area_form(sphere, 1.5)
    A = alg.tangent(sphere)
    g = spheres.deformed_sphere(np.random.default_rng(seed), 120, 120)
    r = mo.monodromy_r(A, alg.cochain_from_form(A, w), g)
    assert r == pytest.approx(geo.integrate_over_sphere(w, g).value, abs=2e-5)


def test_monodromy_of_generator_is_lambda(sphere_tangent):
    A, c = sphere_tangent
    assert mo.monodromy_r(A, c, spheres.sphere_generator(120, 120)) == pytest.approx(1.0, abs=1e-5)


def test_monodromy_on_plane_is_swept_area(plane):
    A = alg.tangent(plane)
    c = alg.cochain_from_form(A, geo.coordinate_form(plane))
    eps = np.linspace(0, 1, 17)[:, None]
    t = np.linspace(0, 1, 65)[None, :]
    X = np.stack(np.broadcast_arrays(np.sin(np.pi * t) * eps, np.sin(np.pi * t) * t), -1)
    g = geo.SphereGrid(plane, np.zeros(X.shape[:2], int), X)
    # dx^dy(d_t g, d_eps g) = -sin(pi t) (sin(pi t) + pi t cos(pi t)), integrating to -(1/2 - 1/4)
    assert mo.monodromy_r(A, c, g) == pytest.approx(-0.25, abs=2e-6)
    assert geo.integrate_over_sphere(geo.coordinate_form(plane), g).value == pytest.approx(-0.25, abs=2e-6)


def test_lift_strategies(sphere, sphere_tangent):
    A, c = sphere_tangent
    g = spheres.sphere_generator(60, 60)
    assert mo.monodromy_r(A, c, g, "pinv") == pytest.approx(mo.monodromy_r(A, c, g, "tangent"), abs=1e-12)
    with pytest.raises(mo.LiftUnavailable):
        mo.monodromy_family(A, g, "geodesic")
    with pytest.raises(mo.LiftUnavailable):
        mo.monodromy_family(alg.a_omega(sphere, geo.scaled_area_form(sphere)), g, "tangent")


def test_pinv_needs_surjective_anchor(plane):
    A = alg.bundle_of_abelian_algebras(plane, 2)
    eps = np.linspace(0, 1, 9)[:, None]
    t = np.linspace(0, 1, 17)[None, :]
    X = np.stack(np.broadcast_arrays(t, eps * t * (1 - t)), -1)
    with pytest.raises(mo.LiftUnavailable):
        mo.monodromy_family(A, geo.SphereGrid(plane, np.zeros(X.shape[:2], int), X), "pinv")


# -- A_c-paths ------------------------------------------------------------------

def _loop_family(plane, n_t=64, n_eps=16, amp=0.3):
    eps = np.linspace(0, 1, n_eps + 1)[:, None]
    t = np.linspace(0, 1, n_t + 1)[None, :]
    X = np.stack(np.broadcast_arrays(t, amp * eps * np.sin(np.pi * t)), -1)
    return geo.SphereGrid(plane, np.zeros(X.shape[:2], int), X)


def test_normal_form_keeps_mean(plane):
    A = alg.tangent(plane)
    a = ap.APath.lift(A, _loop_family(plane).row(0))
    t = a.base.times
    p = mo.ACPath(a, 1 + np.cos(2 * np.pi * t))
    q = mo.ac_normal_form(p)
    assert p.r == pytest.approx(1.0, abs=1e-12) and q.normal and np.allclose(q.scalar, 1.0)


def test_equivalence_uses_swept_area(plane):
    A = alg.tangent(plane)
    c = alg.cochain_from_form(A, geo.coordinate_form(plane))
    fam = ap.APathFamily.lift(A, _loop_family(plane))
    area = 0.3 * 2 / math.pi  # region between the segment and the arch
    p0 = mo.ACPath(fam.row(0), 0.0)
    good = mo.ACPath(fam.row(16), area)
    bad = mo.ACPath(fam.row(16), area + 0.5)
    rep = mo.ac_equivalent(p0, good, fam, c)
    assert rep.verdict and abs(rep.integral - area) < 1e-7
    rep = mo.ac_equivalent(p0, bad, fam, c)
    assert not rep and rep.defect == pytest.approx(0.5, abs=1e-7)


def test_equivalence_needs_homotopy(plane):
    A = alg.tangent(plane)
    c = alg.cochain_from_form(A, geo.coordinate_form(plane))
    eps = np.linspace(0, 1, 17)[:, None]
    t = np.linspace(0, 1, 65)[None, :]
    X = np.stack(np.broadcast_arrays(t, eps * t), -1)
    fam = ap.APathFamily.lift(A, geo.SphereGrid(plane, np.zeros(X.shape[:2], int), X))
    with pytest.raises(mo.NotAHomotopy):
        mo.ac_equivalent(mo.ACPath(fam.row(0), 0), mo.ACPath(fam.row(16), 0), fam, c)
    ok = ap.APathFamily.lift(A, _loop_family(plane))
    with pytest.raises(mo.NotAHomotopy):
        mo.ac_equivalent(mo.ACPath(fam.row(0), 0), mo.ACPath(fam.row(16), 0), ok, c)
