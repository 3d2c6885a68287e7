"""Prequantizability verdicts and the path-space bundle ``P_x0(M) x R / ~`` with its connection."""
from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebroid import Algebroid, central_extension, cochain_from_form, tangent
from .apath import EndpointMismatch, concatenate_paths, resample
from .geometry import (
    Atlas,
    BasePath,
    GeometryError,
    QuadratureDegeneracyWarning,
    SphereGrid,
    TwoFormField,
    integrate_over_homotopy,
)
from .monodromy import TAU_GEN, TAU_R, PeriodGroup, StructuralGroup, reduce_period_group, sphere_periods
from .spheres import great_circle_homotopy, product_factor_spheres, product_homotopy, sphere_generator, straight_homotopy

TAU_INT = 1e-4


class PrequantError(ValueError):
    pass


class IndiscretePeriods(PrequantError):
    pass


class NotSimplyConnected(PrequantError):
    pass


class NotPrequantizable(PrequantError):
    pass


class ChernConsistencyError(PrequantError):
    pass


# --------------------------------------------------------------------------
# Verdicts
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PrequantReport:
    verdict: str
    periods: list = field(default_factory=list)
    k: int | None = None
    margin: float | None = None
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "periods": self.periods, "k": self.k, "margin": self.margin,
                "notes": list(self.notes)}


def integrality(group: PeriodGroup, tol_int: float = TAU_INT) -> tuple[str, int | None, float | None]:
    """``(verdict, k, distance)`` for one period group."""
    if group.classification == "trivial":
        return "prequantizable", 0, 0.0
    if group.classification == "indiscrete":
        return "not_prequantizable", None, None
    a = group.generator
    k = int(round(a))
    dist = abs(a - k)
    if k == 0:
        return "not_prequantizable", None, dist
    if dist <= tol_int:
        return "prequantizable", k, dist
    if dist < 10 * tol_int:
        return "inconclusive", k, dist
    return "not_prequantizable", None, dist


def prequantizable(form: TwoFormField, generators_per_point: Sequence[Sequence[SphereGrid]],
                   sample_points=None, tol_int: float = TAU_INT, tol_gen: float = TAU_GEN) -> PrequantReport:
    """Per(omega) inside Z at every sample, with a common generator ``k``."""
    if sample_points is None:
        sample_points = [None] * len(generators_per_point)
    periods, verdicts, ks, dists = [], [], [], []
    for x, gens in zip(sample_points, generators_per_point):
        g = reduce_period_group(sphere_periods(form, gens) if gens else [], tol_gen)
        v, k, dist = integrality(g, tol_int)
        verdicts.append(v)
        ks.append(k)
        dists.append(dist)
        periods.append({"point": None if x is None else np.asarray(x, float).tolist(), **g.to_json(),
                        "verdict": v, "k": k, "distance": dist})
    margin = max((d for d in dists if d is not None), default=None)
    notes = []
    if not verdicts:
        return PrequantReport("inconclusive", periods, None, None, ("no sample points",))
    if "not_prequantizable" in verdicts:
        return PrequantReport("not_prequantizable", periods, None, margin, ("some period group is not inside Z",))
    if "inconclusive" in verdicts:
        return PrequantReport("inconclusive", periods, None, margin, ("a period is near an integer but outside tolerance",))
    if len(set(ks)) != 1:
        notes.append("integer generator differs between samples")
        return PrequantReport("inconclusive", periods, None, margin, tuple(notes))
    return PrequantReport("prequantizable", periods, ks[0], margin, tuple(notes))


def default_generators(atlas: Atlas, n_t: int = 200, n_eps: int = 200) -> list[SphereGrid]:
    """Generators of pi_2 for the catalog manifolds."""
    if atlas.kind == "sphere2":
        return [sphere_generator(n_t, n_eps, atlas=atlas)]
    if atlas.is_product and all(f.kind == "sphere2" for f in atlas.factors):
        return product_factor_spheres(n_t, n_eps)
    return []


# --------------------------------------------------------------------------
# The bundle
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BundleElement:
    path: BasePath
    r: float


@dataclass(frozen=True, eq=False)
class EquivalenceVerdict:
    verdict: bool
    defect: float
    distance: float
    integral: float

    def __bool__(self) -> bool:
        return self.verdict


@dataclass(frozen=True, eq=False)
class PathBundle:
    """Representatives ``(gamma, r)`` with ``gamma`` starting at ``x0`` and a decidable equivalence."""

    atlas: Atlas
    form: TwoFormField
    basepoint: tuple
    period: PeriodGroup
    n_eps: int = 200
    tol_r: float = TAU_R
    quotient: int | None = None

    @property
    def structural_group(self) -> StructuralGroup:
        return StructuralGroup(self.period)

    def element(self, path: BasePath, r: float = 0.0, tol: float = 1e-10) -> BundleElement:
        c0, x0 = self.basepoint
        c, x = path.start()
        y = self.atlas.transition(np.array([c]), np.array([c0]), np.asarray(x, float)[None])[0]
        if np.max(np.abs(y - x0)) > tol:
            raise EndpointMismatch("bundle elements start at the basepoint")
        return BundleElement(path, float(r))

    def identity(self, n: int = 200) -> BundleElement:
        c0, x0 = self.basepoint
        return BundleElement(BasePath.constant(self.atlas, c0, x0, n), 0.0)

    # -- homotopies ----------------------------------------------------------
    def _common(self, p0: BasePath, p1: BasePath):
        n = max(p0.n, p1.n)
        s = np.linspace(0.0, 1.0, n + 1)
        out = []
        for p in (p0, p1):
            if p.n == n:
                out.append(p)
            else:
                c, X, _ = resample(self.atlas, p.charts, p.coords, s)
                out.append(BasePath(self.atlas, c, X))
        return out

    def homotopy(self, p0: BasePath, p1: BasePath) -> SphereGrid:
        """A homotopy rel endpoints from ``p0`` to ``p1`` by the catalog strategy."""
        q0, q1 = self._common(p0, p1)
        kind = self.atlas.kind
        if kind == "sphere2" or self.atlas.is_product:
            make = great_circle_homotopy if kind == "sphere2" else product_homotopy
            last = None
            for perturb, seed in ((0.0, None), (0.5, (0.0, 0.0, 1.0)), (0.5, (0.0, 1.0, 0.0)), (0.7, (1.0, 0.0, 0.0))):
                try:
                    if kind == "sphere2":
                        return make(q0, q1, self.n_eps, perturb, seed)
                    return make(q0, q1, self.n_eps, perturb)
                except GeometryError as err:
                    last = err
            raise PrequantError(f"homotopy strategy failed: {last}")
        return straight_homotopy(q0, q1, self.n_eps)

    def _integrate(self, H: SphereGrid, tol: float) -> float:
        # homotopies from constant or identical paths are degenerate on purpose
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", QuadratureDegeneracyWarning)
            return integrate_over_homotopy(self.form, H, tol=tol).value

    # -- the equivalence -------------------------------------------------------
    def _check_ends(self, p0: BasePath, p1: BasePath, tol: float = 1e-10):
        for (ca, xa), (cb, xb) in ((p0.start(), p1.start()), (p0.end(), p1.end())):
            y = self.atlas.transition(np.array([cb]), np.array([ca]), np.asarray(xb, float)[None])[0]
            if np.max(np.abs(y - xa)) > tol:
                raise EndpointMismatch("paths do not share endpoints")

    def defect(self, e0: BundleElement, e1: BundleElement) -> tuple[float, float]:
        """``r1 - r0 - int_H omega`` for the strategy homotopy ``H`` from ``gamma0`` to ``gamma1``."""
        self._check_ends(e0.path, e1.path)
        H = self.homotopy(e0.path, e1.path)
        integral = self._integrate(H, 1e-8)
        return e1.r - e0.r - integral, integral

    def equivalence_test(self, e0: BundleElement, e1: BundleElement) -> EquivalenceVerdict:
        d, integral = self.defect(e0, e1)
        dist = self.period.distance_to_period(d)
        return EquivalenceVerdict(dist <= self.tol_r, float(d), float(dist), float(integral))

    def act(self, e: BundleElement, s: float) -> BundleElement:
        return BundleElement(e.path, e.r + float(s))

    def transport(self, e: BundleElement, extension: BasePath) -> BundleElement:
        """Horizontal lift: extend the path, keep ``r``."""
        return BundleElement(concatenate_paths(extension, e.path), e.r)

    # -- holonomy and Chern number ---------------------------------------------
    def _check_loop(self, loop: BasePath, tol: float = 1e-10):
        c0, x0 = self.basepoint
        for c, x in (loop.start(), loop.end()):
            y = self.atlas.transition(np.array([c]), np.array([c0]), np.asarray(x, float)[None])[0]
            if np.max(np.abs(y - x0)) > tol:
                raise EndpointMismatch("loop is not closed at the basepoint")

    def holonomy(self, loop: BasePath, filling: SphereGrid | None = None, tol: float = 1e-8) -> float:
        """Class of ``-int_F omega`` in the structural group, ``F`` running from the constant loop to ``loop``."""
        self._check_loop(loop)
        if filling is None:
            filling = self.homotopy(self.identity(loop.n).path, loop)
        else:
            c0, x0 = self.basepoint
            first = self.atlas.transition(filling.charts[0], np.full(filling.shape[1], c0), filling.coords[0])
            last = filling.row(filling.shape[0] - 1)
            if filling.shape[1] != loop.n + 1:
                raise EndpointMismatch("filling and loop use different samples")
            lastX = self.atlas.transition(last.charts, loop.charts, last.coords)
            if np.max(np.abs(first - x0)) > tol or np.max(np.abs(lastX - loop.coords)) > tol:
                raise EndpointMismatch("filling does not bound the loop")
        integral = self._integrate(filling, tol)
        return self.structural_group.reduce(-integral)

    def chern_number(self, upper: SphereGrid, lower: SphereGrid, tol: float = 1e-3) -> int:
        """Integral over ``upper`` glued to the reverse of ``lower``; both fill the same loop."""
        value = self._integrate(upper, 1e-8) - self._integrate(lower, 1e-8)
        k = round(value)
        if abs(value - k) > tol:
            raise ChernConsistencyError(f"glued integral {value:.6f} is not an integer")
        return int(k)

    def extension(self) -> Algebroid:
        """The infinitesimal central extension ``A_c`` with ``c = omega`` on ``TM``."""
        A = tangent(self.atlas)
        return central_extension(A, cochain_from_form(A, self.form))


def build_path_bundle(atlas: Atlas, form: TwoFormField, basepoint, generators: Sequence[SphereGrid] | None = None,
                      n_eps: int = 200, tol_gen: float = TAU_GEN, tol_r: float = TAU_R) -> PathBundle:
    """``basepoint`` is ``(chart, coords)``; refuses non-simply-connected catalogs and indiscrete periods."""
    if atlas.kind == "torus2" or (atlas.is_product and any(f.kind == "torus2" for f in atlas.factors)):
        raise NotSimplyConnected("path-space bundles are built over simply connected manifolds only")
    if generators is None:
        generators = default_generators(atlas)
    group = reduce_period_group(sphere_periods(form, generators) if generators else [], tol_gen)
    if group.classification == "indiscrete":
        raise IndiscretePeriods("the period group is not discrete, so the quotient is not smooth")
    c0, x0 = basepoint
    return PathBundle(atlas, form, (int(c0), np.asarray(x0, float)), group, n_eps, tol_r)


def quotient_to_circle(bundle: PathBundle, tol_int: float = TAU_INT) -> PathBundle:
    """Divide ``R/kZ`` by ``Z/kZ``: defects are then compared modulo ``Z``."""
    verdict, k, _ = integrality(bundle.period, tol_int)
    if verdict != "prequantizable":
        raise NotPrequantizable("the periods are not integral")
    if k == 0:
        return bundle
    unit = PeriodGroup(bundle.period.generators, "discrete", 1.0, bundle.period.tolerance, bundle.period.cap,
                       bundle.period.iterations, bundle.period.terminated_by)
    return dataclasses.replace(bundle, period=unit, quotient=k)
