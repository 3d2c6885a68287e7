"""Period groups, the scalar monodromy r(gamma), A_c-paths and the integrability verdict."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebroid import Algebroid, Cochain, cochain_as_form
from .apath import TAU_PATH, APath, APathFamily, is_homotopy, solve_b
from .geometry import (
    QuadratureDegeneracyWarning,
    SphereGrid,
    TwoFormField,
    integrate_over_sphere,
    simpson1,
    simpson2,
)
from .groupoid import DeskGroupoid, GroupoidError, GroupoidForm, right_invariant_form

TAU_GEN = 1e-9
TAU_R = 1e-4
EUCLID_CAP = 50


class MonodromyError(ValueError):
    pass


class LiftUnavailable(MonodromyError):
    pass


class NotAHomotopy(MonodromyError):
    pass


# --------------------------------------------------------------------------
# Period groups
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodGroup:
    """Subgroup of R generated by ``generators``, classified as trivial, discrete(a) or indiscrete."""

    generators: tuple[float, ...]
    classification: str
    generator: float | None = None
    tolerance: float = TAU_GEN
    cap: int = EUCLID_CAP
    iterations: int = 0
    terminated_by: str = "single"

    @property
    def is_discrete(self) -> bool:
        return self.classification in ("trivial", "discrete")

    def distance_to_period(self, value: float) -> float:
        """Distance from ``value`` to the nearest element (0 for an indiscrete group, which is dense)."""
        if self.classification == "trivial":
            return abs(value)
        if self.classification == "discrete":
            a = self.generator
            return abs(value - a * round(value / a))
        return 0.0

    def to_json(self) -> dict:
        return {
            "generators": list(self.generators),
            "classification": self.classification,
            "generator": self.generator,
            "tolerance": self.tolerance,
            "cap": self.cap,
            "iterations": self.iterations,
            "terminated_by": self.terminated_by,
        }


def reduce_period_group(generators: Sequence[float], tol: float = TAU_GEN, cap: int = EUCLID_CAP,
                        refine: bool = True) -> PeriodGroup:
    """Pairwise Euclid on the absolute values, carrying an error bound for every remainder.

    A remainder within its error of 0 (or of the divisor) is dropped. A single
    survivor ``a`` is accepted as discrete only when its error, multiplied up to
    the largest generator, stays below half a step; otherwise the reduction is
    ``unresolved`` and the group is reported as indiscrete.
    """
    gens = tuple(float(g) for g in generators)
    work = [(abs(g), tol * max(1.0, abs(g))) for g in gens if abs(g) > tol]
    if not work:
        return PeriodGroup(gens, "trivial", None, tol, cap, 0, "empty")
    big = max(v for v, _ in work)
    it = 0
    while len(work) > 1:
        if it >= cap:
            return PeriodGroup(gens, "indiscrete", None, tol, cap, it, "cap")
        work.sort()
        (g2, e2), (g1, e1) = work[0], work[1]
        q = math.floor(g1 / g2)
        r = g1 - q * g2
        er = e1 + q * e2
        it += 1
        rest = work[2:]
        if r <= er or g2 - r <= er:
            work = [(g2, e2)] + rest
        else:
            work = [(g2, e2), (r, er)] + rest
    a, ea = work[0]
    if a * a <= 2.0 * ea * big:
        return PeriodGroup(gens, "indiscrete", None, tol, cap, it, "unresolved")
    if refine:
        vals = np.array([abs(g) for g in gens if abs(g) > tol])
        m = np.round(vals / a)
        a = float(vals @ m / (m @ m))
    for g in gens:
        if abs(g) > tol and abs(abs(g) - a * round(abs(g) / a)) > max(tol * max(1.0, abs(g)), 2.0 * ea * abs(g) / a):
            return PeriodGroup(gens, "indiscrete", None, tol, cap, it, "unresolved")
    return PeriodGroup(gens, "discrete", a, tol, cap, it, "single")


@dataclass(frozen=True)
class StructuralGroup:
    """``R / P`` for a discrete or trivial period group ``P``."""

    period: PeriodGroup

    @property
    def modulus(self) -> float | None:
        return self.period.generator if self.period.classification == "discrete" else None

    def reduce(self, s: float) -> float:
        a = self.modulus
        return float(s) if a is None else float(s - a * math.floor(s / a))

    def distance(self, s: float, t: float = 0.0) -> float:
        """Distance between the classes of ``s`` and ``t``."""
        return self.period.distance_to_period(float(s) - float(t))

    def describe(self) -> str:
        a = self.modulus
        if self.period.classification == "indiscrete":
            return "R/(dense subgroup)"
        return "R" if a is None else f"R/{a:.12g}Z"


# --------------------------------------------------------------------------
# Forms on s-fibers and period groups at a point
# --------------------------------------------------------------------------


def right_translated_form(G: DeskGroupoid, c2: Cochain, x=None) -> TwoFormField | GroupoidForm:
    """``omega_c^x`` on ``s^-1(x)``.

    For the pair groupoid the fiber is identified with ``M`` by ``(y, x) -> y`` and
    right translation is the identity on the first factor, so the form is ``c``
    itself. For a matrix group it is the right-invariant extension of ``c``.
    """
    if G.kind == "pair":
        if c2.algebroid.rank != G.d:
            raise GroupoidError("cochain does not live on the tangent algebroid of the base")
        return cochain_as_form(c2)
    if G.kind == "matrix_group":
        return right_invariant_form(G, c2.values(0, np.zeros((1, 0)))[0])
    raise GroupoidError(f"right translation is not available for {G.kind}")


def sphere_periods(form: TwoFormField, spheres: Sequence[SphereGrid]) -> list[float]:
    out = []
    for g in spheres:
        res = integrate_over_sphere(form, g)
        for note in res.warnings:
            warnings.warn(note, QuadratureDegeneracyWarning, stacklevel=2)
        out.append(res.value)
    return out


def period_group_at(G: DeskGroupoid, c2: Cochain, x, sphere_generators: Sequence[SphereGrid],
                    tol: float = TAU_GEN, cap: int = EUCLID_CAP) -> PeriodGroup:
    if not sphere_generators:
        return reduce_period_group([], tol, cap)
    form = right_translated_form(G, c2, x)
    if not isinstance(form, TwoFormField):
        raise GroupoidError("sphere generators need a fiber with charts")
    return reduce_period_group(sphere_periods(form, sphere_generators), tol, cap)


# --------------------------------------------------------------------------
# Monodromy scalar
# --------------------------------------------------------------------------


def monodromy_family(A: Algebroid, sphere: SphereGrid, strategy: str = "tangent") -> APathFamily:
    """Rows of A-paths over the sphere rows.

    ``tangent`` needs ``A = TM`` (the right-translated derivative of each row);
    ``pinv`` takes the least-norm lift, which requires a surjective anchor along
    the sphere.
    """
    if strategy not in ("tangent", "pinv"):
        raise LiftUnavailable(f"unknown lifting strategy {strategy!r}")
    if strategy == "tangent" and not (A.rank == A.dimension and A.kind == "tangent"):
        raise LiftUnavailable("tangent lift needs the tangent algebroid")
    fam = APathFamily.lift(A, sphere)
    if A.dimension and fam.residual() > 10 * TAU_PATH * max(1.0, float(np.max(np.abs(fam.values)))):
        raise LiftUnavailable("the anchor does not reach the sphere's velocities")
    return fam


def monodromy_r(A: Algebroid, c2: Cochain, sphere: SphereGrid, strategy: str = "tangent", connection=None) -> float:
    """``r = int int c(a, b) dt deps`` over the lifted sphere."""
    fam = monodromy_family(A, sphere, strategy)
    return family_integral(A, c2, fam, connection)


def family_integral(A: Algebroid, c2: Cochain, family: APathFamily, connection=None) -> float:
    b = solve_b(A, connection, family)
    grid = family.grid
    return simpson2(c2.pair(grid.charts, grid.coords, family.values, b))


# --------------------------------------------------------------------------
# A_c-paths
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ACPath:
    """An A-path together with samples of the scalar component."""

    path: APath
    scalar: np.ndarray
    normal: bool = False

    def __post_init__(self):
        f = np.broadcast_to(np.asarray(self.scalar, dtype=float), (self.path.n + 1,)).copy()
        object.__setattr__(self, "scalar", f)

    @property
    def r(self) -> float:
        return simpson1(self.scalar)


def ac_normal_form(p: ACPath) -> ACPath:
    """Replace the scalar by its mean ``r``; the straight homotopy between them is an A_c-homotopy."""
    return ACPath(p.path, np.full(p.path.n + 1, p.r), normal=True)


@dataclass(frozen=True)
class EquivalenceReport:
    verdict: bool
    defect: float
    integral: float
    tolerance: float

    def __bool__(self) -> bool:
        return self.verdict

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "defect": self.defect, "integral": self.integral, "tolerance": self.tolerance}


def ac_equivalent(p0: ACPath, p1: ACPath, base_homotopy: APathFamily, c2: Cochain, connection=None,
                  tol: float = TAU_R, endpoint_tol: float = 1e-8) -> EquivalenceReport:
    """``(a0, r0) ~ (a1, r1)`` iff ``r1 - r0 = int int c(a, b)`` along an A-homotopy from ``a0`` to ``a1``."""
    A = base_homotopy.algebroid
    rep = is_homotopy(A, base_homotopy, connection)
    if not rep.verdict:
        raise NotAHomotopy(f"family is not an A-homotopy (residual {rep.residual:.3e})")
    first, last = base_homotopy.row(0), base_homotopy.row(base_homotopy.shape[0] - 1)
    for end, p in ((first, p0), (last, p1)):
        if end.n != p.path.n or np.max(np.abs(end.coords - p.path.base.atlas.transition(p.path.charts, end.charts, p.path.coords))) > endpoint_tol:
            raise NotAHomotopy("homotopy does not join the two paths")
    q0 = p0 if p0.normal else ac_normal_form(p0)
    q1 = p1 if p1.normal else ac_normal_form(p1)
    integral = simpson2(c2.pair(base_homotopy.grid.charts, base_homotopy.grid.coords, base_homotopy.values, rep.b))
    defect = q1.r - q0.r - integral
    return EquivalenceReport(abs(defect) <= tol, float(defect), float(integral), tol)


# --------------------------------------------------------------------------
# Integrability
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IntegrabilityReport:
    verdict: str
    points: list = field(default_factory=list)
    max_jump: float = 0.0
    continuity_tolerance: float = 1e-3
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "points": self.points,
            "max_jump": self.max_jump,
            "continuity_tolerance": self.continuity_tolerance,
            "notes": list(self.notes),
        }


def integrability_verdict(G: DeskGroupoid, c2: Cochain, sample_points, generators_per_point,
                          tol: float = TAU_GEN, cap: int = EUCLID_CAP, continuity: float = 1e-3) -> IntegrabilityReport:
    """Per-sample period groups; consecutive samples are treated as neighbours."""
    groups = [period_group_at(G, c2, x, gens, tol, cap) for x, gens in zip(sample_points, generators_per_point)]
    points = [
        {"point": np.asarray(x, dtype=float).tolist(), **g.to_json()}
        for x, g in zip(sample_points, groups)
    ]
    kinds = [g.classification for g in groups]
    jumps = [
        abs(g.generator - h.generator)
        for g, h in zip(groups, groups[1:])
        if g.classification == h.classification == "discrete"
    ]
    max_jump = float(max(jumps, default=0.0))
    notes = []
    if "indiscrete" in kinds:
        verdict = "non_integrable"
        notes.append("indiscrete period group at some sample")
    elif any(k != kinds[0] for k in kinds):
        verdict = "inconclusive"
        notes.append("period classifications disagree between neighbouring samples")
    elif max_jump > continuity:
        verdict = "inconclusive"
        notes.append("period generator jumps between neighbouring samples")
    else:
        verdict = "integrable"
    return IntegrabilityReport(verdict, points, max_jump, continuity, tuple(notes))
