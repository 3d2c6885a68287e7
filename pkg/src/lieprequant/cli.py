"""Manifest-driven command line front end.

    lieprequant prequantize --manifest manifests/sphere_lambda1.json --out runs/l1

Every command writes ``report.json`` (stable key order, no timestamps) and
``timing.json``; tabular commands also write CSV files.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import algebroid as alg
from . import geometry as geo
from . import spheres
from .apath import TAU_HOM, TAU_ODE, TAU_PATH, APath, Variation, VariationField, xi_generator
from .groupoid import (
    DeskGroupoid,
    InfinitesimalData,
    multiplicativity_residual,
    pair_groupoid_form,
    pullback_combination,
    rho_star_residuals,
    theta_eval,
)
from .monodromy import TAU_GEN, TAU_R, integrability_verdict, monodromy_r, period_group_at
from .prequant import TAU_INT, build_path_bundle, prequantizable

log = logging.getLogger("lieprequant")

COMMANDS = (
    "check-cocycle", "periods", "integrability", "prequantize", "monodromy",
    "verify-multiplicative", "reconstruct-theta", "holonomy", "chern", "selftest",
)

DEFAULT_TOLERANCES = {
    "tau_gen": TAU_GEN,
    "tau_int": TAU_INT,
    "tau_r": TAU_R,
    "tau_path": TAU_PATH,
    "tau_ode": TAU_ODE,
    "tau_hom": TAU_HOM,
    "tau_cocycle": 1e-6,
    "tau_mult": 1e-10,
    "tau_basic": 1e-3,
    "continuity": 1e-3,
}

SELFTEST_CHECKS = ("dA_squared", "jacobi_cocycle", "multiplicativity", "monodromy_oracle", "holonomy_additivity")


class ManifestError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    manifest: dict
    out: Path
    seed: int = 0
    n_t: int = 200
    n_eps: int = 200
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    fmt: str = "both"
    checks: tuple[str, ...] | None = None

    @property
    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


# --------------------------------------------------------------------------
# manifest handling
# --------------------------------------------------------------------------


def load_schema() -> dict:
    return json.loads(resources.files("lieprequant").joinpath("manifest.schema.json").read_text())


def load_manifest(path: str | Path) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ManifestError(f"{path}:{err.lineno}:{err.colno}: {err.msg}") from err
    errors = sorted(jsonschema.Draft202012Validator(load_schema()).iter_errors(data), key=lambda e: list(e.path))
    if errors:
        lines = [f"{path}: /{'/'.join(str(p) for p in e.path)}: {e.message}" for e in errors]
        raise ManifestError("\n".join(lines))
    return data


def make_atlas(section: dict) -> geo.Atlas:
    kind = section["kind"]
    if kind == "sphere2":
        return geo.Atlas.sphere2()
    if kind == "torus2":
        return geo.Atlas.torus2()
    if kind == "sphere2_x_sphere2":
        return geo.Atlas.product(geo.Atlas.sphere2(), geo.Atlas.sphere2())
    return geo.Atlas.euclidean(section.get("dimension", 2))


def make_form(atlas: geo.Atlas, section: dict | None) -> geo.TwoFormField:
    section = section or {"kind": "zero"}
    kind = section["kind"]
    if kind == "zero":
        return geo.zero_form(atlas)
    if kind == "scaled_area":
        return geo.scaled_area_form(atlas, section.get("lambda", 1.0))
    if kind == "sum_on_product":
        return geo.product_sum_form(atlas, section.get("scales", [1.0, 1.0]))
    if kind == "coordinate":
        i, j = section.get("indices", [0, 1])
        return geo.coordinate_form(atlas, i, j, section.get("lambda", 1.0))
    coeffs = {tuple(int(v) for v in key.split(",")): expr for key, expr in section.get("coefficients", {}).items()}
    return geo.polynomial_form(atlas, coeffs)


def _ambient_points(atlas: geo.Atlas, manifest: dict) -> list[np.ndarray]:
    pts = manifest.get("sample_points")
    if pts:
        return [np.asarray(p, float) for p in pts]
    if "basepoint" in manifest:
        return [np.asarray(manifest["basepoint"], float)]
    if atlas.kind == "sphere2":
        return [spheres.EAST]
    if atlas.is_product and atlas.has_embedding:
        return [np.concatenate([spheres.EAST, spheres.EAST])]
    return [np.zeros(atlas.dimension)]


def _chart_point(atlas: geo.Atlas, p: np.ndarray):
    if atlas.has_embedding:
        c, X = atlas.from_ambient(p[None])
        return int(c[0]), X[0]
    return 0, p


def _orient(grid: geo.SphereGrid, orientation: int) -> geo.SphereGrid:
    if orientation == 1:
        return grid
    return geo.SphereGrid(grid.atlas, grid.charts[::-1].copy(), grid.coords[::-1].copy(), grid.basepointed)


def make_generators(atlas: geo.Atlas, manifest: dict, point: np.ndarray, cfg: RunConfig) -> list[geo.SphereGrid]:
    specs = manifest.get("generators")
    if specs is None:
        if atlas.kind == "sphere2":
            specs = [{"kind": "identity_sphere"}]
        elif atlas.is_product and atlas.has_embedding:
            specs = [{"kind": "factor_sphere", "factor": 0}, {"kind": "factor_sphere", "factor": 1}]
        else:
            specs = []
    out = []
    rng = np.random.default_rng(cfg.seed)
    for s in specs:
        kind = s["kind"]
        if kind == "identity_sphere":
            if atlas.kind != "sphere2":
                raise ManifestError("identity_sphere generators need manifold sphere2")
            g = spheres.sphere_generator(cfg.n_t, cfg.n_eps, basepoint=point, atlas=atlas)
        elif kind == "factor_sphere":
            if not (atlas.is_product and atlas.has_embedding):
                raise ManifestError("factor_sphere generators need sphere2_x_sphere2")
            g = spheres.product_factor_spheres(cfg.n_t, cfg.n_eps, basepoint=(point[:3], point[3:]))[s.get("factor", 0)]
        else:
            if atlas.kind != "sphere2":
                raise ManifestError("deformed_sphere generators need manifold sphere2")
            g = spheres.deformed_sphere(rng, cfg.n_t, cfg.n_eps, s.get("strength", 0.4))
        out.append(_orient(g, s.get("orientation", 1)))
    return out


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _setup(cfg: RunConfig):
    m = cfg.manifest
    atlas = make_atlas(m["manifold"])
    form = make_form(atlas, m.get("form"))
    points = _ambient_points(atlas, m)
    return atlas, form, points


def random_points(atlas: geo.Atlas, rng: np.random.Generator, n: int):
    """``(charts, coords)`` of ``n`` random points: uniform on spheres, in ``[-1, 1]^d`` otherwise."""
    def sphere(m):
        P = rng.normal(size=(m, 3))
        return P / np.linalg.norm(P, axis=-1, keepdims=True)

    if atlas.kind == "sphere2":
        return atlas.from_ambient(sphere(n))
    if atlas.is_product and atlas.has_embedding:
        return atlas.from_ambient(np.concatenate([sphere(n), sphere(n)], axis=-1))
    return np.zeros(n, dtype=int), rng.uniform(-1, 1, size=(n, atlas.dimension))


def cmd_check_cocycle(cfg: RunConfig) -> dict:
    atlas, form, points = _setup(cfg)
    A = alg.tangent(atlas)
    c = alg.cochain_from_form(A, form)
    rng = cfg.rng
    n = cfg.manifest.get("options", {}).get("samples", 100)
    sample = random_points(atlas, rng, n)
    rep = alg.is_cocycle(A, c, sample, tol=cfg.tolerances["tau_cocycle"])
    Ac = alg.central_extension(A, c)
    jac = alg.max_jacobi_residual(Ac, sample)
    return {
        "verdict": "cocycle" if rep.verdict else "not_cocycle",
        "residual": rep.residual,
        "extension_jacobi_residual": jac,
        "samples": n,
    }


def _pair_cochain(atlas, form):
    A = alg.tangent(atlas)
    return DeskGroupoid.pair(atlas), A, alg.cochain_from_form(A, form)


def cmd_periods(cfg: RunConfig) -> dict:
    atlas, form, points = _setup(cfg)
    G, A, c = _pair_cochain(atlas, form)
    rows = []
    for p in points:
        g = period_group_at(G, c, p, make_generators(atlas, cfg.manifest, p, cfg), cfg.tolerances["tau_gen"])
        rows.append({"point": p.tolist(), **g.to_json()})
    kinds = {r["classification"] for r in rows}
    classification = kinds.pop() if len(kinds) == 1 else "mixed"
    return {
        "verdict": classification,
        "classification": classification,
        "points": rows,
        "_csv": {"periods.csv": [
            {"point": " ".join(f"{v:.12g}" for v in r["point"]), "classification": r["classification"],
             "generator": r["generator"], "iterations": r["iterations"], "terminated_by": r["terminated_by"],
             "integrals": " ".join(f"{v:.12g}" for v in r["generators"])}
            for r in rows
        ]},
    }


def cmd_integrability(cfg: RunConfig) -> dict:
    atlas, form, points = _setup(cfg)
    G, A, c = _pair_cochain(atlas, form)
    gens = [make_generators(atlas, cfg.manifest, p, cfg) for p in points]
    rep = integrability_verdict(G, c, points, gens, cfg.tolerances["tau_gen"], continuity=cfg.tolerances["continuity"])
    return rep.to_json()


def cmd_prequantize(cfg: RunConfig) -> dict:
    atlas, form, points = _setup(cfg)
    gens = [make_generators(atlas, cfg.manifest, p, cfg) for p in points]
    rep = prequantizable(form, gens, points, cfg.tolerances["tau_int"], cfg.tolerances["tau_gen"])
    return rep.to_json()


def cmd_monodromy(cfg: RunConfig) -> dict:
    atlas, form, points = _setup(cfg)
    A = alg.tangent(atlas)
    c = alg.cochain_from_form(A, form)
    grids = make_generators(atlas, cfg.manifest, points[0], cfg)
    extra = cfg.manifest.get("options", {}).get("random_spheres", 0)
    if extra and atlas.kind == "sphere2":
        rng = cfg.rng
        grids = grids + [spheres.deformed_sphere(rng, cfg.n_t, cfg.n_eps) for _ in range(extra)]
    rows = []
    for k, g in enumerate(grids):
        r = monodromy_r(A, c, g)
        direct = geo.integrate_over_sphere(form, g).value
        rows.append({"sphere": k, "r": r, "direct": direct, "difference": abs(r - direct)})
    worst = max((row["difference"] for row in rows), default=0.0)
    ok = worst <= cfg.tolerances["tau_r"]
    return {"verdict": "agree" if ok else "disagree", "max_difference": worst, "spheres": rows,
            "_csv": {"monodromy.csv": rows}}


def cmd_verify_multiplicative(cfg: RunConfig) -> dict:
    atlas, form, points = _setup(cfg)
    n = cfg.manifest.get("options", {}).get("samples", 1000)
    w = pair_groupoid_form(form)
    G = w.groupoid
    res = multiplicativity_residual(G, w, cfg.rng, n)
    wrong = multiplicativity_residual(G, pullback_combination(G, form, 1.0, 1.0), cfg.rng, n)
    axioms = G.axiom_residuals(cfg.rng, n)
    c, X = G._sample_points(cfg.rng, min(n, 100))
    infinitesimal = rho_star_residuals(G, w, c, X).to_json()
    ok = res <= cfg.tolerances["tau_mult"] and max(axioms.values()) <= 1e-10
    return {
        "verdict": "multiplicative" if ok else "not_multiplicative",
        "residual": res,
        "wrong_sign_residual": wrong,
        "axioms": axioms,
        "infinitesimal": infinitesimal,
        "samples": n,
    }


def theta_checks(atlas: geo.Atlas, form: geo.TwoFormField, rng: np.random.Generator, draws: int = 10, n: int = 200,
                 tau_basic: float = 1e-3) -> dict:
    """theta(d/dt), vanishing on action directions, and restriction to A on a path in chart 0."""
    A = alg.tangent(atlas)
    c = alg.cochain_from_form(A, form)
    Ac = alg.central_extension(A, c)
    lc = alg.canonical_transgression(Ac)
    c2 = alg.pullback(c, Ac)
    rs = InfinitesimalData.from_cochain(Ac, c2)
    d = atlas.dimension
    t = np.linspace(0.0, 1.0, n + 1)
    X = 0.3 * np.stack([np.cos(2 * t + k) * (1 + 0.2 * k) for k in range(d)], -1)
    base = geo.BasePath(atlas, np.zeros(n + 1, dtype=int), X)
    extra = np.zeros((n + 1, Ac.rank))
    extra[:, -1] = np.cos(3 * t)
    a = APath.lift(Ac, base, extra)
    ddt = theta_eval(Ac, c2, lc, a, Variation(np.zeros((n + 1, d)), np.tile(np.eye(Ac.rank)[-1], (n + 1, 1))), rs)
    ratios = []
    for _ in range(draws):
        p = rng.normal(size=(Ac.rank, d + 1))
        exprs = [f"sin(pi*t)*({float(p[i, 0])!r}" + "".join(f" + {float(p[i, k + 1])!r}*x{k}" for k in range(d)) + ")" for i in range(Ac.rank)]
        v = xi_generator(Ac, VariationField.from_expressions(Ac, exprs), a)
        ratios.append(abs(theta_eval(Ac, c2, lc, a, v, rs)) / v.norm())
    x = X[0]
    a0 = APath.zero(Ac, 0, x, n)
    restriction = 0.0
    for al in np.eye(Ac.rank):
        rho = Ac.anchor(np.array([0]), x[None])[0] @ al
        v = Variation(t[:, None] * rho[None, :], np.tile(al, (n + 1, 1)))
        restriction = max(restriction, float(abs(theta_eval(Ac, c2, lc, a0, v, rs) - lc.values(np.array([0]), x[None])[0] @ al)))
    return {
        "theta_ddt": ddt,
        "max_basic_ratio": max(ratios),
        "restriction_residual": restriction,
        "pass": bool(abs(ddt - 1) <= 1e-6 and max(ratios) <= tau_basic and restriction <= 1e-6),
    }


def cmd_reconstruct_theta(cfg: RunConfig) -> dict:
    atlas, form, points = _setup(cfg)
    draws = cfg.manifest.get("options", {}).get("draws", 10)
    out = theta_checks(atlas, form, cfg.rng, draws, cfg.n_t, cfg.tolerances["tau_basic"])
    out["verdict"] = "reconstructed" if out.pop("pass") else "failed"
    return out


def _bundle(cfg: RunConfig):
    atlas, form, points = _setup(cfg)
    if atlas.kind != "sphere2":
        raise ManifestError("holonomy and chern commands use manifold sphere2")
    x0 = _chart_point(atlas, spheres.EAST)
    gens = make_generators(atlas, cfg.manifest, spheres.EAST, cfg)
    return build_path_bundle(atlas, form, x0, gens, cfg.n_eps, tol_gen=cfg.tolerances["tau_gen"], tol_r=cfg.tolerances["tau_r"])


def cmd_holonomy(cfg: RunConfig) -> dict:
    B = _bundle(cfg)
    betas = cfg.manifest.get("options", {}).get("loops", [np.pi / 2])
    lam = cfg.manifest.get("form", {}).get("lambda", 1.0)
    rows = []
    for beta in betas:
        loop = spheres.latitude_loop(beta, cfg.n_t)
        h = B.holonomy(loop, spheres.cap_filling(beta, cfg.n_t, cfg.n_eps))
        expected = B.structural_group.reduce(-lam * spheres.cap_fraction(beta))
        rows.append({"beta": beta, "holonomy": h, "expected": expected,
                     "error": B.structural_group.distance(h, expected)})
    worst = max(r["error"] for r in rows)
    out = {
        "verdict": "consistent" if worst <= cfg.tolerances["tau_r"] else "inconsistent",
        "structural_group": B.structural_group.describe(),
        "loops": rows,
        "max_error": worst,
        "_csv": {"holonomy.csv": rows},
    }
    if cfg.manifest.get("options", {}).get("plot"):
        out["_gp"] = {"holonomy.gp": (
            "set datafile separator ','\nset xlabel 'beta'\nset ylabel 'holonomy'\n"
            "plot 'holonomy.csv' using 1:2 skip 1 with points title 'holonomy', "
            "'' using 1:3 skip 1 with lines title 'cap oracle'\n")}
    return out


def cmd_chern(cfg: RunConfig) -> dict:
    B = _bundle(cfg)
    up = spheres.hemisphere_filling(cfg.n_t, cfg.n_eps)
    lo = spheres.hemisphere_filling(cfg.n_t, cfg.n_eps, lower=True)
    k = B.chern_number(up, lo)
    return {"verdict": "integer", "chern_number": k, "structural_group": B.structural_group.describe()}


# -- selftest ---------------------------------------------------------------


def _check_dA_squared(cfg: RunConfig) -> tuple[bool, float]:
    rng = cfg.rng
    worst = 0.0
    S = geo.Atlas.sphere2()
    for A in (alg.tangent(geo.Atlas.euclidean(3)), alg.lie_algebra(alg.so3_constants(), "so3"),
              alg.a_omega(S, geo.scaled_area_form(S, 1.0))):
        for _ in range(3):
            c1 = alg.random_polynomial_cochain(A, 1, rng)
            dd = alg.d_A(A, alg.d_A(A, c1))
            sample = S.from_ambient(rng.normal(size=(20, 3))) if A.dimension == 2 else \
                (np.zeros(20, dtype=int), rng.uniform(-1, 1, (20, A.dimension)))
            worst = max(worst, float(np.max(np.abs(dd.values(*sample)), initial=0.0)))
    return worst <= 1e-6, worst


def _check_jacobi_cocycle(cfg: RunConfig) -> tuple[bool, float]:
    E = geo.Atlas.euclidean(3)
    A = alg.tangent(E)
    pts = (np.zeros(30, dtype=int), cfg.rng.uniform(-1, 1, (30, 3)))
    good = alg.cochain_from_form(A, geo.coordinate_form(E, 0, 1))
    bad = alg.cochain_from_expressions(A, 2, {(1, 2): "x0"})
    j_good = alg.max_jacobi_residual(alg.central_extension(A, good), pts)
    j_bad = alg.max_jacobi_residual(alg.central_extension(A, bad), pts)
    ok = (j_good <= 1e-10) == alg.is_cocycle(A, good, pts).verdict and (j_bad > 1e-3) != alg.is_cocycle(A, bad, pts).verdict
    return ok and j_bad > 1e-3, j_good


def _check_multiplicativity(cfg: RunConfig) -> tuple[bool, float]:
    S = geo.Atlas.sphere2()
    w = pair_groupoid_form(geo.scaled_area_form(S, 1.0))
    res = multiplicativity_residual(w.groupoid, w, cfg.rng, 1000)
    return res <= cfg.tolerances["tau_mult"], res


def _check_monodromy_oracle(cfg: RunConfig) -> tuple[bool, float]:
    S = geo.Atlas.sphere2()
    form = geo.scaled_area_form(S, 1.0)
    A = alg.tangent(S)
    c = alg.cochain_from_form(A, form)
    rng = cfg.rng
    worst = 0.0
    for g in [spheres.sphere_generator(cfg.n_t, cfg.n_eps)] + [spheres.deformed_sphere(rng, 160, 160) for _ in range(2)]:
        worst = max(worst, abs(monodromy_r(A, c, g) - geo.integrate_over_sphere(form, g).value))
    return worst <= cfg.tolerances["tau_r"], worst


def _check_holonomy_additivity(cfg: RunConfig) -> tuple[bool, float]:
    from .apath import concatenate_paths

    S = geo.Atlas.sphere2()
    B = build_path_bundle(S, geo.scaled_area_form(S, 1.0), _chart_point(S, spheres.EAST), n_eps=200)
    rng = cfg.rng
    worst = 0.0
    for _ in range(3):
        pts = [spheres.EAST] + [spheres.EAST + 0.8 * rng.normal(size=3) for _ in range(2)] + [spheres.EAST]
        l1 = spheres.sphere_path(pts, 200)
        pts = [spheres.EAST] + [spheres.EAST + 0.8 * rng.normal(size=3) for _ in range(2)] + [spheres.EAST]
        l2 = spheres.sphere_path(pts, 200)
        h = B.holonomy(concatenate_paths(l1, l2))
        worst = max(worst, B.structural_group.distance(h, B.holonomy(l1) + B.holonomy(l2)))
    return worst <= 2 * cfg.tolerances["tau_r"], worst


def cmd_selftest(cfg: RunConfig) -> dict:
    table = {
        "dA_squared": _check_dA_squared,
        "jacobi_cocycle": _check_jacobi_cocycle,
        "multiplicativity": _check_multiplicativity,
        "monodromy_oracle": _check_monodromy_oracle,
        "holonomy_additivity": _check_holonomy_additivity,
    }
    names = SELFTEST_CHECKS if cfg.checks is None else cfg.checks
    rows = []
    for name in names:
        if name not in table:
            raise ManifestError(f"unknown selftest check {name!r}")
        ok, value = table[name](cfg)
        rows.append({"check": name, "pass": bool(ok), "value": value})
        print(f"{name:24s} {'PASS' if ok else 'FAIL'}  {value:.3e}")
    passed = all(r["pass"] for r in rows)
    return {"verdict": "pass" if passed else "fail", "checks": rows, "_csv": {"selftest.csv": rows}}


HANDLERS = {
    "check-cocycle": cmd_check_cocycle,
    "periods": cmd_periods,
    "integrability": cmd_integrability,
    "prequantize": cmd_prequantize,
    "monodromy": cmd_monodromy,
    "verify-multiplicative": cmd_verify_multiplicative,
    "reconstruct-theta": cmd_reconstruct_theta,
    "holonomy": cmd_holonomy,
    "chern": cmd_chern,
    "selftest": cmd_selftest,
}

INCONCLUSIVE = {"inconclusive", "mixed"}
FAILING = {"fail", "disagree", "inconsistent", "failed"}


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_csv(path: Path, rows: list[dict]):
    if not rows:
        path.write_text("")
        return
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        w.writeheader()
        for r in rows:
            w.writerow(_jsonable(r))


def run(cfg: RunConfig) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    body = HANDLERS[cfg.command](cfg)
    elapsed = time.perf_counter() - start
    tables = body.pop("_csv", {})
    plots = body.pop("_gp", {})
    expect = cfg.manifest.get("expect", {})
    verdict = body.get("verdict")
    mismatches = [k for k, v in expect.items() if body.get(k) != v]
    report = {
        "command": cfg.command,
        "scenario": cfg.manifest.get("scenario", "selftest"),
        "seed": cfg.seed,
        "resolution": {"n_t": cfg.n_t, "n_eps": cfg.n_eps},
        "tolerances": cfg.tolerances,
        "result": body,
        "expect": expect,
        "expectation_met": not mismatches,
    }
    (cfg.out / "report.json").write_text(json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    (cfg.out / "timing.json").write_text(json.dumps({"wall_seconds": elapsed}, indent=2) + "\n")
    if cfg.fmt in ("csv", "both"):
        for name, rows in tables.items():
            write_csv(cfg.out / name, rows)
    for name, script in plots.items():
        (cfg.out / name).write_text(script)
    log.info("%s: verdict %s in %.2fs", cfg.command, verdict, elapsed)
    if mismatches:
        log.error("expectation not met for %s", ", ".join(mismatches))
        return 1
    if verdict in INCONCLUSIVE:
        return 2
    if verdict in FAILING:
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lieprequant", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--manifest", type=Path)
    p.add_argument("--out", type=Path, default=Path("lieprequant-out"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-t", type=int)
    p.add_argument("--n-eps", type=int)
    p.add_argument("--tol-override", action="append", default=[], metavar="KEY=VAL")
    p.add_argument("--format", choices=("json", "csv", "both"), default="both")
    p.add_argument("--checks", help="comma separated selftest checks (empty string selects none)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "selftest":
            manifest = load_manifest(args.manifest) if args.manifest else {}
        elif args.manifest is None:
            raise ManifestError("--manifest is required for this command")
        else:
            manifest = load_manifest(args.manifest)
        res = manifest.get("resolution", {})
        tolerances = dict(DEFAULT_TOLERANCES)
        tolerances.update(manifest.get("tolerances", {}))
        for item in args.tol_override:
            key, _, val = item.partition("=")
            if key not in DEFAULT_TOLERANCES:
                raise ManifestError(f"unknown tolerance {key!r}")
            tolerances[key] = float(val)
            if tolerances[key] <= 0:
                raise ManifestError(f"tolerance {key} must be positive")
        checks = None
        if args.checks is not None:
            checks = tuple(c for c in args.checks.split(",") if c)
        cfg = RunConfig(
            command=args.command,
            manifest=manifest,
            out=args.out,
            seed=args.seed,
            n_t=args.n_t or res.get("n_t", 200),
            n_eps=args.n_eps or res.get("n_eps", 200),
            tolerances=tolerances,
            fmt=args.format,
            checks=checks,
        )
        return run(cfg)
    except (ManifestError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # numerical refusals end the run with a diagnostic
        log.debug("run failed", exc_info=True)
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
