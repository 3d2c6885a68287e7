"""Sample-grid generators for spheres, fillings and homotopies on the catalog manifolds."""
from __future__ import annotations

import numpy as np

from .geometry import Atlas, BasePath, GeometryError, SphereGrid

EAST = np.array([1.0, 0.0, 0.0])


def _grid_params(n_t: int, n_eps: int):
    t = np.linspace(0.0, 1.0, n_t + 1)
    e = np.linspace(0.0, 1.0, n_eps + 1)
    return np.meshgrid(e, t, indexing="ij")


def tilted_circles(beta: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Circles through ``EAST`` cut by planes with normal ``(cos b, 0, sin b)``.

    ``beta = 0`` is the constant loop at ``EAST``; ``beta = pi/2`` is the
    equator and ``beta = pi`` collapses again to ``EAST`` from the other side.
    """
    cb, sb = np.cos(beta)[..., None], np.sin(beta)[..., None]
    n = np.concatenate([cb, np.zeros_like(cb), sb], axis=-1)
    u = np.concatenate([sb, np.zeros_like(sb), -cb], axis=-1)
    v = np.broadcast_to(np.array([0.0, 1.0, 0.0]), n.shape)
    ang = 2 * np.pi * t[..., None]
    # the minus sign picks the orientation giving the area form a positive integral
    return cb * n + sb * (np.cos(ang) * u - np.sin(ang) * v)


def _rotation_from_east(p) -> np.ndarray:
    """Rotation taking ``EAST`` to the unit vector ``p`` (identity when equal)."""
    p = np.asarray(p, dtype=float)
    p = p / np.linalg.norm(p)
    c = float(EAST @ p)
    axis = np.cross(EAST, p)
    s = np.linalg.norm(axis)
    if s < 1e-15:
        if c > 0:
            return np.eye(3)
        return np.diag([-1.0, -1.0, 1.0])
    k = axis / s
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * K + (1 - c) * K @ K


def sphere_generator(n_t: int = 200, n_eps: int = 200, basepoint=EAST, atlas: Atlas | None = None) -> SphereGrid:
    """Degree-one basepointed sphere ``S^2 -> S^2`` with all of ``dI^2`` at ``basepoint``."""
    atlas = atlas or Atlas.sphere2()
    E, T = _grid_params(n_t, n_eps)
    P = tilted_circles(np.pi * E, T) @ _rotation_from_east(basepoint).T
    return SphereGrid.from_ambient(atlas, P, basepointed=True)


def hemisphere_filling(n_t: int = 200, n_eps: int = 200, lower: bool = False, atlas: Atlas | None = None) -> SphereGrid:
    """Filling of the equator loop at ``EAST`` from the constant loop (row 0) to the equator (last row).

    The upper filling sweeps ``Z >= 0``; the lower one sweeps ``Z <= 0`` and
    therefore integrates with the opposite sign.
    """
    atlas = atlas or Atlas.sphere2()
    E, T = _grid_params(n_t, n_eps)
    beta = np.pi / 2 * E if not lower else np.pi - np.pi / 2 * E
    return SphereGrid.from_ambient(atlas, tilted_circles(beta, T))


def equator_loop(n_t: int = 200, atlas: Atlas | None = None) -> BasePath:
    atlas = atlas or Atlas.sphere2()
    t = np.linspace(0.0, 1.0, n_t + 1)
    return BasePath.from_ambient(atlas, tilted_circles(np.full_like(t, np.pi / 2), t))


def latitude_loop(beta: float, n_t: int = 200, atlas: Atlas | None = None) -> BasePath:
    atlas = atlas or Atlas.sphere2()
    t = np.linspace(0.0, 1.0, n_t + 1)
    return BasePath.from_ambient(atlas, tilted_circles(np.full_like(t, beta), t))


def cap_filling(beta: float, n_t: int = 200, n_eps: int = 200, atlas: Atlas | None = None) -> SphereGrid:
    """Filling of the tilted circle of angle ``beta`` by the smaller circles."""
    atlas = atlas or Atlas.sphere2()
    E, T = _grid_params(n_t, n_eps)
    return SphereGrid.from_ambient(atlas, tilted_circles(beta * E, T))


def cap_fraction(beta: float) -> float:
    """Area fraction swept by :func:`cap_filling`, the cap ``{n(beta).p >= cos(beta)}``."""
    return (1.0 - np.cos(beta)) / 2.0


def product_factor_spheres(n_t: int = 120, n_eps: int = 120, basepoint=(EAST, EAST)) -> list[SphereGrid]:
    """The two factor spheres of ``sphere2 x sphere2`` at ``basepoint``."""
    atlas = Atlas.product(Atlas.sphere2(), Atlas.sphere2())
    E, T = _grid_params(n_t, n_eps)
    p1, p2 = (np.asarray(b, float) / np.linalg.norm(b) for b in basepoint)
    S1 = tilted_circles(np.pi * E, T) @ _rotation_from_east(p1).T
    S2 = tilted_circles(np.pi * E, T) @ _rotation_from_east(p2).T
    const1 = np.broadcast_to(p1, S1.shape)
    const2 = np.broadcast_to(p2, S2.shape)
    return [
        SphereGrid.from_ambient(atlas, np.concatenate([S1, const2], axis=-1), basepointed=True),
        SphereGrid.from_ambient(atlas, np.concatenate([const1, S2], axis=-1), basepointed=True),
    ]


def deformed_sphere(rng: np.random.Generator, n_t: int = 160, n_eps: int = 160, strength: float = 0.4) -> SphereGrid:
    """A random basepointed sphere: the degree-one generator composed with a random smooth map.

    The map ``p -> normalize(R p + strength * B(p))`` with ``B`` a random
    quadratic vector field keeps the whole boundary at one point.
    """
    atlas = Atlas.sphere2()
    E, T = _grid_params(n_t, n_eps)
    # random reparametrization of the square that fixes its boundary
    a, b = rng.uniform(-0.08, 0.08, size=2)
    Ew = E + a * np.sin(np.pi * E) ** 2 * np.sin(2 * np.pi * T)
    Tw = T + b * np.sin(np.pi * T) ** 2 * np.sin(2 * np.pi * E)
    P = tilted_circles(np.pi * Ew, Tw)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    B = rng.normal(size=(3, 3, 3)) / 3
    Q = P @ q.T
    Q = Q + strength * np.einsum("kij,...i,...j->...k", B, Q, Q) + strength * (Q @ rng.normal(size=(3, 3)).T) / 3
    Q = Q / np.linalg.norm(Q, axis=-1, keepdims=True)
    return SphereGrid.from_ambient(atlas, Q, basepointed=True)


def great_circle_homotopy(path0: BasePath, path1: BasePath, n_eps: int, perturb: float = 0.0, seed_vector=None) -> SphereGrid:
    """Homotopy on the sphere by normalized linear interpolation of ambient points.

    Row 0 is ``path0`` and the last row ``path1``.  A nonzero ``perturb``
    pushes the interpolation off the antipodal locus with a bump that
    vanishes at the fixed endpoints.
    """
    P0, P1 = path0.ambient(), path1.ambient()
    eps = np.linspace(0.0, 1.0, n_eps + 1)[:, None, None]
    t = path0.times[None, :, None]
    H = (1 - eps) * P0[None] + eps * P1[None]
    if perturb:
        w = np.array([0.0, 0.0, 1.0]) if seed_vector is None else np.asarray(seed_vector, float)
        H = H + perturb * 4 * eps * (1 - eps) * np.sin(np.pi * t) * w
    norms = np.linalg.norm(H, axis=-1)
    if np.min(norms) < 1e-3:
        raise GeometryError("great-circle interpolation passes through an antipodal pair")
    return SphereGrid.from_ambient(path0.atlas, H / norms[..., None])


def straight_homotopy(path0: BasePath, path1: BasePath, n_eps: int) -> SphereGrid:
    """Chart-wise straight-line homotopy on a single-chart atlas."""
    if path0.atlas.n_charts != 1:
        raise GeometryError("straight-line homotopies need a single chart")
    eps = np.linspace(0.0, 1.0, n_eps + 1)[:, None, None]
    H = (1 - eps) * path0.coords[None] + eps * path1.coords[None]
    return SphereGrid(path0.atlas, np.zeros(H.shape[:2], dtype=int), H)


def product_homotopy(path0: BasePath, path1: BasePath, n_eps: int, perturb: float = 0.0) -> SphereGrid:
    """Factor-wise great-circle homotopy on ``sphere2 x sphere2``."""
    atlas = path0.atlas
    P0, P1 = path0.ambient(), path1.ambient()
    s2 = Atlas.sphere2()
    parts = []
    for k in range(2):
        q0 = BasePath.from_ambient(s2, P0[:, 3 * k : 3 * k + 3])
        q1 = BasePath.from_ambient(s2, P1[:, 3 * k : 3 * k + 3])
        parts.append(great_circle_homotopy(q0, q1, n_eps, perturb).ambient())
    return SphereGrid.from_ambient(atlas, np.concatenate(parts, axis=-1))


def sphere_path(points, n_t: int, atlas: Atlas | None = None) -> BasePath:
    """Great-circle polyline through ambient ``points``, smoothed at the corners by a bump."""
    atlas = atlas or Atlas.sphere2()
    pts = [np.asarray(p, float) / np.linalg.norm(p) for p in points]
    k = len(pts) - 1
    t = np.linspace(0.0, 1.0, n_t + 1)
    seg = np.minimum((t * k).astype(int), k - 1)
    s = t * k - seg
    s = s - np.sin(2 * np.pi * s) / (2 * np.pi)
    P = np.array([(1 - si) * pts[j] + si * pts[j + 1] for j, si in zip(seg, s)])
    return BasePath.from_ambient(atlas, P / np.linalg.norm(P, axis=-1, keepdims=True))
