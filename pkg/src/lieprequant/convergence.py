"""Resolution studies: every smooth integral fixture evaluated on a doubling ladder."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import algebroid as alg
from . import geometry as geo
from . import spheres
from .monodromy import monodromy_r

FLOOR = 1e-12


def smooth_fixtures() -> dict[str, Callable[[int], float]]:
    S = geo.Atlas.sphere2()
    w = geo.scaled_area_form(S, 1.0)
    A = alg.tangent(S)
    c = alg.cochain_from_form(A, w)
    P = geo.Atlas.product(S, S)
    wp = geo.product_sum_form(P, [1.0, np.sqrt(2.0)])
    return {
        "sphere_generator": lambda n: geo.integrate_over_sphere(w, spheres.sphere_generator(n, n)).value,
        "upper_hemisphere": lambda n: geo.integrate_over_sphere(w, spheres.hemisphere_filling(n, n)).value,
        "cap_beta_1": lambda n: geo.integrate_over_sphere(w, spheres.cap_filling(1.0, n, n)).value,
        "product_factor_2": lambda n: geo.integrate_over_sphere(wp, spheres.product_factor_spheres(n, n)[1]).value,
        "deformed_sphere": lambda n: geo.integrate_over_sphere(
            w, spheres.deformed_sphere(np.random.default_rng(3), n, n)).value,
        "monodromy_r": lambda n: monodromy_r(A, c, spheres.sphere_generator(n, n)),
    }


@dataclass(frozen=True)
class Study:
    name: str
    resolutions: tuple[int, ...]
    values: tuple[float, ...]

    @property
    def changes(self) -> np.ndarray:
        return np.abs(np.diff(self.values))

    @property
    def ratios(self) -> np.ndarray:
        d = self.changes
        return d[1:] / np.where(d[:-1] > 0, d[:-1], np.inf)

    def passes(self, factor: float = 1 / 8) -> bool:
        """Each change at most ``factor`` times the previous one; changes at the rounding floor pass."""
        d = self.changes
        return all(b <= FLOOR or b <= factor * a for a, b in zip(d, d[1:]))

    def rows(self) -> list[dict]:
        out = []
        d = self.changes
        for k, (n, v) in enumerate(zip(self.resolutions, self.values)):
            out.append({
                "fixture": self.name,
                "n": n,
                "value": v,
                "change": d[k - 1] if k else "",
                "ratio": d[k - 1] / d[k - 2] if k >= 2 and d[k - 2] > 0 else "",
            })
        return out


def run_study(resolutions=(50, 100, 200, 400), fixtures=None) -> list[Study]:
    fixtures = fixtures or smooth_fixtures()
    return [Study(name, tuple(resolutions), tuple(float(f(n)) for n in resolutions)) for name, f in fixtures.items()]
