import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lieprequant import algebroid as alg
from lieprequant import geometry as geo

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def unit_sphere_points(rng, n):
    P = rng.normal(size=(n, 3))
    return P / np.linalg.norm(P, axis=-1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def sphere():
    return geo.Atlas.sphere2()


@pytest.fixture(scope="session")
def area(sphere):
    return geo.scaled_area_form(sphere, 1.0)


@pytest.fixture(scope="session")
def sphere_tangent(sphere, area):
    A = alg.tangent(sphere)
    return A, alg.cochain_from_form(A, area)


@pytest.fixture(scope="session")
def plane():
    return geo.Atlas.euclidean(2)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> bool:
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
