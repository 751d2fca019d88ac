import os

import numpy as np
import pytest

from forward_fw import L1Ball, make_quadratic, reference_optimum

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session", autouse=True)
def _isolated_cache(tmp_path_factory):
    # keep reference-optimum caching out of the user's home directory
    old = os.environ.get("FORWARD_FW_CACHE")
    os.environ["FORWARD_FW_CACHE"] = str(tmp_path_factory.mktemp("fstar-cache"))
    yield
    if old is None:
        del os.environ["FORWARD_FW_CACHE"]
    else:
        os.environ["FORWARD_FW_CACHE"] = old


@pytest.fixture(scope="session")
def report():
    """Record one pass/fail line per acceptance criterion."""

    def _record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def quad50():
    """The n=50, M=1 quadratic over the unit l1-ball with a long-run reference optimum.

    Returns ``(objective, ball, lower)``; ``objective.f_star`` is the best value
    seen and ``lower`` the best FW-gap lower bound, so the optimum lies between.
    """
    obj = make_quadratic(50, seed=0)
    ball = L1Ball(50, 1.0)
    obj.f_star, lower = reference_optimum(obj, ball, 1_000_000)
    return obj, ball, lower


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
