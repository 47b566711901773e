import time

import pytest

from ddivfem.piola import BasisCache
from ddivfem.problems import convergence_study


@pytest.fixture(scope="session")
def basis_cache():
    return BasisCache()


@pytest.fixture(scope="session")
def ex1_report():
    """Full clamped-parallelogram study, levels 1-5, shared across tests."""
    t0 = time.perf_counter()
    report = convergence_study("ex1", levels=5, start=1)
    report.extras["runtime"] = time.perf_counter() - t0
    return report


@pytest.fixture(scope="session")
def ex2_report():
    """Full L-shape study, levels 1-5, shared across tests."""
    t0 = time.perf_counter()
    report = convergence_study("ex2", levels=5, start=1)
    report.extras["runtime"] = time.perf_counter() - t0
    return report
