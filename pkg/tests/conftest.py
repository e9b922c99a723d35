import os
import tempfile
import warnings

import numpy as np
import pytest

from pauli_lab.geometry import DomainSpec
from pauli_lab.potential import MagneticField, solve_flux_potential


def pytest_configure(config):
    # keep runs from touching the user's cache directory
    os.environ.setdefault("PAULI_LAB_CACHE", tempfile.mkdtemp(prefix="pauli_lab_cache_"))


def one(r):
    return np.ones_like(np.asarray(r, dtype=float))


def quad_profile(r):
    return 1.0 + np.asarray(r, dtype=float) ** 2


def star_radius(s):
    return 1.0 + 0.1 * np.cos(2 * np.asarray(s, dtype=float))


STAR = DomainSpec(kind="star-like", radius=star_radius, radius_expr="1 + 0.1*cos(2*s)", M=256)
DISK = DomainSpec(kind="unit-disk", M=64)


@pytest.fixture(scope="session")
def disk_const():
    return solve_flux_potential(DISK, MagneticField.constant(1.0), N_r=128, N_theta=16)


@pytest.fixture(scope="session")
def disk_quad():
    return solve_flux_potential(DISK, MagneticField.radial(quad_profile, "1 + r^2"), N_r=128, N_theta=16)


@pytest.fixture(scope="session")
def star_const():
    return solve_flux_potential(STAR, MagneticField.constant(1.0), N_r=128, N_theta=64)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


ACCEPTANCE_LINES = []


def verdict(criterion, passed, detail=""):
    """Record and print one acceptance line; the caller asserts ``passed``."""
    line = f"criterion {criterion:>3}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
