"""Shared fixtures and independent oracles."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad

from rbgk_slab.boundary import sample_boundary
from rbgk_slab.cli import prepare, solve_problem
from rbgk_slab.config import JuttnerFamily, parse_config
from rbgk_slab.solver import BoundaryData

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

# acceptance lines collected here and echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


def load_config(name: str):
    return parse_config((CONFIGS / name).read_text(encoding="utf-8"))


def radial_integral(g, upper=np.inf):
    """4 pi int_0^upper r^2 g(r) dr by adaptive quadrature (isotropic integrands only)."""
    val, _ = quad(lambda r: 4.0 * np.pi * r * r * g(r), 0.0, upper, epsabs=0.0, epsrel=1e-13, limit=400)
    return val


def theta_integral(g, z):
    """int_0^inf g(theta) exp(-z (cosh theta - 1)) d theta, the scaled Bessel-type integrand."""
    top = np.arccosh(1.0 + 800.0 / z)  # beyond this the integrand is below e^{-800}
    val, _ = quad(lambda t: g(t) * np.exp(-z * (np.cosh(t) - 1.0)), 0.0, top, epsabs=0.0, epsrel=1e-13, limit=400)
    return val


def phi_oracle(beta, m, c):
    """c m * int sinh^2 cosh e^{-z cosh} / int sinh^2 e^{-z cosh}, z = beta m c^2."""
    z = beta * m * c * c
    num = theta_integral(lambda t: np.sinh(t) ** 2 * np.cosh(t), z)
    den = theta_integral(lambda t: np.sinh(t) ** 2, z)
    return c * m * num / den


def juttner_data(grid, species, beta_left, beta_right, drift_left=0.0, drift_right=0.0, c=1.0):
    left = JuttnerFamily(kind="juttner", beta=beta_left, drift=drift_left)
    right = JuttnerFamily(kind="juttner", beta=beta_right, drift=drift_right)
    vals = [
        sample_boundary(left, grid, s.mass, c, "L") + sample_boundary(right, grid, s.mass, c, "R") for s in species
    ]
    return BoundaryData(np.array(vals))


@pytest.fixture(scope="session")
def reference_problem():
    return prepare(load_config("reference_mixture.json"))


@pytest.fixture(scope="session")
def reference_solution(reference_problem):
    f, aux, report = solve_problem(reference_problem)
    return f, aux, report
