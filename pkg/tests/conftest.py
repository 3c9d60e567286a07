"""Shared fixtures and independent oracles.

The ``QuadOnly*`` distributions expose only ``cdf``/``pdf``/``ppf`` so every
moment and integral falls through to the generic quadrature route, giving a
second computation path for the analytic overrides.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pytest
from scipy import integrate, stats

from prosocial_mfe.distributions import Distribution, Exponential, Uniform, Weibull

ACCEPTANCE_LINES: list[str] = []


@dataclass(frozen=True, eq=False)
class QuadOnly(Distribution):
    """Wrap a scipy frozen law; everything else comes from the base-class quadrature."""

    law: object = None
    end: float = np.inf
    quad_tol: float = field(default=1e-11, repr=False)
    kind = "quad-only"

    @property
    def support_end(self):
        return self.end

    def cdf(self, w):
        return np.asarray(self.law.cdf(np.asarray(w, dtype=float)))[()]

    def pdf(self, w):
        return np.asarray(self.law.pdf(np.asarray(w, dtype=float)))[()]

    def ppf(self, p):
        return np.asarray(self.law.ppf(np.asarray(p, dtype=float)))[()]


def quad_only_uniform():
    return QuadOnly(stats.uniform(0, 1), 1.0)


def quad_only_exponential(rate=1.0):
    return QuadOnly(stats.expon(scale=1 / rate))


def quad_only_weibull(k, lam):
    return QuadOnly(stats.weibull_min(k, scale=lam))


def scipy_law(dist):
    """The scipy frozen law matching one of the package's analytic families."""
    if isinstance(dist, Uniform):
        return stats.uniform(dist.lo, dist.hi - dist.lo)
    if isinstance(dist, Exponential):
        return stats.expon(scale=1 / dist.rate)
    if isinstance(dist, Weibull):
        return stats.weibull_min(dist.shape, scale=dist.scale)
    raise TypeError(dist)


def quad(f, a, b, points=None):
    """scipy QUADPACK with tight tolerances, the reference integrator in tests."""
    if np.isinf(b):
        return integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=500)[0]
    return integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=500, points=points)[0]


@pytest.fixture
def uniform():
    return Uniform(0.0, 1.0)


@pytest.fixture
def weibull_half():
    return Weibull(0.5, 1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
