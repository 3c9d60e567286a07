"""Full-revelation (type-A) equilibrium.

Under full revelation every agent's action reveals ``w`` and the equilibrium
action solves ``a = w/alpha + beta * (1 - exp(-a/beta))`` with ``a(0) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import Distribution, _out
from .errors import DomainError
from .model import ModelParams
from .quadrature import gauss_legendre_nodes, graded_unit_edges


def _one_minus_exp(a, beta):
    return -np.expm1(-a / beta)


def solve_action(w, params: ModelParams, max_iter: int = 100):
    """Equilibrium action for intrinsic value(s) ``w``.

    Safeguarded Newton on ``g(a) = a - w/alpha - beta*(1 - exp(-a/beta))``
    inside the bracket ``[w/alpha, w/alpha + beta]``; a Newton step leaving
    the bracket is replaced by bisection.
    """
    w = np.asarray(w, dtype=float)
    if np.any(np.isnan(w)) or np.any(w < 0):
        raise DomainError(f"intrinsic value must be nonnegative, got {w!r}")
    alpha, beta = params.alpha, params.beta
    base = w / alpha
    if beta == 0.0:
        return _out(base)
    lo = base.copy()
    hi = base + beta
    a = base + beta * _one_minus_exp(base, beta)  # one fixed-point step from the lower bound
    a = np.clip(a, lo, hi)
    for _ in range(max_iter):
        g = a - base - beta * _one_minus_exp(a, beta)
        lo = np.where(g < 0, a, lo)
        hi = np.where(g > 0, a, hi)
        slope = -np.expm1(-a / beta)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = a - g / slope
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        new = np.where(bad, 0.5 * (lo + hi), step)
        new = np.where(g == 0, a, new)
        done = np.all(np.abs(new - a) <= 4 * np.spacing(np.maximum(a, 1.0)))
        a = new
        if done:
            break
    a = np.where(w == 0, 0.0, a)
    return _out(a)


def reputation(a, params: ModelParams):
    """Society's estimate ``x(a)`` of ``w`` from an observed action.

    Inverts the equilibrium map: ``x(a) = alpha * (a - beta*(1 - exp(-a/beta)))``.
    """
    a = np.asarray(a, dtype=float)
    if params.beta == 0.0:
        return _out(params.alpha * a)
    return _out(params.alpha * (a - params.beta * _one_minus_exp(a, params.beta)))


def reputation_derivative(a, params: ModelParams):
    """``dx/da = alpha * (1 - exp(-a/beta))``."""
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise DomainError(f"action must be nonnegative, got {a!r}")
    if params.beta == 0.0:
        return _out(np.full_like(a, params.alpha))
    return _out(params.alpha * _one_minus_exp(a, params.beta))


def fixed_point_residual(w, a, params: ModelParams):
    w = np.asarray(w, dtype=float)
    a = np.asarray(a, dtype=float)
    if params.beta == 0.0:
        return _out(a - w / params.alpha)
    return _out(a - w / params.alpha - params.beta * _one_minus_exp(a, params.beta))


def aggregate_action_type_a(dist: Distribution, params: ModelParams, nodes_per_panel: int = 16) -> float:
    """Population mean of the equilibrium action.

    Splits ``a(w) = w/alpha + r(w)`` with ``0 <= r <= beta`` and integrates
    ``r`` over quantiles, ``int_0^1 r(F^{-1}(p)) dp``, on Gauss-Legendre
    panels graded towards both ends of ``[0, 1]``.
    """
    base = dist.mean / params.alpha
    if params.beta == 0.0:
        return base
    p, wts = gauss_legendre_nodes(graded_unit_edges(), nodes_per_panel)
    p = np.minimum(p, np.nextafter(1.0, 0.0))
    w = np.asarray(dist.ppf(p))
    r = np.asarray(solve_action(w, params)) - w / params.alpha
    return float(base + np.dot(wts, r))


@dataclass
class TypeAEquilibrium:
    """Equilibrium of the full-revelation game for given parameters.

    ``materialize`` solves the action on a grid; ``action_at`` then reads
    solved points from the cache and solves anything else on demand.
    """

    params: ModelParams
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def alpha(self):
        return self.params.alpha

    @property
    def beta(self):
        return self.params.beta

    def materialize(self, grid):
        grid = np.asarray(grid, dtype=float)
        actions = np.atleast_1d(solve_action(grid, self.params))
        self._cache.update(zip(grid.ravel().tolist(), actions.ravel().tolist()))
        return self

    def action_at(self, w):
        if np.ndim(w) == 0 and float(w) in self._cache:
            return self._cache[float(w)]
        return solve_action(w, self.params)

    def reputation_curve(self, a):
        return reputation(a, self.params)

    def reputation_slope(self, a):
        return reputation_derivative(a, self.params)


def solve_equilibrium(params: ModelParams) -> TypeAEquilibrium:
    return TypeAEquilibrium(params)
