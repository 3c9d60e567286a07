"""Multi-threshold (type-Bm) equilibrium.

Thresholds ``0 = t_0 < t_1 < ... < t_{N-1} < t_N = inf`` split actions into
``N`` reputation bins. In the candidate equilibrium agents with ``w`` in
``[v_{n-1}, v_n)`` play ``clip(w/alpha, t_{n-1}, t_n)`` and the cutoffs solve

    (v_n - alpha*t_n)**2 / (2*alpha) = beta * (Y_{n+1} - Y_n),   n = 1..N-1,

with ``Y_n`` the mean of ``w`` over ``[v_{n-1}, v_n)``. The system is solved
by damped Gauss-Seidel sweeps, each coordinate by scan + bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .distributions import Distribution, _check_nonnegative, _out
from .errors import InfeasibleDesignError, SolverError
from .model import ModelParams
from .type_b import ROOT_XTOL, scan_roots

SCAN_NODES = 256


@dataclass(frozen=True)
class TypeBmEquilibrium:
    thetas: tuple[float, ...]
    alpha: float
    beta: float
    v: tuple[float, ...]
    v_max: float
    bin_reputations: tuple[float, ...]
    residuals: tuple[float, ...]
    sweeps: int
    deviation_ok: bool | None = None
    deviation_gap: float | None = None

    @property
    def levels(self) -> int:
        return len(self.thetas) + 1

    @property
    def residual_max(self) -> float:
        return max((abs(r) for r in self.residuals), default=0.0)

    def edges(self) -> np.ndarray:
        """Cutoff edges ``v_0 = 0, v_1, ..., v_{N-1}, v_N = inf``."""
        return np.array([0.0, *self.v, math.inf])

    def action(self, w):
        return equilibrium_action_bm(self, w)


def _thresholds(thetas):
    return np.array([0.0, *thetas, math.inf])


def bin_reputations(v, dist: Distribution) -> np.ndarray:
    edges = np.array([0.0, *v, math.inf])
    return np.asarray(dist.bin_mean(edges[:-1], edges[1:]), dtype=float).reshape(-1)


def cutoff_residuals(v, thetas, dist: Distribution, params: ModelParams) -> np.ndarray:
    """``v_n - clip(alpha*t_n - sqrt(2*alpha*beta*(Y_{n+1} - Y_n)), alpha*t_{n-1}, alpha*t_n)``."""
    a, b = params.alpha, params.beta
    th = _thresholds(thetas)
    y = bin_reputations(v, dist)
    gap = np.maximum(np.diff(y), 0.0)
    target = a * th[1:-1] - np.sqrt(2.0 * a * b * gap)
    target = np.clip(target, a * th[:-2], a * th[1:-1])
    return np.asarray(v, dtype=float) - target


def _solve_coordinate(n, v, thetas, dist, params, nodes, xtol):
    """Smallest consistent ``v_n`` given its neighbours, on ``[alpha*t_{n-1}, alpha*t_n]``."""
    a, b = params.alpha, params.beta
    th = _thresholds(thetas)
    lo, hi = a * th[n - 1], a * th[n]
    below = v[n - 2] if n >= 2 else 0.0
    above = v[n] if n < len(v) else math.inf

    def h(x):
        x = np.asarray(x, dtype=float)
        gap = np.asarray(dist.bin_mean(x, above)) - np.asarray(dist.bin_mean(below, x))
        return (x - a * th[n]) ** 2 / (2.0 * a) - b * gap

    h_lo = float(h(lo))
    if h_lo <= 0.0:
        return lo
    roots, tangential = scan_roots(h, lo, hi, nodes, xtol)
    candidates = roots + tangential
    return min(candidates) if candidates else hi


def solve_cutoffs(
    thetas,
    dist: Distribution,
    params: ModelParams,
    tol: float = 1e-12,
    max_sweeps: int = 500,
    damping: float = 0.5,
    nodes: int = SCAN_NODES,
    xtol: float = ROOT_XTOL,
    verify: bool = True,
    w_grid=None,
    v0=None,
) -> TypeBmEquilibrium:
    """Solve the cutoff vector for finite thresholds ``thetas``.

    Starts from ``v0`` (clipped into the brackets) or from the bin
    midpoints ``alpha*(t_{n-1} + t_n)/2``, and runs damped
    Gauss-Seidel sweeps until every residual is below ``tol``. With
    ``verify`` the deviation check is run on the result.

    Raises:
        SolverError: no convergence within ``max_sweeps`` (carries the last iterate).
        InfeasibleDesignError: the converged cutoffs break the bin ordering.
    """
    thetas = tuple(float(t) for t in thetas)
    th = _thresholds(thetas)
    a = params.alpha
    n_cuts = len(thetas)
    if params.beta == 0.0:
        v = a * th[1:-1]
    else:
        v = 0.5 * a * (th[:-2] + th[1:-1])
        if v0 is not None and len(v0) == n_cuts:
            v = np.clip(np.asarray(v0, dtype=float), a * th[:-2], a * th[1:-1])
        for sweep in range(1, max_sweeps + 1):
            for n in range(1, n_cuts + 1):
                target = _solve_coordinate(n, v, thetas, dist, params, nodes, xtol)
                v[n - 1] = (1.0 - damping) * v[n - 1] + damping * target
            res = cutoff_residuals(v, thetas, dist, params)
            if np.max(np.abs(res)) < tol:
                # one undamped sweep lands clamped coordinates exactly on their bracket end
                for n in range(1, n_cuts + 1):
                    v[n - 1] = _solve_coordinate(n, v, thetas, dist, params, nodes, xtol)
                break
        else:
            raise SolverError(
                f"type-Bm cutoffs did not converge in {max_sweeps} sweeps "
                f"(max residual {np.max(np.abs(res)):.3e})",
                last_iterate=tuple(v.tolist()),
            )
    sweeps = sweep if params.beta > 0 else 0
    res = cutoff_residuals(v, thetas, dist, params)
    if np.any(v < a * th[:-2] - xtol) or np.any(v > a * th[1:-1] + xtol) or np.any(np.diff(v) < 0):
        raise InfeasibleDesignError(f"cutoffs {v.tolist()} violate the bin ordering", tuple(v.tolist()))
    eq = TypeBmEquilibrium(
        thetas=thetas,
        alpha=a,
        beta=params.beta,
        v=tuple(float(x) for x in v),
        v_max=float(dist.support_hi),
        bin_reputations=tuple(float(y) for y in bin_reputations(v, dist)),
        residuals=tuple(float(r) for r in res),
        sweeps=sweeps,
    )
    if verify:
        check = verify_no_deviation(eq, w_grid=w_grid, dist=dist)
        eq = replace(eq, deviation_ok=check.passed, deviation_gap=check.worst_gap)
    return eq


def equilibrium_action_bm(eq: TypeBmEquilibrium, w):
    """``clip(w/alpha, t_{n-1}, t_n)`` for the bin ``[v_{n-1}, v_n)`` holding ``w``."""
    w = _check_nonnegative(w)
    th = _thresholds(eq.thetas)
    n = np.searchsorted(np.asarray(eq.v), w, side="right")  # 0-based bin index
    return _out(np.clip(w / eq.alpha, th[n], th[n + 1]))


@dataclass(frozen=True)
class DeviationCheck:
    passed: bool
    worst_gap: float
    worst_w: float
    preferred_bin: int


def default_w_grid(eq: TypeBmEquilibrium, dist: Distribution, points: int = 1000) -> np.ndarray:
    top = max(float(dist.ppf(0.999)), 1.5 * eq.alpha * eq.thetas[-1])
    top = min(top, dist.support_hi) if math.isfinite(dist.support_end) else top
    grid = np.linspace(0.0, top, points)
    near = np.concatenate([[x - 1e-9, x, x + 1e-9] for x in eq.v])
    return np.unique(np.concatenate([grid, near[near >= 0]]))


def verify_no_deviation(
    eq: TypeBmEquilibrium,
    dist: Distribution | None = None,
    params: ModelParams | None = None,
    w_grid=None,
    tol: float = 1e-8,
) -> DeviationCheck:
    """Brute-force check that no agent gains by moving to another bin.

    For each ``w`` on the grid, the best action inside every bin and its
    utility (including that bin's reputation) are compared with the
    assigned bin. ``worst_gap`` is the largest gain from deviating.
    """
    if w_grid is None:
        if dist is None:
            raise ValueError("verify_no_deviation needs a w_grid or a distribution")
        w_grid = default_w_grid(eq, dist)
    w = np.asarray(w_grid, dtype=float)
    a, b = eq.alpha, eq.beta
    th = _thresholds(eq.thetas)
    y = np.asarray(eq.bin_reputations)
    acts = np.clip(w[:, None] / a, th[None, :-1], th[None, 1:])
    util = acts * w[:, None] - 0.5 * a * acts**2 + b * y[None, :]
    assigned = np.searchsorted(np.asarray(eq.v), w, side="right")
    own = util[np.arange(w.size), assigned]
    best = np.max(util, axis=1)
    gains = best - own
    i = int(np.argmax(gains))
    worst = float(gains[i])
    return DeviationCheck(worst <= tol, worst, float(w[i]), int(np.argmax(util[i])))


def aggregate_action_bm(eq: TypeBmEquilibrium, dist: Distribution) -> float:
    """Mean equilibrium action: ``E[w]/alpha`` plus the uplift of agents clamped up to a threshold."""
    th = _thresholds(eq.thetas)
    total = dist.mean / eq.alpha
    for n, cut in enumerate(eq.v, start=1):
        top = eq.alpha * th[n]
        if cut >= top:
            continue
        mass = float(dist.cdf(top)) - float(dist.cdf(cut))
        pm = float(dist.partial_mean_below(top)) - float(dist.partial_mean_below(cut))
        total += th[n] * mass - pm / eq.alpha
    return float(total)


def implicit_curves(thetas, dist: Distribution, params: ModelParams, points: int = 201):
    """The two coordinate best-response curves of a two-threshold design.

    Returns rows ``(curve, v1, v2)``: curve 1 gives ``v1`` solving its
    equation for each ``v2`` on a grid, curve 2 gives ``v2`` for each ``v1``.
    Their crossing is the equilibrium.
    """
    if len(thetas) != 2:
        raise ValueError("implicit curves are defined for exactly two thresholds")
    a = params.alpha
    t1, t2 = thetas
    rows = []
    for v2 in np.linspace(a * t1, a * t2, points):
        v1 = _solve_coordinate(1, np.array([0.0, v2]), thetas, dist, params, SCAN_NODES, ROOT_XTOL)
        rows.append((1, float(v1), float(v2)))
    for v1 in np.linspace(0.0, a * t1, points):
        v2 = _solve_coordinate(2, np.array([v1, 0.0]), thetas, dist, params, SCAN_NODES, ROOT_XTOL)
        rows.append((2, float(v1), float(v2)))
    return rows
