"""Feedback design: when coarse feedback beats full revelation, and threshold search.

``check_coarse_feedback_conditions`` and ``scan_region`` evaluate two sufficient conditions for
the single-threshold scheme to out-perform full revelation (for a
decreasing density):

    cond1:  int_0^{alpha*theta} (theta - w/alpha) f(w) dw > beta
    cond2:  beta * E[w] > alpha * theta**2 / 2

``optimize_threshold_type_b`` and ``optimize_thresholds_bm`` maximise the
aggregate action subject to a privacy floor ``V >= v_min``. Both are
heuristics (grid search plus local refinement); no global optimality is
claimed.
"""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import type_a, type_b, type_bm
from .distributions import Distribution
from .errors import MFEError, SolverError
from .metrics import privacy_binned
from .model import ModelParams

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _warn_if_not_decreasing(dist):
    if not dist.density_decreasing():
        warnings.warn(
            f"density of {dist.describe()} is not decreasing; the W_B > W_A conditions "
            "are evaluated but carry no guarantee",
            stacklevel=3,
        )


def condition_margins(dist: Distribution, params: ModelParams, theta):
    """Slack of both conditions: ``(int_0^{a*theta} F / alpha - beta, beta*E[w] - alpha*theta^2/2)``."""
    theta = np.asarray(theta, dtype=float)
    a, b = params.alpha, params.beta
    area = np.asarray(dist.integral_cdf_below(a * theta)) / a
    return area - b, b * dist.mean - a * theta**2 / 2.0


def check_coarse_feedback_conditions(dist: Distribution, params: ModelParams, theta: float, warn: bool = True) -> tuple[bool, bool]:
    """Evaluate ``(cond1, cond2)`` for one ``(beta, theta)`` pair.

    ``cond1``'s integral is computed as ``int_0^{alpha*theta} F(w) dw / alpha``
    (integration by parts).
    """
    if warn:
        _warn_if_not_decreasing(dist)
    m1, m2 = condition_margins(dist, params, theta)
    return bool(m1 > 0), bool(m2 > 0)


@dataclass
class RegionScan:
    beta_grid: np.ndarray
    theta_grid: np.ndarray
    cond1: np.ndarray  # shape (len(beta_grid), len(theta_grid))
    cond2: np.ndarray
    wb_minus_wa: np.ndarray  # nan where not cross-checked
    alpha: float = 1.0

    @property
    def flagged(self) -> np.ndarray:
        return self.cond1 & self.cond2

    def rows(self):
        """CSV rows ``(beta, theta, cond1, cond2, flagged, wb_minus_wa)`` in grid order."""
        for i, b in enumerate(self.beta_grid):
            for j, t in enumerate(self.theta_grid):
                yield (
                    float(b),
                    float(t),
                    bool(self.cond1[i, j]),
                    bool(self.cond2[i, j]),
                    bool(self.flagged[i, j]),
                    float(self.wb_minus_wa[i, j]),
                )


def _open_grid(lo, hi, n):
    """``n`` points ``lo + (hi - lo) * k / n`` for ``k = 1..n``: the interval ``(lo, hi]``."""
    return lo + (hi - lo) * np.arange(1, n + 1) / n


def scan_region(
    dist: Distribution,
    alpha: float = 1.0,
    beta_range: tuple[float, float] = (0.0, 0.3),
    theta_range: tuple[float, float] = (0.0, 1.5),
    resolution: tuple[int, int] = (50, 50),
    cross_check: bool = True,
) -> RegionScan:
    """Flag the ``(beta, theta)`` cells in ``(beta_lo, beta_hi] x (theta_lo, theta_hi]`` meeting both conditions.

    With ``cross_check`` each flagged cell also gets ``W_B - W_A`` from the
    equilibrium solvers.
    """
    _warn_if_not_decreasing(dist)
    betas = _open_grid(*beta_range, resolution[0])
    thetas = _open_grid(*theta_range, resolution[1])
    area = np.asarray(dist.integral_cdf_below(alpha * thetas)) / alpha
    cond1 = area[None, :] > betas[:, None]
    cond2 = betas[:, None] * dist.mean > alpha * thetas[None, :] ** 2 / 2.0
    diff = np.full(cond1.shape, np.nan)
    if cross_check:
        for i, b in enumerate(betas):
            cells = np.nonzero(cond1[i] & cond2[i])[0]
            if not cells.size:
                continue
            params = ModelParams(alpha, float(b))
            w_a = type_a.aggregate_action_type_a(dist, params)
            for j in cells:
                eq = type_b.solve_equilibrium(float(thetas[j]), dist, params)
                diff[i, j] = type_b.aggregate_action_type_b(eq, dist) - w_a
    return RegionScan(betas, thetas, cond1, cond2, diff, alpha)


@dataclass
class ConstrainedDesignResult:
    scheme: str
    thresholds: tuple[float, ...]
    W: float
    V: float
    feasible: bool
    v_min: float
    cutoffs: tuple[float, ...] = ()
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "thresholds": list(self.thresholds),
            "W": self.W,
            "V": self.V,
            "feasible": self.feasible,
            "v_min": self.v_min,
            "cutoffs": list(self.cutoffs),
            "trace": [list(t) for t in self.trace],
        }


def default_theta_max(dist: Distribution, alpha: float) -> float:
    """Largest threshold worth searching: the top of the support (or its 99.9% quantile) in action units."""
    top = dist.support_end if math.isfinite(dist.support_end) else float(dist.ppf(0.999))
    return top / alpha


def _golden_max(f, lo, hi, xtol):
    c, d = hi - GOLDEN * (hi - lo), lo + GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    best = max((fc, c), (fd, d))
    while hi - lo > xtol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = f(d)
        best = max(best, (fc, c), (fd, d))
    return best[1], best[0]


def _type_b_point(theta, dist, params):
    eq = type_b.solve_equilibrium(theta, dist, params)
    return type_b.aggregate_action_type_b(eq, dist), privacy_binned([eq.u], dist), eq.u


def optimize_threshold_type_b(
    dist: Distribution,
    params: ModelParams,
    v_min: float = 0.0,
    theta_max: float | None = None,
    resolution: float = 1e-3,
    snap=None,
    tie_tol: float = 1e-12,
) -> ConstrainedDesignResult:
    """Best single threshold subject to ``V >= v_min``.

    Scans ``theta`` on ``(0, theta_max]`` in steps of ``resolution*theta_max``
    and refines the best feasible cell by golden-section search over its two
    neighbouring cells. Ties in ``W`` (within ``tie_tol``) go to the smallest
    threshold. With ``snap`` only the snap values are candidates.
    """
    theta_max = default_theta_max(dist, params.alpha) if theta_max is None else float(theta_max)
    if snap is not None:
        grid = np.array(sorted(t for t in snap if 0.0 < t <= theta_max), dtype=float)
    else:
        grid = _open_grid(0.0, theta_max, max(int(round(1.0 / resolution)), 1))
    trace = []
    for t in grid:
        W, V, u = _type_b_point(float(t), dist, params)
        trace.append((float(t), W, V, V >= v_min))
    feas = [row for row in trace if row[3]]
    if not feas:
        return ConstrainedDesignResult("type-b", (), math.nan, math.nan, False, v_min, (), trace)
    w_best = max(row[1] for row in feas)
    idx = next(i for i, row in enumerate(trace) if row[3] and row[1] >= w_best - tie_tol)
    theta, W, V, _ = trace[idx]
    if snap is None:
        lo = trace[idx - 1][0] if idx > 0 else 0.0
        hi = trace[idx + 1][0] if idx + 1 < len(trace) else theta

        def score(t):
            if t <= 0.0:
                return -math.inf
            w, v, _ = _type_b_point(t, dist, params)
            return w if v >= v_min else -math.inf

        t_ref, w_ref = _golden_max(score, lo, hi, 1e-10 * max(theta_max, 1.0))
        if w_ref > W + tie_tol:
            W, V, _ = _type_b_point(t_ref, dist, params)
            theta = t_ref
            trace.append((t_ref, W, V, True))
    u = type_b.solve_equilibrium(theta, dist, params).u
    return ConstrainedDesignResult("type-b", (theta,), W, V, True, v_min, (u,), trace)


def _screen_lattice(axis, k, budget):
    """Strictly increasing ``k``-subsets of an evenly thinned ``axis``, at most ``budget`` of them."""
    axis = [float(x) for x in axis]
    m = len(axis)
    while m > k and math.comb(m, k) > budget:
        m -= 1
    picks = sorted({int(round(i * (len(axis) - 1) / max(m - 1, 1))) for i in range(m)})
    return itertools.combinations([axis[i] for i in picks], k)


def _bm_point(thetas, dist, params, v0=None):
    """``(W, V, v)`` of a verified design, or ``None`` when the solve or the deviation check fails."""
    try:
        try:
            eq = type_bm.solve_cutoffs(thetas, dist, params, damping=1.0, max_sweeps=200, v0=v0)
        except SolverError:
            eq = type_bm.solve_cutoffs(thetas, dist, params, v0=v0)
    except MFEError as exc:
        log.info("skipping design %s: %s", thetas, exc)
        return None
    if not eq.deviation_ok:
        log.info("skipping design %s: deviation gap %.3e", thetas, eq.deviation_gap)
        return None
    return type_bm.aggregate_action_bm(eq, dist), privacy_binned(eq.v, dist), eq.v


def optimize_thresholds_bm(
    dist: Distribution,
    params: ModelParams,
    levels: int,
    v_min: float = 0.0,
    theta_max: float | None = None,
    grid_points: int = 12,
    max_rounds: int = 6,
    snap=None,
    start=None,
    screen_budget: int = 200,
) -> ConstrainedDesignResult:
    """Coordinate ascent over ``levels - 1`` thresholds subject to ``V >= v_min``.

    Unless ``start`` is given, the ascent starts from the best of at most
    ``screen_budget`` ordered designs drawn from a coarse lattice (the snap
    values when ``snap`` is set).

    Each coordinate is searched on ``grid_points`` values strictly between
    its neighbours, then refined by golden-section search (skipped with
    ``snap``). Every candidate is solved and deviation-checked; failures are
    logged and skipped. Infeasible designs are ranked by their privacy
    shortfall so the search can walk into the feasible set.
    """
    if not 2 <= levels <= 6:
        raise ValueError(f"levels must be between 2 and 6, got {levels}")
    k = levels - 1
    theta_max = default_theta_max(dist, params.alpha) if theta_max is None else float(theta_max)
    snap_vals = None if snap is None else np.array(sorted(t for t in snap if 0.0 < t <= theta_max), dtype=float)
    if snap_vals is not None and snap_vals.size < k:
        raise ValueError("snap grid has fewer values than thresholds")
    trace = []
    cache = {}

    def evaluate(ths, v0=None):
        key = tuple(round(t, 15) for t in ths)
        if key not in cache:
            res = _bm_point(ths, dist, params, v0)
            cache[key] = res
            if res is not None:
                trace.append((list(ths), res[0], res[1], res[1] >= v_min))
        return cache[key]

    def score(res):
        if res is None:
            return -math.inf
        W, V, _ = res
        return W if V >= v_min else -1e6 - (v_min - V)

    if start is not None:
        thetas = [float(t) for t in start]
        best = evaluate(thetas)
        best_score = score(best)
    else:
        # seed from the best design on a coarse ordered lattice
        axis = snap_vals if snap_vals is not None else _open_grid(0.0, theta_max, grid_points)
        best, best_score, thetas = None, -math.inf, None
        for combo in _screen_lattice(axis, k, screen_budget):
            res = evaluate(combo)
            if thetas is None or score(res) > best_score + 1e-12:
                best, best_score, thetas = res, score(res), list(combo)
    for _ in range(max_rounds):
        improved = False
        for n in range(k):
            lo = thetas[n - 1] if n > 0 else 0.0
            hi = thetas[n + 1] if n + 1 < k else theta_max
            if snap_vals is not None:
                cands = [float(t) for t in snap_vals if lo < t < hi or (n + 1 == k and lo < t <= hi)]
            else:
                top = hi if n + 1 == k else hi - (hi - lo) / (grid_points + 1)
                cands = list(np.linspace(lo + (hi - lo) / (grid_points + 1), top, grid_points))
            v0 = best[2] if best is not None else None
            local_best, local_t = best_score, thetas[n]
            for t in cands:
                trial = thetas[:n] + [float(t)] + thetas[n + 1 :]
                s = score(evaluate(trial, v0))
                if s > local_best + 1e-12:
                    local_best, local_t = s, float(t)
            if snap_vals is None and math.isfinite(local_best):
                step = (hi - lo) / (grid_points + 1)
                a, b = max(lo, local_t - step), min(hi, local_t + step)

                def f(t):
                    if not lo < t <= hi or (t == hi and n + 1 < k):
                        return -math.inf
                    return score(evaluate(thetas[:n] + [t] + thetas[n + 1 :], v0))

                t_ref, s_ref = _golden_max(f, a, b, 1e-7 * max(theta_max, 1.0))
                if s_ref > local_best + 1e-12:
                    local_best, local_t = s_ref, t_ref
            if local_best > best_score + 1e-12:
                thetas[n] = local_t
                best = evaluate(thetas)
                best_score = local_best
                improved = True
        if not improved:
            break

    if best is None:
        return ConstrainedDesignResult("type-bm", tuple(thetas), math.nan, math.nan, False, v_min, (), trace)
    W, V, v = best
    return ConstrainedDesignResult("type-bm", tuple(thetas), W, V, V >= v_min, v_min, tuple(v), trace)
