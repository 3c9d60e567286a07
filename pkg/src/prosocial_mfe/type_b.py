"""Single-threshold (type-B) equilibrium.

Agents with ``w`` in ``[u, alpha*theta)`` jump to the threshold ``theta``;
everyone else plays ``w/alpha``. The cutoff ``u`` is a root of

    beta * X_B(u) = (u - alpha*theta)**2 / (2*alpha)

on ``[0, alpha*theta]``, where ``X_B(u)`` is the reputation gap between the
pools above and below ``u``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution, _check_nonnegative, _out
from .model import ModelParams

INTERIOR = "InteriorRoot"
ALL_JUMP = "AllJump"
BOUNDARY = "Boundary"

SCAN_NODES = 2048
ROOT_XTOL = 1e-12


def x_b(u, dist: Distribution):
    """Reputation gap ``E[w | w >= u] - E[w | w < u]`` as a function of the cutoff.

    Uses the integral form ``tail(u)/(1-F(u)) + int_0^u F / F(u)``, with the
    limits ``E[w]`` at ``u = 0`` and ``u - E[w]`` once ``F(u) = 1``.
    """
    u = _check_nonnegative(u)
    F = np.asarray(dist.cdf(u))
    sf = np.asarray(dist.sf(u))
    tail = np.asarray(dist.integral_tail_above(u))
    icb = np.asarray(dist.integral_cdf_below(u))
    with np.errstate(divide="ignore", invalid="ignore"):
        upper = tail / np.where(sf > 0, sf, 1.0)
        lower = np.where(F > 0, icb / np.where(F > 0, F, 1.0), 0.0)
    val = np.where(sf > 0, upper + lower, u - dist.mean)
    val = np.where(u == 0, dist.mean, val)
    return _out(val)


def x_b_derivative(u, dist: Distribution):
    """Derivative of ``x_b`` where ``F(u) < 1``; ``1`` on the saturated branch."""
    u = _check_nonnegative(u)
    F = np.asarray(dist.cdf(u))
    sf = np.asarray(dist.sf(u))
    f = np.asarray(dist.pdf(u))
    with np.errstate(divide="ignore", invalid="ignore"):
        val = f * (
            np.asarray(dist.integral_tail_above(u)) / np.where(sf > 0, sf, 1.0) ** 2
            - np.where(F > 0, np.asarray(dist.integral_cdf_below(u)) / np.where(F > 0, F, 1.0) ** 2, 0.0)
        )
    return _out(np.where(sf > 0, val, 1.0))


def _gap(u, theta, dist, params):
    """``beta*X_B(u) - (u - alpha*theta)^2/(2*alpha)``; positive means agents at ``u`` jump."""
    u = np.asarray(u, dtype=float)
    return params.beta * np.asarray(x_b(u, dist)) - (u - params.alpha * theta) ** 2 / (2.0 * params.alpha)


def _multisection(h, lo, hi, h_lo, xtol, sections=64):
    """Shrink a sign-change bracket to width ``xtol``, keeping its leftmost crossing.

    Each round evaluates ``h`` on ``sections`` equal subintervals at once
    (bisection generalised to a vectorised ``sections``-way split).
    """
    sign_lo = np.sign(h_lo)
    while hi - lo > xtol:
        xs = np.linspace(lo, hi, sections + 1)
        hs = np.asarray(h(xs), dtype=float)
        hs[0] = h_lo
        zero = np.nonzero(hs == 0.0)[0]
        flip = np.nonzero(np.sign(hs) == -sign_lo)[0]
        if zero.size and (not flip.size or zero[0] < flip[0]):
            return float(xs[zero[0]])
        if not flip.size:  # rounding moved the crossing to the right end
            return float(hi)
        j = flip[0]
        lo, hi, h_lo = xs[j - 1], xs[j], hs[j - 1]
    return float(0.5 * (lo + hi))


def _golden_min(h, lo, hi, xtol):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - inv * (hi - lo), lo + inv * (hi - lo)
    hc, hd = h(c), h(d)
    while hi - lo > xtol:
        if hc < hd:
            hi, d, hd = d, c, hc
            c = hi - inv * (hi - lo)
            hc = h(c)
        else:
            lo, c, hc = c, d, hd
            d = lo + inv * (hi - lo)
            hd = h(d)
    x = 0.5 * (lo + hi)
    return x, h(x)


def scan_roots(h, lo, hi, nodes=SCAN_NODES, xtol=ROOT_XTOL, tangent_tol=1e-12):
    """All roots of a continuous vectorised ``h`` on ``[lo, hi]``.

    Sign changes between the ``nodes`` uniform scan cells are refined to
    width ``xtol``. Interior local minima of ``|h|`` that show no sign change
    are probed by golden-section search for a tangential root. Returns
    ``(roots, tangential)`` as sorted lists.
    """
    grid = np.linspace(lo, hi, nodes + 1)
    vals = np.asarray(h(grid), dtype=float)
    roots = [float(x) for x in grid[vals == 0.0]]
    for i in np.nonzero(vals[:-1] * vals[1:] < 0)[0]:
        roots.append(_multisection(h, grid[i], grid[i + 1], vals[i], xtol))
    tangential = []
    mid, left, right = vals[1:-1], vals[:-2], vals[2:]
    absv = np.abs(vals)
    cand = (
        (mid != 0.0)
        & (np.sign(left) == np.sign(mid))
        & (np.sign(right) == np.sign(mid))
        & (absv[1:-1] <= absv[:-2])
        & (absv[1:-1] <= absv[2:])
    )
    scalar = lambda x: float(h(np.asarray(x)))
    for i in np.nonzero(cand)[0] + 1:
        sign = np.sign(vals[i])
        x, hx = _golden_min(lambda t: sign * scalar(t), grid[i - 1], grid[i + 1], xtol)
        if abs(hx) <= tangent_tol:
            tangential.append(float(x))
    return sorted(roots), sorted(tangential)


@dataclass(frozen=True)
class TypeBEquilibrium:
    theta: float
    alpha: float
    beta: float
    u: float
    c1: float
    c2: float
    case: str
    roots: tuple[float, ...]

    @property
    def delta(self) -> float:
        return self.c2 - self.c1

    @property
    def multiplicity(self) -> int:
        return len(self.roots)

    @property
    def jump_top(self) -> float:
        """Upper end ``alpha*theta`` of the jumping segment."""
        return self.alpha * self.theta

    def action(self, w):
        return best_response_profile(self, w)


def _pool_means(u, dist):
    c1 = float(dist.bin_mean(0.0, u))
    c2 = float(dist.bin_mean(u, math.inf))
    return c1, c2


def solve_equilibrium(
    theta: float,
    dist: Distribution,
    params: ModelParams,
    nodes: int = SCAN_NODES,
    xtol: float = ROOT_XTOL,
) -> TypeBEquilibrium:
    """Cutoff equilibrium for threshold ``theta``.

    When several cutoffs are consistent, the smallest is returned (largest
    jumping segment) and all of them are listed in ``roots``. ``u = 0`` is an
    equilibrium whenever ``beta*E[w]`` exceeds ``alpha*theta^2/2``; it is then
    tagged ``AllJump``.
    """
    alpha, beta = params.alpha, params.beta
    top = alpha * theta
    if beta == 0.0:
        c1, c2 = _pool_means(top, dist)
        return TypeBEquilibrium(theta, alpha, beta, top, c1, c2, BOUNDARY, (top,))

    h = lambda u: _gap(u, theta, dist, params)
    h0 = float(h(0.0))
    found, tangential = scan_roots(h, 0.0, top, nodes, xtol)
    found = [r for r in found if r > 0.0 or h0 == 0.0]
    roots = sorted(set(found) | set(tangential) | ({0.0} if h0 > 0 else set()))
    if not roots:  # h(alpha*theta) = beta*X_B > 0, so this needs a pathological X_B
        roots = [0.0]
    u = roots[0]
    if u == 0.0 and h0 > 0:
        case = ALL_JUMP
    elif u in tangential or u == 0.0:
        case = BOUNDARY
        if u in tangential:
            warnings.warn(f"tangential type-B root at u={u:.12g}; equilibrium is not transversal", stacklevel=2)
    else:
        case = INTERIOR
    c1, c2 = _pool_means(u, dist)
    return TypeBEquilibrium(theta, alpha, beta, float(u), c1, c2, case, tuple(roots))


def best_response_profile(eq: TypeBEquilibrium, w):
    """``theta`` on ``[u, alpha*theta)``, ``w/alpha`` elsewhere."""
    w = _check_nonnegative(w)
    jump = (w >= eq.u) & (w < eq.jump_top)
    return _out(np.where(jump, eq.theta, w / eq.alpha))


def aggregate_action_type_b(eq: TypeBEquilibrium, dist: Distribution) -> float:
    """``E[w]/alpha + int_u^{alpha*theta} (theta - w/alpha) f(w) dw``."""
    top = eq.jump_top
    if eq.u >= top:
        return dist.mean / eq.alpha
    mass = float(dist.cdf(top)) - float(dist.cdf(eq.u))
    pm = float(dist.partial_mean_below(top)) - float(dist.partial_mean_below(eq.u))
    return dist.mean / eq.alpha + eq.theta * mass - pm / eq.alpha


@dataclass(frozen=True)
class IndifferenceCheck:
    passed: bool
    gap: float
    note: str = ""


def indifference_check(eq: TypeBEquilibrium, tol: float = 1e-8) -> IndifferenceCheck:
    """Utility gap, at ``w = u``, between staying at ``u/alpha`` and jumping to ``theta``."""
    if eq.case == ALL_JUMP or eq.u == 0.0:
        return IndifferenceCheck(True, 0.0, "no agent at the cutoff")
    u, a, th = eq.u, eq.alpha, eq.theta
    stay = u * u / (2.0 * a) + eq.beta * eq.c1
    jump = th * u - a * th * th / 2.0 + eq.beta * eq.c2
    gap = abs(stay - jump)
    return IndifferenceCheck(gap < tol, gap)


def cutoff_from_pools(eq: TypeBEquilibrium) -> float:
    """Best-response cutoff ``[alpha*theta - sqrt(2*alpha*beta*(c2-c1))]_+`` for the solved pools."""
    return max(eq.jump_top - math.sqrt(2.0 * eq.alpha * eq.beta * max(eq.delta, 0.0)), 0.0)


def profile_samples(eq: TypeBEquilibrium, w_grid):
    """``(w, a*(w))`` rows for plotting the equilibrium profile."""
    w = np.asarray(w_grid, dtype=float)
    return np.column_stack([w, np.atleast_1d(best_response_profile(eq, w))])
