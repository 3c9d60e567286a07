"""Adaptive Simpson and composite Gauss-Legendre rules."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from functools import lru_cache

import numpy as np

from .errors import QuadratureError

MAX_DEPTH = 60
MAX_INTERVALS = 200_000
REL_FLOOR = 1e-13  # panel error below this fraction of the panel value is rounding noise
ABS_FLOOR = 1e-12  # ... or below this fraction of the run's tolerance (at most MAX_INTERVALS such panels)


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    breakpoints: Sequence[float] = (),
) -> float:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    Interior ``breakpoints`` (kinks of the integrand) split the range first so
    that every panel is smooth. The tolerance is shared between panels in
    proportion to their length. A panel is also accepted once its error
    estimate falls below ``REL_FLOOR`` times its own value or ``ABS_FLOOR *
    tol``, which keeps integrable cusps (``sqrt`` at 0) from exhausting the
    depth limit. Those floors add at most ``REL_FLOOR * int |f| +
    MAX_INTERVALS * ABS_FLOOR * tol`` to the error.

    Raises:
        QuadratureError: if the subdivision cap is reached with the local
            error estimate still above its share of ``tol``.
    """
    if b < a:
        return -adaptive_simpson(f, b, a, tol, breakpoints)
    if a == b:
        return 0.0
    edges = [a, *sorted(p for p in breakpoints if a < p < b), b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += _simpson_panel(f, lo, hi, tol * (hi - lo) / (b - a))
    return total


def _simpson_panel(f, a, b, tol):
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    floor = ABS_FLOOR * tol
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    n_intervals = 0
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = (left + right - whole) / 15.0
        n_intervals += 1
        if abs(err) <= max(tol, floor, REL_FLOOR * abs(left + right)) or b - a <= 4.0 * np.spacing(max(abs(a), abs(b))):
            total += left + right + err
            continue
        if depth >= MAX_DEPTH or n_intervals > MAX_INTERVALS:
            raise QuadratureError(
                f"adaptive Simpson did not converge on [{a!r}, {b!r}] "
                f"(error estimate {abs(err):.3e} > {tol:.3e})"
            )
        stack.append((a, m, fa, flm, fm, left, 0.5 * tol, depth + 1))
        stack.append((m, b, fm, frm, fb, right, 0.5 * tol, depth + 1))
    return total


@lru_cache(maxsize=16)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre_nodes(edges: Sequence[float], n: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of an ``n``-point Gauss-Legendre rule on every panel."""
    x, w = _legendre(n)
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + hi) * 0.5 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def graded_unit_edges(levels: int = 15) -> np.ndarray:
    """Panel edges on [0, 1] refined geometrically towards both endpoints."""
    small = 10.0 ** -np.arange(levels, 0, -1)
    return np.concatenate(([0.0], small, [0.5], (1.0 - small)[::-1], [1.0]))
