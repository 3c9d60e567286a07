"""Intrinsic-value distributions on the nonnegative half-line.

Every integral the equilibrium conditions need is expressed through four
primitives of the cdf ``F``::

    partial_mean_below(u)     = int_0^u w f(w) dw
    integral_cdf_below(u)     = int_0^u F(w) dw
    integral_tail_above(u)    = int_u^inf (1 - F(w)) dw
    partial_second_moment(u)  = int_0^u w^2 f(w) dw

The base class evaluates them by adaptive quadrature of the cdf alone (so a
density singular at zero is never sampled). The concrete kinds override them
with closed forms; the base-class route stays available as a cross-check.
Analytic methods accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import special

from .errors import DomainError, EmptyBinError, ParameterError
from .quadrature import adaptive_simpson

TAIL_EPS = 1e-12


def _check_nonnegative(w):
    arr = np.asarray(w, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"intrinsic value must be nonnegative, got {w!r}")
    return arr


def _out(arr):
    """Return a python float for 0-d results, the array otherwise."""
    arr = np.asarray(arr, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


class Distribution:
    """Law of the intrinsic value ``w >= 0``.

    Subclasses must provide ``cdf`` and ``pdf`` and set ``support_lo`` and
    ``support_end`` (``inf`` for unbounded supports). Everything else has a
    quadrature-backed default.
    """

    kind = "custom"
    support_lo: float = 0.0
    support_end: float = math.inf
    quad_tol: float = 1e-10

    # -- required -----------------------------------------------------------
    def cdf(self, w):
        raise NotImplementedError

    def pdf(self, w):
        raise NotImplementedError

    # -- derived ------------------------------------------------------------
    def sf(self, w):
        """Survival function ``1 - F(w)``."""
        return _out(1.0 - np.asarray(self.cdf(w)))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Interior points where the cdf has a kink."""
        return ()

    @cached_property
    def support_hi(self) -> float:
        """Effective upper truncation point: ``1 - F(w) <= TAIL_EPS`` beyond it."""
        if math.isfinite(self.support_end):
            return float(self.support_end)
        return float(self.ppf(1.0 - TAIL_EPS))

    def ppf(self, p):
        """Quantile function, by bisection on the cdf."""
        p = np.asarray(p, dtype=float)
        hi = 1.0
        while self.cdf(hi) < np.max(p) and hi < 1e300:
            hi *= 2.0
        lo = np.zeros_like(p)
        up = np.full_like(p, hi)
        for _ in range(200):
            mid = 0.5 * (lo + up)
            below = np.asarray(self.cdf(mid)) < p
            lo = np.where(below, mid, lo)
            up = np.where(below, up, mid)
        return _out(0.5 * (lo + up))

    def _integrate(self, g, a, b):
        return adaptive_simpson(g, a, b, self.quad_tol, self.breakpoints)

    def _elementwise(self, fn, u):
        u = _check_nonnegative(u)
        if u.ndim == 0:
            return fn(float(u))
        return np.array([fn(float(x)) for x in u.ravel()]).reshape(u.shape)

    def integral_cdf_below(self, u):
        """``int_0^u F(w) dw``."""

        def one(x):
            top = min(x, self.support_hi)
            val = self._integrate(lambda w: float(self.cdf(w)), 0.0, top)
            return val + max(x - top, 0.0)

        return self._elementwise(one, u)

    def integral_tail_above(self, u):
        """``int_u^inf (1 - F(w)) dw``; the mass beyond ``support_hi`` is dropped."""

        def one(x):
            if x >= self.support_hi:
                return 0.0
            return self._integrate(lambda w: float(self.sf(w)), x, self.support_hi)

        return self._elementwise(one, u)

    def partial_mean_below(self, u):
        """``int_0^u w f(w) dw`` (integration by parts against the cdf)."""
        u = _check_nonnegative(u)
        return _out(u * np.asarray(self.cdf(u)) - np.asarray(self.integral_cdf_below(u)))

    def partial_second_moment(self, u):
        """``int_0^u w^2 f(w) dw``."""

        def one(x):
            top = min(x, self.support_hi)
            inner = self._integrate(lambda w: w * float(self.cdf(w)), 0.0, top)
            inner += 0.5 * (x * x - top * top)
            return x * x * float(self.cdf(x)) - 2.0 * inner

        return self._elementwise(one, u)

    @cached_property
    def mean(self) -> float:
        return float(self.integral_tail_above(0.0))

    @cached_property
    def second_moment(self) -> float:
        return float(self.partial_second_moment(self.support_hi))

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2

    def upper_mean(self, u):
        """``E[w | w >= u]``; equals ``u`` where no mass lies above ``u``."""
        u = _check_nonnegative(u)
        sf = np.asarray(self.sf(u))
        tail = np.asarray(self.integral_tail_above(u))
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(sf > 0, u + tail / np.where(sf > 0, sf, 1.0), u)
        return _out(val)

    def lower_mean(self, u):
        """``E[w | w < u]``; bins without mass collapse to ``min(u, support_lo)``."""
        u = _check_nonnegative(u)
        F = np.asarray(self.cdf(u))
        pm = np.asarray(self.partial_mean_below(u))
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(F > 0, pm / np.where(F > 0, F, 1.0), np.minimum(u, self.support_lo))
        return _out(val)

    def truncated_mean(self, lo: float, hi: float) -> float:
        """``E[w | lo <= w < hi]``.

        Raises:
            DomainError: unless ``0 <= lo < hi``.
            EmptyBinError: when the interval carries no probability mass.
        """
        lo = float(_check_nonnegative(lo))
        if not hi > lo:
            raise DomainError(f"truncated_mean needs lo < hi, got [{lo}, {hi})")
        if math.isinf(hi):
            if self.sf(lo) <= 0.0:
                raise EmptyBinError(f"no mass above {lo}")
            return float(self.upper_mean(lo))
        mass = float(self.cdf(hi)) - float(self.cdf(lo))
        if mass <= 0.0:
            raise EmptyBinError(f"no mass in [{lo}, {hi})")
        val = (float(self.partial_mean_below(hi)) - float(self.partial_mean_below(lo))) / mass
        return min(max(val, lo), hi)

    def bin_mean(self, lo, hi):
        """Vectorised ``E[w | lo <= w < hi]`` that never raises.

        A bin without mass gets the limit of its conditional mean as mass
        appears at its edge: the point of ``[lo, hi]`` nearest the support.
        ``hi`` may be ``inf``.
        """
        lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
        finite = np.isfinite(hi)
        if finite.all():
            mass = np.asarray(self.cdf(hi)) - np.asarray(self.cdf(lo))
            pm = np.asarray(self.partial_mean_below(hi)) - np.asarray(self.partial_mean_below(lo))
            with np.errstate(divide="ignore", invalid="ignore"):
                inner = pm / np.where(mass > 0, mass, 1.0)
        elif not finite.any():
            mass = np.asarray(self.sf(lo))
            inner = np.asarray(self.upper_mean(lo))
        else:
            top = np.where(finite, hi, lo)
            below = np.asarray(self.bin_mean(lo, top))
            above = np.asarray(self.bin_mean(lo, np.full_like(lo, np.inf)))
            return _out(np.where(finite, below, above))
        fallback = np.minimum(np.maximum(lo, self.support_lo), hi)
        val = np.where(mass > 0, np.minimum(np.maximum(inner, lo), hi), fallback)
        return _out(val)

    def bin_mass(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        finite = np.isfinite(hi)
        F_hi = np.asarray(self.cdf(np.where(finite, hi, 0.0)))
        return _out(np.where(finite, F_hi - np.asarray(self.cdf(lo)), np.asarray(self.sf(lo))))

    def density_decreasing(self, samples: int = 64, tol: float = 1e-9) -> bool:
        """Sampled check that ``f`` strictly decreases over the effective support.

        Every one of ``samples`` consecutive density ratios must sit below
        ``1 - tol``, so flat densities (the uniform) fail.
        """
        if self.support_lo > 0.0:
            return False
        hi = min(self.support_hi, float(self.ppf(0.999)))
        grid = np.linspace(self.support_lo, hi, samples + 2)[1:]
        dens = np.asarray(self.pdf(grid), dtype=float)
        if not np.all(np.isfinite(dens)) or np.any(dens <= 0):
            return False
        return bool(np.all(dens[1:] / dens[:-1] <= 1.0 - tol))

    def describe(self) -> str:
        return self.kind


@dataclass(frozen=True, eq=False)
class Uniform(Distribution):
    lo: float = 0.0
    hi: float = 1.0
    quad_tol: float = field(default=1e-10, repr=False)
    kind = "uniform"

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi < math.inf):
            raise ParameterError(f"uniform needs 0 <= lo < hi < inf, got ({self.lo}, {self.hi})")

    @property
    def support_lo(self):
        return self.lo

    @property
    def support_end(self):
        return self.hi

    def _clip(self, u):
        return np.clip(_check_nonnegative(u), self.lo, self.hi)

    def cdf(self, w):
        return _out((self._clip(w) - self.lo) / (self.hi - self.lo))

    def sf(self, w):
        return _out((self.hi - self._clip(w)) / (self.hi - self.lo))

    def pdf(self, w):
        w = _check_nonnegative(w)
        return _out(np.where((w >= self.lo) & (w <= self.hi), 1.0 / (self.hi - self.lo), 0.0))

    def ppf(self, p):
        return _out(self.lo + np.asarray(p, dtype=float) * (self.hi - self.lo))

    def partial_mean_below(self, u):
        m = self._clip(u)
        return _out((m * m - self.lo**2) / (2.0 * (self.hi - self.lo)))

    def integral_cdf_below(self, u):
        u = _check_nonnegative(u)
        m = np.clip(u, self.lo, self.hi)
        return _out((m - self.lo) ** 2 / (2.0 * (self.hi - self.lo)) + np.maximum(u - self.hi, 0.0))

    def integral_tail_above(self, u):
        u = _check_nonnegative(u)
        m = np.clip(u, self.lo, self.hi)
        return _out((self.hi - m) ** 2 / (2.0 * (self.hi - self.lo)) + np.maximum(self.lo - u, 0.0))

    def partial_second_moment(self, u):
        m = self._clip(u)
        return _out((m**3 - self.lo**3) / (3.0 * (self.hi - self.lo)))

    @cached_property
    def mean(self):
        return 0.5 * (self.lo + self.hi)

    @cached_property
    def second_moment(self):
        return (self.hi**2 + self.hi * self.lo + self.lo**2) / 3.0

    @property
    def variance(self):
        return (self.hi - self.lo) ** 2 / 12.0

    def describe(self):
        return f"uniform:{self.lo!r},{self.hi!r}"


@dataclass(frozen=True, eq=False)
class Exponential(Distribution):
    rate: float = 1.0
    quad_tol: float = field(default=1e-10, repr=False)
    kind = "exponential"

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ParameterError(f"exponential rate must be positive, got {self.rate}")

    def cdf(self, w):
        return _out(-np.expm1(-self.rate * _check_nonnegative(w)))

    def sf(self, w):
        return _out(np.exp(-self.rate * _check_nonnegative(w)))

    def pdf(self, w):
        return _out(self.rate * np.exp(-self.rate * _check_nonnegative(w)))

    def ppf(self, p):
        return _out(-np.log1p(-np.asarray(p, dtype=float)) / self.rate)

    def partial_mean_below(self, u):
        return _out(special.gammainc(2.0, self.rate * _check_nonnegative(u)) / self.rate)

    def integral_cdf_below(self, u):
        u = _check_nonnegative(u)
        return _out(u * np.asarray(self.cdf(u)) - np.asarray(self.partial_mean_below(u)))

    def integral_tail_above(self, u):
        return _out(np.exp(-self.rate * _check_nonnegative(u)) / self.rate)

    def partial_second_moment(self, u):
        return _out(2.0 * special.gammainc(3.0, self.rate * _check_nonnegative(u)) / self.rate**2)

    @cached_property
    def mean(self):
        return 1.0 / self.rate

    @cached_property
    def second_moment(self):
        return 2.0 / self.rate**2

    @property
    def variance(self):
        return 1.0 / self.rate**2

    def describe(self):
        return f"exponential:{self.rate!r}"


@dataclass(frozen=True, eq=False)
class Weibull(Distribution):
    shape: float = 1.0
    scale: float = 1.0
    quad_tol: float = field(default=1e-10, repr=False)
    kind = "weibull"

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ParameterError(f"weibull needs positive shape and scale, got ({self.shape}, {self.scale})")

    def _x(self, w):
        return (_check_nonnegative(w) / self.scale) ** self.shape

    def cdf(self, w):
        return _out(-np.expm1(-self._x(w)))

    def sf(self, w):
        return _out(np.exp(-self._x(w)))

    def pdf(self, w):
        w = _check_nonnegative(w)
        k, lam = self.shape, self.scale
        with np.errstate(divide="ignore"):
            z = w / lam
            val = (k / lam) * z ** (k - 1.0) * np.exp(-(z**k))
        return _out(val)

    def ppf(self, p):
        return _out(self.scale * (-np.log1p(-np.asarray(p, dtype=float))) ** (1.0 / self.shape))

    def partial_mean_below(self, u):
        a = 1.0 + 1.0 / self.shape
        return _out(self.scale * special.gamma(a) * special.gammainc(a, self._x(u)))

    def integral_cdf_below(self, u):
        u = _check_nonnegative(u)
        return _out(u * np.asarray(self.cdf(u)) - np.asarray(self.partial_mean_below(u)))

    def integral_tail_above(self, u):
        k = self.shape
        return _out(self.scale * special.gamma(1.0 + 1.0 / k) * special.gammaincc(1.0 / k, self._x(u)))

    def partial_second_moment(self, u):
        a = 1.0 + 2.0 / self.shape
        return _out(self.scale**2 * special.gamma(a) * special.gammainc(a, self._x(u)))

    @cached_property
    def mean(self):
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)

    @cached_property
    def second_moment(self):
        return self.scale**2 * math.gamma(1.0 + 2.0 / self.shape)

    @property
    def variance(self):
        return self.second_moment - self.mean**2

    def describe(self):
        return f"weibull:{self.shape!r},{self.scale!r}"


@dataclass(frozen=True, eq=False)
class EmpiricalTable(Distribution):
    """Sample points with a linearly interpolated cdf.

    The cdf rises from 0 at the first point to 1 at the last, by ``1/(n-1)``
    between consecutive points; the density is piecewise constant.
    """

    points: tuple[float, ...] = (0.0, 1.0)
    quad_tol: float = field(default=1e-10, repr=False)
    kind = "empirical"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ParameterError("empirical table needs at least two points")
        if pts[0] < 0 or np.any(np.diff(pts) <= 0) or not np.all(np.isfinite(pts)):
            raise ParameterError("empirical points must be finite, nonnegative and strictly increasing")
        object.__setattr__(self, "points", tuple(float(p) for p in pts))

    @cached_property
    def _x(self):
        return np.asarray(self.points)

    @property
    def support_lo(self):
        return self.points[0]

    @property
    def support_end(self):
        return self.points[-1]

    @property
    def breakpoints(self):
        return self.points

    @cached_property
    def _weight(self):
        return 1.0 / (len(self.points) - 1)

    def _seg(self, u):
        """Per-segment clipped coordinates, shape ``u.shape + (n-1,)``."""
        u = _check_nonnegative(u)
        x = self._x
        return np.clip(u[..., None], x[:-1], x[1:]), x[:-1], x[1:]

    def cdf(self, w):
        return _out(np.interp(_check_nonnegative(w), self._x, np.linspace(0.0, 1.0, self._x.size)))

    def pdf(self, w):
        w = _check_nonnegative(w)
        x = self._x
        idx = np.clip(np.searchsorted(x, w, side="right") - 1, 0, x.size - 2)
        dens = self._weight / (x[idx + 1] - x[idx])
        return _out(np.where((w >= x[0]) & (w <= x[-1]), dens, 0.0))

    def ppf(self, p):
        return _out(np.interp(np.asarray(p, dtype=float), np.linspace(0.0, 1.0, self._x.size), self._x))

    def partial_mean_below(self, u):
        m, a, b = self._seg(u)
        return _out(self._weight * np.sum((m * m - a * a) / (2.0 * (b - a)), axis=-1))

    def integral_cdf_below(self, u):
        u = _check_nonnegative(u)
        return _out(u * np.asarray(self.cdf(u)) - np.asarray(self.partial_mean_below(u)))

    def integral_tail_above(self, u):
        u = _check_nonnegative(u)
        m, a, b = self._seg(u)
        upper = np.sum((b * b - m * m) / (2.0 * (b - a)), axis=-1) * self._weight
        return _out(upper - u * np.asarray(self.sf(u)))

    def partial_second_moment(self, u):
        m, a, b = self._seg(u)
        return _out(self._weight * np.sum((m**3 - a**3) / (3.0 * (b - a)), axis=-1))

    @cached_property
    def mean(self):
        return float(self.partial_mean_below(self.points[-1]))

    @cached_property
    def second_moment(self):
        return float(self.partial_second_moment(self.points[-1]))

    def describe(self):
        return "empirical:" + ",".join(repr(p) for p in self.points)


KINDS = {
    "uniform": Uniform,
    "exponential": Exponential,
    "weibull": Weibull,
    "empirical": EmpiricalTable,
}


def parse_distribution(text: str, quad_tol: float = 1e-10) -> Distribution:
    """Build a distribution from ``kind:p1,p2,...`` (e.g. ``weibull:0.5,1``).

    ``empirical:@path`` reads whitespace or comma separated points from a file.
    """
    kind, _, rest = text.strip().partition(":")
    kind = kind.strip().lower()
    if kind not in KINDS:
        raise ParameterError(f"unknown distribution kind {kind!r}; expected one of {sorted(KINDS)}")
    rest = rest.strip()
    if kind == "empirical" and rest.startswith("@"):
        with open(rest[1:]) as fh:
            rest = fh.read().replace("\n", ",").replace(" ", ",")
    try:
        args = [float(tok) for tok in rest.split(",") if tok.strip()]
    except ValueError as exc:
        raise ParameterError(f"bad distribution parameters in {text!r}") from exc
    if kind == "empirical":
        return EmpiricalTable(tuple(sorted(args)), quad_tol=quad_tol)
    expected = {"uniform": 2, "exponential": 1, "weibull": 2}[kind]
    if len(args) != expected:
        raise ParameterError(f"{kind} takes {expected} parameter(s), got {len(args)}")
    return KINDS[kind](*args, quad_tol=quad_tol)
