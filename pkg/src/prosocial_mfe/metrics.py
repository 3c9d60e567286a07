"""Privacy measure and per-design reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import type_a, type_b, type_bm
from .distributions import Distribution
from .errors import MFEError
from .model import FeedbackScheme, ModelParams, TypeA, TypeB, TypeBm


def privacy_type_a() -> float:
    """Full revelation leaves no uncertainty about ``w``."""
    return 0.0


def _bins(cutpoints):
    cuts = sorted({float(c) for c in cutpoints if c > 0.0})
    return np.array([0.0, *cuts]), np.array([*cuts, math.inf])


def privacy_binned(cutpoints, dist: Distribution) -> float:
    """Population mean-square error of the bin-mean estimate of ``w``.

    The society sees only which of the bins ``[0, c_1), [c_1, c_2), ...``
    an agent falls in, so its estimate is the bin's conditional mean and the
    error is the within-bin variance summed over bins. Bins without mass
    contribute nothing.
    """
    lo, hi = _bins(cutpoints)
    total = 0.0
    for a, b in zip(lo, hi):
        mass = float(dist.bin_mass(a, b))
        if mass <= 0.0:
            continue
        m2_hi = dist.second_moment if math.isinf(b) else float(dist.partial_second_moment(b))
        m2 = m2_hi - float(dist.partial_second_moment(a))
        mean = float(dist.bin_mean(a, b))
        total += m2 - mass * mean * mean
    return max(total, 0.0)


def between_bin_variance(cutpoints, dist: Distribution) -> float:
    """Variance of the bin-mean step function ``E[w | bin]``."""
    lo, hi = _bins(cutpoints)
    mass = np.asarray(dist.bin_mass(lo, hi))
    means = np.asarray(dist.bin_mean(lo, hi))
    keep = mass > 0
    return float(np.sum(mass[keep] * (means[keep] - dist.mean) ** 2))


@dataclass
class DesignReport:
    """Outcome of one (scheme, distribution, parameters) evaluation."""

    scheme: str
    W: float
    V: float
    u: float | None = None
    v: list[float] = field(default_factory=list)
    c: list[float] = field(default_factory=list)
    case: str = ""
    residual_max: float = 0.0
    diagnostics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "W": self.W,
            "V": self.V,
            "u": self.u,
            "v": list(self.v),
            "c": list(self.c),
            "case": self.case,
            "residual_max": self.residual_max,
            "diagnostics": dict(self.diagnostics),
            "config": dict(self.config),
        }


class ReportError(MFEError):
    """A solver failed while building a report; the message names the scheme."""


def build_report(scheme: FeedbackScheme, dist: Distribution, params: ModelParams, **solver_opts) -> DesignReport:
    """Solve the equilibrium for ``scheme`` and evaluate its W and V."""
    try:
        return _build(scheme, dist, params, **solver_opts)
    except MFEError as exc:
        raise ReportError(f"{scheme.name} ({dist.describe()}, alpha={params.alpha}, beta={params.beta}): {exc}") from exc


def _build(scheme, dist, params, nodes=None, xtol=None, fp_tol=None):
    opts = {}
    if xtol is not None:
        opts["xtol"] = xtol
    if nodes is not None:
        opts["nodes"] = nodes
    if isinstance(scheme, TypeA):
        W = type_a.aggregate_action_type_a(dist, params)
        return DesignReport(
            scheme=scheme.name,
            W=W,
            V=privacy_type_a(),
            case="FullRevelation",
            diagnostics={"support_hi": dist.support_hi},
        )
    if isinstance(scheme, TypeB):
        eq = type_b.solve_equilibrium(scheme.theta, dist, params, **opts)
        check = type_b.indifference_check(eq)
        return DesignReport(
            scheme=scheme.name,
            W=type_b.aggregate_action_type_b(eq, dist),
            V=privacy_binned([eq.u], dist),
            u=eq.u,
            v=[eq.u],
            c=[eq.c1, eq.c2],
            case=eq.case,
            residual_max=abs(type_b.cutoff_from_pools(eq) - eq.u),
            diagnostics={
                "theta": eq.theta,
                "roots": list(eq.roots),
                "multiplicity": eq.multiplicity,
                "delta": eq.delta,
                "indifference_gap": check.gap,
            },
        )
    if isinstance(scheme, TypeBm):
        if fp_tol is not None:
            opts["tol"] = fp_tol
        eq = type_bm.solve_cutoffs(scheme.thetas, dist, params, **opts)
        return DesignReport(
            scheme=scheme.name,
            W=type_bm.aggregate_action_bm(eq, dist),
            V=privacy_binned(eq.v, dist),
            u=None,
            v=list(eq.v),
            c=list(eq.bin_reputations),
            case="Verified" if eq.deviation_ok else "DeviationFound",
            residual_max=eq.residual_max,
            diagnostics={
                "thetas": list(eq.thetas),
                "sweeps": eq.sweeps,
                "v_max": eq.v_max,
                "deviation_ok": eq.deviation_ok,
                "deviation_gap": eq.deviation_gap,
            },
        )
    raise TypeError(f"unknown feedback scheme {scheme!r}")
