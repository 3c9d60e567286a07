import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import quad, scipy_law
from prosocial_mfe.distributions import Exponential, Uniform, Weibull
from prosocial_mfe.errors import MFEError
from prosocial_mfe.metrics import ReportError, between_bin_variance, build_report, privacy_binned, privacy_type_a
from prosocial_mfe.model import ModelParams, TypeA, TypeB, TypeBm


def privacy_oracle(cuts, law, top=np.inf):
    """Sum of within-bin squared errors, each bin's mean and spread by QUADPACK."""
    edges = [0.0, *cuts, top]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        mass = law.cdf(b) - law.cdf(a)
        if mass <= 0:
            continue
        m = quad(lambda w: w * law.pdf(w), a, b) / mass
        total += quad(lambda w: (w - m) ** 2 * law.pdf(w), a, b)
    return total


def test_type_a_is_exactly_zero():
    assert privacy_type_a() == 0.0
    assert build_report(TypeA(), Weibull(0.5, 1.0), ModelParams(1.0, 0.2)).V == 0.0


@pytest.mark.parametrize("u", [0.0, 0.1, 0.37, 0.5, 0.99, 1.0])
def test_uniform_single_cut(u):
    assert privacy_binned([u], Uniform(0, 1)) == pytest.approx(u**3 / 12 + (1 - u) ** 3 / 12, abs=1e-15)


@pytest.mark.parametrize("dist", [Exponential(1.0), Weibull(0.5, 1.0), Weibull(2.0, 1.0)], ids=lambda d: d.describe())
def test_matches_quadpack_oracle(dist):
    law = scipy_law(dist)
    cuts = [float(law.ppf(q)) for q in (0.2, 0.55, 0.9)]
    assert privacy_binned(cuts, dist) == pytest.approx(privacy_oracle(cuts, law), rel=1e-9)


def test_fine_partition_tends_to_zero():
    d = Uniform(0, 1)
    # n equal bins leave 1/(12 n^2)
    for n in (10, 100, 1000):
        assert privacy_binned(np.linspace(0, 1, n + 1)[1:-1], d) == pytest.approx(1 / (12 * n * n), rel=1e-9)


def test_empty_bins_are_skipped():
    d = Uniform(0, 1)
    assert privacy_binned([2.0, 3.0], d) == pytest.approx(1 / 12)
    assert privacy_binned([0.5, 0.5], d) == pytest.approx(2 * 0.5**3 / 12)


FAMS = [Uniform(0, 1), Exponential(1.0), Weibull(0.5, 1.0), Weibull(2.0, 1.5)]


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(FAMS), st.lists(st.floats(0.001, 0.999), min_size=1, max_size=6))
def test_total_variance_identity(dist, qs):
    cuts = sorted(float(dist.ppf(q)) for q in qs)
    V = privacy_binned(cuts, dist)
    assert V + between_bin_variance(cuts, dist) == pytest.approx(dist.variance, abs=1e-8)
    assert 0.0 <= V <= dist.variance + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(FAMS), st.lists(st.floats(0.001, 0.999), min_size=1, max_size=5), st.floats(0.001, 0.999))
def test_refinement_never_increases_privacy(dist, qs, extra):
    cuts = sorted(float(dist.ppf(q)) for q in qs)
    finer = sorted(cuts + [float(dist.ppf(extra))])
    assert privacy_binned(finer, dist) <= privacy_binned(cuts, dist) + 1e-12


def test_report_type_b_reference_instance():
    rep = build_report(TypeB(1 / 3), Uniform(0, 1), ModelParams(1.0, 0.1))
    assert rep.W == pytest.approx(0.55, abs=1e-12)
    assert round(rep.u, 4) == 0.0171
    assert rep.V == pytest.approx(rep.u**3 / 12 + (1 - rep.u) ** 3 / 12)
    assert rep.diagnostics["multiplicity"] == 1
    d = rep.to_dict()
    for key in ("scheme", "W", "V", "u", "v", "c", "case", "residual_max"):
        assert key in d


def test_report_type_a_myopic():
    rep = build_report(TypeA(), Uniform(0, 1), ModelParams(1.0, 0.0))
    assert rep.W == 0.5 and rep.V == 0.0 and rep.case == "FullRevelation"


def test_report_type_bm_reference_instance():
    rep = build_report(TypeBm((1 / 3, 2 / 3)), Uniform(0, 1), ModelParams(1.0, 0.1))
    assert round(rep.W, 3) == 0.562
    assert rep.case == "Verified"
    assert len(rep.v) == 2 and len(rep.c) == 3
    assert rep.W >= 0.5 and 0 <= rep.V <= 1 / 12


def test_report_wraps_solver_errors():
    with pytest.raises(ReportError) as info:
        build_report(TypeBm((1 / 3, 2 / 3)), Uniform(0, 1), ModelParams(1.0, 0.1), fp_tol=0.0)
    assert "type-bm" in str(info.value)
    assert isinstance(info.value, MFEError)
