import math
import warnings

import numpy as np
import pytest
from scipy import optimize

from conftest import quad, quad_only_weibull, scipy_law
from prosocial_mfe import type_b
from prosocial_mfe.distributions import EmpiricalTable, Exponential, Uniform, Weibull
from prosocial_mfe.model import ModelParams


def x_b_oracle(u, law, top=np.inf):
    """E[w | w >= u] - E[w | w < u] by direct QUADPACK integration of w f(w)."""
    F = law.cdf(u)
    upper = quad(lambda w: w * law.pdf(w), u, top) / (1 - F)
    lower = quad(lambda w: w * law.pdf(w), 0, u) / F
    return upper - lower


# -- X_B ----------------------------------------------------------------------


def test_x_b_uniform_is_half(uniform):
    u = np.linspace(0, 1, 101)
    np.testing.assert_allclose(type_b.x_b(u, uniform), 0.5, atol=1e-14)


@pytest.mark.parametrize("dist", [Exponential(1.0), Weibull(0.5, 1.0), Weibull(2.0, 1.3)], ids=lambda d: d.describe())
def test_x_b_matches_conditional_mean_oracle(dist):
    law = scipy_law(dist)
    for q in (0.1, 0.5, 0.9):
        u = float(law.ppf(q))
        assert type_b.x_b(u, dist) == pytest.approx(x_b_oracle(u, law), rel=1e-9)


def test_x_b_limits():
    for dist in (Uniform(0, 1), Exponential(1.0), Weibull(0.5, 1.0)):
        assert type_b.x_b(0.0, dist) == dist.mean
        # X_B - E[w] shrinks like sqrt(u) for the Weibull(0.5) cusp
        assert type_b.x_b(1e-14, dist) == pytest.approx(dist.mean, abs=1e-6)
    d = Uniform(0, 2)
    assert type_b.x_b(5.0, d) == 5.0 - d.mean


def test_x_b_exponential_memoryless():
    # E[w | w >= u] = u + 1, E[w | w < u] = 1 - u e^{-u}/(1 - e^{-u})
    d = Exponential(1.0)
    u = 0.7
    assert type_b.x_b(u, d) == pytest.approx(u + u * math.exp(-u) / (1 - math.exp(-u)), rel=1e-13)


def test_x_b_derivative_finite_difference():
    d = Weibull(2.0, 1.0)
    h = 1e-6
    for u in (0.3, 0.9, 1.6):
        fd = (type_b.x_b(u + h, d) - type_b.x_b(u - h, d)) / (2 * h)
        assert type_b.x_b_derivative(u, d) == pytest.approx(fd, rel=1e-6)
    assert type_b.x_b_derivative(3.0, Uniform(0, 1)) == 1.0


# -- uniform closed form -----------------------------------------------------


@pytest.mark.parametrize("theta", [0.05, 0.2, 1 / 3, 0.5, 0.9, 1.0])
def test_uniform_cutoff_and_welfare(uniform, theta):
    p = ModelParams(1.0, 0.1)
    eq = type_b.solve_equilibrium(theta, uniform, p)
    assert eq.u == pytest.approx(max(theta - math.sqrt(0.1), 0.0), abs=1e-12)
    W = type_b.aggregate_action_type_b(eq, uniform)
    assert W == pytest.approx(0.5 + 0.5 * min(theta**2, 0.1), abs=1e-12)
    assert eq.case == (type_b.ALL_JUMP if theta < math.sqrt(0.1) else type_b.INTERIOR)


def test_reference_instance(uniform):
    # theta = 1/3, alpha = 1, beta = 0.1: u ~ 0.0171, W = 0.55
    eq = type_b.solve_equilibrium(1 / 3, uniform, ModelParams(1.0, 0.1))
    assert round(eq.u, 4) == 0.0171
    assert type_b.aggregate_action_type_b(eq, uniform) == pytest.approx(0.55, abs=1e-12)
    assert eq.delta == pytest.approx(0.5)


def test_general_alpha_uniform():
    # u = [alpha*theta - sqrt(alpha*beta)]_+ on Uniform(0,1) when alpha*theta <= 1
    d = Uniform(0, 1)
    p = ModelParams(2.0, 0.05)
    eq = type_b.solve_equilibrium(0.4, d, p)
    assert eq.u == pytest.approx(0.8 - math.sqrt(0.1), abs=1e-12)


def test_beta_zero_is_boundary(uniform):
    eq = type_b.solve_equilibrium(0.4, uniform, ModelParams(1.0, 0.0))
    assert eq.case == type_b.BOUNDARY and eq.u == 0.4
    assert type_b.aggregate_action_type_b(eq, uniform) == 0.5


# -- general distributions ----------------------------------------------------


@pytest.mark.parametrize(
    "dist, params, theta",
    [
        (Weibull(0.5, 1.0), ModelParams(1.0, 0.05), 1.2),
        (Exponential(1.0), ModelParams(1.5, 0.2), 1.5),
        (Weibull(2.0, 1.0), ModelParams(1.0, 0.3), 1.4),
    ],
    ids=["weibull-0.5", "exponential", "weibull-2"],
)
def test_cutoff_matches_brentq_on_oracle_gap(dist, params, theta):
    law = scipy_law(dist)
    eq = type_b.solve_equilibrium(theta, dist, params)
    assert eq.case == type_b.INTERIOR
    g = lambda u: params.beta * x_b_oracle(u, law) - (u - params.alpha * theta) ** 2 / (2 * params.alpha)
    ref = optimize.brentq(g, max(eq.u - 1e-3, 1e-9), eq.u + 1e-3, xtol=1e-14)
    assert eq.u == pytest.approx(ref, abs=1e-9)
    W_ref = dist.mean / params.alpha + quad(
        lambda w: (theta - w / params.alpha) * law.pdf(w), eq.u, params.alpha * theta
    )
    assert type_b.aggregate_action_type_b(eq, dist) == pytest.approx(W_ref, abs=1e-10)


def test_quadrature_only_route_agrees():
    p = ModelParams(1.0, 0.05)
    eq = type_b.solve_equilibrium(1.2, Weibull(0.5, 1.0), p)
    slow = quad_only_weibull(0.5, 1.0)
    # the analytic root is a root of the gap built from generic quadrature, and the sign flips across it
    assert abs(float(type_b._gap(eq.u, 1.2, slow, p))) < 1e-10
    assert float(type_b._gap(eq.u - 1e-4, 1.2, slow, p)) * float(type_b._gap(eq.u + 1e-4, 1.2, slow, p)) < 0


def test_indifference_at_cutoff():
    eq = type_b.solve_equilibrium(1.5, Exponential(1.0), ModelParams(1.0, 0.2))
    check = type_b.indifference_check(eq)
    assert check.passed and check.gap < 1e-10
    assert type_b.cutoff_from_pools(eq) == pytest.approx(eq.u, abs=1e-10)


def test_all_jump_has_no_indifferent_agent(uniform):
    eq = type_b.solve_equilibrium(0.1, uniform, ModelParams(1.0, 0.1))
    assert eq.case == type_b.ALL_JUMP and eq.u == 0.0
    assert eq.c1 == 0.0 and eq.c2 == pytest.approx(0.5)
    assert type_b.indifference_check(eq).passed


def test_multiple_equilibria_smallest_selected():
    # mass clustered at 0 and 1 makes the gap X_B non-monotone
    d = EmpiricalTable((0.0, 0.01, 1.0, 1.01))
    p = ModelParams(1.0, 0.123)
    eq = type_b.solve_equilibrium(1.392, d, p)
    assert eq.multiplicity == 3
    assert eq.u == min(eq.roots)
    for r in eq.roots:
        assert abs(float(type_b._gap(r, 1.392, d, p))) < 1e-10


def test_scan_roots_finds_tangency():
    h = lambda x: -((np.asarray(x) - 0.3037) ** 2)
    roots, tangential = type_b.scan_roots(h, 0.0, 1.0, nodes=100)
    assert roots == [] and tangential == [pytest.approx(0.3037, abs=1e-6)]


def test_scan_roots_sign_changes():
    h = lambda x: np.sin(10 * np.asarray(x))
    roots, tangential = type_b.scan_roots(h, 0.1, 1.0, nodes=50)
    np.testing.assert_allclose(roots, [math.pi / 10, 2 * math.pi / 10, 3 * math.pi / 10], atol=1e-12)
    assert tangential == []


def test_profile_and_action(uniform):
    eq = type_b.solve_equilibrium(0.5, uniform, ModelParams(1.0, 0.1))
    w = np.array([0.0, 0.1, eq.u, 0.3, 0.5, 0.8])
    np.testing.assert_allclose(eq.action(w), [0.0, 0.1, 0.5, 0.5, 0.5, 0.8])
    rows = type_b.profile_samples(eq, w)
    assert rows.shape == (6, 2)


def test_welfare_at_least_myopic():
    for theta in (0.3, 0.9, 2.0, 5.0):
        d = Weibull(0.5, 1.0)
        eq = type_b.solve_equilibrium(theta, d, ModelParams(1.0, 0.05))
        assert type_b.aggregate_action_type_b(eq, d) >= d.mean - 1e-15


def test_no_warning_on_transversal_root(uniform):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        type_b.solve_equilibrium(0.6, uniform, ModelParams(1.0, 0.1))
