#!/usr/bin/env python3
"""
Tests for simplex integration: Dirichlet closed form, tensor rule and Monte Carlo.
"""

import numpy as np
import pytest
from scipy.special import beta as scipy_beta, gamma as scipy_gamma, gammaln

from quadrature import (MC_BLOCK_SIZE, Method, QuadratureError, SimplexDomain, dirichlet_closed, log_dirichlet_closed,
                        integrate_simplex, integrate_tau, mc_integrate, simplex_rule)


@pytest.mark.parametrize("a, alpha", [(0.0, 0.0), (2.0, 0.5), (3.0, -0.5), (0.5, 4.0)])
def test_dirichlet_closed_in_one_dimension_is_beta(a, alpha):
    assert dirichlet_closed([a], alpha) == pytest.approx(scipy_beta(a + 1, alpha + 1), rel=1e-13)


def test_dirichlet_closed_general():
    expected = scipy_gamma(3) * scipy_gamma(2) * scipy_gamma(1.5) / scipy_gamma(2 + 1 + 2 + 0.5 + 1)
    assert dirichlet_closed([2, 1], 0.5) == pytest.approx(expected, rel=1e-13)
    assert SimplexDomain(2, 0.0).mass == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize("exponents, alpha", [([], 0.0), ([-1.0], 0.0), ([1.0], -1.0), ([float('nan')], 0.0)])
def test_dirichlet_closed_rejects_bad_input(exponents, alpha):
    with pytest.raises(QuadratureError):
        dirichlet_closed(exponents, alpha)


@pytest.mark.parametrize("n, alpha, exponents", [
    (1, 0.0, (4,)),
    (2, 0.5, (2, 1)),
    (2, -0.5, (0, 3)),
    (3, 1.0, (1, 2, 1)),
    (4, 2.5, (1, 0, 2, 1)),
])
def test_tensor_rule_is_exact_for_monomials(n, alpha, exponents):
    domain = SimplexDomain(n, alpha)
    estimate = integrate_simplex(lambda u: np.prod(u ** np.array(exponents), axis=1), domain, order=10)
    assert estimate.method is Method.TENSOR_RULE
    assert estimate.value == pytest.approx(dirichlet_closed(exponents, alpha), rel=1e-12)
    assert estimate.error_bound < 1e-12


def test_rule_weights_sum_to_mass_and_nodes_lie_in_simplex():
    rule = simplex_rule(3, -0.25, 8)
    assert rule.weights.sum() == pytest.approx(SimplexDomain(3, -0.25).mass, rel=1e-13)
    assert np.all(rule.nodes > 0)
    assert np.all(rule.nodes.sum(axis=1) < 1)
    assert not rule.nodes.flags.writeable


def test_tau_integral_is_simplex_integral_over_two_to_the_n():
    domain = SimplexDomain(2, 1.0)
    estimate = integrate_tau(lambda r: r[:, 0] ** 2 * r[:, 1] ** 4, domain, order=8)
    assert estimate.value == pytest.approx(dirichlet_closed([1, 2], 1.0) / 4, rel=1e-12)


def test_smooth_integrand_converges():
    domain = SimplexDomain(2, 0.0)
    coarse = integrate_simplex(lambda u: np.exp(-u.sum(axis=1)), domain, order=6)
    fine = integrate_simplex(lambda u: np.exp(-u.sum(axis=1)), domain, order=20)
    # integral over the triangle of exp(-(u1+u2)) = 1 - 2/e
    assert fine.value == pytest.approx(1 - 2 / np.e, rel=1e-13)
    assert abs(coarse.value - fine.value) < 1e-6


def test_order_and_parameter_validation():
    with pytest.raises(QuadratureError):
        integrate_simplex(lambda u: np.ones(len(u)), SimplexDomain(2, 0.0), order=1)
    with pytest.raises(QuadratureError):
        SimplexDomain(2, -1.0)
    with pytest.raises(QuadratureError):
        SimplexDomain(0, 0.0)


def test_non_finite_integrand_raises():
    with pytest.raises(QuadratureError):
        integrate_simplex(lambda u: np.full(len(u), np.nan), SimplexDomain(2, 0.0), order=4)


def test_mc_is_reproducible_and_independent_of_workers():
    domain = SimplexDomain(2, 1.0)
    samples = 2 * MC_BLOCK_SIZE + 1234
    first = mc_integrate(lambda u: u[:, 0], domain, samples, seed=7)
    again = mc_integrate(lambda u: u[:, 0], domain, samples, seed=7)
    threaded = mc_integrate(lambda u: u[:, 0], domain, samples, seed=7, workers=3)
    assert first == again == threaded
    assert first.method is Method.MONTE_CARLO
    assert abs(first.value - dirichlet_closed([1, 0], 1.0)) <= 2 * first.error_bound


def test_mc_of_constant_has_zero_error():
    domain = SimplexDomain(3, 0.5)
    estimate = mc_integrate(lambda u: np.ones(len(u)), domain, 5000, seed=1)
    assert estimate.value == pytest.approx(domain.mass, rel=1e-14)
    assert estimate.error_bound == pytest.approx(0.0, abs=1e-15)


def test_mc_needs_enough_samples():
    with pytest.raises(QuadratureError):
        mc_integrate(lambda u: u[:, 0], SimplexDomain(1, 0.0), 999, seed=0)


@pytest.mark.parametrize("n, alpha", [(2, 0.0), (2, 1.5), (3, 0.5)])
def test_mc_three_sigma_band_covers_closed_value(n, alpha):
    domain = SimplexDomain(n, alpha)
    exact = dirichlet_closed([1, 1] + [0] * (n - 2), alpha)
    hits = 0
    for seed in range(20):
        estimate = mc_integrate(lambda u: u[:, 0] * u[:, 1], domain, 200_000, seed=seed)
        hits += abs(estimate.value - exact) <= estimate.error_bound
    assert hits >= 19


def test_log_dirichlet_closed_beyond_float_range():
    assert log_dirichlet_closed([500.0, 500.0], 0.0) == pytest.approx(
        2 * float(gammaln(501.0)) - float(gammaln(1003.0)), rel=1e-13)
