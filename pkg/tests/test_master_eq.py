from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from laserjump.equilibrium import Distribution, equilibrium_distribution, total_variation
from laserjump.errors import DomainError, StepTooLarge
from laserjump.master_eq import (
    balance_residual,
    build_generator,
    evolve,
    stationary_distribution,
    step_distribution,
    verify_einstein_rates,
)


def test_build_generator_values():
    g = build_generator(2)
    np.testing.assert_array_equal(g.up_rates, [2, 2, 0])
    np.testing.assert_array_equal(g.down_rates, [0, 1, 4])
    g = build_generator(1)
    np.testing.assert_array_equal(g.up_rates, [1, 0])
    np.testing.assert_array_equal(g.down_rates, [0, 1])
    g = build_generator(100)
    assert g.up_rates[50] == 2550 and g.down_rates[50] == 2500
    with pytest.raises(DomainError):
        build_generator(0)


@pytest.mark.parametrize("N", [1, 3, 20])
def test_generator_columns_sum_to_zero(N):
    np.testing.assert_allclose(build_generator(N).matrix().sum(axis=0), 0, atol=1e-12)


def test_stationary_is_fixed_point():
    g = build_generator(30)
    p = stationary_distribution(g)
    q = step_distribution(p, g, 0.05 / g.max_rate)
    assert total_variation(p, q) < 1e-10


def test_two_atom_relaxation():
    g = build_generator(2)
    p = evolve(Distribution.point_mass(0), g, 10.0)
    assert total_variation(p, equilibrium_distribution(2, 2)) < 1e-6


def _euler(L, p0, t, dt):
    p = p0.copy()
    for _ in range(int(round(t / dt))):
        p = p + dt * (L @ p)
    return p


def test_short_time_against_refined_euler_and_expm():
    N, t = 6, 0.01
    g = build_generator(N)
    got = evolve(Distribution.point_mass(0), g, t).dense(N + 1)
    L = g.matrix()
    p0 = np.zeros(N + 1)
    p0[0] = 1.0
    # plain Euler at dt=1e-6 is only good to ~4e-7 here; Richardson-refine it
    ref = 2 * _euler(L, p0, t, 1e-6) - _euler(L, p0, t, 2e-6)
    np.testing.assert_allclose(got, ref, rtol=0, atol=1e-8)
    np.testing.assert_allclose(got, expm(L * t)[:, 0], rtol=0, atol=1e-8)


def test_step_guard():
    g = build_generator(10)
    with pytest.raises(StepTooLarge):
        step_distribution(Distribution.point_mass(0), g, 1.0)


def test_stationary_small_cases():
    np.testing.assert_allclose(stationary_distribution(build_generator(2)).probs, [0.25, 0.5, 0.25], atol=1e-15)
    np.testing.assert_allclose(stationary_distribution(build_generator(1)).probs, [0.5, 0.5], atol=1e-15)


@pytest.mark.parametrize("N", [1, 2, 10, 40])
def test_stationary_equals_binomial(N):
    g = build_generator(N)
    p = stationary_distribution(g)
    assert total_variation(p, equilibrium_distribution(N, N)) < 1e-12
    assert balance_residual(p, g) < 1e-12


def test_stationary_large_N_balance_relative():
    g = build_generator(500)
    p = stationary_distribution(g)
    assert total_variation(p, equilibrium_distribution(500, 500)) < 1e-12
    flux = np.max(p.probs * g.up_rates)
    assert balance_residual(p, g) / flux < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 12), st.lists(st.floats(0, 1), min_size=13, max_size=13))
def test_probability_conservation_and_confinement(N, weights):
    w = np.array(weights[: N + 1]) + 1e-3
    p0 = Distribution(0, w / w.sum())
    g = build_generator(N)
    p = evolve(p0, g, 0.2)
    assert abs(p.probs.sum() - 1) < 1e-10
    assert p.support_min >= 0 and p.support[-1] <= N


@pytest.mark.parametrize("N", [4, 10, 30])
def test_convergence_to_binomial(N):
    g = build_generator(N)
    target = equilibrium_distribution(N, N)
    p = Distribution.point_mass(0)
    dists = []
    t_step = 5.0 / N
    for _ in range(10):
        p = evolve(p, g, t_step)
        dists.append(total_variation(p, target))
    assert dists[-1] < 1e-6
    tail = dists[2:]
    assert all(b <= a + 1e-14 for a, b in zip(tail, tail[1:]))


@pytest.mark.parametrize("N", [2, 5, 8])
def test_einstein_rates_unique(N):
    rep = verify_einstein_rates(N)
    assert rep.confirmed
    assert len(rep.solution_basis) == 1
    assert rep.solution_basis[0] == (Fraction(1), Fraction(1), Fraction(1))
    assert rep.residuals[(1, 1, 1)] == 0
    assert rep.residuals[(2, 2, 2)] == 0
    assert rep.residuals[(1, 0, 1)] > 0
    for probe, res in rep.residuals.items():
        if len(set(probe)) > 1:
            assert res > 0, probe


def test_einstein_rejects_single_atom():
    with pytest.raises(DomainError):
        verify_einstein_rates(1)
