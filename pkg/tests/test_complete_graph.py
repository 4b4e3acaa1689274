import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg

from flemingviot import complete_graph as cg
from flemingviot import oracles
from flemingviot.chain import conditioned_law, point_mass, stationary_distribution, total_variation
from flemingviot.engine import configurations, fv_generator_matrix, transition_rates
from flemingviot.errors import StateSpaceTooLarge


def test_parameter_validation():
    for bad in ((1, 1.0, 3), (2, 1.0, 1), (2, 0.0, 3)):
        with pytest.raises(ValueError):
            cg.CompleteGraphParams(*bad)


def test_state_count():
    params = cg.CompleteGraphParams(4, 1.0, 6)
    assert params.n_states == len(configurations(6, 4)) == math.factorial(9) // (math.factorial(6) * math.factorial(3))


def test_hand_weight():
    params = cg.CompleteGraphParams(2, 1.0, 2)
    assert cg.invariant_weight(params, (2, 0)) == pytest.approx(1.5)
    assert cg.invariant_weight_exact(params, (2, 0)) == Fraction(3, 2)
    assert cg.invariant_weight_exact(params, (1, 1)) == 1


def test_law_matches_oracle():
    params = cg.CompleteGraphParams(2, 0.5, 3)
    np.testing.assert_allclose(cg.invariant_law(params).weights, oracles.brute_force_invariant(params), atol=1e-11)
    exact = cg.invariant_law(cg.CompleteGraphParams(3, Fraction(1, 3), 4), exact=True).weights
    np.testing.assert_allclose(exact, cg.invariant_law(cg.CompleteGraphParams(3, Fraction(1, 3), 4)).weights, atol=1e-15)


def test_law_cap():
    with pytest.raises(StateSpaceTooLarge):
        cg.invariant_law(cg.CompleteGraphParams(5, 1.0, 40), cap=1000)


def test_reversibility_and_exchangeability():
    params = cg.CompleteGraphParams(3, 0.8, 5)
    law = cg.invariant_law(params)
    weight = dict(zip(law.support, law.weights))
    for eta in law.support:
        for target, rate in transition_rates(params.fv_model(), eta):
            back = dict(transition_rates(params.fv_model(), target))[eta]
            lhs, rhs = weight[eta] * rate, weight[target] * back
            assert abs(lhs - rhs) <= 1e-11 * max(lhs, rhs)
        for perm in ((1, 0, 2), (2, 1, 0), (1, 2, 0)):
            assert weight[tuple(eta[i] for i in perm)] == pytest.approx(weight[eta], rel=1e-13)


def test_binomial_normalizers():
    assert cg.binomial_normalizer(2, 3) == 20
    assert cg.binomial_normalizer(2, 2) == 3
    for n in (2, 3, 5):
        assert oracles.enumerated_normalizer(2, n) == cg.binomial_normalizer(2, n)


def test_binomial_law_matches_product_form():
    params = cg.CompleteGraphParams(3, Fraction(1, 3), 4)
    law, z = cg.invariant_law_binomial(params)
    np.testing.assert_allclose(law.weights, cg.invariant_law(params).weights, atol=1e-15)
    states = configurations(4, 3)
    ratio = {eta: cg.binomial_weight(4, eta) / cg.invariant_weight_exact(params, eta) for eta in states}
    assert len(set(ratio.values())) == 1
    with pytest.raises(ValueError):
        cg.invariant_law_binomial(cg.CompleteGraphParams(3, 0.5, 4))


def test_marginal_law():
    params = cg.CompleteGraphParams(2, Fraction(1, 2), 3)
    marginal = cg.marginal_law(params)
    law = cg.invariant_law(params)
    enumerated = np.zeros(4)
    for eta, w in zip(law.support, law.weights):
        enumerated[eta[0]] += w
    np.testing.assert_allclose(marginal.weights, enumerated, atol=1e-12)
    params3 = cg.CompleteGraphParams(3, Fraction(1, 3), 6)
    m = cg.marginal_law(params3, site=2)
    assert m.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert m.expect(np.arange(7)) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(ValueError):
        cg.marginal_law(params3, site=4)


def test_mean_dynamics():
    params = cg.CompleteGraphParams(3, 1.0, 9)
    assert cg.mean_dynamics(params, 3.0, 2.7) == pytest.approx(3.0)
    assert cg.mean_dynamics(params, 9.0, 0.0) == 9.0
    assert cg.mean_dynamics(params, 9.0, 60.0) == pytest.approx(3.0)
    # the variant without (1 - e^-t) is off by N/K at t = 0
    assert cg.mean_dynamics_as_printed(params, 9.0, 0.0) - 9.0 == pytest.approx(3.0)
    with pytest.raises(ValueError):
        cg.mean_dynamics(params, 9.0, -1.0)


def test_covariance_at_zero_reproduces_input(rng):
    params = cg.CompleteGraphParams(3, 0.5, 10)
    for _ in range(20):
        mk, ml = rng.uniform(0, 10, 2)
        second = mk * ml + rng.uniform(-3, 3)
        second = max(second, 0.0)
        assert cg.covariance_dynamics(params, mk, ml, second, 0.0) == pytest.approx(second - mk * ml, abs=1e-12)


def test_covariance_long_time_limit():
    params = cg.CompleteGraphParams(3, 0.5, 10)
    assert cg.covariance_dynamics(params, 10, 0, 0, 80.0) == pytest.approx(cg.limiting_covariance(params), abs=1e-12)
    stat = cg.stationary_covariance(params)
    assert cg.limiting_covariance(params) == pytest.approx(stat.cov, rel=1e-12)


def test_covariance_matches_ode_oracle():
    params = cg.CompleteGraphParams(3, 1.0, 20)
    times = np.linspace(0, 5, 11)
    ode = oracles.moment_ode_solution(params, 20.0, 0.0, 0.0, times)
    closed = [cg.covariance_dynamics(params, 20.0, 0.0, 0.0, t) for t in times]
    np.testing.assert_allclose(closed, ode, atol=1e-9)


def test_covariance_matches_generator_exponential():
    params = cg.CompleteGraphParams(3, 0.5, 4)
    times = [0.0, 0.3, 1.0, 4.0]
    _, _, cov = oracles.kolmogorov_moments(params, (4, 0, 0), times)
    closed = [cg.covariance_dynamics(params, 4, 0, 0, t) for t in times]
    np.testing.assert_allclose(closed, cov, atol=1e-12)
    printed = cg.covariance_as_printed(params, 4, 0, 0, 0.0)
    assert abs(printed) > 0.1


def test_covariance_solves_moment_equation():
    params = cg.CompleteGraphParams(2, 0.5, 7)
    rate = 2 * (7 - 1 + 0.5) / 6
    h = 1e-5
    for t in (0.2, 1.0, 3.0):
        def second(s):
            return cg.covariance_dynamics(params, 7, 0, 0, s) + cg.mean_dynamics(params, 7, s) * cg.mean_dynamics(params, 0, s)

        deriv = (second(t + h) - second(t - h)) / (2 * h)
        rhs = -rate * second(t) + 6 / 2 * (cg.mean_dynamics(params, 7, t) + cg.mean_dynamics(params, 0, t))
        assert deriv == pytest.approx(rhs, abs=1e-6)


def test_reference_rate_equals_simplified():
    params = cg.CompleteGraphParams(4, 0.3, 11)
    for t in (0.0, 0.7, 2.0):
        assert cg.covariance_reference(params, 5, 2, 10, t) == pytest.approx(cg.covariance_dynamics(params, 5, 2, 10, t), abs=1e-13)


def test_covariance_argument_checks():
    params = cg.CompleteGraphParams(2, 1.0, 5)
    with pytest.raises(ValueError):
        cg.covariance_dynamics(params, 1, 1, 1, 1.0, k=2, l=2)
    with pytest.raises(ValueError):
        cg.covariance_dynamics(params, 1, 1, 1, -1.0)


def test_stationary_covariance_values():
    stat = cg.stationary_covariance(cg.CompleteGraphParams(2, Fraction(1), 10), exact=True)
    assert stat.var == Fraction(19, 4) and stat.cov == -stat.var
    assert stat.normalized_cov == Fraction(-19, 400)
    var, cov = oracles.enumerated_moments(cg.CompleteGraphParams(3, 0.5, 6))
    stat3 = cg.stationary_covariance(cg.CompleteGraphParams(3, 0.5, 6))
    assert var == pytest.approx(stat3.var, rel=1e-11) and cov == pytest.approx(stat3.cov, rel=1e-11)


def test_normalized_covariance_asymptote():
    gaps = []
    for n in (100, 1000, 10000):
        stat = cg.stationary_covariance(cg.CompleteGraphParams(3, 1.0, n))
        gaps.append(abs(n * abs(stat.normalized_cov) - 2 / 9))
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-4


def test_chaos_bound():
    params = cg.CompleteGraphParams(2, 1.0, 8)
    assert cg.chaos_bound(params) == pytest.approx(math.sqrt(0.5))
    assert cg.expected_distance_to_uniform(params) <= cg.chaos_bound(params)
    assert cg.chaos_bound(cg.CompleteGraphParams(2, 1.0, 10**6)) < 3e-3


def test_spectrum_candidates():
    params = cg.CompleteGraphParams(2, 1.0, 5)
    assert cg.lambda_l(params, 0) == 0 and cg.lambda_l(params, 1) == 1
    assert cg.lambda_l(params, 2) == pytest.approx(2.5)
    eigs = np.linalg.eigvals(-fv_generator_matrix(params.fv_model())).real
    assert np.min(np.abs(eigs - 2.5)) <= 1e-9
    assert cg.spectrum_inclusion_defect(params, eigs) <= 1e-7
    params3 = cg.CompleteGraphParams(3, 0.5, 4)
    eigs3 = np.linalg.eigvals(-fv_generator_matrix(params3.fv_model())).real
    assert cg.spectrum_inclusion_defect(params3, eigs3) <= 1e-7


def test_marginal_generator():
    params = cg.CompleteGraphParams(3, 0.7, 6)
    spec = cg.marginal_generator(params)
    assert spec.death[0] == 0 and spec.birth[0] == pytest.approx(2.0) and spec.birth[-1] == 0
    # the stationary law of the marginal chain is the marginal of the invariant law
    law = cg.invariant_law(params)
    enumerated = np.zeros(7)
    for eta, w in zip(law.support, law.weights):
        enumerated[eta[0]] += w
    np.testing.assert_allclose(spec.stationary().weights, enumerated, atol=1e-12)


def test_poincare_contraction(rng):
    params = cg.CompleteGraphParams(2, 0.6, 5)
    gen = fv_generator_matrix(params.fv_model())
    nu = cg.invariant_law(params).weights
    for _ in range(5):
        f = rng.normal(size=len(nu))
        f0 = f - nu @ f
        for t in (0.1, 0.5, 2.0):
            ft = scipy.linalg.expm(gen * t) @ f
            ft = ft - nu @ ft
            assert nu @ ft**2 <= math.exp(-2 * t) * (nu @ f0**2) * (1 + 1e-10)


def test_conditioned_law_tv_decay():
    for k in (2, 3, 4):
        params = cg.CompleteGraphParams(k, 0.9, 2)
        uniform = np.full(k, 1.0 / k)
        for t in (0.1, 0.5, 1.0, 3.0):
            law = conditioned_law(params.rate_matrix(), point_mass(k, 1), t)
            assert total_variation(law, uniform) <= math.exp(-t) + 1e-12
            if k == 2:
                assert total_variation(law, uniform, unnormalized=True) <= math.exp(-t) + 1e-12
