"""Independent reference computations used to check the closed forms.

Nothing here reuses the closed-form code paths it is meant to check: the
moment ODE is integrated numerically, expectations are taken against the
matrix exponential of the full configuration generator, and stationary laws
come from a linear solve.
"""
from __future__ import annotations

import numpy as np
import scipy.integrate
import scipy.linalg

from .chain import stationary_distribution
from .complete_graph import CompleteGraphParams
from .engine import configurations, fv_generator_matrix


def moment_ode_solution(params: CompleteGraphParams, mean_k, mean_l, second, times, rtol=1e-12, atol=1e-12):
    """Integrate the first and mixed second moments of the occupations.

    The system is ``m' = N/K - m`` for each of the two means and
    ``S' = -(2K(N-1+p)/(K(N-1))) S + ((N-1)/K)(m_k + m_l)`` for
    ``S = E[eta(k) eta(l)]``, solved with an 8th-order Runge-Kutta scheme.

    Returns
    -------
    ndarray, shape (len(times),)
        ``cov(eta_t(k), eta_t(l))`` at each time.
    """
    big, k, p = params.N, params.K, float(params.p)
    rate = 2.0 * k * (big - 1 + p) / (k * (big - 1))

    def rhs(_, y):
        mk, ml, s = y
        return [big / k - mk, big / k - ml, -rate * s + (big - 1) / k * (mk + ml)]

    times = np.asarray(times, dtype=float)
    sol = scipy.integrate.solve_ivp(
        rhs, (0.0, float(times.max())), [mean_k, mean_l, second],
        method="DOP853", t_eval=times, rtol=rtol, atol=atol,
    )
    if not sol.success:
        raise RuntimeError(sol.message)
    mk, ml, s = sol.y
    return s - mk * ml


def kolmogorov_moments(params: CompleteGraphParams, eta0, times, k=1, l=2):
    """Means and covariance of two sites by exponentiating the full generator.

    Returns ``(mean_k, mean_l, cov)`` arrays over ``times``.
    """
    model = params.fv_model()
    gen = fv_generator_matrix(model)
    states = configurations(model.n, model.k)
    start = np.zeros(len(states))
    start[states.index(tuple(eta0))] = 1.0
    xk = np.array([s[k - 1] for s in states], dtype=float)
    xl = np.array([s[l - 1] for s in states], dtype=float)
    out = []
    for t in np.asarray(times, dtype=float):
        law = start @ scipy.linalg.expm(gen * t)
        mk, ml = law @ xk, law @ xl
        out.append((mk, ml, law @ (xk * xl) - mk * ml))
    return tuple(np.array(col) for col in zip(*out))


def brute_force_invariant(params: CompleteGraphParams) -> np.ndarray:
    """Stationary law of the configuration generator by linear solve."""
    return stationary_distribution(fv_generator_matrix(params.fv_model())).weights


def enumerated_normalizer(K: int, N: int) -> int:
    """``sum_eta prod_i C(eta(i) + N - 2, N - 2)`` over all configurations, in integers."""
    from math import comb, prod

    return sum(prod(comb(x + N - 2, N - 2) for x in eta) for eta in configurations(N, K))


def enumerated_moments(params: CompleteGraphParams):
    """``(Var(eta(1)), cov(eta(1), eta(2)))`` by summation over the brute-force law."""
    law = brute_force_invariant(params)
    states = np.array(configurations(params.N, params.K), dtype=float)
    x, y = states[:, 0], states[:, 1]
    mx, my = law @ x, law @ y
    return law @ (x - mx) ** 2, law @ (x * y) - mx * my
