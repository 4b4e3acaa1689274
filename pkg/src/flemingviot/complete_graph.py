"""Closed forms for the Fleming-Viot process on the complete graph.

``N`` particles move on sites ``1..K``: each jumps to every other site at
rate ``1/K`` and is killed at rate ``p``, after which it lands on one of the
other ``N - 1`` particles chosen uniformly. Because of the symmetry almost
everything is explicit: the reversible invariant law, the first two moments
at all times, the stationary covariance and the whole spectrum.

A note on the moment dynamics. The mean of ``eta_t(k)`` solves
``m' = N/K - m``, hence ``m(t) = m(0) e^{-t} + (N/K)(1 - e^{-t})``; the
``(1 - e^{-t})`` factor is easy to drop and the printed literature version
omits it. The two-point moment ``S(t) = E[eta_t(k) eta_t(l)]`` solves

    S' = -r S + (N - 1)/K (m_k + m_l),     r = 2(N - 1 + p)/(N - 1),

and :func:`covariance_dynamics` is its exact solution. The commonly quoted
four-term expression is kept as :func:`covariance_as_printed` for
comparison; it does not reproduce the initial covariance at ``t = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .birth_death import BirthDeathSpec
from .chain import FiniteDistribution, RateMatrix
from .engine import STATE_CAP, FvModel, check_configuration, configurations
from .errors import StateSpaceTooLarge


@dataclass(frozen=True)
class CompleteGraphParams:
    """``K`` sites, killing rate ``p`` and ``N`` particles.

    ``p`` may be a :class:`fractions.Fraction` to enable exact arithmetic.
    """

    K: int
    p: float
    N: int

    def __post_init__(self):
        if self.K < 2 or self.N < 2:
            raise ValueError("need K >= 2 and N >= 2")
        if not self.p > 0:
            raise ValueError("the killing rate p must be positive")

    def rate_matrix(self) -> RateMatrix:
        k = self.K
        rates = np.full((k, k), 1.0 / k)
        return RateMatrix(rates, np.full(k, float(self.p)))

    def fv_model(self) -> FvModel:
        return FvModel(self.rate_matrix(), self.N)

    @property
    def n_states(self):
        """``card(E) = C(N + K - 1, K - 1)``."""
        return math.comb(self.N + self.K - 1, self.K - 1)


def _is_one_over_k(params):
    p = params.p
    if isinstance(p, Fraction):
        return p == Fraction(1, params.K)
    return abs(p * params.K - 1.0) <= 1e-12


# invariant law -------------------------------------------------------------

def log_invariant_weight(params: CompleteGraphParams, eta) -> float:
    """``sum_i sum_{j < eta(i)} log((N - 1 + K p j) / (j + 1))``."""
    eta = check_configuration(eta, params.N, params.K)
    big, kp = params.N, params.K * float(params.p)
    return math.fsum(
        math.log(big - 1 + kp * j) - math.log(j + 1) for x in eta for j in range(x)
    )


def invariant_weight(params: CompleteGraphParams, eta) -> float:
    """Unnormalized invariant weight of a configuration."""
    return math.exp(log_invariant_weight(params, eta))


def invariant_weight_exact(params: CompleteGraphParams, eta) -> Fraction:
    """The same weight in exact rational arithmetic (``p`` is read exactly)."""
    eta = check_configuration(eta, params.N, params.K)
    kp = params.K * Fraction(params.p)
    w = Fraction(1)
    for x in eta:
        for j in range(x):
            w *= (params.N - 1 + kp * j) / Fraction(j + 1)
    return w


def invariant_law(params: CompleteGraphParams, cap: int = STATE_CAP, exact: bool = False) -> FiniteDistribution:
    """Normalized reversible invariant law over ``configurations(N, K)``.

    Weights are formed in log space and normalized with a compensated sum.
    ``exact=True`` normalizes in rational arithmetic instead and only rounds
    at the end.
    """
    if params.n_states > cap:
        raise StateSpaceTooLarge(f"card(E) = {params.n_states} exceeds the cap {cap}")
    states = configurations(params.N, params.K)
    if exact:
        weights = [invariant_weight_exact(params, eta) for eta in states]
        z = sum(weights)
        return FiniteDistribution.from_weights([float(w / z) for w in weights], states)
    logw = np.array([log_invariant_weight(params, eta) for eta in states])
    w = np.exp(logw - logw.max())
    return FiniteDistribution(w / math.fsum(w), states)


def binomial_normalizer(K: int, N: int) -> int:
    """``C((K + 1) N - K - 1, K N - K - 1)``, the normalizer when ``p = 1/K``."""
    return math.comb((K + 1) * N - K - 1, K * N - K - 1)


def binomial_weight(N: int, eta) -> int:
    """``prod_i C(N - 2 + eta(i), N - 2)``."""
    return math.prod(math.comb(N - 2 + x, N - 2) for x in eta)


def invariant_law_binomial(params: CompleteGraphParams):
    """Invariant law for ``p = 1/K`` in binomial form.

    Returns
    -------
    law : FiniteDistribution
    normalizer : int
    """
    if not _is_one_over_k(params):
        raise ValueError("the binomial form needs p = 1/K")
    states = configurations(params.N, params.K)
    z = binomial_normalizer(params.K, params.N)
    weights = [Fraction(binomial_weight(params.N, eta), z) for eta in states]
    return FiniteDistribution.from_weights([float(w) for w in weights], states), z


def marginal_law(params: CompleteGraphParams, site: int = 1) -> FiniteDistribution:
    """Law of ``eta(site)`` on ``{0..N}`` under the invariant law, ``p = 1/K``.

    All sites share the same marginal; ``site`` is only validated.
    """
    if not _is_one_over_k(params):
        raise ValueError("the marginal formula needs p = 1/K")
    if not 1 <= site <= params.K:
        raise ValueError("site out of range")
    big, k = params.N, params.K
    z = binomial_normalizer(k, big)
    numer = [
        math.comb(big - 2 + x, big - 2) * math.comb(k * big - k - x, (k - 1) * big - k)
        for x in range(big + 1)
    ]
    return FiniteDistribution([float(Fraction(v, z)) for v in numer])


# moments over time ---------------------------------------------------------

def mean_dynamics(params: CompleteGraphParams, mean0: float, t: float) -> float:
    """``E[eta_t(k)] = E[eta_0(k)] e^{-t} + (N/K)(1 - e^{-t})``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    decay = math.exp(-t)
    return mean0 * decay + params.N / params.K * (1.0 - decay)


def mean_dynamics_as_printed(params: CompleteGraphParams, mean0: float, t: float) -> float:
    """The literature version ``E[eta_0(k)] e^{-t} + N/K``; wrong at ``t = 0``."""
    return mean0 * math.exp(-t) + params.N / params.K


def _pair_rate(params):
    return 2.0 * (params.N - 1 + params.p) / (params.N - 1)


def _pair_rate_unsimplified(params):
    k = params.K
    return 2.0 * k * (params.N - 1 + params.p) / (k * (params.N - 1))


def _check_moments(mean_k, mean_l, second):
    if mean_k < 0 or mean_l < 0 or second < 0:
        raise ValueError("occupation moments are non-negative")


def _covariance(params, mean_k, mean_l, second, t, rate):
    big, k, p = params.N, params.K, float(params.p)
    s0 = mean_k + mean_l
    s_inf = big * (big - 1) ** 2 / (k * k * (big - 1 + p))
    c = (big - 1) ** 2 * (s0 - 2.0 * big / k) / (k * (big - 1 + 2.0 * p))
    e1 = math.exp(-t)
    moment = (second - c - s_inf) * math.exp(-rate * t) + c * e1 + s_inf
    m_k = mean_k * e1 + big / k * (1.0 - e1)
    m_l = mean_l * e1 + big / k * (1.0 - e1)
    return moment - m_k * m_l


def covariance_dynamics(params: CompleteGraphParams, mean_k, mean_l, second, t, k=1, l=2) -> float:
    """``cov(eta_t(k), eta_t(l))`` for two distinct sites.

    Parameters
    ----------
    params : CompleteGraphParams
    mean_k, mean_l : float
        ``E[eta_0(k)]`` and ``E[eta_0(l)]``.
    second : float
        ``E[eta_0(k) eta_0(l)]``.
    t : float
    k, l : int
        Site labels, only checked for being distinct.
    """
    if k == l:
        raise ValueError("the formula covers distinct sites only")
    if t < 0:
        raise ValueError("time must be non-negative")
    _check_moments(mean_k, mean_l, second)
    return _covariance(params, mean_k, mean_l, second, t, _pair_rate(params))


def covariance_reference(params: CompleteGraphParams, mean_k, mean_l, second, t) -> float:
    """Same solution with the pair rate kept as ``2K(N-1+p)/(K(N-1))``."""
    return _covariance(params, mean_k, mean_l, second, t, _pair_rate_unsimplified(params))


def covariance_as_printed(params: CompleteGraphParams, mean_k, mean_l, second, t) -> float:
    """The four-term literature expression, evaluated verbatim."""
    big, k, p = params.N, params.K, float(params.p)
    return (
        second * math.exp(-_pair_rate_unsimplified(params) * t)
        + (-big + 1 + 2 * p * big) / (k * (big - 1 + 2 * p)) * (mean_k + mean_l) * math.exp(-t)
        - mean_k * mean_l * math.exp(-2 * t)
        + (-big * big * (p + 1) + big) / (k * k * (big - 1 + p))
    )


def limiting_covariance(params: CompleteGraphParams) -> float:
    """``(N - N^2 (p + 1)) / (K^2 (N - 1 + p))``, the ``t -> inf`` limit."""
    big, k, p = params.N, params.K, float(params.p)
    return (-big * big * (p + 1) + big) / (k * k * (big - 1 + p))


class StationaryCovariance(NamedTuple):
    cov: float
    """``cov(eta(i), eta(j))`` for ``i != j``."""
    var: float
    """``Var(eta(i))``."""
    normalized_cov: float
    """``cov(eta(i)/N, eta(j)/N)``."""
    asymptote: float
    """``(p + 1)/(K^2 N)``, the large-N equivalent of ``|normalized_cov|``."""


def stationary_covariance(params: CompleteGraphParams, exact=False) -> StationaryCovariance:
    """Variance and covariance of occupations under the invariant law.

    Evaluated in rational arithmetic; ``exact=True`` returns the
    :class:`~fractions.Fraction` values instead of floats.
    """
    big, k, p = params.N, params.K, Fraction(params.p)
    var = big * (k - 1) * (big * p + big - 1) / (k * k * (big - 1 + p))
    cov = -var / (k - 1)
    out = (cov, var, cov / (big * big), (p + 1) / (k * k * big))
    if not exact:
        out = tuple(float(x) for x in out)
    return StationaryCovariance(*out)


# propagation of chaos ------------------------------------------------------

def chaos_bound(params: CompleteGraphParams) -> float:
    """``sqrt(K (p + 1) / N)``, bounding ``E[sum_k |eta(k)/N - 1/K|]``."""
    return math.sqrt(params.K * (float(params.p) + 1) / params.N)


def expected_distance_to_uniform(params: CompleteGraphParams, cap: int = STATE_CAP) -> float:
    """``E[sum_k |eta(k)/N - 1/K|]`` under the invariant law, by enumeration."""
    law = invariant_law(params, cap)
    big, k = params.N, params.K
    values = [sum(abs(x / big - 1.0 / k) for x in eta) for eta in law.support]
    return law.expect(values)


# spectrum -------------------------------------------------------------------

def lambda_l(params: CompleteGraphParams, l: int) -> float:
    """``l + l (l - 1) p / (N - 1)``."""
    return l + l * (l - 1) * float(params.p) / (params.N - 1)


def spectrum_candidates(params: CompleteGraphParams, decimals: int = 10) -> np.ndarray:
    """Sorted distinct values of ``sum_{i=1}^K lambda_{l_i}``, ``l_i in 0..N``."""
    single = np.array([lambda_l(params, l) for l in range(params.N + 1)])
    sums = np.zeros(1)
    for _ in range(params.K):
        sums = np.unique(np.round((sums[:, None] + single[None, :]).ravel(), decimals))
    return sums


def spectrum_inclusion_defect(params: CompleteGraphParams, eigenvalues) -> float:
    """Largest distance from an eigenvalue of ``-L`` to the candidate set."""
    cand = spectrum_candidates(params)
    eig = np.asarray(eigenvalues, dtype=float)
    pos = np.clip(np.searchsorted(cand, eig), 1, len(cand) - 1)
    dist = np.minimum(np.abs(eig - cand[pos - 1]), np.abs(eig - cand[pos]))
    return float(dist.max())


def marginal_generator(params: CompleteGraphParams) -> BirthDeathSpec:
    """Birth-death chain followed by one occupation number ``eta_t(k)``."""
    big, k, p = params.N, params.K, float(params.p)
    x = np.arange(big + 1, dtype=float)
    birth = (big - x) * (1.0 / k + p * x / (big - 1))
    death = x * ((k - 1.0) / k + p * (big - x) / (big - 1))
    return BirthDeathSpec(birth, death)
