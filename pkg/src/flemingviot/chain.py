"""Finite continuous-time Markov chains with one absorbing state.

State ``0`` is the absorbing state and the surviving states are labelled
``1..K``. The full generator over ``F = {0, 1, ..., K}`` is indexed the same
way, so row ``i`` of :attr:`RateMatrix.full` belongs to site ``i``.

Everything here is deliberately small and dense: these routines are the
exact oracles that the closed-form results of the model packs are checked
against.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError, FullyAbsorbedError, ReducibleChainError

#: Probability vectors must sum to one within this tolerance.
NORMALIZATION_TOL = 1e-12
#: Semigroup kernels: entries in [0, 1] and rows summing to one within this.
KERNEL_TOL = 1e-10
#: Maximal residual ``max|nu L|`` (relative to ``max|L|``) of a stationary solve.
STATIONARY_RESIDUAL_TOL = 1e-11
#: Stopping residual for the QSD power iteration.
QSD_RESIDUAL_TOL = 1e-10
QSD_MAX_ITER = 200_000


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class FiniteDistribution:
    """A probability vector over a finite indexed set.

    Parameters
    ----------
    weights : array_like
        Non-negative weights summing to one.
    support : sequence, optional
        Labels of the states; defaults to ``0..len(weights)-1``.
    """

    weights: np.ndarray
    support: tuple = field(default=())

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1:
            raise ValueError("weights must be one-dimensional")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        support = tuple(self.support) if len(self.support) else tuple(range(len(w)))
        if len(support) != len(w):
            raise ValueError("support and weights differ in length")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "support", support)

    @classmethod
    def from_weights(cls, weights, support=()):
        """Normalize non-negative ``weights`` into a distribution."""
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum(), support)

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, label):
        return self.weights[self.support.index(label)]

    def expect(self, values):
        """Expectation of a function given by its values on the support."""
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class RateMatrix:
    """Jump rates of a chain on ``F* = {1..K}`` killed into state 0.

    Attributes
    ----------
    rates : ndarray, shape (K, K)
        Off-diagonal jump rates between surviving states (zero diagonal).
    absorption : ndarray, shape (K,)
        Killing rates ``p0(i) = Q[i, 0]``.
    """

    rates: np.ndarray
    absorption: np.ndarray

    def __post_init__(self):
        rates = np.array(self.rates, dtype=float)
        absorption = np.array(self.absorption, dtype=float).reshape(-1)
        if rates.ndim != 2 or rates.shape[0] != rates.shape[1]:
            raise ValueError("rates must be a square table")
        if rates.shape[0] != absorption.shape[0]:
            raise ValueError("absorption vector does not match the rate table")
        np.fill_diagonal(rates, 0.0)
        if np.any(rates < 0) or np.any(absorption < 0):
            raise ValueError("rates must be non-negative")
        object.__setattr__(self, "rates", _frozen(rates))
        object.__setattr__(self, "absorption", _frozen(absorption))

    @property
    def size(self):
        """Number of surviving states K."""
        return self.rates.shape[0]

    @property
    def sub_generator(self):
        """The generator restricted to ``F*`` (a sub-Markovian matrix)."""
        m = self.rates.copy()
        m[np.diag_indices_from(m)] = -(self.rates.sum(axis=1) + self.absorption)
        return m

    @property
    def full(self):
        """Conservative generator on ``F``; row and column 0 are the absorbing state."""
        k = self.size
        q = np.zeros((k + 1, k + 1))
        q[1:, 1:] = self.sub_generator
        q[1:, 0] = self.absorption
        return q


@dataclass(frozen=True)
class SemigroupSnapshot:
    """Transition kernel ``P_t`` of a chain at time ``t``."""

    t: float
    kernel: np.ndarray

    def __post_init__(self):
        kernel = _frozen(self.kernel)
        if np.any(kernel < -KERNEL_TOL) or np.any(kernel > 1 + KERNEL_TOL):
            raise ValueError("kernel entries outside [0, 1]")
        if np.max(np.abs(kernel.sum(axis=1) - 1.0)) > KERNEL_TOL:
            raise ValueError("kernel rows do not sum to one")
        object.__setattr__(self, "kernel", kernel)


def build_rate_matrix(off_diag, absorption) -> RateMatrix:
    """Build a :class:`RateMatrix` from a jump-rate table and killing rates.

    The diagonal of ``off_diag`` is ignored. Negative rates raise
    ``ValueError``.

    Examples
    --------
    >>> q = build_rate_matrix([[0, 1], [2, 0]], [0, 3])
    >>> q.full[2]
    array([ 3.,  2., -5.])
    """
    return RateMatrix(off_diag, absorption)


def semigroup(q: RateMatrix, t: float) -> SemigroupSnapshot:
    """Transition kernel ``exp(t Q)`` on the full space ``F``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    kernel = scipy.linalg.expm(t * q.full)
    # expm leaves round-off of order 1e-16 around exact zeros
    np.clip(kernel, 0.0, 1.0, out=kernel)
    return SemigroupSnapshot(float(t), kernel)


def conditioned_law(q: RateMatrix, mu, t: float) -> FiniteDistribution:
    """Law at time ``t`` of the chain started from ``mu``, conditioned on survival.

    Parameters
    ----------
    q : RateMatrix
    mu : FiniteDistribution or array_like
        Initial law on ``F* = {1..K}`` (length K).
    t : float
        Time horizon.
    """
    weights = mu.weights if isinstance(mu, FiniteDistribution) else np.asarray(mu, float)
    if weights.shape != (q.size,):
        raise ValueError("initial law must live on the surviving states")
    start = np.concatenate([[0.0], weights])
    law = start @ semigroup(q, t).kernel
    survival = law[1:].sum()
    if survival <= 0:
        raise FullyAbsorbedError("no survival mass left at time %g" % t)
    return FiniteDistribution(law[1:] / survival, tuple(range(1, q.size + 1)))


def stationary_distribution(generator, support=(), tol=STATIONARY_RESIDUAL_TOL) -> FiniteDistribution:
    """Unique invariant law of an irreducible conservative generator.

    One balance equation is replaced by the normalization constraint and the
    resulting square system is solved directly.
    """
    gen = np.asarray(generator, dtype=float)
    n = gen.shape[0]
    if n == 1:
        return FiniteDistribution(np.ones(1), support)
    n_comp, _ = connected_components(gen != 0, directed=True, connection="strong")
    if n_comp != 1:
        raise ReducibleChainError(f"generator has {n_comp} communicating classes")
    a = gen.T.copy()
    a[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    nu = np.linalg.solve(a, rhs)
    nu = np.clip(nu, 0.0, None)
    nu /= nu.sum()
    scale = max(1.0, np.abs(gen).max())
    residual = np.abs(nu @ gen).max() / scale
    if residual > tol:
        raise ReducibleChainError(f"stationary solve residual {residual:.3e} exceeds {tol:.1e}")
    return FiniteDistribution(nu, support)


def qsd_principal(q: RateMatrix, tol=QSD_RESIDUAL_TOL, max_iter=QSD_MAX_ITER):
    """Quasi-stationary distribution and its decay rate by power iteration.

    Iterates ``nu <- nu (M + cI)`` from the uniform vector, where ``M`` is the
    sub-generator and ``c = max|diag M| + 1`` makes the shifted matrix
    non-negative.

    Returns
    -------
    nu : FiniteDistribution
        Left Perron vector of ``M`` on ``{1..K}``.
    decay : float
        The eigenvalue ``lambda_+ <= 0`` of ``M`` attached to ``nu``.
    """
    m = q.sub_generator
    k = q.size
    n_comp, _ = connected_components(q.rates > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise ReducibleChainError("sub-generator is not irreducible")
    shift = np.abs(np.diag(m)).max() + 1.0
    shifted = m + shift * np.eye(k)
    nu = np.full(k, 1.0 / k)
    residual = np.inf
    for _ in range(max_iter):
        nu = nu @ shifted
        nu /= nu.sum()
        nu_m = nu @ m
        decay = nu_m.sum()
        residual = np.abs(nu_m - decay * nu).max()
        if residual <= tol:
            return FiniteDistribution(nu, tuple(range(1, k + 1))), float(decay)
    raise ConvergenceError("QSD power iteration did not converge", residual)


def total_variation(mu, nu, unnormalized=False):
    """Total variation distance between two laws on the same support.

    ``unnormalized=True`` returns the plain L1 sum ``sum |mu - nu|``, the
    convention under which several of the complete-graph bounds are stated;
    the default is the usual half L1 distance with values in [0, 1].
    """
    a = mu.weights if isinstance(mu, FiniteDistribution) else np.asarray(mu, float)
    b = nu.weights if isinstance(nu, FiniteDistribution) else np.asarray(nu, float)
    if a.shape != b.shape:
        raise ValueError("laws live on different supports")
    l1 = float(np.abs(a - b).sum())
    return l1 if unnormalized else 0.5 * l1


tv_distance = total_variation


def detailed_balance_defect(generator, law) -> float:
    """``max |nu(x) L(x,y) - nu(y) L(y,x)|`` over off-diagonal pairs."""
    gen = np.asarray(generator, dtype=float)
    w = law.weights if isinstance(law, FiniteDistribution) else np.asarray(law, float)
    flux = w[:, None] * gen
    return float(np.abs(flux - flux.T).max())


def is_generator(matrix, tol=1e-9) -> bool:
    """Whether ``matrix`` has non-negative off-diagonals and zero row sums."""
    m = np.asarray(matrix, dtype=float)
    off = m - np.diag(np.diag(m))
    return bool(np.all(off >= 0) and np.abs(m.sum(axis=1)).max() <= tol * max(1.0, np.abs(m).max()))


def point_mass(k: int, site: int) -> FiniteDistribution:
    """Dirac law at ``site`` (1-based) on ``{1..k}``."""
    if not 1 <= site <= k:
        raise ValueError(f"site {site} outside 1..{k}")
    w = np.zeros(k)
    w[site - 1] = 1.0
    return FiniteDistribution(w, tuple(range(1, k + 1)))


__all__: Sequence[str] = [
    "FiniteDistribution",
    "RateMatrix",
    "SemigroupSnapshot",
    "build_rate_matrix",
    "semigroup",
    "conditioned_law",
    "stationary_distribution",
    "qsd_principal",
    "total_variation",
    "detailed_balance_defect",
    "is_generator",
    "point_mass",
]
