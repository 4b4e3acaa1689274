"""Birth-death chains on ``{0..N}``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import FiniteDistribution


@dataclass(frozen=True)
class BirthDeathSpec:
    """Birth rates ``b_n`` and death rates ``d_n`` on ``{0..N}``.

    ``b_N = d_0 = 0`` and every interior rate is positive, so the chain is
    irreducible.
    """

    birth: np.ndarray
    death: np.ndarray

    def __post_init__(self):
        b = np.array(self.birth, dtype=float)
        d = np.array(self.death, dtype=float)
        if b.shape != d.shape or b.ndim != 1 or len(b) < 1:
            raise ValueError("birth and death must be vectors of equal length")
        if b[-1] != 0 or d[0] != 0:
            raise ValueError("need b_N = 0 and d_0 = 0")
        if np.any(b < 0) or np.any(d < 0):
            raise ValueError("rates must be non-negative")
        if np.any(b[:-1] <= 0) or np.any(d[1:] <= 0):
            raise ValueError("interior rates must be positive (irreducibility)")
        b.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "birth", b)
        object.__setattr__(self, "death", d)

    @property
    def n_max(self):
        return len(self.birth) - 1

    def generator(self):
        """Dense tridiagonal generator acting on ``{0..N}``."""
        b, d = self.birth, self.death
        size = len(b)
        g = np.zeros((size, size))
        idx = np.arange(size)
        g[idx[:-1], idx[1:]] = b[:-1]
        g[idx[1:], idx[:-1]] = d[1:]
        g[idx, idx] = -(b + d)
        return g

    def log_stationary_weights(self):
        """Unnormalized ``log pi(n) = sum_{k<=n} log(b_{k-1}/d_k)``."""
        steps = np.log(self.birth[:-1]) - np.log(self.death[1:])
        return np.concatenate([[0.0], np.cumsum(steps)])

    def stationary(self) -> FiniteDistribution:
        """Reversible invariant law, normalized by direct summation."""
        logw = self.log_stationary_weights()
        w = np.exp(logw - logw.max())
        return FiniteDistribution(w / math.fsum(w))

    def symmetric_tridiagonal(self):
        """Diagonal and off-diagonal of the symmetrization of ``-G``.

        ``D^{1/2} (-G) D^{-1/2}`` with ``D = diag(pi)`` has diagonal
        ``b_n + d_n`` and off-diagonal ``-sqrt(b_n d_{n+1})``; it never needs
        ``pi`` itself, so it stays well defined when ``pi`` underflows.
        """
        diag = self.birth + self.death
        off = -np.sqrt(self.birth[:-1] * self.death[1:])
        return diag, off
