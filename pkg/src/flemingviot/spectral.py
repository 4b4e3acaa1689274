"""Eigenvalues of small generators.

Two independent routes are provided. :func:`dense_spectrum` symmetrizes a
reversible generator with ``sqrt(pi)`` and hands it to LAPACK.
:func:`tridiagonal_spectrum` works on birth-death chains with a
self-contained implicit QL iteration, and :func:`tridiagonal_eigenvalue`
isolates a single eigenvalue by Sturm-sequence bisection, which is what the
two-point gap computations use at large N.

All reported eigenvalues are those of the *negated* generator, so they are
non-negative for a conservative generator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .birth_death import BirthDeathSpec
from .chain import FiniteDistribution, detailed_balance_defect, stationary_distribution
from .errors import ConvergenceError, NonReversibleError, ReducibleChainError, StateSpaceTooLarge

DENSE_CAP = 4000
#: Eigenvalues below this are treated as the zero eigenvalue.
ZERO_TOL = 1e-8
DETAILED_BALANCE_TOL = 1e-10


@dataclass(frozen=True)
class SpectralReport:
    """Sorted eigenvalues of ``-L`` and the spectral gap.

    Attributes
    ----------
    eigenvalues : ndarray
        Real parts, ascending.
    gap : float or None
        Smallest eigenvalue above :data:`ZERO_TOL`; ``None`` for a 1x1 chain.
    method : str
        ``"dense"`` or ``"tridiagonal"``.
    max_imag : float
        Largest imaginary part seen (0 on the symmetric paths).
    """

    eigenvalues: np.ndarray
    gap: Optional[float]
    method: str
    max_imag: float = 0.0

    def to_dict(self):
        return {
            "method": self.method,
            "gap": self.gap,
            "max_imag": self.max_imag,
            "eigenvalues": [float(x) for x in self.eigenvalues],
        }


def _gap(eigs):
    positive = eigs[eigs > ZERO_TOL]
    return float(positive.min()) if positive.size else None


def dense_spectrum(generator, pi=None, cap=DENSE_CAP) -> SpectralReport:
    """Full spectrum of ``-L`` for a dense generator.

    If ``pi`` is not given the stationary law is computed; when detailed
    balance holds the matrix is symmetrized by ``sqrt(pi)`` so the
    eigenvalues come out real by construction. Otherwise a general
    eigen-decomposition is used and the largest imaginary part is recorded.
    """
    gen = np.asarray(generator, dtype=float)
    n = gen.shape[0]
    if n > cap:
        raise StateSpaceTooLarge(f"{n} states exceed the dense eigensolve cap {cap}")
    if n == 1:
        eigs = np.array([-gen[0, 0]])
        return SpectralReport(eigs, _gap(eigs), "dense")
    scale = max(1.0, np.abs(gen).max())
    if pi is None:
        try:
            pi = stationary_distribution(gen)
        except ReducibleChainError:
            pi = None
    if pi is not None:
        w = pi.weights if isinstance(pi, FiniteDistribution) else np.asarray(pi, float)
        if w.min() > 1e-300 and detailed_balance_defect(gen, w) <= DETAILED_BALANCE_TOL * scale:
            root = np.sqrt(w)
            sym = -(root[:, None] * gen / root[None, :])
            sym = 0.5 * (sym + sym.T)
            eigs = np.linalg.eigvalsh(sym)
            return SpectralReport(eigs, _gap(eigs), "dense")
    raw = np.linalg.eigvals(-gen)
    order = np.argsort(raw.real)
    eigs = raw.real[order]
    return SpectralReport(eigs, _gap(eigs), "dense", float(np.abs(raw.imag).max()))


def implicit_ql(diag, off, vectors=False, max_sweeps=60):
    """Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL.

    Parameters
    ----------
    diag : array_like, shape (n,)
    off : array_like, shape (n-1,)
        ``off[i]`` couples rows ``i`` and ``i+1``.
    vectors : bool
        Also accumulate the orthonormal eigenvectors (as columns).

    Returns
    -------
    eigenvalues : ndarray
        Ascending.
    eigenvectors : ndarray, only when ``vectors`` is true
    """
    d = [float(x) for x in diag]
    n = len(d)
    e = [float(x) for x in off] + [0.0]
    z = np.eye(n) if vectors else None
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) + dd == dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                raise ConvergenceError("implicit QL did not converge", abs(e[l]))
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if z is not None:
                    zi = z[:, i].copy()
                    z[:, i] = c * zi - s * z[:, i + 1]
                    z[:, i + 1] = s * zi + c * z[:, i + 1]
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    vals = np.array(d)
    order = np.argsort(vals)
    if z is None:
        return vals[order]
    return vals[order], z[:, order]


def sturm_count(diag, off_sq, x):
    """Number of eigenvalues of the tridiagonal matrix strictly below ``x``."""
    count = 0
    q = 1.0
    for i, di in enumerate(diag):
        q = di - x - (off_sq[i - 1] / q if i else 0.0)
        if q == 0.0:
            q = -1e-300
        if q < 0:
            count += 1
    return count


def tridiagonal_eigenvalue(diag, off, k, tol=1e-13):
    """The ``k``-th smallest (0-based) eigenvalue by Sturm bisection."""
    diag = [float(x) for x in diag]
    off = [float(x) for x in off]
    n = len(diag)
    if not 0 <= k < n:
        raise IndexError("eigenvalue index out of range")
    radius = [abs(off[i - 1]) if i else 0.0 for i in range(n)]
    for i in range(n - 1):
        radius[i] += abs(off[i])
    lo = min(d - r for d, r in zip(diag, radius))
    hi = max(d + r for d, r in zip(diag, radius))
    off_sq = [x * x for x in off]
    width = tol * max(1.0, abs(lo), abs(hi))
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if sturm_count(diag, off_sq, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _check_reversible(spec: BirthDeathSpec, pi):
    w = pi.weights if isinstance(pi, FiniteDistribution) else np.asarray(pi, float)
    if w.shape != spec.birth.shape:
        raise ValueError("pi does not match the chain length")
    left = w[:-1] * spec.birth[:-1]
    right = w[1:] * spec.death[1:]
    scale = np.maximum(np.abs(left), np.abs(right))
    bad = np.abs(left - right) > DETAILED_BALANCE_TOL * np.where(scale > 0, scale, 1.0)
    if np.any(bad):
        raise NonReversibleError("pi is not in detailed balance with the birth-death rates")


def tridiagonal_spectrum(spec: BirthDeathSpec, pi) -> SpectralReport:
    """Spectrum of ``-G`` for a birth-death chain, via implicit QL.

    ``pi`` must satisfy detailed balance with the rates; this is the
    contract that makes the symmetrized form similar to ``-G``.
    """
    _check_reversible(spec, pi)
    diag, off = spec.symmetric_tridiagonal()
    eigs = implicit_ql(diag, off)
    return SpectralReport(eigs, _gap(eigs), "tridiagonal")


def birth_death_gap(spec: BirthDeathSpec, tol=1e-13) -> float:
    """Smallest positive eigenvalue of ``-G`` by bisection on the symmetrized form."""
    diag, off = spec.symmetric_tridiagonal()
    if len(diag) == 1:
        raise ValueError("a one-state chain has no gap")
    return tridiagonal_eigenvalue(diag, off, 1, tol=tol)
