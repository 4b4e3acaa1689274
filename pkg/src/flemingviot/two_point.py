"""The Fleming-Viot process over a killed chain on two sites.

The chain jumps ``1 -> 2`` at rate ``a`` and ``2 -> 1`` at rate ``b`` and is
killed at rate ``p01`` on site 1 and ``p02`` on site 2. With two sites the
configuration is determined by ``n = eta(1)``, so the particle system is a
birth-death chain on ``{0..N}`` with quadratic rates

    b_n = (N - n)(b + p02 n/(N - 1)),     d_n = n(a + p01 (N - n)/(N - 1)).

Its invariant law is explicit, its spectral gap ``lambda_N`` is not. This
module computes ``lambda_N`` exactly (tridiagonal eigensolve) and compares it
with three lower bounds: the contraction rate ``rho`` of the generic
coupling, Chen's variational rate ``lambda_u`` and a discrete Hardy bound.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from .birth_death import BirthDeathSpec
from .chain import FiniteDistribution, RateMatrix
from .coupling import two_point_coupling_table
from .engine import FvModel
from .errors import StateSpaceTooLarge
from .spectral import birth_death_gap

GAP_CAP = 5000
GAP_CURVE_HEADER = ("N", "lambda_cond", "rho", "lambda_N", "hardy_lower", "lambda_u_best")


@dataclass(frozen=True)
class TwoPointParams:
    a: float
    b: float
    p01: float
    p02: float
    N: int

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("jump rates a and b must be positive")
        if self.p01 < 0 or self.p02 < 0 or self.p01 + self.p02 <= 0:
            raise ValueError("killing rates must be non-negative and not both zero")
        if self.N < 2:
            raise ValueError("need N >= 2")

    def rate_matrix(self) -> RateMatrix:
        return RateMatrix([[0.0, self.a], [self.b, 0.0]], [self.p01, self.p02])

    def fv_model(self) -> FvModel:
        return FvModel(self.rate_matrix(), self.N)

    def swapped(self) -> "TwoPointParams":
        """Relabel the sites ``1 <-> 2``."""
        if self.p01 == self.p02 == 0:
            return no_killing(self.b, self.a, self.N)
        return TwoPointParams(self.b, self.a, self.p02, self.p01, self.N)

    def with_n(self, n: int) -> "TwoPointParams":
        if self.p01 == self.p02 == 0:
            return no_killing(self.a, self.b, n)
        return replace(self, N=n)

    @property
    def rho(self) -> float:
        """``a + b - (sup p0 - inf p0)``."""
        return self.a + self.b - abs(self.p01 - self.p02)


def no_killing(a: float, b: float, n: int) -> TwoPointParams:
    """Parameters with ``p0 = (0, 0)``: ``N`` independent two-state particles.

    Outside the model (which needs ``p01 + p02 > 0``) but every formula of
    this module still makes sense there, which makes it a handy oracle.
    """
    if not (a > 0 and b > 0) or n < 2:
        raise ValueError("need a, b > 0 and N >= 2")
    params = object.__new__(TwoPointParams)
    for name, value in zip(("a", "b", "p01", "p02", "N"), (a, b, 0.0, 0.0, n)):
        object.__setattr__(params, name, value)
    return params


# killed chain ---------------------------------------------------------------

class KilledEigensystem(NamedTuple):
    lam_plus: float
    lam_minus: float
    v_plus: np.ndarray
    v_minus: np.ndarray
    nu: np.ndarray


def killed_eigensystem(params: TwoPointParams) -> KilledEigensystem:
    """Eigenvalues and left eigenvectors of the sub-generator ``M``.

    ``nu`` is the quasi-stationary distribution, the normalized left
    eigenvector for ``lambda_+``.
    """
    a, b, p1, p2 = params.a, params.b, params.p01, params.p02
    asym = a - b + p1 - p2
    root = math.sqrt(asym * asym + 4 * a * b)
    trace = a + b + p1 + p2
    v_plus = np.array([root - asym, 2 * a])
    v_minus = np.array([-root - asym, 2 * a])
    return KilledEigensystem(
        (-trace + root) / 2, (-trace - root) / 2, v_plus, v_minus, v_plus / v_plus.sum()
    )


def eigenvectors_as_printed(params: TwoPointParams):
    """``(a, -A + r)`` and ``(a, -A - r)``, a commonly quoted form that is not a left eigenvector."""
    a, b = params.a, params.b
    asym = a - b + params.p01 - params.p02
    root = math.sqrt(asym * asym + 4 * a * b)
    return np.array([a, -asym + root]), np.array([a, -asym - root])


def conditioned_gap_formula(params: TwoPointParams) -> float:
    """``sqrt((a+b)^2 + 2(a-b)(p01-p02) + (p01-p02)^2)``."""
    a, b, dp = params.a, params.b, params.p01 - params.p02
    return math.sqrt((a + b) ** 2 + 2 * (a - b) * dp + dp * dp)


def conditioned_convergence_rate(params: TwoPointParams):
    """Return ``(lambda_+ - lambda_-, rho)``.

    The first is the exact rate at which the conditioned law approaches the
    QSD; ``rho`` is what the generic coupling bound gives. The former is
    strictly larger whenever ``p0`` is not constant.
    """
    eig = killed_eigensystem(params)
    rate = eig.lam_plus - eig.lam_minus
    rho = params.rho
    # the margin is of order |p01 - p02|, so only a clear violation counts
    if params.p01 != params.p02 and rate < rho - 1e-12 * max(1.0, abs(rho)):
        raise ArithmeticError("expected lambda_+ - lambda_- > rho for non-constant p0")
    return rate, rho


# the birth-death reduction -------------------------------------------------

def birth_death_reduction(params: TwoPointParams) -> BirthDeathSpec:
    """Rates ``(b_n, d_n)`` of ``n = eta(1)``."""
    big = params.N
    n = np.arange(big + 1, dtype=float)
    birth = (big - n) * (params.b + params.p02 * n / (big - 1))
    death = n * (params.a + params.p01 * (big - n) / (big - 1))
    return BirthDeathSpec(birth, death)


def log_pi_weights(params: TwoPointParams) -> np.ndarray:
    """Unnormalized ``log pi(n)`` from the binomial product form."""
    big, a, b, p1, p2 = params.N, params.a, params.b, params.p01, params.p02
    k = np.arange(1, big + 1, dtype=float)
    steps = np.log(b * (big - 1) + (k - 1) * p2) - np.log(a * (big - 1) + (big - k) * p1)
    logc = np.array([math.lgamma(big + 1) - math.lgamma(n + 1) - math.lgamma(big - n + 1) for n in range(big + 1)])
    return logc + np.concatenate([[0.0], np.cumsum(steps)])


def invariant_pi(params: TwoPointParams) -> FiniteDistribution:
    """Invariant law of ``eta(1)``, normalized by summation."""
    logw = log_pi_weights(params)
    w = np.exp(logw - logw.max())
    return FiniteDistribution(w / math.fsum(w))


def pi_normalizer(params: TwoPointParams) -> float:
    """``u_0^{-1} = sum_n C(N, n) prod_{k<=n} (...)``."""
    return math.fsum(np.exp(log_pi_weights(params)))


def pi_normalizer_as_printed(params: TwoPointParams) -> float:
    """``1 + prod_{k=1}^N (b(N-1) + k p02)/(a(N-1) + k p01)``, a shortened form that omits the binomial sum."""
    big = params.N
    k = np.arange(1, big + 1, dtype=float)
    return 1.0 + float(np.prod((params.b * (big - 1) + k * params.p02) / (params.a * (big - 1) + k * params.p01)))


def pi_ratio(params: TwoPointParams) -> np.ndarray:
    """``pi(i+1)/pi(i) = b_i / d_{i+1}`` for ``i = 0..N-1``."""
    spec = birth_death_reduction(params)
    return spec.birth[:-1] / spec.death[1:]


def _ratio_quadratic(params: TwoPointParams):
    """Coefficients of ``dp i^2 - lin i + c``, the numerator of ``pi(i+1)/pi(i) - 1``."""
    a, b, p1, p2, big = params.a, params.b, params.p01, params.p02, params.N
    dp = p1 - p2
    lin = big * (a + b + dp) - (a + b + 2 * p1)
    return dp, lin, (big - 1) * (b * big - a - p1)


def ratio_roots(params: TwoPointParams):
    """The roots ``(i1, i2) = ((lin -+ r) / (2 dp))`` of the quadratic in ``pi(i+1)/pi(i) - 1``.

    Only defined for ``p01 != p02`` and real roots. Computed without
    cancellation, so ``i1`` stays accurate when ``p01 - p02`` is tiny (``i2``
    then overflows to infinity).
    """
    dp, lin, c = _ratio_quadratic(params)
    if dp == 0:
        raise ValueError("the ratio is affine when p01 == p02")
    disc = lin * lin - 4 * dp * c
    if disc < 0:
        raise ValueError("the ratio never crosses 1: complex roots")
    root = math.sqrt(disc)
    q = np.float64((lin + math.copysign(root, lin)) / 2)
    with np.errstate(divide="ignore", over="ignore"):
        far, near = q / np.float64(dp), (np.float64(c) / q if q != 0 else np.float64(0.0))
    return (float(near), float(far)) if lin >= 0 else (float(far), float(near))


def ratio_formula(params: TwoPointParams, i):
    """``1 + (p01 - p02)(i - i1)(i - i2) / ((i + 1)((a + p01)(N - 1) - i p01))``.

    The product over the roots is expanded, so complex roots are fine.
    """
    dp, lin, c = _ratio_quadratic(params)
    i = np.asarray(i, dtype=float)
    big, a, p1 = params.N, params.a, params.p01
    return 1 + (dp * i * i - lin * i + c) / ((i + 1) * ((a + p1) * (big - 1) - i * p1))


def unimodality_applies(params: TwoPointParams) -> bool:
    """``a(N-1) >= p01`` and ``b(N-1) >= p02``.

    Under this condition ``pi(i+1)/pi(i)`` is strictly decreasing. For
    smaller ``N`` it can fail, e.g. ``N = 2`` with ``p01 > a``.
    """
    return params.a * (params.N - 1) >= params.p01 and params.b * (params.N - 1) >= params.p02


def roots_bracket_n(params: TwoPointParams) -> bool:
    """Whether ``i1 <= N <= i2``; true exactly when ``a(N-1) > p01`` (for ``p01 > p02``)."""
    return params.a * (params.N - 1) > params.p01


def pi_mode(params: TwoPointParams) -> int:
    """Location of the maximum of ``pi``.

    Uses ``floor(i1) + 1`` after relabelling so that ``p01 >= p02``. When
    ``p0`` is constant the ratio is affine, and when ``a(N-1) <= p01`` the
    roots need not bracket ``N``; both cases scan ``pi`` directly.
    """
    if params.p01 < params.p02:
        return params.N - pi_mode(params.swapped())
    if params.p01 == params.p02 or not roots_bracket_n(params):
        return int(np.argmax(log_pi_weights(params)))
    i1, _ = ratio_roots(params)
    return int(min(max(math.floor(i1) + 1, 0), params.N))


# coupling and variational rates --------------------------------------------

def coupling_generator_rows(params: TwoPointParams, n: int, n2: int):
    """Transitions of the ordered coupling from ``(n, n2)``, ``n < n2``.

    Each row is ``((n', n2'), rate, cause, move_first, move_second)``.
    """
    return two_point_coupling_table(params.a, params.b, params.p01, params.p02, params.N, n, n2)


def coupling_drift(params: TwoPointParams, u, n: int, n2: int) -> float:
    """Generator of the coupling applied to ``delta_u`` at ``(n, n2)``."""
    u = np.asarray(u, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(u)])

    def delta(x, y):
        lo, hi = min(x, y), max(x, y)
        return cum[hi] - cum[lo]

    here = delta(n, n2)
    return math.fsum(rate * (delta(*target) - here) for target, rate, *_ in coupling_generator_rows(params, n, n2))


def _rate_terms(spec: BirthDeathSpec, u):
    b, d = spec.birth, spec.death
    u = np.asarray(u, dtype=float)
    zero = np.zeros(u.shape[:-1] + (1,))
    padded = np.concatenate([zero, u, zero], axis=-1)
    return d[1:] - d[:-1] * padded[..., :-2] / u + b[:-1] - b[1:] * padded[..., 2:] / u


def lambda_u(params: TwoPointParams, u) -> float:
    """``min_k [d_{k+1} - d_k u_{k-1}/u_k + b_k - b_{k+1} u_{k+1}/u_k]``.

    ``u`` has length ``N`` (one weight per edge ``k -> k+1``) and must be
    positive. Out-of-range ratios vanish because ``d_0 = b_N = 0``. A 2-D
    array is treated as a batch of weight vectors, one per row, and an array
    of values is returned.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim not in (1, 2) or u.shape[-1] != params.N:
        raise ValueError(f"u must have length N = {params.N}")
    if np.any(u <= 0):
        raise ValueError("u must be positive")
    values = _rate_terms(birth_death_reduction(params), u).min(axis=-1)
    return float(values) if u.ndim == 1 else values


def _eigen_weights(spec: BirthDeathSpec, gap: float):
    diag, off = spec.symmetric_tridiagonal()
    size = len(diag)
    # inverse iteration on the symmetrized matrix, shifted just off the gap
    shift = gap * (1 - 1e-10) - 1e-12
    bands = np.zeros((3, size))
    bands[0, 1:] = off
    bands[1] = diag - shift
    bands[2, :-1] = off
    w = np.ones(size)
    for _ in range(3):
        w = scipy.linalg.solve_banded((1, 1), bands, w)
        w /= np.abs(w).max()
    logpi = spec.log_stationary_weights()
    g = w * np.exp(-(logpi - logpi.max()) / 2)
    u = np.diff(g)
    if u.sum() < 0:
        u = -u
    return u


class LambdaUResult(NamedTuple):
    u: np.ndarray
    value: float
    target: float
    sweeps: int


def optimize_lambda_u(params: TwoPointParams, tol: float = 1e-9, max_sweeps: int = 400, eigen_start=True):
    """Best-effort maximization of :func:`lambda_u` over positive weights.

    Candidates are ``u = 1`` and, when ``eigen_start`` is true, the
    increments of the gap eigenfunction. The best one is then polished by a
    coordinate search on ``log u`` with multiplicative steps, stopping once
    the value is within ``tol`` of the exact gap. Every ``u`` gives a valid
    lower bound, so the result is certified from below whatever happens.
    """
    spec = birth_death_reduction(params)
    target = birth_death_gap(spec)
    starts = [np.ones(params.N)]
    if eigen_start:
        u_eig = _eigen_weights(spec, target)
        if np.all(np.isfinite(u_eig)) and np.all(u_eig > 0):
            starts.append(u_eig / u_eig.max())
    scored = [(float(_rate_terms(spec, u).min()), u) for u in starts]
    best, u = max(scored, key=lambda s: s[0])
    u = u.copy()
    terms = _rate_terms(spec, u)
    b, d = spec.birth, spec.death
    size = params.N

    def local(k):
        lo, hi = max(k - 1, 0), min(k + 2, size)
        for j in range(lo, hi):
            left = d[j] * u[j - 1] / u[j] if j > 0 else 0.0
            right = b[j + 1] * u[j + 1] / u[j] if j + 1 < size else 0.0
            terms[j] = d[j + 1] - left + b[j] - right
        return lo, hi

    step = 2.0
    sweeps = 0
    while sweeps < max_sweeps and target - best > tol and step > 1 + 1e-9:
        sweeps += 1
        improved = False
        for k in range(size):
            for factor in (step, 1.0 / step):
                saved = u[k]
                old = terms[max(k - 1, 0):min(k + 2, size)].copy()
                u[k] = saved * factor
                local(k)
                value = terms.min()
                if value > best:
                    best = float(value)
                    improved = True
                    break
                u[k] = saved
                terms[max(k - 1, 0):min(k + 2, size)] = old
        if not improved:
            step = math.sqrt(step)
    return LambdaUResult(u, best, target, sweeps)


# spectral gap and bounds -----------------------------------------------------

def fv_gap_exact(params: TwoPointParams, cap: int = GAP_CAP) -> float:
    """Spectral gap ``lambda_N`` of the particle system."""
    if params.N > cap:
        raise StateSpaceTooLarge(f"N = {params.N} exceeds the eigensolve cap {cap}")
    return birth_death_gap(birth_death_reduction(params))


class HardyReport(NamedTuple):
    m: int
    b_plus: float
    b_minus: float
    lower: float


def _log_cumsum(logs):
    return np.logaddexp.accumulate(logs) if len(logs) else logs


def hardy_bound(params: TwoPointParams, m: Optional[int] = None) -> HardyReport:
    """Discrete Hardy lower bound ``1/(4 max(B+(m), B-(m)))`` on ``lambda_N``.

    ``B+(m) = max_{x>m} (sum_{y=m+1}^{x} 1/(pi(y) d_y)) pi([x, N])`` and
    ``B-(m) = max_{x<m} (sum_{y=x}^{m-1} 1/(pi(y) b_y)) pi([0, x])``, both
    evaluated exactly (in log space). ``m`` defaults to the mode of ``pi``.
    """
    spec = birth_death_reduction(params)
    big = params.N
    if m is None:
        m = pi_mode(params)
    logpi = log_pi_weights(params)
    logpi = logpi - np.logaddexp.reduce(logpi)
    with np.errstate(divide="ignore"):
        log_d = np.log(spec.death)
        log_b = np.log(spec.birth)
    # B+: y, x in m+1..N
    b_plus = 0.0
    if m < big:
        ys = np.arange(m + 1, big + 1)
        inner = _log_cumsum(-logpi[ys] - log_d[ys])
        tails = np.logaddexp.accumulate(logpi[::-1])[::-1]  # log pi([x, N])
        b_plus = float(np.exp(np.max(inner + tails[ys])))
    b_minus = 0.0
    if m > 0:
        ys = np.arange(0, m)
        # sum_{y=x}^{m-1}: accumulate from the right
        inner = _log_cumsum((-logpi[ys] - log_b[ys])[::-1])[::-1]
        heads = np.logaddexp.accumulate(logpi)  # log pi([0, x])
        b_minus = float(np.exp(np.max(inner + heads[ys])))
    return HardyReport(int(m), b_plus, b_minus, 1.0 / (4.0 * max(b_plus, b_minus)))


@dataclass(frozen=True)
class GapReport:
    N: int
    lambda_cond: float
    rho: float
    lambda_N: float
    hardy_lower: float
    lambda_u_best: float

    def row(self):
        return (self.N, self.lambda_cond, self.rho, self.lambda_N, self.hardy_lower, self.lambda_u_best)


def gap_report(params: TwoPointParams, optimize: bool = True) -> GapReport:
    lam_cond = killed_eigensystem(params)
    lam_n = fv_gap_exact(params)
    best = optimize_lambda_u(params).value if optimize else float("nan")
    return GapReport(
        params.N,
        lam_cond.lam_plus - lam_cond.lam_minus,
        params.rho,
        lam_n,
        hardy_bound(params).lower,
        best,
    )


def gap_curve(params: TwoPointParams, n_grid, optimize: bool = True, workers: int = 1):
    """One :class:`GapReport` per particle number in ``n_grid``.

    ``params.N`` is ignored; every other parameter is held fixed.
    """
    grid = [int(n) for n in n_grid]
    if any(n > GAP_CAP for n in grid):
        raise StateSpaceTooLarge(f"N grid exceeds the eigensolve cap {GAP_CAP}")
    jobs = [params.with_n(n) for n in grid]
    if workers <= 1:
        return [gap_report(p, optimize) for p in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(gap_report, jobs, [optimize] * len(jobs)))


def _fmt(x):
    return repr(float(x))


def write_gap_curve_csv(reports, out) -> None:
    """``N,lambda_cond,rho,lambda_N,hardy_lower,lambda_u_best`` rows."""
    if isinstance(out, (str, bytes)) or hasattr(out, "__fspath__"):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            write_gap_curve_csv(reports, fh)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(GAP_CURVE_HEADER)
    for rep in reports:
        writer.writerow([rep.N] + [_fmt(x) for x in rep.row()[1:]])


def read_gap_curve_csv(source):
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8", newline="") as fh:
            return read_gap_curve_csv(fh)
    reader = csv.reader(source)
    header = tuple(next(reader))
    if header != GAP_CURVE_HEADER:
        raise ValueError(f"unexpected header {header!r}")
    return [GapReport(int(r[0]), *(float(x) for x in r[1:])) for r in reader]


# correlations -----------------------------------------------------------------

def correlation_bound(params: TwoPointParams, t: float) -> float:
    """``(2/N^2) ((1 - e^{-2 rho t})/rho) (N max(a, b) + sup(p0) N^2/(N - 1))``.

    At ``rho = 0`` the middle factor is its limit ``2t``.
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    big, rho = params.N, params.rho
    factor = 2 * t if rho == 0 else -math.expm1(-2 * rho * t) / rho
    return 2.0 / big**2 * factor * (big * max(params.a, params.b) + max(params.p01, params.p02) * big**2 / (big - 1))


def occupation_law(params: TwoPointParams, n0: int, t: float) -> np.ndarray:
    """Law of ``eta_t(1)`` started from ``eta_0(1) = n0``, from the tridiagonal semigroup."""
    gen = birth_death_reduction(params).generator()
    start = np.zeros(params.N + 1)
    start[n0] = 1.0
    return start @ scipy.linalg.expm(gen * t)


def exact_covariance(params: TwoPointParams, n0: int, t: float) -> float:
    """``cov(eta_t(1)/N, eta_t(2)/N) = -Var(eta_t(1))/N^2``."""
    law = occupation_law(params, n0, t)
    n = np.arange(params.N + 1)
    mean = law @ n
    return -float(law @ (n - mean) ** 2) / params.N**2
