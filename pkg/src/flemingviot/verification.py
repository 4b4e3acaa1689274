"""Registry of numerical acceptance checks.

Each check recomputes one claim from scratch, compares it with an
independent reference and returns an :class:`Outcome`. Checks are grouped
by scope (``complete-graph``, ``two-point``, ``engine``) and numbered by the
acceptance criterion they cover; the registry is validated at import time
so every criterion is covered exactly once.
"""
from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from . import complete_graph as cg
from . import oracles
from . import two_point as tp
from .chain import RateMatrix, stationary_distribution
from .coupling import simulate_coupled
from .engine import FvModel, configurations, config_distance, fv_generator_matrix, simulate
from .montecarlo import DEFAULT_SEED, mc_estimate, mc_samples, replica_rng
from .spectral import dense_spectrum

SCOPES = ("all", "complete-graph", "two-point", "engine")
N_CRITERIA = 15


@dataclass
class Outcome:
    measured: float
    tolerance: float
    passed: bool
    detail: dict


@dataclass(frozen=True)
class Check:
    id: str
    criterion: Optional[int]
    scope: str
    description: str
    budget_s: float
    run: Callable


_REGISTRY: list = []


def _check(id, criterion, scope, description, budget_s):
    def wrap(fn):
        _REGISTRY.append(Check(id, criterion, scope, description, budget_s, fn))
        return fn

    return wrap


def _rng(seed, check_id):
    # one independent stream per check, keyed by the id
    return replica_rng(seed, int.from_bytes(check_id.encode(), "little") % 2**63)


def _random_two_point(rng, n, low=0.1, high=5.0):
    a, b = rng.uniform(low, high, 2)
    p01, p02 = rng.uniform(0.0, high, 2)
    return tp.TwoPointParams(float(a), float(b), float(p01), float(p02), int(n))


# complete graph ----------------------------------------------------------------

_CG_GRID = [
    cg.CompleteGraphParams(k, p, n)
    for k in (2, 3)
    for n in (2, 3, 4)
    for p in (Fraction(1, 3), Fraction(1, 2), Fraction(1))
]


@_check("cg-invariant-oracle", 1, "complete-graph",
        "closed-form invariant law equals the stationary solve of the configuration generator", 10)
def _cg_invariant(seed, workers):
    worst = 0.0
    for params in _CG_GRID:
        closed = cg.invariant_law(params).weights
        worst = max(worst, float(np.abs(closed - oracles.brute_force_invariant(params)).max()))
    return Outcome(worst, 1e-11, worst <= 1e-11, {"instances": len(_CG_GRID)})


@_check("cg-binomial-normalizer", 2, "complete-graph",
        "for p = 1/K the enumerated normalizer is C((K+1)N-K-1, KN-K-1)", 1)
def _cg_binomial(seed, workers):
    worst = 0
    rows = {}
    for n in (2, 3, 5):
        params = cg.CompleteGraphParams(2, Fraction(1, 2), n)
        closed = cg.binomial_normalizer(2, n)
        summed = sum(cg.invariant_weight_exact(params, eta) for eta in configurations(n, 2))
        brute = oracles.enumerated_normalizer(2, n)
        if summed.denominator != 1:
            worst = max(worst, 1)
        worst = max(worst, abs(int(summed) - closed), abs(brute - closed))
        rows[n] = closed
    return Outcome(float(worst), 0.0, worst == 0, {"normalizers": rows})


_ODE_TIMES = (0.0, 0.5, 1.0, 2.0, 5.0)


def _starts(params):
    big, k = params.N, params.K
    spread = [big // k] * k
    spread[0] += big - sum(spread)
    skew = [0] * k
    skew[0], skew[1] = big - 1, 1
    return [tuple([big] + [0] * (k - 1)), tuple(spread), tuple(skew)]


@_check("cg-correlation-ode", 3, "complete-graph",
        "two-site covariance closed form agrees with a Runge-Kutta solve of the moment equations", 5)
def _cg_correlation(seed, workers):
    worst = worst_kolmogorov = worst_printed = worst_reference = 0.0
    for k in (2, 3):
        for n in (5, 20):
            for p in (0.5, 1.0):
                params = cg.CompleteGraphParams(k, p, n)
                for eta in _starts(params):
                    mk, ml, s = float(eta[0]), float(eta[1]), float(eta[0] * eta[1])
                    ode = oracles.moment_ode_solution(params, mk, ml, s, _ODE_TIMES)
                    closed = np.array([cg.covariance_dynamics(params, mk, ml, s, t) for t in _ODE_TIMES])
                    ref = np.array([cg.covariance_reference(params, mk, ml, s, t) for t in _ODE_TIMES])
                    printed = np.array([cg.covariance_as_printed(params, mk, ml, s, t) for t in _ODE_TIMES])
                    worst = max(worst, float(np.abs(closed - ode).max()))
                    worst_reference = max(worst_reference, float(np.abs(closed - ref).max()))
                    worst_printed = max(worst_printed, float(np.abs(printed - ode).max()))
                    if n == 5:
                        _, _, kol = oracles.kolmogorov_moments(params, eta, _ODE_TIMES)
                        worst_kolmogorov = max(worst_kolmogorov, float(np.abs(closed - kol).max()))
    measured = max(worst, worst_kolmogorov, worst_reference)
    return Outcome(measured, 1e-6, measured <= 1e-6, {
        "closed_vs_rk": worst,
        "closed_vs_matrix_exponential": worst_kolmogorov,
        "simplified_vs_unsimplified_rate": worst_reference,
        "printed_formula_vs_rk": worst_printed,
    })


@_check("cg-mean-ode", None, "complete-graph",
        "mean occupation E[eta_t(k)] = m0 e^-t + (N/K)(1 - e^-t); the variant without (1 - e^-t) fails at t = 0", 5)
def _cg_mean(seed, workers):
    worst = printed = 0.0
    for params in (cg.CompleteGraphParams(3, 0.5, 5), cg.CompleteGraphParams(2, 1.0, 6)):
        eta = (params.N,) + (0,) * (params.K - 1)
        mk, _, _ = oracles.kolmogorov_moments(params, eta, _ODE_TIMES)
        closed = np.array([cg.mean_dynamics(params, eta[0], t) for t in _ODE_TIMES])
        wrong = np.array([cg.mean_dynamics_as_printed(params, eta[0], t) for t in _ODE_TIMES])
        worst = max(worst, float(np.abs(closed - mk).max()))
        printed = max(printed, float(np.abs(wrong - mk).max()))
    return Outcome(worst, 1e-9, worst <= 1e-9 and printed > 1e-3, {"printed_variant_error": printed})


@_check("cg-stationary-cov", 4, "complete-graph",
        "K=2, N=10, p=1: Var = 4.75 and normalized covariance = -0.0475 by exact summation", 1)
def _cg_stationary(seed, workers):
    params = cg.CompleteGraphParams(2, Fraction(1), 10)
    states = configurations(10, 2)
    weights = [cg.invariant_weight_exact(params, eta) for eta in states]
    z = sum(weights)
    law = [w / z for w in weights]
    m1 = sum(w * eta[0] for w, eta in zip(law, states))
    m2 = sum(w * eta[1] for w, eta in zip(law, states))
    var = sum(w * (eta[0] - m1) ** 2 for w, eta in zip(law, states))
    cov = sum(w * eta[0] * eta[1] for w, eta in zip(law, states)) - m1 * m2
    closed = cg.stationary_covariance(params, exact=True)
    errs = [
        abs(float(var) - 4.75),
        abs(float(cov) / 100 + 0.0475),
        abs(float(closed.var) - 4.75),
        abs(float(closed.normalized_cov) + 0.0475),
    ]
    measured = max(errs)
    return Outcome(measured, 1e-10, measured <= 1e-10, {"var": float(var), "normalized_cov": float(cov) / 100})


@_check("cg-chaos-bound", 5, "complete-graph",
        "E[sum_k |eta(k)/N - 1/K|] under the invariant law is at most sqrt(K(p+1)/N)", 10)
def _cg_chaos(seed, workers):
    ratios = [cg.expected_distance_to_uniform(p) / cg.chaos_bound(p) for p in _CG_GRID]
    worst = max(ratios)
    return Outcome(worst, 1.0, worst <= 1.0, {"instances": len(ratios)})


@_check("cg-spectrum", 6, "complete-graph",
        "eigenvalues of -L lie in the set of sums of lambda_l and the spectral gap is 1", 5)
def _cg_spectrum(seed, workers):
    defect = gap_err = 0.0
    for n in (3, 5):
        for p in (0.5, 1.0):
            params = cg.CompleteGraphParams(2, p, n)
            report = dense_spectrum(fv_generator_matrix(params.fv_model()), cg.invariant_law(params))
            defect = max(defect, cg.spectrum_inclusion_defect(params, report.eigenvalues))
            gap_err = max(gap_err, abs(report.gap - 1.0))
    return Outcome(max(defect / 1e-7, gap_err / 1e-8), 1.0, defect <= 1e-7 and gap_err <= 1e-8,
                   {"inclusion_defect": defect, "gap_error": gap_err})


_W_TIMES = (0.5, 1.0, 2.0)


def _coupled_distance(rng):
    model = cg.CompleteGraphParams(3, 1.0, 30).fv_model()
    run = simulate_coupled(model, (30, 0, 0), (15, 15, 0), 2.0, seed=rng, record=False, observe_at=_W_TIMES)
    return run.distances


@_check("cg-wasserstein", 7, "complete-graph",
        "coupled complete-graph copies contract: E[d(eta_t, eta_t')] <= e^-t d(eta_0, eta_0')", 120)
def _cg_wasserstein(seed, workers):
    d0 = config_distance((30, 0, 0), (15, 15, 0))
    mean, err = mc_estimate(_coupled_distance, 20_000, seed, workers)
    slack = []
    for t, m, e in zip(_W_TIMES, mean, err):
        allowed = math.exp(-t) * d0 * (1 + 3 * e / m)
        slack.append(m / allowed)
    worst = max(slack)
    return Outcome(worst, 1.0, worst <= 1.0, {
        "d0": d0, "mean": [float(x) for x in mean], "stderr": [float(x) for x in err],
        "contraction": [math.exp(-t) * d0 for t in _W_TIMES],
    })


# two-point ------------------------------------------------------------------------

@_check("tp-eigensystem", 8, "two-point",
        "lambda_+ - lambda_- matches the numeric 2x2 eigenvalues and exceeds rho when p0 is not constant", 1)
def _tp_eigensystem(seed, workers):
    rng = _rng(seed, "tp-eigensystem")
    worst = 0.0
    worst_nu = 0.0
    above = True
    for _ in range(100):
        params = _random_two_point(rng, 2)
        eig = tp.killed_eigensystem(params)
        numeric = np.sort(np.linalg.eigvals(params.rate_matrix().sub_generator).real)
        worst = max(worst, abs((eig.lam_plus - eig.lam_minus) - (numeric[1] - numeric[0])),
                    abs(eig.lam_plus - eig.lam_minus - tp.conditioned_gap_formula(params)))
        _, left = scipy.linalg.eig(params.rate_matrix().sub_generator, left=True, right=False)
        vals = np.linalg.eigvals(params.rate_matrix().sub_generator)
        v = np.abs(left[:, np.argmax(vals.real)].real)
        worst_nu = max(worst_nu, float(np.abs(v / v.sum() - eig.nu).max()))
        if params.p01 != params.p02:
            above &= eig.lam_plus - eig.lam_minus > params.rho
    return Outcome(worst, 1e-12, worst <= 1e-12 and above and worst_nu <= 1e-10,
                   {"qsd_error": worst_nu, "rate_exceeds_rho": above})


@_check("tp-birth-death", 9, "two-point",
        "the K=2 configuration generator equals the birth-death generator entrywise", 1)
def _tp_birth_death(seed, workers):
    rng = _rng(seed, "tp-birth-death")
    worst = 0.0
    for n in range(2, 21):
        params = _random_two_point(rng, n)
        fv = fv_generator_matrix(params.fv_model())
        # configurations run (N, 0), ..., (0, N): reverse to index by eta(1)
        fv = fv[::-1, ::-1]
        bd = tp.birth_death_reduction(params).generator()
        worst = max(worst, float(np.abs(fv - bd).max()))
    return Outcome(worst, 0.0, worst == 0.0, {})


@_check("tp-pi-unimodal", 10, "two-point",
        "closed-form pi equals the stationary solve and pi(i+1)/pi(i) is strictly decreasing", 10)
def _tp_pi(seed, workers):
    rng = _rng(seed, "tp-pi-unimodal")
    worst = 0.0
    monotone = True
    outside = outside_failures = 0
    for _ in range(50):
        base = _random_two_point(rng, 2)
        # smallest N with a(N-1) >= p01 and b(N-1) >= p02, where monotonicity is provable
        n_min = max(2, 1 + math.ceil(max(base.p01 / base.a, base.p02 / base.b)))
        params = base.with_n(int(rng.integers(min(n_min, 100), 101)))
        closed = tp.invariant_pi(params).weights
        solved = stationary_distribution(tp.birth_death_reduction(params).generator()).weights
        worst = max(worst, float(np.abs(closed - solved).max()))
        decreasing = bool(np.all(np.diff(tp.pi_ratio(params)) < 0))
        if tp.unimodality_applies(params):
            monotone &= decreasing
        if n_min > 2:
            small = base.with_n(2)
            outside += 1
            outside_failures += not bool(np.all(np.diff(tp.pi_ratio(small)) < 0))
    return Outcome(worst, 1e-11, worst <= 1e-11 and monotone, {
        "strictly_decreasing": monotone,
        "small_n_sets_outside_hypothesis": outside,
        "small_n_non_monotone": outside_failures,
    })


_VAR_N = (2, 3, 5, 10, 20, 40, 60)


@_check("tp-variational", 11, "two-point",
        "lambda_u never exceeds the exact gap and the optimizer reaches 99% of it", 120)
def _tp_variational(seed, workers):
    rng = _rng(seed, "tp-variational")
    worst_excess = -math.inf
    worst_ratio = math.inf
    for _ in range(10):
        base = _random_two_point(rng, 2)
        for n in _VAR_N:
            params = base.with_n(n)
            gap = tp.fv_gap_exact(params)
            values = tp.lambda_u(params, np.exp(rng.normal(0.0, 1.0, (1000, n))))
            worst_excess = max(worst_excess, float(values.max() - gap))
            best = tp.optimize_lambda_u(params)
            worst_excess = max(worst_excess, best.value - gap)
            worst_ratio = min(worst_ratio, best.value / gap)
    ok = worst_excess <= 1e-8 and worst_ratio >= 0.99
    return Outcome(worst_ratio, 0.99, ok, {"max_lambda_u_minus_gap": worst_excess})


_HARDY_N = (2, 5, 10, 20, 50, 100, 200)


@_check("tp-hardy", 12, "two-point",
        "Hardy lower bound never exceeds the gap and stays positive uniformly in N when rho <= 0", 60)
def _tp_hardy(seed, workers):
    rng = _rng(seed, "tp-hardy")
    worst = 0.0
    for _ in range(10):
        base = _random_two_point(rng, 2)
        for n in _HARDY_N:
            params = base.with_n(n)
            worst = max(worst, tp.hardy_bound(params).lower / tp.fv_gap_exact(params))
    stress = tp.TwoPointParams(0.1, 0.1, 5.0, 0.0, 20)
    lows = [tp.hardy_bound(stress.with_n(n)).lower for n in range(20, 201)]
    for n in range(20, 201, 20):
        worst = max(worst, lows[n - 20] / tp.fv_gap_exact(stress.with_n(n)))
    floor = min(lows)
    return Outcome(floor, 0.0, worst <= 1.0 and floor > 0, {
        "max_bound_over_gap": worst, "stress_rho": stress.rho, "stress_min_bound": floor,
    })


def gap_regimes():
    """Gap curves of the constant-p0 and regime-iii presets with their qualitative checks."""
    from .config import load_preset

    out = {}
    for name in ("constant-p0", "regime-iii", "rho-negative"):
        cfg = load_preset(name)
        out[name] = tp.gap_curve(cfg.model_params(), cfg.n_grid, optimize=(name != "rho-negative"))
    return out


@_check("tp-gap-regimes", 13, "two-point",
        "constant p0 makes all rates coincide; regime iii has a non-monotone gap crossing lambda; CSV round-trips", 120)
def _tp_gap_regimes(seed, workers):
    curves = gap_regimes()
    const = curves["constant-p0"]
    collapse = max(max(abs(r.lambda_cond - r.rho), abs(r.lambda_N - r.rho)) for r in const)
    gaps = np.array([r.lambda_N for r in curves["regime-iii"]])
    lam = curves["regime-iii"][0].lambda_cond
    steps = np.diff(gaps)
    non_monotone = bool((steps > 1e-9).any() and (steps < -1e-9).any())
    crossing = bool((gaps < lam - 1e-9).any() and (gaps > lam + 1e-9).any())
    hardy_positive = all(r.hardy_lower > 0 for r in curves["rho-negative"])
    buf = io.StringIO()
    tp.write_gap_curve_csv(curves["regime-iii"], buf)
    buf.seek(0)
    round_trip = tp.read_gap_curve_csv(buf) == curves["regime-iii"]
    ok = collapse <= 1e-9 and non_monotone and crossing and hardy_positive and round_trip
    return Outcome(collapse, 1e-9, ok, {
        "regime_iii_non_monotone": non_monotone, "regime_iii_crosses_lambda": crossing,
        "rho_negative_hardy_positive": hardy_positive, "csv_round_trip": round_trip,
    })


@_check("tp-correlation-bound", 15, "two-point",
        "|exact two-site covariance| stays below the coupling bound for rho > 0", 30)
def _tp_correlation(seed, workers):
    rng = _rng(seed, "tp-correlation-bound")
    worst = 0.0
    count = 0
    while count < 5:
        base = _random_two_point(rng, 2)
        if base.rho <= 0:
            continue
        count += 1
        for n in (2, 5, 10, 20, 50):
            params = base.with_n(n)
            for n0 in (0, n // 2, n):
                for t in (0.1, 0.5, 1.0, 2.0, 5.0):
                    ratio = abs(tp.exact_covariance(params, n0, t)) / tp.correlation_bound(params, t)
                    worst = max(worst, ratio)
    # at t = 0 both sides vanish, so the grid starts just after
    return Outcome(worst, 1.0, worst <= 1.0, {"parameter_sets": count})


# engine ------------------------------------------------------------------------------

SSA_MODEL = FvModel(
    RateMatrix([[0.0, 0.7, 0.3], [0.4, 0.0, 1.1], [0.9, 0.2, 0.0]], [0.5, 1.5, 0.25]), 5
)
SSA_START = (3, 2, 0)


def _ssa_final(rng):
    return simulate(SSA_MODEL, SSA_START, 1.0, seed=rng, record=False).final


@_check("engine-ssa", 14, "engine",
        "simulated law at t=1 matches the matrix-exponential law within 5 aggregate standard errors", 180)
def _engine_ssa(seed, workers):
    states = configurations(SSA_MODEL.n, SSA_MODEL.k)
    gen = fv_generator_matrix(SSA_MODEL)
    start = np.zeros(len(states))
    start[states.index(SSA_START)] = 1.0
    exact = start @ scipy.linalg.expm(gen)
    replicas = 100_000
    finals = mc_samples(_ssa_final, replicas, seed, workers)
    index = {s: i for i, s in enumerate(states)}
    counts = np.bincount([index[tuple(int(x) for x in f)] for f in finals], minlength=len(states))
    empirical = counts / replicas
    l1 = float(np.abs(empirical - exact).sum())
    bound = float(np.sqrt(exact * (1 - exact) / replicas).sum())
    return Outcome(l1, 5 * bound, l1 <= 5 * bound, {"states": len(states), "replicas": replicas})


# registry -------------------------------------------------------------------------------

def registry():
    return list(_REGISTRY)


def check_registry(checks=None):
    """Every criterion ``1..N_CRITERIA`` must be covered exactly once."""
    checks = _REGISTRY if checks is None else checks
    covered = [c.criterion for c in checks if c.criterion is not None]
    missing = sorted(set(range(1, N_CRITERIA + 1)) - set(covered))
    doubled = sorted({c for c in covered if covered.count(c) > 1})
    ids = [c.id for c in checks]
    if missing or doubled or len(set(ids)) != len(ids):
        raise RuntimeError(f"verification registry is inconsistent: missing {missing}, duplicated {doubled}")


check_registry()


def select(scope="all", ids=None):
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}; expected one of {', '.join(SCOPES)}")
    chosen = [c for c in _REGISTRY if scope == "all" or c.scope == scope]
    if ids is not None:
        chosen = [c for c in chosen if c.id in ids]
    return chosen


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def run_check(check: Check, seed=DEFAULT_SEED, workers=1) -> dict:
    start = time.perf_counter()
    try:
        outcome = check.run(seed, workers)
        error = None
    except Exception as exc:  # a crashing check is a failed check
        outcome = Outcome(float("nan"), float("nan"), False, {})
        error = f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - start
    entry = {
        "id": check.id,
        "criterion": check.criterion,
        "scope": check.scope,
        "description": check.description,
        "measured": float(outcome.measured),
        "tolerance": float(outcome.tolerance),
        "passed": bool(outcome.passed) and elapsed <= check.budget_s,
        "numerics_passed": bool(outcome.passed),
        "runtime_s": round(elapsed, 3),
        "budget_s": check.budget_s,
        "detail": _jsonable(outcome.detail),
    }
    if error:
        entry["error"] = error
    entry["verdict"] = "pass" if entry["passed"] else "fail"
    return entry


def run_verification(scope="all", seed=DEFAULT_SEED, workers=1, ids=None, progress=None) -> dict:
    """Run the selected checks and assemble the JSON-ready report."""
    results = []
    for check in select(scope, ids):
        entry = run_check(check, seed, workers)
        if progress is not None:
            progress(entry)
        results.append(entry)
    return {
        "scope": scope,
        "seed": seed,
        "passed": all(r["passed"] for r in results),
        "results": results,
    }
