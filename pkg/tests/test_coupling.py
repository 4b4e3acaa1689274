import math

import numpy as np
import pytest
import scipy.linalg
from scipy.stats import chi2_contingency

from flemingviot import two_point as tp
from flemingviot.chain import RateMatrix
from flemingviot.complete_graph import CompleteGraphParams
from flemingviot.coupling import coupling_kind, simulate_coupled, two_point_coupling_table
from flemingviot.engine import FvModel, simulate
from flemingviot.montecarlo import mc_estimate, mc_samples

DOWN, UP = (1, 2), (2, 1)
PARAMS = tp.TwoPointParams(1.0, 2.0, 0.7, 1.6, 6)


def _table(params, n, n2):
    return two_point_coupling_table(params.a, params.b, params.p01, params.p02, params.N, n, n2)


def test_table_marginals_are_birth_death_rates():
    spec = tp.birth_death_reduction(PARAMS)
    for n in range(PARAMS.N + 1):
        for n2 in range(n + 1, PARAMS.N + 1):
            rows = _table(PARAMS, n, n2)
            for copy, m in ((3, n), (4, n2)):
                up = sum(r[1] for r in rows if r[copy] == UP)
                down = sum(r[1] for r in rows if r[copy] == DOWN)
                assert up == pytest.approx(spec.birth[m], rel=1e-14, abs=1e-14)
                assert down == pytest.approx(spec.death[m], rel=1e-14, abs=1e-14)


def test_targets_follow_moves():
    for target, rate, cause, m1, m2 in _table(PARAMS, 2, 4):
        shift = {None: 0, UP: 1, DOWN: -1}
        assert target == (2 + shift[m1], 4 + shift[m2])
        assert rate > 0


def test_discrepancy_killing_rate_without_killing():
    params = tp.no_killing(1.3, 0.4, 5)
    for n in range(5):
        merge = sum(r[1] for r in _table(params, n, n + 1) if r[0][0] == r[0][1])
        assert merge == pytest.approx(1.3 + 0.4)


def test_ordered_pair_contract():
    with pytest.raises(ValueError):
        _table(PARAMS, 3, 3)
    with pytest.raises(ValueError):
        _table(PARAMS, 4, 2)


def test_drift_identity(rng):
    spec = tp.birth_death_reduction(PARAMS)
    b, d = spec.birth, spec.death
    for _ in range(20):
        u = rng.uniform(0.1, 3.0, PARAMS.N)
        pad = np.concatenate([[0.0], u, [0.0]])
        for n in range(PARAMS.N):
            expected = -(d[n + 1] - d[n] * pad[n] / u[n] + b[n] - b[n + 1] * pad[n + 2] / u[n]) * u[n]
            assert tp.coupling_drift(PARAMS, u, n, n + 1) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def _coupled_generator(params):
    big = params.N
    pairs = [(n, m) for n in range(big + 1) for m in range(n, big + 1)]
    index = {p: i for i, p in enumerate(pairs)}
    gen = np.zeros((len(pairs), len(pairs)))
    spec = tp.birth_death_reduction(params)
    for (n, m), i in index.items():
        if n == m:
            rows = [((n + 1, n + 1), spec.birth[n]), ((n - 1, n - 1), spec.death[n])]
        else:
            rows = [(r[0], r[1]) for r in _table(params, n, m)]
        for target, rate in rows:
            if rate > 0:
                gen[i, index[target]] += rate
                gen[i, i] -= rate
    return pairs, gen


def _distance_at(rng, times=(0.5,)):
    run = simulate_coupled(PARAMS.fv_model(), (1, 5), (4, 2), max(times), seed=rng, record=False, observe_at=times)
    return run.distances


def test_expected_distance_matches_exact_coupled_chain():
    pairs, gen = _coupled_generator(PARAMS)
    start = np.zeros(len(pairs))
    start[pairs.index((1, 4))] = 1.0
    dist = np.array([m - n for n, m in pairs], dtype=float)
    exact = start @ scipy.linalg.expm(gen * 0.5) @ dist
    mean, err = mc_estimate(_distance_at, 6000, seed=3)
    assert abs(mean[0] - exact) <= 4 * err[0]
    # slope at t = 0 is the coupling drift of delta with unit weights
    slope = (start @ gen @ dist)
    drift = sum(tp.coupling_drift(PARAMS, np.ones(PARAMS.N), k, k + 1) for k in range(1, 4))
    assert slope == pytest.approx(drift, rel=1e-12)


def test_order_is_kept_and_swaps_are_flagged():
    for seed in range(30):
        run = simulate_coupled(PARAMS.fv_model(), (5, 1), (2, 4), 3.0, seed=seed, observe_at=np.linspace(0, 3, 31))
        assert run.swapped
        first = [s[0] for s in run.first.snapshots]
        second = [s[0] for s in run.second.snapshots]
        assert all(x >= y for x, y in zip(first, second))
        assert run.first.snapshots[0] == (5, 1)


@pytest.mark.parametrize("model, start", [
    (PARAMS.fv_model(), (3, 3)),
    (CompleteGraphParams(3, 1.0, 6).fv_model(), (2, 2, 2)),
])
def test_identical_starts_stay_identical(model, start):
    run = simulate_coupled(model, start, start, 5.0, seed=7)
    assert run.first.events == run.second.events
    assert run.first.final == run.second.final


def test_unsupported_model():
    model = FvModel(RateMatrix([[0, 1, 2], [1, 0, 1], [1, 1, 0]], [1, 1, 1]), 3)
    with pytest.raises(ValueError):
        coupling_kind(model)
    assert coupling_kind(PARAMS.fv_model()) == "two-point"
    assert coupling_kind(CompleteGraphParams(3, 1.0, 4).fv_model()) == "complete-graph"


class _Finals:
    def __init__(self, model, start, other, coupled):
        self.args = (model, start, other, coupled)

    def __call__(self, rng):
        model, start, other, coupled = self.args
        if coupled:
            return simulate_coupled(model, start, other, 0.8, seed=rng, record=False).first.final
        return simulate(model, start, 0.8, seed=rng, record=False).final


@pytest.mark.parametrize("model, start, other", [
    (tp.TwoPointParams(1.0, 0.5, 2.0, 0.3, 4).fv_model(), (1, 3), (4, 0)),
    (CompleteGraphParams(3, 1.5, 4).fv_model(), (4, 0, 0), (0, 2, 2)),
])
def test_marginal_matches_plain_simulation(model, start, other):
    reps = 4000
    coupled = mc_samples(_Finals(model, start, other, True), reps, seed=21)
    plain = mc_samples(_Finals(model, start, other, False), reps, seed=22)
    labels = sorted({tuple(x) for x in np.vstack([coupled, plain])})
    table = np.array([
        [sum(tuple(x) == lab for x in coupled) for lab in labels],
        [sum(tuple(x) == lab for x in plain) for lab in labels],
    ])
    table = table[:, table.sum(axis=0) >= 10]
    _, pvalue, _, _ = chi2_contingency(table)
    assert pvalue > 0.01


def _cg_distance(rng):
    model = CompleteGraphParams(3, 1.0, 12).fv_model()
    return simulate_coupled(model, (12, 0, 0), (6, 6, 0), 2.0, seed=rng, record=False, observe_at=(0.5, 1.0, 2.0)).distances


def test_complete_graph_contraction():
    mean, err = mc_estimate(_cg_distance, 3000, seed=5)
    for t, m, e in zip((0.5, 1.0, 2.0), mean, err):
        assert m <= math.exp(-t) * 6 + 3 * e
