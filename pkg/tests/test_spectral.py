import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flemingviot import two_point as tp
from flemingviot.birth_death import BirthDeathSpec
from flemingviot.complete_graph import CompleteGraphParams, invariant_law, lambda_l, marginal_generator
from flemingviot.engine import fv_generator_matrix
from flemingviot.errors import NonReversibleError, StateSpaceTooLarge
from flemingviot.spectral import (
    birth_death_gap,
    dense_spectrum,
    implicit_ql,
    sturm_count,
    tridiagonal_eigenvalue,
    tridiagonal_spectrum,
)


def test_one_by_one_zero_matrix():
    report = dense_spectrum(np.zeros((1, 1)))
    np.testing.assert_array_equal(report.eigenvalues, [0.0])
    assert report.gap is None


def test_complete_graph_gap_is_one():
    params = CompleteGraphParams(2, 1.0, 4)
    report = dense_spectrum(fv_generator_matrix(params.fv_model()))
    assert abs(report.gap - 1.0) <= 1e-10
    assert report.method == "dense" and report.max_imag == 0.0


def test_zero_eigenvalue_has_constant_eigenvector():
    gen = fv_generator_matrix(CompleteGraphParams(3, 0.5, 3).fv_model())
    assert np.abs(gen @ np.ones(len(gen))).max() <= 1e-9
    report = dense_spectrum(gen)
    assert np.sum(np.abs(report.eigenvalues) <= 1e-8) == 1


def test_two_point_dense_matches_birth_death():
    params = tp.TwoPointParams(1.0, 1.0, 0.0, 1.0, 2)
    fv = dense_spectrum(fv_generator_matrix(params.fv_model())).eigenvalues
    spec = tp.birth_death_reduction(params)
    bd = tridiagonal_spectrum(spec, tp.invariant_pi(params)).eigenvalues
    np.testing.assert_allclose(fv, bd, atol=1e-10)


def test_non_reversible_generator_reports_imaginary_parts():
    gen = np.array([[-1.0, 1.0, 0.0], [0.0, -1.0, 1.0], [1.0, 0.0, -1.0]])
    report = dense_spectrum(gen)
    assert report.max_imag > 0.5
    assert abs(report.eigenvalues[0]) <= 1e-12


def test_cap_enforced():
    with pytest.raises(StateSpaceTooLarge):
        dense_spectrum(np.zeros((5, 5)), cap=4)


def test_complete_graph_marginal_spectrum():
    for n, p in ((6, 0.5), (9, 1.0), (4, 2.0)):
        params = CompleteGraphParams(2, p, n)
        spec = marginal_generator(params)
        report = tridiagonal_spectrum(spec, spec.stationary())
        expected = np.sort([lambda_l(params, l) for l in range(n + 1)])
        np.testing.assert_allclose(report.eigenvalues, expected, atol=1e-8)


def test_detailed_balance_violation_rejected():
    spec = BirthDeathSpec([1.0, 1.0, 0.0], [0.0, 1.0, 1.0])
    with pytest.raises(NonReversibleError):
        tridiagonal_spectrum(spec, [0.2, 0.3, 0.5])


def test_two_point_grid_dense_vs_tridiagonal():
    rng = np.random.default_rng(3)
    for n in (2, 5, 13, 30, 60):
        a, b, p1, p2 = rng.uniform(0.2, 3.0, 4)
        params = tp.TwoPointParams(a, b, p1, p2, n)
        spec = tp.birth_death_reduction(params)
        pi = tp.invariant_pi(params)
        dense = dense_spectrum(spec.generator(), pi)
        tri = tridiagonal_spectrum(spec, pi)
        np.testing.assert_allclose(dense.eigenvalues, tri.eigenvalues, atol=1e-9)
        assert abs(dense.gap - birth_death_gap(spec)) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=25), st.data())
def test_implicit_ql_matches_lapack(diag, data):
    off = data.draw(st.lists(st.floats(-3, 3), min_size=len(diag) - 1, max_size=len(diag) - 1))
    sym = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    expected = np.linalg.eigvalsh(sym)
    np.testing.assert_allclose(implicit_ql(diag, off), expected, atol=1e-10)
    if len(diag) > 1:
        k = data.draw(st.integers(0, len(diag) - 1))
        assert abs(tridiagonal_eigenvalue(diag, off, k) - expected[k]) <= 1e-10


def test_implicit_ql_vectors():
    diag, off = [2.0, 1.0, 3.0, 0.5], [0.3, -0.7, 1.1]
    vals, vecs = implicit_ql(diag, off, vectors=True)
    sym = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    np.testing.assert_allclose(sym @ vecs, vecs * vals, atol=1e-12)
    np.testing.assert_allclose(vecs.T @ vecs, np.eye(4), atol=1e-12)


def test_sturm_count():
    diag, off = [1.0, 2.0, 3.0], [0.0, 0.0]
    assert [sturm_count(diag, [0.0, 0.0], x) for x in (0.5, 1.5, 2.5, 3.5)] == [0, 1, 2, 3]
    with pytest.raises(IndexError):
        tridiagonal_eigenvalue(diag, off, 3)


def test_report_serializes():
    report = dense_spectrum(np.array([[-1.0, 1.0], [1.0, -1.0]]))
    data = report.to_dict()
    assert data["gap"] == pytest.approx(2.0) and data["eigenvalues"][0] == pytest.approx(0.0, abs=1e-15)
