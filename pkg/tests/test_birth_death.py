import numpy as np
import pytest

from flemingviot.birth_death import BirthDeathSpec
from flemingviot.chain import stationary_distribution


def _spec():
    return BirthDeathSpec([3.0, 2.0, 1.0, 0.0], [0.0, 1.0, 2.5, 4.0])


def test_boundary_rates_enforced():
    with pytest.raises(ValueError):
        BirthDeathSpec([1.0, 1.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        BirthDeathSpec([1.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        BirthDeathSpec([1.0, 0.0, 0.0], [0.0, 1.0, 1.0])


def test_generator_is_conservative_tridiagonal():
    g = _spec().generator()
    np.testing.assert_allclose(g.sum(axis=1), 0.0, atol=1e-15)
    assert np.count_nonzero(np.triu(g, 2)) == 0 and np.count_nonzero(np.tril(g, -2)) == 0


def test_stationary_matches_linear_solve():
    spec = _spec()
    solved = stationary_distribution(spec.generator()).weights
    np.testing.assert_allclose(spec.stationary().weights, solved, atol=1e-14)


def test_symmetric_form_is_similar():
    spec = _spec()
    diag, off = spec.symmetric_tridiagonal()
    sym = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    np.testing.assert_allclose(np.linalg.eigvalsh(sym), np.sort(np.linalg.eigvals(-spec.generator()).real), atol=1e-12)
    assert spec.n_max == 3
