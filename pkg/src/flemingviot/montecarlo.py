"""Reproducible replica-parallel Monte Carlo.

Every replica draws from its own counter-based Philox stream. The stream of
replica ``r`` under master seed ``s`` is keyed by ``SeedSequence(s,
spawn_key=(r,))``, i.e. exactly the ``r``-th child of ``SeedSequence(s).spawn``.
Results therefore do not depend on how replicas are distributed over
workers.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

DEFAULT_SEED = 0xF1E71
_BLOCK = 512


def replica_rng(seed: int, index: int) -> np.random.Generator:
    """Philox generator for replica ``index`` under master ``seed``."""
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(seq))


def make_rng(seed) -> np.random.Generator:
    """Coerce an int seed (or an existing Generator) into a Philox Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


class UniformStream:
    """Buffered uniforms on [0, 1) drawn in blocks from a Generator."""

    __slots__ = ("_rng", "_buf", "_pos")

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._buf = rng.random(_BLOCK).tolist()
        self._pos = 0

    def next(self) -> float:
        if self._pos == _BLOCK:
            self._buf = self._rng.random(_BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def exponential(self, rate: float) -> float:
        """Exponential holding time by inversion."""
        return -math.log1p(-self.next()) / rate


def _run_chunk(observable, seed, indices):
    return [np.asarray(observable(replica_rng(seed, i)), dtype=float) for i in indices]


def mc_samples(observable, replicas: int, seed: int = DEFAULT_SEED, workers: int = 1):
    """Evaluate ``observable(rng)`` once per replica.

    Parameters
    ----------
    observable : callable
        Receives the replica's Generator and returns a scalar or an array.
        Must be picklable when ``workers > 1``.
    replicas : int
    seed : int
    workers : int
        Size of the process pool; 1 runs inline.

    Returns
    -------
    ndarray, shape (replicas, ...)
    """
    if replicas < 1:
        raise ValueError("need at least one replica")
    indices = range(replicas)
    if workers <= 1:
        values = _run_chunk(observable, seed, indices)
    else:
        n_chunks = min(replicas, 4 * workers)
        bounds = np.linspace(0, replicas, n_chunks + 1).astype(int)
        chunks = [range(bounds[c], bounds[c + 1]) for c in range(n_chunks)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [observable] * n_chunks, [seed] * n_chunks, chunks)
            values = [v for part in parts for v in part]
    return np.stack(values)


def mc_estimate(observable, replicas: int, seed: int = DEFAULT_SEED, workers: int = 1):
    """Sample mean and standard error of ``observable`` over replicas.

    Returns
    -------
    mean, stderr : float or ndarray
    """
    if replicas < 2:
        raise ValueError("need at least two replicas for a standard error")
    samples = mc_samples(observable, replicas, seed, workers)
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / math.sqrt(replicas)
    return mean, stderr


def default_workers() -> int:
    return os.cpu_count() or 1
