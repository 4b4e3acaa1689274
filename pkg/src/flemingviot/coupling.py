"""Coupled pairs of Fleming-Viot processes.

Two couplings are implemented, one per model pack.

Two sites (``K = 2``)
    The state is the ordered pair ``(n, n2)`` of site-1 occupations with
    ``n <= n2``. Off the diagonal the pair follows the ten transitions of
    :func:`two_point_coupling_table`; on the diagonal both copies move
    together. Inputs with ``n > n2`` are swapped and flagged.

Complete graph (constant jump rate ``q`` and constant killing rate ``p``)
    Particles of the two systems are paired, matching as many co-located
    particles as possible at time 0. Each pair carries one mutation clock of
    rate ``qK``; when it rings both particles jump to the same uniformly
    chosen site, so a mismatched pair becomes matched. Each pair also carries
    one killing clock of rate ``p``; when it rings a single uniformly chosen
    other pair is copied by both particles. Mutations merge mismatched pairs
    at rate 1 while the copying step leaves the expected number of mismatched
    pairs unchanged, so ``E[d] <= exp(-t) d(eta0, eta0')`` exactly. Clocks
    that ring without moving anything (a jump to the current site) are
    simply skipped.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import (
    INTERACTION,
    MUTATION,
    FvModel,
    Trajectory,
    TrajectoryEvent,
    check_configuration,
)
from .montecarlo import UniformStream, make_rng

# moves of a single copy, as (site_from, site_to) in 1-based labels
_DOWN = (1, 2)  # n decreases: a particle leaves site 1
_UP = (2, 1)


@dataclass
class CoupledTrajectory:
    """Both marginals of a coupled run.

    ``first`` always corresponds to ``eta0`` and ``second`` to ``eta0'``,
    even when the two-point coupling had to swap them internally
    (``swapped`` is then true).
    """

    first: Trajectory
    second: Trajectory
    distances: list
    swapped: bool = False


def coupling_kind(model: FvModel) -> str:
    """``"two-point"``, ``"complete-graph"``, or ``ValueError`` for anything else."""
    q = model.q
    if q.size == 2:
        return "two-point"
    off = q.rates[~np.eye(q.size, dtype=bool)]
    if np.all(off == off[0]) and np.all(q.absorption == q.absorption[0]):
        return "complete-graph"
    raise ValueError("coupling is only available for two-site and complete-graph models")


def two_point_coupling_table(a, b, p01, p02, n_particles, n, n2):
    """Transitions of the ordered coupling out of ``(n, n2)`` with ``n < n2``.

    Returns a list of ``(target, rate, cause, move_first, move_second)``
    where each move is ``None`` or a ``(site_from, site_to)`` pair. Rates
    that vanish are dropped.
    """
    if not 0 <= n < n2 <= n_particles:
        raise ValueError("the ordered coupling needs 0 <= n < n' <= N")
    big = n_particles
    gap = n2 - n
    w = 1.0 / (big - 1)
    rows = [
        # mutation part
        ((n - 1, n2 - 1), n * a, MUTATION, _DOWN, _DOWN),
        ((n + 1, n2 + 1), (big - n2) * b, MUTATION, _UP, _UP),
        ((n + 1, n2), gap * b, MUTATION, _UP, None),
        ((n, n2 - 1), gap * a, MUTATION, None, _DOWN),
        # interaction part
        ((n - 1, n2 - 1), p01 * n * (big - n2) * w, INTERACTION, _DOWN, _DOWN),
        ((n + 1, n2 + 1), p02 * n * (big - n2) * w, INTERACTION, _UP, _UP),
        ((n - 1, n2), p01 * n * gap * w, INTERACTION, _DOWN, None),
        ((n, n2 + 1), p02 * (big - n2) * gap * w, INTERACTION, None, _UP),
        ((n + 1, n2), p02 * n * gap * w, INTERACTION, _UP, None),
        ((n, n2 - 1), p01 * (big - n2) * gap * w, INTERACTION, None, _DOWN),
    ]
    return [r for r in rows if r[1] > 0]


def _diagonal_table(a, b, p01, p02, big, n):
    w = 1.0 / (big - 1)
    rows = [
        ((n + 1, n + 1), (big - n) * b, MUTATION, _UP, _UP),
        ((n + 1, n + 1), (big - n) * p02 * n * w, INTERACTION, _UP, _UP),
        ((n - 1, n - 1), n * a, MUTATION, _DOWN, _DOWN),
        ((n - 1, n - 1), n * p01 * (big - n) * w, INTERACTION, _DOWN, _DOWN),
    ]
    return [r for r in rows if r[1] > 0]


def _simulate_two_point(model, n, n2, horizon, stream, record, checkpoints):
    q = model.q
    a, b = q.rates[0, 1], q.rates[1, 0]
    p01, p02 = q.absorption
    big = model.n
    first, second, distances = [], [], []
    snaps1, snaps2 = [], []
    counts1 = {MUTATION: 0, INTERACTION: 0}
    counts2 = {MUTATION: 0, INTERACTION: 0}
    cache = {}
    t = 0.0
    obs = 0
    while True:
        key = (n, n2)
        if key not in cache:
            rows = _diagonal_table(a, b, p01, p02, big, n) if n == n2 else two_point_coupling_table(
                a, b, p01, p02, big, n, n2
            )
            cache[key] = (rows, sum(r[1] for r in rows))
        rows, total = cache[key]
        t_next = t + (stream.exponential(total) if total > 0 else np.inf)
        while obs < len(checkpoints) and checkpoints[obs] < t_next:
            snaps1.append((n, big - n))
            snaps2.append((n2, big - n2))
            distances.append(float(n2 - n))
            obs += 1
        if t_next > horizon:
            break
        t = t_next
        target = stream.next() * total
        for row in rows:
            if target < row[1]:
                break
            target -= row[1]
        (n, n2), _, cause, m1, m2 = row
        if m1 is not None:
            counts1[cause] += 1
            if record:
                first.append(TrajectoryEvent(t, m1[0], m1[1], cause))
        if m2 is not None:
            counts2[cause] += 1
            if record:
                second.append(TrajectoryEvent(t, m2[0], m2[1], cause))
        if n > n2:
            raise AssertionError("ordered coupling lost its order")
    return (
        Trajectory(first, (n, big - n), snaps1, counts1),
        Trajectory(second, (n2, big - n2), snaps2, counts2),
        distances,
    )


def _initial_pairs(eta, eta2):
    k = len(eta)
    pairs = [[0] * k for _ in range(k)]
    extra1, extra2 = [], []
    for i in range(k):
        m = min(eta[i], eta2[i])
        pairs[i][i] = m
        extra1 += [i] * (eta[i] - m)
        extra2 += [i] * (eta2[i] - m)
    for i, j in zip(extra1, extra2):
        pairs[i][j] += 1
    return pairs


def _simulate_complete_graph(model, eta, eta2, horizon, stream, record, checkpoints):
    q = model.q
    k = model.k
    big = model.n
    jump = float(q.rates[0, 1]) * k
    kill = float(q.absorption[0])
    pairs = _initial_pairs(eta, eta2)
    # flat list of pair classes with their counts, scanned linearly
    classes = [(i, j) for i in range(k) for j in range(k)]
    count = [pairs[i][j] for i, j in classes]
    eta1, eta2 = list(eta), list(eta2)
    total = big * (jump + kill)
    p_mut = jump / (jump + kill)
    first, second, distances = [], [], []
    snaps1, snaps2 = [], []
    counts1 = {MUTATION: 0, INTERACTION: 0}
    counts2 = {MUTATION: 0, INTERACTION: 0}
    t = 0.0
    obs = 0

    def pick(skip=None, n_total=big):
        target = int(stream.next() * n_total)
        for c, m in enumerate(count):
            if c == skip:
                m -= 1
            if target < m:
                return c
            target -= m
        return len(count) - 1

    while True:
        t_next = t + (stream.exponential(total) if total > 0 else np.inf)
        while obs < len(checkpoints) and checkpoints[obs] < t_next:
            snaps1.append(tuple(eta1))
            snaps2.append(tuple(eta2))
            distances.append(0.5 * sum(abs(x - y) for x, y in zip(eta1, eta2)))
            obs += 1
        if t_next > horizon:
            break
        t = t_next
        if stream.next() < p_mut:
            src = pick()
            site = min(int(stream.next() * k), k - 1)
            dest = (site, site)
            cause = MUTATION
        else:
            src = pick()
            dest = classes[pick(skip=src, n_total=big - 1)]
            cause = INTERACTION
        (i1, i2) = classes[src]
        (j1, j2) = dest
        if (i1, i2) == (j1, j2):
            continue
        count[src] -= 1
        count[j1 * k + j2] += 1
        if i1 != j1:
            eta1[i1] -= 1
            eta1[j1] += 1
            counts1[cause] += 1
            if record:
                first.append(TrajectoryEvent(t, i1 + 1, j1 + 1, cause))
        if i2 != j2:
            eta2[i2] -= 1
            eta2[j2] += 1
            counts2[cause] += 1
            if record:
                second.append(TrajectoryEvent(t, i2 + 1, j2 + 1, cause))
    return (
        Trajectory(first, tuple(eta1), snaps1, counts1),
        Trajectory(second, tuple(eta2), snaps2, counts2),
        distances,
    )


def simulate_coupled(
    model: FvModel,
    eta0,
    eta0_prime,
    horizon: float,
    seed=0,
    record=True,
    observe_at: Sequence[float] = (),
) -> CoupledTrajectory:
    """Simulate two copies of ``model`` under the model's coupling.

    Each marginal is a Fleming-Viot process in its own right. ``distances``
    holds ``d(eta_t, eta_t')`` at the ``observe_at`` times.
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    kind = coupling_kind(model)
    eta = check_configuration(eta0, model.n, model.k)
    eta2 = check_configuration(eta0_prime, model.n, model.k)
    checkpoints = [float(t) for t in observe_at]
    if any(b < a for a, b in zip(checkpoints, checkpoints[1:])) or any(t > horizon for t in checkpoints):
        raise ValueError("observation times must be increasing and within the horizon")
    stream = UniformStream(make_rng(seed))
    if kind == "two-point":
        swapped = eta[0] > eta2[0]
        lo, hi = (eta2, eta) if swapped else (eta, eta2)
        one, two, dist = _simulate_two_point(model, lo[0], hi[0], horizon, stream, record, checkpoints)
        if swapped:
            one, two = two, one
        return CoupledTrajectory(one, two, dist, swapped)
    one, two, dist = _simulate_complete_graph(model, eta, eta2, horizon, stream, record, checkpoints)
    return CoupledTrajectory(one, two, dist)


__all__ = [
    "CoupledTrajectory",
    "coupling_kind",
    "two_point_coupling_table",
    "simulate_coupled",
]
