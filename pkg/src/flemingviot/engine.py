"""The N-particle Fleming-Viot process on a finite space.

Particles are exchangeable, so the process is tracked through occupation
numbers. A configuration is a tuple of ``K`` non-negative integers summing
to ``N``; entry ``k`` counts the particles on site ``k + 1``. Event logs use
the 1-based site labels.

From configuration ``eta`` a particle moves from site ``i`` to site ``j`` at
aggregate rate ``eta(i) * (Q[i, j] + p0(i) * eta(j) / (N - 1))``: the first
term is the particle's own jump, the second is a killing at rate ``p0(i)``
followed by a jump onto one of the ``N - 1`` other particles.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Sequence

import numpy as np
import scipy.sparse

from .chain import FiniteDistribution, RateMatrix
from .errors import StateSpaceTooLarge
from .montecarlo import UniformStream, make_rng

STATE_CAP = 200_000
#: Rates are rebuilt from scratch this often to bound floating-point drift.
RECOMPUTE_EVERY = 1 << 16

MUTATION = "mutation"
INTERACTION = "interaction"
TRAJECTORY_HEADER = ("time", "site_from", "site_to", "cause")


@dataclass(frozen=True)
class FvModel:
    """Fleming-Viot system of ``n`` particles driven by the killed chain ``q``."""

    q: RateMatrix
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("the particle system needs N >= 2")
        object.__setattr__(self, "n", int(self.n))

    @property
    def k(self):
        return self.q.size

    @property
    def n_states(self):
        return math.comb(self.n + self.k - 1, self.k - 1)


class TrajectoryEvent(NamedTuple):
    time: float
    site_from: int
    site_to: int
    cause: str


@dataclass
class Trajectory:
    """Output of one simulation run.

    Attributes
    ----------
    events : list of TrajectoryEvent
        Empty when the run was not recorded.
    final : tuple
        Configuration at the horizon.
    snapshots : list of tuple
        Configurations at the requested observation times.
    counts : dict
        Number of events per cause.
    """

    events: List[TrajectoryEvent]
    final: tuple
    snapshots: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)


def check_configuration(eta, n=None, k=None) -> tuple:
    """Validate and normalize a configuration to a tuple of ints."""
    eta = tuple(int(x) for x in eta)
    if any(x < 0 for x in eta):
        raise ValueError("occupation numbers must be non-negative")
    if n is not None and sum(eta) != n:
        raise ValueError(f"configuration holds {sum(eta)} particles, expected {n}")
    if k is not None and len(eta) != k:
        raise ValueError(f"configuration has {len(eta)} sites, expected {k}")
    return eta


def configurations(n: int, k: int) -> list:
    """All of ``E``: occupation vectors of ``n`` particles on ``k`` sites.

    The order is fixed: configurations with more mass on low sites come
    first, so for ``k = 2`` the list is ``(n, 0), (n-1, 1), ..., (0, n)``.
    """
    out = []
    for combo in itertools.combinations_with_replacement(range(k), n):
        eta = [0] * k
        for site in combo:
            eta[site] += 1
        out.append(tuple(eta))
    return out


def transition_rates(model: FvModel, eta) -> list:
    """Strictly positive jump rates out of ``eta`` as ``(target, rate)`` pairs."""
    eta = check_configuration(eta, model.n, model.k)
    q, p0, n = model.q.rates, model.q.absorption, model.n
    out = []
    for i in range(model.k):
        if eta[i] == 0:
            continue
        for j in range(model.k):
            if j == i:
                continue
            rate = eta[i] * (q[i, j] + p0[i] * eta[j] / (n - 1))
            if rate > 0:
                target = list(eta)
                target[i] -= 1
                target[j] += 1
                out.append((tuple(target), float(rate)))
    return out


def fv_generator_matrix(model: FvModel, cap: int = STATE_CAP, sparse: bool = False):
    """Generator of the configuration process over ``configurations(N, K)``.

    Raises :class:`StateSpaceTooLarge` when ``card(E)`` exceeds ``cap``;
    simulate instead in that case.
    """
    size = model.n_states
    if size > cap:
        raise StateSpaceTooLarge(
            f"card(E) = {size} exceeds the cap {cap}; use simulate() for this model"
        )
    states = configurations(model.n, model.k)
    index = {eta: s for s, eta in enumerate(states)}
    rows, cols, vals = [], [], []
    for s, eta in enumerate(states):
        out = 0.0
        for target, rate in transition_rates(model, eta):
            rows.append(s)
            cols.append(index[target])
            vals.append(rate)
            out += rate
        rows.append(s)
        cols.append(s)
        vals.append(-out)
    gen = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))
    return gen if sparse else gen.toarray()


def empirical_measure(eta) -> FiniteDistribution:
    """``eta / N`` as a law on the sites ``1..K``."""
    eta = check_configuration(eta)
    total = sum(eta)
    return FiniteDistribution(np.asarray(eta, float) / total, tuple(range(1, len(eta) + 1)))


def config_distance(eta, eta2) -> float:
    """Half L1 distance between occupation vectors; the number of misplaced particles."""
    a = check_configuration(eta)
    b = check_configuration(eta2)
    if len(a) != len(b):
        raise ValueError("configurations live on different site sets")
    if sum(a) != sum(b):
        raise ValueError("configurations hold different numbers of particles")
    return 0.5 * sum(abs(x - y) for x, y in zip(a, b))


def _rates(eta, q, p0, scale):
    k = len(eta)
    table = [[0.0] * k for _ in range(k)]
    for i in range(k):
        if eta[i]:
            row = table[i]
            for j in range(k):
                if j != i:
                    row[j] = eta[i] * (q[i][j] + p0[i] * eta[j] * scale)
    return table


def simulate(model: FvModel, eta0, horizon: float, seed=0, record=True, observe_at: Sequence[float] = ()):
    """Exact stochastic simulation of the configuration process.

    Parameters
    ----------
    model : FvModel
    eta0 : sequence of int
        Initial configuration.
    horizon : float
        Final time.
    seed : int or numpy.random.Generator
    record : bool
        Keep the event log (disable for Monte Carlo use).
    observe_at : sequence of float
        Increasing times in ``[0, horizon]`` at which to snapshot the state.

    Returns
    -------
    Trajectory
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    eta = list(check_configuration(eta0, model.n, model.k))
    stream = UniformStream(make_rng(seed))
    q = model.q.rates.tolist()
    p0 = model.q.absorption.tolist()
    k = model.k
    scale = 1.0 / (model.n - 1)
    checkpoints = [float(t) for t in observe_at]
    if any(b < a for a, b in zip(checkpoints, checkpoints[1:])) or any(t > horizon for t in checkpoints):
        raise ValueError("observation times must be increasing and within the horizon")

    table = _rates(eta, q, p0, scale)
    row_sums = [sum(r) for r in table]
    events = []
    snapshots = []
    counts = {MUTATION: 0, INTERACTION: 0}
    t = 0.0
    next_obs = 0
    since_rebuild = 0
    while True:
        total = sum(row_sums)
        dt = stream.exponential(total) if total > 0 else math.inf
        t_next = t + dt
        while next_obs < len(checkpoints) and checkpoints[next_obs] < t_next:
            snapshots.append(tuple(eta))
            next_obs += 1
        if t_next > horizon:
            break
        t = t_next
        # pick the ordered pair (i, j), then the cause, from one uniform
        target = stream.next() * total
        i = 0
        while i < k - 1 and target >= row_sums[i]:
            target -= row_sums[i]
            i += 1
        row = table[i]
        j = 0
        while j < k - 1 and (j == i or target >= row[j]):
            if j != i:
                target -= row[j]
            j += 1
        if j == i or eta[i] == 0:
            # round-off walked past the last positive entry; rebuild and redraw
            table = _rates(eta, q, p0, scale)
            row_sums = [sum(r) for r in table]
            continue
        cause = MUTATION if target < eta[i] * q[i][j] else INTERACTION
        eta[i] -= 1
        eta[j] += 1
        counts[cause] += 1
        if record:
            events.append(TrajectoryEvent(t, i + 1, j + 1, cause))
        since_rebuild += 1
        if since_rebuild >= RECOMPUTE_EVERY:
            table = _rates(eta, q, p0, scale)
            row_sums = [sum(r) for r in table]
            since_rebuild = 0
            continue
        for r in (i, j):
            new = [0.0] * k
            if eta[r]:
                for c in range(k):
                    if c != r:
                        new[c] = eta[r] * (q[r][c] + p0[r] * eta[c] * scale)
            table[r] = new
            row_sums[r] = sum(new)
        for r in range(k):
            if r == i or r == j or not eta[r]:
                continue
            row = table[r]
            base = eta[r] * p0[r] * scale
            old = row[i] + row[j]
            row[i] = eta[r] * q[r][i] + base * eta[i]
            row[j] = eta[r] * q[r][j] + base * eta[j]
            row_sums[r] += row[i] + row[j] - old
    return Trajectory(events, tuple(eta), snapshots, counts)


def write_trajectory_csv(trajectory: Trajectory, out) -> None:
    """Write the event log as ``time,site_from,site_to,cause`` records.

    ``out`` is a path or a text stream. Times are written with ``repr`` so
    they round-trip exactly and never depend on the locale.
    """
    if isinstance(out, (str, bytes)) or hasattr(out, "__fspath__"):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            write_trajectory_csv(trajectory, fh)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRAJECTORY_HEADER)
    for ev in trajectory.events:
        writer.writerow((repr(float(ev.time)), ev.site_from, ev.site_to, ev.cause))


def read_trajectory_csv(source) -> List[TrajectoryEvent]:
    """Parse an event log written by :func:`write_trajectory_csv`."""
    if isinstance(source, str) and "\n" in source:
        source = io.StringIO(source)
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8", newline="") as fh:
            return read_trajectory_csv(fh)
    reader = csv.reader(source)
    header = next(reader)
    if tuple(header) != TRAJECTORY_HEADER:
        raise ValueError(f"unexpected header {header!r}")
    return [TrajectoryEvent(float(t), int(a), int(b), c) for t, a, b, c in reader]


def replay(eta0, events) -> tuple:
    """Apply an event log to ``eta0``, checking occupation at every step."""
    eta = list(check_configuration(eta0))
    for ev in events:
        if ev.site_from == ev.site_to:
            raise ValueError("event does not move between distinct sites")
        if eta[ev.site_from - 1] == 0:
            raise ValueError(f"site {ev.site_from} is empty at time {ev.time}")
        eta[ev.site_from - 1] -= 1
        eta[ev.site_to - 1] += 1
    return tuple(eta)
