"""Fleming-Viot particle approximations of quasi-stationary distributions.

Exact simulation of the N-particle system over a finite killed Markov chain,
closed forms for the complete graph and the two-point space, and the
spectral tools used to check them.
"""
from .birth_death import BirthDeathSpec
from .chain import (
    FiniteDistribution,
    RateMatrix,
    SemigroupSnapshot,
    build_rate_matrix,
    conditioned_law,
    qsd_principal,
    semigroup,
    stationary_distribution,
    total_variation,
    tv_distance,
)
from .complete_graph import CompleteGraphParams
from .coupling import CoupledTrajectory, simulate_coupled
from .engine import (
    FvModel,
    Trajectory,
    TrajectoryEvent,
    config_distance,
    configurations,
    empirical_measure,
    fv_generator_matrix,
    read_trajectory_csv,
    replay,
    simulate,
    write_trajectory_csv,
)
from .errors import (
    ConvergenceError,
    FullyAbsorbedError,
    NonReversibleError,
    ReducibleChainError,
    StateSpaceTooLarge,
)
from .montecarlo import DEFAULT_SEED, mc_estimate, mc_samples, replica_rng
from .spectral import SpectralReport, dense_spectrum, tridiagonal_spectrum
from .two_point import GapReport, TwoPointParams, gap_curve

__version__ = "0.1.0"
