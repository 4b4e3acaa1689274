# %% [markdown]
# # Complete graph: invariant law, correlations and chaos
#
# On the complete graph with uniform killing ``p`` the invariant law of the
# configuration is explicit, and the two-site covariance solves a linear ODE.

# %%
import numpy as np

from flemingviot import complete_graph as cg
from flemingviot import oracles
from flemingviot.engine import configurations

# %% [markdown]
# The closed-form invariant law against a linear solve of the full
# generator.

# %%
params = cg.CompleteGraphParams(3, 0.5, 4)
law = cg.invariant_law(params)
oracle = oracles.brute_force_invariant(params)
print("states:", len(law.support), " max |closed - solve| =", np.abs(law.weights - oracle).max())
for eta, w in list(zip(configurations(4, 3), law.weights))[:5]:
    print(eta, round(w, 6))

# %% [markdown]
# Normalized stationary covariance ``cov(eta(1)/N, eta(2)/N)`` decays like
# like ``1/N``; for K = 3, p = 1, ``N`` times it approaches ``-2/9``.

# %%
for n in (10, 100, 1000, 10000):
    stat = cg.stationary_covariance(cg.CompleteGraphParams(3, 1.0, n))
    print(f"N={n:6d}  N*cov = {n * stat.normalized_cov:+.6f}")

# %% [markdown]
# Covariance in time, all particles started on site 1, against a
# Runge-Kutta solution of the moment equations.

# %%
params = cg.CompleteGraphParams(3, 1.0, 20)
times = np.array([0, 0.5, 1, 2, 5])
ode = oracles.moment_ode_solution(params, 20.0, 0.0, 0.0, times)
for t, o in zip(times, ode):
    closed = cg.covariance_dynamics(params, 20.0, 0.0, 0.0, t)
    print(f"t={t:4.1f}  closed={closed:+.8f}  ode={o:+.8f}")

# %% [markdown]
# Propagation of chaos: the expected distance of the empirical measure to
# uniform, under the invariant law, against its bound.

# %%
for n in (4, 16, 64):
    p = cg.CompleteGraphParams(2, 1.0, n)
    print(f"N={n:3d}  E[dist] = {cg.expected_distance_to_uniform(p):.4f}  bound = {cg.chaos_bound(p):.4f}")
