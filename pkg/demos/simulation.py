# %% [markdown]
# # Simulating the particle system
#
# Exact event-driven simulation, checked against the law obtained from the
# matrix exponential of the generator.

# %%
import numpy as np
import scipy.linalg

from flemingviot import complete_graph as cg
from flemingviot.engine import configurations, empirical_measure, fv_generator_matrix, simulate
from flemingviot.montecarlo import mc_samples

# %%
params = cg.CompleteGraphParams(3, 1.0, 100)
traj = simulate(params.fv_model(), (100, 0, 0), 50.0, seed=1)
print("events:", len(traj.events), dict(traj.counts))
print("final empirical measure:", empirical_measure(traj.final).weights)

# %% [markdown]
# Law at t = 1 for a small system, simulated against exact.


# %%
def final_state(rng, model=cg.CompleteGraphParams(2, 0.5, 4).fv_model()):
    return simulate(model, (4, 0), 1.0, seed=rng, record=False).final[0]


model = cg.CompleteGraphParams(2, 0.5, 4).fv_model()
states = configurations(4, 2)
exact = scipy.linalg.expm(fv_generator_matrix(model))[states.index((4, 0))]
draws = mc_samples(final_state, 20000, seed=2)
empirical = np.array([np.mean(draws == s[0]) for s in states])
print("exact    ", np.round(exact, 4))
print("simulated", np.round(empirical, 4))
