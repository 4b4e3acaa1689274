# %% [markdown]
# # Spectral gap of the two-point particle system
#
# For two sites the particle system reduces to a birth-death chain on the
# occupation of site 1, so its spectral gap ``lambda_N`` is a tridiagonal
# eigenvalue. We compare it against three other rates as N grows:
#
# * ``lambda_cond``: convergence rate of the conditioned law to the QSD,
# * ``rho``: the generic coupling rate,
# * the Hardy lower bound, and the best variational rate ``lambda_u``.

# %%
import numpy as np

from flemingviot.config import load_preset
from flemingviot import two_point as tp

# %% [markdown]
# With constant killing every particle jumps independently, so all rates
# are ``a + b`` whatever N.

# %%
cfg = load_preset("constant-p0")
for rep in tp.gap_curve(cfg.model_params(), [2, 5, 20, 60]):
    print(rep)

# %% [markdown]
# A regime where ``lambda_N`` is not monotone: it starts above
# ``lambda_cond``, dips below it, and climbs back towards it.

# %%
params = load_preset("regime-iii").model_params()
grid = np.arange(2, 61)
reports = tp.gap_curve(params, grid, optimize=False)
lam = np.array([r.lambda_N for r in reports])
print(f"lambda_cond = {reports[0].lambda_cond:.4f}, rho = {reports[0].rho:.4f}")
print(f"min lambda_N = {lam.min():.4f} at N = {grid[lam.argmin()]}")
crossing = grid[np.argmax(lam < reports[0].lambda_cond)]
print(f"lambda_N first drops below lambda_cond at N = {crossing}")
for n in (2, 4, 7, 10, 16, 30, 60):
    r = reports[n - 2]
    print(f"N={n:3d}  lambda_N={r.lambda_N:.4f}  hardy>={r.hardy_lower:.4f}")

# %% [markdown]
# ``lambda_u`` is a lower bound for every positive weight vector ``u``; the
# maximum over ``u`` is the gap itself. Constant weights give back ``rho``;
# the optimizer closes the rest.

# %%
for n in (5, 16, 40):
    p = params.with_n(n)
    flat = tp.lambda_u(p, np.ones(n))
    best = tp.optimize_lambda_u(p)
    print(f"N={n:3d}  u=1: {flat:.4f}  optimized: {best.value:.6f}  exact: {best.target:.6f}")

# %% [markdown]
# When ``rho <= 0`` the coupling bound says nothing, but the Hardy bound
# stays bounded away from zero.

# %%
stress = load_preset("rho-negative").model_params()
print("rho =", stress.rho)
lows = [tp.hardy_bound(stress.with_n(n)).lower for n in range(20, 201, 20)]
print("Hardy lower bounds, N = 20..200:", np.round(lows, 4))
