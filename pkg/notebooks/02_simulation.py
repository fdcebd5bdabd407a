# %% [markdown]
# Sampling bridge paths: Euler on the pinned SDE versus the exact Gaussian sampler.

# %%
import math

import numpy as np

from oubridge import BridgeSpec, OuParams
from oubridge.bridge_sim import (
    euler_noise_shape,
    exact_noise_shape,
    simulate_bridge,
    simulate_exact,
)
from oubridge.grid import TimeGrid
from oubridge.ou_model import bridge_cov, bridge_mean

rng = np.random.Generator(np.random.Philox(2024))

# %%
p = OuParams(theta=1.0, mu=-1.0, sigma=1.0, sigma0=math.sqrt(0.5), T=10.0)
spec = BridgeSpec(p, 1.0)
grid = TimeGrid.uniform(p.T, 513)
n = 20_000

euler = simulate_bridge(spec, grid, rng.standard_normal(n), rng.standard_normal(euler_noise_shape(grid, n)))
exact = simulate_exact(spec, grid, rng.standard_normal(exact_noise_shape(grid, n)))

# %%
idx = [0, 128, 256, 384]
t = grid.points[idx]
print("t          ", t)
print("mean       ", np.round(bridge_mean(spec, t), 4))
print("euler mean ", np.round(euler.values[:, idx].mean(axis=0), 4))
print("exact mean ", np.round(exact.values[:, idx].mean(axis=0), 4))
print("var        ", np.round(np.diag(bridge_cov(p, t[:, None], t[None, :])), 4))
print("euler var  ", np.round(euler.values[:, idx].var(axis=0), 4))
print("exact var  ", np.round(exact.values[:, idx].var(axis=0), 4))

# %%
# all paths end at z
print(np.unique(euler.values[:, -1]), np.unique(exact.values[:, -1]))
