# %% [markdown]
# Karhunen-Loeve eigen-system of the OU bridge across the four frequency regimes.

# %%
import math

import numpy as np

from oubridge import OuParams, kl_basis
from oubridge.grid import TimeGrid
from oubridge.oracle import conditioned_kernel, nystrom_eigen

# %%
cases = {
    "deterministic start": OuParams(theta=1.0, sigma0=0.0),
    "critical ratio": OuParams(theta=1.0, sigma0=1.0),
    "sub-critical": OuParams(theta=1.0, sigma0=math.sqrt(0.5)),
    "super-critical, trig": OuParams(theta=1.0, sigma0=math.sqrt(2.0)),
    "super-critical, linear": OuParams(theta=1.0, sigma0=math.sqrt(2.0), T=2.0),
    "super-critical, hyperbolic": OuParams(theta=1.0, sigma0=math.sqrt(2.0), T=3.0),
}
for name, p in cases.items():
    b = kl_basis(p, 4)
    kinds = [md.kind.value for md in b.modes]
    print(f"{name:28s} {b.case.value:18s} w={np.round(b.omegas, 4)} {kinds[0]}")

# %% [markdown]
# Compare against the discretised covariance operator.

# %%
for name, p in cases.items():
    lam = kl_basis(p, 4).lambdas
    ny, _ = nystrom_eigen(conditioned_kernel(p, TimeGrid.uniform(p.T, 1500)), 4)
    print(f"{name:28s} max rel diff {np.max(np.abs(lam / ny - 1)):.1e}")

# %%
# orthonormality of the first modes on a fine grid
p = cases["super-critical, hyperbolic"]
g = TimeGrid.uniform(p.T, 4001)
E = kl_basis(p, 5).evaluate(g.points)
print(np.round((E * g.trapezoid_weights()) @ E.T, 6))
