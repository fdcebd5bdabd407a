# %% [markdown]
# How E_N decays in N, and how far the small-N slope is from the -1/2 exponent.

# %%
import math

import numpy as np

from oubridge import BridgeSpec, OuParams, rate_check

# %%
for theta in (0.0, 1.0):
    study = rate_check(BridgeSpec(OuParams(theta=theta), 0.0), [2, 4, 8, 16, 32, 64], mc_budget=100_000, eval_budget=100_000)
    print(f"theta={theta}: slope={study.slope:.3f}  K={study.K:.3f}")
    for N, e, d in zip(study.N, study.error, study.dims):
        print(f"   N={N:3d}  E_N={e:.4f}  d={d}  E_N*sqrt(log N)={e * math.sqrt(math.log(N)):.4f}")

# %% [markdown]
# Local slopes of the Shannon bound for the Brownian bridge, from small to astronomically large N.

# %%
lam = 1 / (np.arange(1, 200_001) * np.pi) ** 2


def bound(rate):
    lo, hi = 0.0, lam[0]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if 0.5 * np.sum(np.log(lam[lam > mid] / mid)) > rate else (lo, mid)
    return math.sqrt(np.sum(np.minimum(lam, lo)))


logN = np.array([math.log(2), math.log(64), 1e2, 1e4])
for a, b in zip(logN[:-1], logN[1:]):
    s = (math.log(bound(b)) - math.log(bound(a))) / (math.log(b) - math.log(a))
    print(f"log N from {a:8.2f} to {b:8.2f}: slope {s:.3f}")
