# %% [markdown]
# The oracle suite, plus the Mercer trace with and without a tail estimate.

# %%
import math

from oubridge import OuParams, kl_basis, total_bridge_variance
from oubridge.verification import mercer_tail, run_verification

# %%
for c in run_verification(n_paths=20_000):
    print(c.line())

# %%
for theta, s02 in [(1.0, 0.5), (1.0, 2.0), (-0.5, 1.0), (0.0, 1.0)]:
    p = OuParams(theta=theta, sigma0=math.sqrt(s02))
    s = kl_basis(p, 2000).lambdas.sum()
    tr = total_bridge_variance(p)
    print(f"theta={theta:5.1f} s0^2={s02:3.1f}  trace={tr:.6f}  raw gap={(tr - s) / tr:.2e}"
          f"  with tail={(tr - s - mercer_tail(p, 2000)) / tr:.1e}")
