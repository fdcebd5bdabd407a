# %% [markdown]
# Optimal functional quantizers for two reference configurations.
# Paths are written as CSV for plotting elsewhere.

# %%
import math
from pathlib import Path

import numpy as np

from oubridge import BridgeSpec, OuParams, functional_quantizer
from oubridge.grid import paths_to_csv

out = Path("quantizer_out")
out.mkdir(exist_ok=True)

# %%
configs = {
    "n10": (BridgeSpec(OuParams(theta=1.0, sigma=1.0, T=1.0), 0.0), 10),
    "n16": (
        BridgeSpec(OuParams(theta=1.0, mu=-1.0, sigma=1.0, sigma0=math.sqrt(0.5), T=10.0), 1.0),
        16,
    ),
}
for name, (spec, N) in configs.items():
    fq = functional_quantizer(spec, N, m_max=8, mc_budget=200_000)
    paths = fq.paths(201)
    (out / f"{name}.csv").write_text(paths_to_csv(paths, fq.probabilities))
    print(name, "d =", fq.d, "E_N^2 =", round(fq.report.total_sq, 5))
    for r in fq.reports:
        print(f"   m={r.m}  tail={r.tail:.5f}  quant={r.finite_dim_error_sq:.5f}  total={r.total_sq:.5f}")
    print("   starts:", np.round(paths.values[:, 0], 3))
    print("   weights:", np.round(fq.probabilities, 3))
