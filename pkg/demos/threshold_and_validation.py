"""Where cascading starts to pay off, and a three-way model cross-check."""
# %%
from cspdc_g2 import analytic, identical_detectors
from cspdc_g2.detstate import g2_matrix
from cspdc_g2.montecarlo import g2_consistent, g2_montecarlo
from cspdc_g2.optsweep import threshold_crossing

cfg = identical_detectors(0.7, 20.0, 5e-9, cascade_efficiency=1e-6)

# %% numeric crossing of the two minima, analytic and exact models
for model in ("analytic", "matrix"):
    tc = threshold_crossing(cfg, model)
    print(f"{model:8s} P_star = {tc.p_star:.4e} ({tc.status})")
print(f"general threshold          {analytic.advantage_threshold(7e6, 7e6, 0.7):.4e}")
print(f"identical-detector form    {analytic.advantage_threshold_identical(7e6, 0.7):.4e}")
# both numeric crossings land near the identical-detector form, not the general one

# %% analytic vs exact vs simulated at a busy operating point
busy = identical_detectors(0.7, 2e3, 5e-9, cascade_efficiency=0.5, pair_rate=1e7)
ana = analytic.g2_cspdc(busy).g2
exact = g2_matrix(busy).g2
mc = g2_montecarlo(busy, 5_000_000, seed=1)
print(f"analytic {ana:.4e}  matrix {exact:.4e}  mc {mc.g2:.4e} +/- {mc.statistical_sigma:.1e}")
print("mc consistent with matrix:", g2_consistent(mc, exact))
