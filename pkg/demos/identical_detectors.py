"""Identical detectors everywhere (eta = 0.7, 20 dark counts/s, W = 5 ns, P = 1e-6).

Uses the exact detector-state model.  The cascaded source reaches a lower
minimum and keeps it over several decades of pump rate.
"""
# %%
import numpy as np

from cspdc_g2 import analytic, identical_detectors
from cspdc_g2.optsweep import g2_curve

cfg = identical_detectors(0.7, 20.0, 5e-9, cascade_efficiency=1e-6)
rates = np.logspace(0, 8, 17)
curves = {"spdc": g2_curve("matrix", cfg.as_spdc(), rates), "cspdc": g2_curve("matrix", cfg, rates)}

# %%
print(f"{'N /s':>9s} {'SPDC':>11s} {'CSPDC':>11s}")
for (n, gs), (_, gc) in zip(curves["spdc"].samples, curves["cspdc"].samples):
    print(f"{n:9.2e} {gs:11.3e} {gc:11.3e}")

# %%
for name, c in curves.items():
    print(f"{name:5s}: min {c.g2_min:.4e} at {c.n_opt:.4g} /s, "
          f"10% plateau {c.plateau.lo:.3g}..{c.plateau.hi:.3g} /s ({c.plateau.decades:.2f} decades)")
ratio = curves["spdc"].g2_min / curves["cspdc"].g2_min
print(f"improvement {ratio:.4f}, closed form {analytic.improvement_ratio(0.7, 1e-6, 7e6):.4f}")
