"""Minimum g2 against the detector figure of merit H = eta / (W d).

All detectors share eta = 0.7.  Cascading helps once P * H is large enough;
below that the extra herald only adds dark counts.
"""
# %%
import numpy as np

from cspdc_g2 import analytic, identical_detectors

window, eta = 5e-9, 0.7
print(f"{'H':>9s} {'SPDC':>11s}" + "".join(f"{'P=' + format(p, '.0e'):>11s}" for p in (1e-8, 1e-6, 1e-4)))
for h in np.logspace(5, 10, 11):
    cfg = identical_detectors(eta, eta / (window * h), window, cascade_efficiency=1e-6)
    row = f"{h:9.2e} {analytic.g2_spdc_min(cfg.as_spdc()).g2_min:11.3e}"
    for p in (1e-8, 1e-6, 1e-4):
        row += f" {analytic.g2_cspdc_min(cfg.as_cspdc(p)).g2_min:10.3e}"
    print(row)

# %% conversion efficiency needed to break even
for h in (1e6, 1e7, 1e8, 1e9):
    print(f"H = {h:.0e}: P_threshold = {analytic.advantage_threshold(h, h, eta):.3e}, "
          f"identical-detector form = {analytic.advantage_threshold_identical(h, eta):.3e}")
