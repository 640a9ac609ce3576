"""Noise-free g2 detectors: the cascade removes herald dark counts almost entirely.

Heralds: eta = 0.7, 10 dark counts/s; g2 detectors are dark-free; W = 2 ns;
P = 1e-6.  Both sources are compared at equal heralded photon rates.
"""
# %%
import numpy as np

from cspdc_g2 import analytic, identical_detectors
from cspdc_g2.detstate import g2_matrix

cfg = identical_detectors(0.7, 10.0, 2e-9, cascade_efficiency=1e-6, g2_dark_rate=0.0)
spdc = cfg.as_spdc()

# %%
print(f"{'heralded/s':>11s} {'SPDC g2':>11s} {'CSPDC g2':>11s} {'ratio':>9s}")
for rate in np.logspace(-3, 1, 5):
    gs = g2_matrix(spdc.with_pair_rate(analytic.pair_rate_for_heralded_rate(spdc, rate))).g2
    gc = g2_matrix(cfg.with_pair_rate(analytic.pair_rate_for_heralded_rate(cfg, rate))).g2
    print(f"{rate:11.3g} {gs:11.3e} {gc:11.3e} {gs / gc:9.1f}")

# %% limiting minima with perfect g2 detectors
lim = analytic.perfect_g2_detector_limits(cfg)
print(f"SPDC min {lim.g2_s_min:.3e}, CSPDC min {lim.g2_c_min:.3e}, ratio {lim.ratio:.3e}")
