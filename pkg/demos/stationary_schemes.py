"""Stationary moments by every scheme across cutoffs at fixed renormalized frequency.

Run: python3 demos/stationary_schemes.py
"""

import numpy as np

from qbm import (ModelParams, interaction_energy_stationary, stationary_closed, stationary_markov,
                 stationary_nonmarkov, stationary_quadrature)

GAMMA, TEMP = 1e-3, 1.0

print(f"gamma={GAMMA}, T={TEMP}, Omega_R=1")
print(f"{'Lambda':>8} {'p2 exact':>12} {'p2 full':>12} {'p2 Markov':>12} {'p2 NM':>12} {'|H_SB|':>10}")
for lam in np.logspace(1, 4, 7):
    p = ModelParams(1.0, GAMMA, lam, TEMP)
    e, f = stationary_closed(p), stationary_quadrature(p, green="full")
    m, nm = stationary_markov(p), stationary_nonmarkov(p)
    h = abs(interaction_energy_stationary(p, "numerical"))
    print(f"{lam:8.3g} {e.p2:12.6f} {f.p2:12.6f} {m.p2:12.6f} {nm.p2:12.6f} {h:10.4f}")
