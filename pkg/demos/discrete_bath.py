"""Discrete-bath check of the stationary moments at a strongly damped point.

Run: python3 demos/discrete_bath.py  (a few seconds)
"""

import numpy as np

from qbm import ModelParams, build_bath, evolve, measure, stationary_quadrature

p = ModelParams(1.0, 0.2, 20.0, 1.0)
bath = build_bath(p.spectrum(), 1500, 200.0, horizon=100.0)
states = evolve(bath, p, None, np.linspace(0, 100, 1001))
m = measure(states, (50, 100))
ref = stationary_quadrature(p, green="full")
print(f"modes={bath.n_modes}, recurrence near Omega_R ~ {bath.t_rec_resonant:.0f}")
print(f"<q^2>: bath {m.moments.q2:.6f}  exact {ref.q2:.6f}")
print(f"<p^2>: bath {m.moments.p2:.6f}  exact {ref.p2:.6f}")
print(f"energy drift {m.max_energy_drift:.1e}, interaction energy {m.interaction_energy:.4f}")
