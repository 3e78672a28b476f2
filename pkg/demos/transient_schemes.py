"""Relaxation of <q^2> from a displaced state under the three dynamical schemes.

Run: python3 demos/transient_schemes.py
"""

import numpy as np

from qbm import InitialMoments, ModelParams, integrate_markov, integrate_nonmarkov, transient_moments

p = ModelParams(1.0, 0.05, 20.0, 5.0)
init = InitialMoments(1.5, 1.5, 0.0, 1.0, 0.0)
t = np.linspace(0, 120, 13)

ex = transient_moments(p, init, t)
mk = integrate_markov(p, init, t)
nm = integrate_nonmarkov(p, init, t)
print(f"{'t':>6} {'q2 exact':>12} {'q2 Markov':>12} {'q2 NM':>12} {'<q> exact':>11}")
for k, tt in enumerate(t):
    print(f"{tt:6.1f} {ex.q2[k]:12.6f} {mk.q2[k]:12.6f} {nm.q2[k]:12.6f} {ex.mean_q[k]:11.6f}")
