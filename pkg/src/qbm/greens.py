"""Retarded Green's function of the damped oscillator.

``G(t)`` solves the noiseless equation of motion with ``G(0) = 0`` and
``G'(0) = 1``. For the Drude bath its Laplace transform is

    g(s) = (s + Lambda) / ((s^2 + Omega^2)(s + Lambda) - gamma Lambda^2),

a cubic with two resonant poles near ``-gamma/2 +- i W`` and one fast pole
near ``-Lambda + gamma``. Dropping the fast pole and the ``O(1/Lambda)``
shifts of the other two leaves ``G(t) = exp(-gamma t/2) sin(W t)/W``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RootFindingFailure
from .params import ModelParams

MODES = ("large_lambda", "full")


@dataclass(frozen=True)
class GreenPoles:
    """Roots of ``(s^2 + Omega^2)(s + Lambda) - gamma Lambda^2``.

    ``s1`` has positive imaginary part (near ``-gamma/2 + i W``), ``s2`` is
    its conjugate and ``s3`` is the real fast root near ``-Lambda + gamma``.
    """

    s1: complex
    s2: complex
    s3: complex

    def as_array(self):
        return np.array([self.s1, self.s2, self.s3])


def _cubic(params: ModelParams):
    lam, om2, g = params.lam, params.omega_sq, params.gamma
    # s^3 + Lambda s^2 + Omega^2 s + Omega^2 Lambda - gamma Lambda^2
    # the constant term equals Lambda Omega_R^2 exactly
    return np.array([1.0, lam, om2, lam * params.omega_r**2])


def poles_full(params: ModelParams, tol=1e-12) -> GreenPoles:
    """Roots of the Drude cubic, polished by Newton steps.

    Raises
    ------
    RootFindingFailure
        If the relative residual after polishing exceeds ``tol``.
    """
    c = _cubic(params)
    comp = np.zeros((3, 3))
    comp[0, :] = -c[1:]
    comp[1, 0] = comp[2, 1] = 1.0
    roots = np.linalg.eigvals(comp).astype(complex)

    p = np.poly1d(c)
    dp = p.deriv()
    for k in range(3):
        z = roots[k]
        for _ in range(3):
            d = dp(z)
            if d == 0:
                break
            step = p(z) / d
            z = z - step
            if abs(step) <= 1e-16 * abs(z):
                break
        roots[k] = z

    if np.all(np.abs(roots.imag) <= 1e-12 * np.abs(roots)):
        real = int(np.argmin(roots.real))
    else:
        real = int(np.argmin(np.abs(roots.imag)))
    fast = roots[real]
    rest = np.delete(roots, real)
    if params.gamma == 0:
        rest = np.array([1j * params.omega_r, -1j * params.omega_r])
        fast = complex(-params.lam)
    up = rest[np.argmax(rest.imag)]
    # force an exact conjugate pair and a real fast root
    s1 = complex(up.real, abs(up.imag))
    s2 = s1.conjugate()
    s3 = complex(fast.real, 0.0)

    for s in (s1, s3):
        terms = np.polyval(np.abs(c), abs(s))
        if abs(p(s)) > tol * terms:
            raise RootFindingFailure(f"residual {abs(p(s)):.3g} at root {s}")
    return GreenPoles(s1, s2, s3)


def _residue_weights(poles: GreenPoles, lam):
    s = poles.as_array()
    w = np.empty(3, dtype=complex)
    for i in range(3):
        others = np.delete(s, i)
        w[i] = (s[i] + lam) / np.prod(s[i] - others)
    return s, w


def green_time(params: ModelParams, t, mode="large_lambda", derivative=0):
    """Green's function ``G(t)`` or its first two time derivatives.

    Parameters
    ----------
    params : ModelParams
    t : float or array_like
        Times, ``t >= 0``.
    mode : {'large_lambda', 'full'}
        ``large_lambda`` uses ``exp(-gamma t/2) sin(W t)/W``; ``full`` sums
        residues over the three roots of the Drude cubic.
    derivative : {0, 1, 2}

    Returns
    -------
    float or ndarray
    """
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}")
    if derivative not in (0, 1, 2):
        raise DomainError("derivative must be 0, 1 or 2")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be non-negative")
    if mode == "large_lambda":
        lp = complex(-params.gamma / 2, params.w)
        s = np.array([lp, lp.conjugate()])
        wts = np.array([1.0 / (2j * params.w), -1.0 / (2j * params.w)])
    else:
        s, wts = _residue_weights(poles_full(params), params.lam)
    wts = wts * s**derivative
    out = np.real(np.exp(np.multiply.outer(t, s)) @ wts)
    return out[()] if out.ndim == 0 else out


def green_modes(params: ModelParams, mode="large_lambda"):
    """Exponents ``s_a`` and weights ``c_a`` with ``G(t) = sum_a c_a exp(s_a t)``."""
    if mode == "large_lambda":
        lp = complex(-params.gamma / 2, params.w)
        return (np.array([lp, lp.conjugate()]),
                np.array([1.0 / (2j * params.w), -1.0 / (2j * params.w)]))
    return _residue_weights(poles_full(params), params.lam)


def green_laplace(params: ModelParams, s, mode="full"):
    """Laplace-domain ``g(s)``; ``large_lambda`` gives ``1/(s^2 + gamma s + Omega_R^2)``."""
    s = np.asarray(s, dtype=complex)
    if mode == "large_lambda":
        return 1.0 / (s * s + params.gamma * s + params.omega_r**2)
    lam = params.lam
    return (s + lam) / ((s * s + params.omega_sq) * (s + lam) - params.gamma * lam**2)


def large_lambda_remainder_bound(params: ModelParams, t):
    """Nominal size of the terms dropped by the large-Lambda form.

    ``(|Omega_R| + gamma)/Lambda^2`` for the pole shifts plus
    ``(gamma/Lambda^2) exp(-(Lambda - gamma) t)`` for the fast branch.
    The residues and frequencies of the resonant poles also move at
    ``O(gamma/Lambda)``, which this estimate leaves out; see
    :func:`large_lambda_deviation_bound` for a bound that holds.
    """
    t = np.asarray(t, dtype=float)
    lam, g = params.lam, params.gamma
    return (params.omega_r + g) / lam**2 + g / lam**2 * np.exp(-(lam - g) * t)


def large_lambda_deviation_bound(params: ModelParams, t):
    """Bound on ``|G_full - G_large_lambda|`` that includes the ``O(gamma/Lambda)`` pole motion.

    ``(gamma/(Lambda Omega_R)) (1 + Omega_R t) exp(-gamma t/2)`` plus
    :func:`large_lambda_remainder_bound`. The linear factor is the phase
    error of the shifted resonance.
    """
    t = np.asarray(t, dtype=float)
    wr, g = params.omega_r, params.gamma
    drift = g / (params.lam * wr) * (1 + wr * t) * np.exp(-0.5 * g * t)
    return drift + large_lambda_remainder_bound(params, t)

