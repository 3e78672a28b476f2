"""Digamma function and resonance-safe Matsubara sums.

Every thermal series in the package has the form

    B[phi] = cot(Lambda/2T) phi(Lambda) - 4T sum_{l>=1} nu_l/(Lambda^2 - nu_l^2) phi(nu_l),

with Matsubara frequencies ``nu_l = 2 pi l T``. It is what closing a
frequency contour picks up from the Drude pole at ``w = i Lambda`` and from
the poles of ``coth(w/2T)``. :func:`matsubara_bracket` evaluates it for any
smooth ``phi``. It sums exactly up to a cutoff, adds a midpoint
Euler-Maclaurin tail, and pairs the resonant term with the cotangent when
``Lambda/2 pi T`` is nearly an integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from .errors import DomainError, NonConvergence, PoleError, ResonanceError

# B_2k / (2k) for k = 1..8
_BERN = np.array([1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510])
_BERN_COEF = _BERN / (2 * np.arange(1, 9))
_LIFT = 12.0


def _digamma_asym(z):
    # valid for Re z >= 12
    zi2 = 1.0 / (z * z)
    acc = np.zeros_like(z)
    for c in _BERN_COEF[::-1]:
        acc = acc * zi2 + c
    return np.log(z) - 0.5 / z - acc * zi2


def digamma(z):
    """Digamma function for complex arguments.

    Lifts ``Re z`` to at least 12 with ``psi(z+1) = psi(z) + 1/z`` and then
    sums the Bernoulli asymptotic series. Half-plane ``Re z < 0.5`` goes
    through the reflection ``psi(z) = psi(1-z) - pi cot(pi z)`` first.

    Parameters
    ----------
    z : complex or array_like

    Returns
    -------
    complex or ndarray of complex

    Raises
    ------
    PoleError
        If any element is a non-positive integer.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z).copy()
    on_pole = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    if np.any(on_pole):
        raise PoleError(f"digamma has poles at non-positive integers: {z[on_pole][0].real}")
    out = np.zeros_like(z)
    refl = z.real < 0.5
    if np.any(refl):
        zr = z[refl]
        out[refl] -= math.pi / np.tan(math.pi * zr)
        z[refl] = 1.0 - zr
    shift = np.maximum(0, np.ceil(_LIFT - z.real)).astype(int)
    for k in range(int(shift.max(initial=0))):
        m = shift > k
        out[m] -= 1.0 / z[m]
        z[m] += 1.0
    out += _digamma_asym(z)
    return out[0] if scalar else out


def coth(z):
    """Hyperbolic cotangent, stable for large ``|Re z|`` and complex input."""
    z = np.asarray(z, dtype=complex)
    sgn = np.where(z.real < 0, -1.0, 1.0)
    u = np.exp(-2.0 * z * sgn)
    out = sgn * (1.0 + u) / (1.0 - u)
    return out[()] if out.ndim == 0 else out


def coth_imag(x):
    """``i coth(i x)``, evaluated as ``cot(x)``.

    The identity holds for real ``x``; using ``cot`` avoids a complex
    round trip through ``coth``.
    """
    return 1.0 / np.tan(x)


def coth_thermal(omega, temperature):
    """``coth(w/2T)`` for real ``w``; ``sign(w)`` at ``T = 0``."""
    omega = np.asarray(omega, dtype=float)
    if temperature == 0:
        return np.sign(omega)
    with np.errstate(divide="ignore"):
        return (1.0 / np.tanh(omega / (2.0 * temperature)))


@dataclass(frozen=True)
class MatsubaraConfig:
    """Truncation controls for Matsubara sums.

    Attributes
    ----------
    rel_tol : float
        Target relative accuracy for the tail integral, in ``(0, 1e-6]``.
    max_terms : int
        Hard cap on explicitly summed terms, at least 1000.
    resonance_guard : float
        Half-width around integers of ``Lambda/2 pi T`` where the resonant
        term is paired with the cotangent.
    min_terms : int
        Explicit terms are summed to ``max(min_terms, span * Lambda/2 pi T)``.
    span : float
    """

    rel_tol: float = 1e-12
    max_terms: int = 10_000_000
    resonance_guard: float = 1e-3
    min_terms: int = 1000
    span: float = 4.0

    def __post_init__(self):
        if not 0 < self.rel_tol <= 1e-6:
            raise DomainError("rel_tol must lie in (0, 1e-6]")
        if self.max_terms < 1000:
            raise DomainError("max_terms must be at least 1000")
        if not self.resonance_guard >= 0:
            raise DomainError("resonance_guard must be non-negative")


DEFAULT_CONFIG = MatsubaraConfig()


@dataclass(frozen=True)
class BracketResult:
    value: complex | np.ndarray
    error: float
    n_terms: int
    resonant: bool


def _r_series(eps):
    # cot(eps) - 1/eps for small eps
    e2 = eps * eps
    return -eps / 3.0 - eps * e2 / 45.0 - 2.0 * eps * e2 * e2 / 945.0 - eps * e2**3 / 4725.0


def resonance_offset(lam, temperature):
    """Distance of ``Lambda/2 pi T`` from its nearest positive integer, and that integer."""
    x = lam / (2.0 * math.pi * temperature)
    n = max(1, int(round(x)))
    return x - n, n


def matsubara_bracket(phi, lam, temperature, cfg: MatsubaraConfig = DEFAULT_CONFIG,
                      *, on_resonance="pair", n_terms=None, dphi=None,
                      chunk=200_000) -> BracketResult:
    """Evaluate ``cot(Lambda/2T) phi(Lambda) - 4T sum_l nu_l/(Lambda^2-nu_l^2) phi(nu_l)``.

    Parameters
    ----------
    phi : callable
        Maps a 1-D array of positive frequencies to an array whose first axis
        matches the input; trailing axes are summed independently. Must be
        smooth on ``(0, inf)`` and decay fast enough for the series to
        converge.
    lam, temperature : float
        Cutoff and temperature, both positive.
    cfg : MatsubaraConfig
    on_resonance : {'pair', 'raise'}
        Near-integer ``Lambda/2 pi T`` is either handled by pairing the
        singular term with the cotangent or rejected.
    n_terms : int, optional
        Override the number of explicitly summed terms.
    dphi : callable, optional
        Derivative of ``phi``; only used at exact resonance.

    Returns
    -------
    BracketResult
        ``error`` bounds the tail approximation (the first neglected
        Euler-Maclaurin correction plus the quadrature error) and the
        summation roundoff.

    Raises
    ------
    DomainError
        Non-positive temperature or cutoff.
    ResonanceError
        With ``on_resonance='raise'`` inside the guard band.
    NonConvergence
        When more than ``cfg.max_terms`` terms would be needed.
    """
    if not temperature > 0:
        raise DomainError("Matsubara sums need T > 0")
    if not lam > 0:
        raise DomainError("lam must be positive")
    T = float(temperature)
    step = 2.0 * math.pi * T
    x = lam / step
    delta, l_star = resonance_offset(lam, T)
    resonant = abs(delta) < cfg.resonance_guard
    if resonant and on_resonance == "raise":
        raise ResonanceError(
            f"Lambda/2piT = {x:.9g} is within {cfg.resonance_guard} of {l_star}")
    L = n_terms if n_terms is not None else max(cfg.min_terms, int(math.ceil(cfg.span * x)))
    L = max(L, l_star + 10)
    if L > cfg.max_terms:
        raise NonConvergence(f"{L} Matsubara terms needed, cap is {cfg.max_terms}")

    phi_lam = np.asarray(phi(np.array([lam])))[0]
    if resonant:
        nu_s = step * l_star
        gap = lam - nu_s
        phi_s = np.asarray(phi(np.array([nu_s])))[0]
        eps = gap / (2.0 * T)
        if abs(gap) > 1e-6 * lam:
            dd = (phi_lam - phi_s) / gap
        elif dphi is not None:
            dd = np.asarray(dphi(np.array([0.5 * (lam + nu_s)])))[0]
        else:
            h = 1e-4 * lam
            mid = 0.5 * (lam + nu_s)
            pm = np.asarray(phi(np.array([mid + h, mid - h])))
            dd = (pm[0] - pm[1]) / (2 * h)
        total = _r_series(eps) * phi_lam + 2.0 * T * dd + 2.0 * T * phi_s / (lam + nu_s)
    else:
        total = phi_lam / math.tan(lam / (2.0 * T))

    abs_sum = np.abs(total)
    for start in range(1, L + 1, chunk):
        l = np.arange(start, min(L, start + chunk - 1) + 1)
        if resonant:
            l = l[l != l_star]
            if l.size == 0:
                continue
        nu = step * l
        c = -4.0 * T * nu / ((lam - nu) * (lam + nu))
        vals = np.asarray(phi(nu))
        c = c.reshape(c.shape + (1,) * (vals.ndim - 1))
        total = total + np.sum(c * vals, axis=0)
        abs_sum = abs_sum + np.sum(np.abs(c * vals), axis=0)

    # midpoint Euler-Maclaurin tail: sum_{l>L} g(l) ~ int_{L+1/2}^inf g + g'(L+1/2)/24
    def g(lv):
        lv = np.atleast_1d(np.asarray(lv, dtype=float))
        nu = step * lv
        c = -4.0 * T * nu / ((lam - nu) * (lam + nu))
        vals = np.asarray(phi(nu))
        return c.reshape(c.shape + (1,) * (vals.ndim - 1)) * vals

    tail_int, tail_err = quad_vec(lambda lv: g(lv)[0], L + 0.5, np.inf,
                                  epsrel=cfg.rel_tol, epsabs=0.0, limit=2000)
    gpair = g(np.array([L, L + 1.0]))
    correction = (gpair[1] - gpair[0]) / 24.0
    total = total + tail_int + correction
    # summation roundoff grows with the magnitude of the summed terms
    roundoff = 16 * np.finfo(float).eps * float(np.max(abs_sum + np.abs(total)))
    err = float(np.max(np.abs(correction))) + float(tail_err) + roundoff
    return BracketResult(total, err, int(L), bool(resonant))


def _dl(l, omega_r, gamma, temperature):
    step = 2.0 * math.pi * temperature
    r = omega_r / step
    g = gamma / step
    return (l * l + r * r) ** 2 - l * l * g * g


def matsubara_F(lam, omega_r, gamma, temperature, cfg: MatsubaraConfig = DEFAULT_CONFIG):
    """Thermal Matsubara function entering ``<q^2>``.

    ``F = (1/4 pi^3) x^2 sum_l l / ((l^2 - x^2) D_l)`` with ``x = Lambda/2 pi T``,
    ``D_l = (l^2 + r^2)^2 - l^2 g^2``, ``r = Omega_R/2 pi T`` and
    ``g = gamma/2 pi T``. The full ``<q^2>`` carries ``(gamma/T^2) F``.

    Raises
    ------
    ResonanceError
        Inside the guard band around integer ``x``.
    NonConvergence
        When the term cap is exceeded.
    """
    br = _thermal_bracket(lam, omega_r, gamma, temperature, cfg, moment="q",
                          matsubara_only=True)
    return br


def matsubara_I(lam, omega_r, gamma, temperature, cfg: MatsubaraConfig = DEFAULT_CONFIG):
    """Thermal function entering ``<p^2>``, including the cotangent term.

    ``I = -(1/pi) x^2 sum_l l^3 / ((l^2 - x^2) D_l) - (1/2) cot(Lambda/2T) Lambda^4/D_Lambda``
    with ``D_Lambda = (Lambda^2 + Omega_R^2)^2 - gamma^2 Lambda^2``. The full
    ``<p^2>`` carries ``gamma I``; for ``Lambda >> T`` one has
    ``I ~ (1/pi) ln(Lambda/2 pi T)`` plus a finite remainder.

    Raises
    ------
    ResonanceError, NonConvergence
    """
    return _thermal_bracket(lam, omega_r, gamma, temperature, cfg, moment="p",
                            matsubara_only=False)


def denominator_imag_axis(nu, omega_r, gamma):
    """``(nu^2 + Omega_R^2)^2 - gamma^2 nu^2``: the damped-oscillator denominator at ``w = i nu``."""
    n2 = nu * nu
    return (n2 + omega_r**2) ** 2 - gamma**2 * n2


def _thermal_bracket(lam, omega_r, gamma, temperature, cfg, *, moment, matsubara_only,
                     on_resonance="raise"):
    if moment == "q":
        phi = lambda nu: 1.0 / denominator_imag_axis(nu, omega_r, gamma)
    else:
        phi = lambda nu: -nu * nu / denominator_imag_axis(nu, omega_r, gamma)
    res = matsubara_bracket(phi, lam, temperature, cfg, on_resonance=on_resonance)
    val = float(np.real(res.value))
    if matsubara_only:
        val -= float(phi(np.array([lam]))[0]) / math.tan(lam / (2.0 * temperature))
        # (gamma Lambda^2/2) * sum == (gamma/T^2) F
        return 0.5 * lam**2 * temperature**2 * val
    return 0.5 * lam**2 * val
