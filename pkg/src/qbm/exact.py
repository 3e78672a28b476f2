"""Exact Heisenberg-Langevin correlators of the damped oscillator.

The stationary moments are frequency integrals over the bath spectrum,

    <q^2> = (1/pi) int_0^inf sigma(w) coth(w/2T) / D(w) dw,
    <p^2> = (1/pi) int_0^inf w^2 sigma(w) coth(w/2T) / D(w) dw,

with ``D(w) = (w^2 - Omega_R^2)^2 + gamma^2 w^2``. For the Drude bath they
are evaluated in closed form by residues: the resonant pair at
``+-W + i gamma/2``, the cutoff pole at ``i Lambda`` and the Matsubara poles.
The same integrals evaluated by adaptive quadrature serve as the independent
check.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from . import _quad
from .errors import DomainError, QuadratureFailure
from .greens import green_modes, green_time, poles_full
from .params import BathSpectrum, ModelParams, SpectrumKind, spectral_density
from .specialfn import (DEFAULT_CONFIG, MatsubaraConfig, coth, coth_thermal,
                        denominator_imag_axis, matsubara_bracket)
from .state import (InitialMoments, Method, MomentTrajectory, StationaryMoments,
                    check_grid)


class SlowConvergenceWarning(RuntimeWarning):
    """Integrand tail decays slower than ``w^-2``."""


def _pole_terms(params: ModelParams):
    """Contribution of the resonant poles ``+-W + i gamma/2`` to ``(<q^2>, <p^2>)``."""
    T, lam = params.temperature, params.lam
    wp = complex(params.w, params.gamma / 2)
    lor = lam**2 / (lam**2 + wp * wp)
    c = coth(wp / (2 * T)) if T > 0 else 1.0
    q = (lor * c).real / (2 * params.w)
    p = (wp * wp * lor * c).real / (2 * params.w)
    return q, p


def _thermal_terms(params: ModelParams, cfg: MatsubaraConfig):
    """Cutoff-pole and Matsubara contributions to ``(<q^2>, <p^2>)``."""
    wr, g, lam = params.omega_r, params.gamma, params.lam

    def phi(nu):
        d = denominator_imag_axis(nu, wr, g)
        return np.stack([1.0 / d, -nu * nu / d], axis=-1)

    res = matsubara_bracket(phi, lam, params.temperature, cfg)
    pref = 0.5 * g * lam**2
    val = pref * np.real(res.value)
    return val[0], val[1], pref * res.error, res.resonant


def stationary_closed(params: ModelParams, cfg: MatsubaraConfig = DEFAULT_CONFIG) -> StationaryMoments:
    """Stationary ``<q^2>``, ``<p^2>`` from the residue sum.

    The resonant-pole bracket uses exact complex ``coth((W +- i gamma/2)/2T)``.
    The cutoff pole contributes ``(gamma Lambda^2/2) cot(Lambda/2T) m(Lambda)/D_Lambda``
    and the Matsubara series follows. A near-integer ``Lambda/2 pi T`` is
    handled by pairing, so no resonance error escapes.

    Raises
    ------
    DomainError
        At ``T = 0``, where the Matsubara series turns into an integral.
    """
    if params.temperature <= 0:
        raise DomainError("closed forms need T > 0; use stationary_quadrature at T = 0")
    if params.gamma == 0:
        # decoupled oscillator; the pole bracket alone would keep a spurious
        # Lambda^2/(Lambda^2 + Omega_R^2) from the large-Lambda Green's function
        c = float(np.real(coth(params.omega_r / (2 * params.temperature))))
        return StationaryMoments(c / (2 * params.omega_r), params.omega_r * c / 2, 0.0,
                                 Method.EXACT_CLOSED, meta={"decoupled": True})
    q_pole, p_pole = _pole_terms(params)
    q_th, p_th, err, resonant = _thermal_terms(params, cfg)
    return StationaryMoments(q_pole + q_th, p_pole + p_th, 0.0, Method.EXACT_CLOSED,
                             q2_err=err, p2_err=err,
                             meta={"resonant": resonant, "q_pole": q_pole,
                                   "p_pole": p_pole})


def _response_denominator(spec: BathSpectrum, omega_r, omega):
    fr = omega * spec.friction(omega)
    return (omega * omega - omega_r**2) ** 2 + fr * fr


def _integrand_factory(params: ModelParams, spec: BathSpectrum, power: int, green="large_lambda"):
    wr, T = params.omega_r, params.temperature
    lam, om2, g = params.lam, params.omega_sq, params.gamma

    def d4_full(w):
        # |(Omega^2 - w^2)(Lambda - i w) - gamma Lambda^2|^2 / ((Lambda^2 + w^2) w^4)
        # real part of the numerator is Lambda (Omega_R^2 - w^2) exactly
        re = lam * (wr - w) * (wr + w) / w**3
        im = -((wr - w) * (wr + w) + g * lam) / (w * w)
        return (re * re + im * im) / ((lam / w) ** 2 + 1.0)

    def f(w):
        if w == 0.0:
            if power > 0 or T == 0:
                return 0.0
            # sigma(w) coth(w/2T) -> 2 T sigma'(0)
            h = 1e-8 * wr
            return float(spectral_density(spec, h)) * 2 * T / h / wr**4
        s = float(spectral_density(spec, w))
        c = 1.0 if T == 0 else 1.0 / math.tanh(w / (2 * T))
        # D(w)/w^4 keeps large frequencies in range
        if green == "full":
            d4 = d4_full(w)
        else:
            d4 = ((w - wr) * (w + wr) / (w * w)) ** 2 + (float(spec.friction(w)) / w) ** 2
        return s * c * w ** (power - 4) / d4

    return f


def resonance_ladder(center, width, scale):
    """Breakpoints ``center +- width 4^k`` out to ``scale/2`` on either side."""
    pts = [center]
    k = -1
    while width * 4.0**k < 0.5 * scale:
        off = width * 4.0**k
        pts += [center - off, center + off]
        k += 1
    return [a for a in pts if a > 0]


def _edges(params: ModelParams, spec: BathSpectrum, green="large_lambda"):
    wr = params.omega_r
    width = max(float(spec.friction(wr)), 1e-300)
    w0 = math.sqrt(max(wr**2 - width**2 / 4, 0.25 * wr**2))
    anchors = resonance_ladder(w0, width, wr)
    if green == "full" and params.gamma > 0:
        # the full resonance sits O(gamma/Lambda) away from the reduced one
        s1 = poles_full(params).s1
        anchors += resonance_ladder(abs(s1.imag), max(-2 * s1.real, 1e-300), wr)
    anchors += [spec.lam, 0.5 * wr]
    if params.temperature > 0:
        anchors += [params.temperature, 2 * math.pi * params.temperature]
    hi = 1e3 * max(spec.lam, wr, params.temperature)
    return _quad.frequency_edges(anchors, hi=hi), hi


def stationary_quadrature(params: ModelParams, spectrum: BathSpectrum | None = None,
                          rel_tol=1e-10, green="large_lambda") -> StationaryMoments:
    """Stationary moments by adaptive quadrature of the frequency integrals.

    Parameters
    ----------
    params : ModelParams
        Supplies ``Omega_R`` and ``T``. ``T = 0`` is allowed (``coth -> 1``).
    spectrum : BathSpectrum, optional
        Any spectral family; defaults to the Drude spectrum of ``params``.
        For non-Drude kinds the damping in ``D(w)`` is the cutoff-free
        friction ``w * spectrum.friction(w)``.
    rel_tol : float
        Requested relative accuracy; the estimated error must meet it.
    green : {'large_lambda', 'full'}
        ``full`` replaces ``1/D`` by ``|g(-i w)|^2`` of the Drude cubic. This
        is the exact answer of the model without the large-``Lambda``
        reduction; it differs from the default by ``O(Omega_R^2/Lambda^2)``
        and ``O(gamma/Lambda)`` terms. Drude spectrum only.

    Raises
    ------
    QuadratureFailure
        If QUADPACK reports trouble or the error estimate exceeds ``rel_tol``.

    Warns
    -----
    SlowConvergenceWarning
        When the ``<p^2>`` integrand decays slower than ``w^-2``.
    """
    spec = params.spectrum() if spectrum is None else spectrum
    if green not in ("large_lambda", "full"):
        raise DomainError("green must be 'large_lambda' or 'full'")
    if green == "full" and spec.kind != SpectrumKind.DRUDE_OHMIC:
        raise DomainError("green='full' needs the Drude spectrum")
    edges, hi = _edges(params, spec, green)
    out = []
    for power in (0, 2):
        f = _integrand_factory(params, spec, power, green)
        f1, f2 = f(hi), f(2 * hi)
        if f1 > 0 and f2 > 0 and math.log(f1 / f2) / math.log(2.0) < 2.0:
            warnings.warn(f"integrand ~ w^-{math.log(f1 / f2) / math.log(2.0):.2f} at w={hi:.3g}",
                          SlowConvergenceWarning, stacklevel=2)
        val, err = _quad.quad_pieces(f, edges, rel_tol=rel_tol * 1e-2, limit=500)
        if not err <= rel_tol * abs(val):
            raise QuadratureFailure(f"error estimate {err:.3g} exceeds rel_tol on {val:.6g}")
        out.append((val / math.pi, err / math.pi))
    (q2, qe), (p2, pe) = out
    return StationaryMoments(q2, p2, 0.0, Method.EXACT_QUADRATURE, q2_err=qe, p2_err=pe,
                             meta={"green": green})


class CorrelationTrace:
    """Stationary two-time correlator ``<x(t + tau) x(t)>`` on a grid of offsets.

    Attributes
    ----------
    tau_grid : ndarray
    values : ndarray of complex
    kind : {'qq', 'pp'}
    """

    def __init__(self, tau_grid, values, kind):
        self.tau_grid = np.asarray(tau_grid, dtype=float)
        self.values = np.asarray(values, dtype=complex)
        self.kind = kind

    def __repr__(self):
        return f"CorrelationTrace(kind={self.kind!r}, n={self.tau_grid.size})"


def correlation_trace(params: ModelParams, tau_grid, kind="qq", horizon=None,
                      rel_tol=1e-9) -> CorrelationTrace:
    """Stationary correlator as a Fourier integral over the bath spectrum.

    ``C(tau) = (1/pi) int_0^inf sigma m(w)/D [coth(w/2T) cos(w tau) - i sin(w tau)] dw``
    with ``m = 1`` for ``qq`` and ``m = w^2`` for ``pp``. ``C(0)`` is the
    stationary moment and ``C(-tau) = conj(C(tau))``.

    Raises
    ------
    QuadratureFailure
        For ``|tau|`` beyond ``horizon`` (default ``50/gamma``, or ``1e4/Omega_R``
        when ``gamma = 0``) or when a quadrature does not converge.
    """
    if kind not in ("qq", "pp"):
        raise DomainError("kind must be 'qq' or 'pp'")
    power = 0 if kind == "qq" else 2
    if horizon is None:
        horizon = 50.0 / params.gamma if params.gamma > 0 else 1e4 / params.omega_r
    spec = params.spectrum()
    wr, T = params.omega_r, params.temperature
    sym = _integrand_factory(params, spec, power)

    def anti(w):
        if w == 0.0:
            return 0.0
        d4 = ((w - wr) * (w + wr) / (w * w)) ** 2 + (float(spec.friction(w)) / w) ** 2
        return float(spectral_density(spec, w)) * w ** (power - 4) / d4

    edges, hi = _edges(params, spec)
    taus = np.asarray(tau_grid, dtype=float)
    vals = np.empty(taus.shape, dtype=complex)
    for i, tau in np.ndenumerate(taus):
        a = abs(tau)
        if a > horizon:
            raise QuadratureFailure(f"|tau|={a} beyond horizon {horizon}")
        if a == 0:
            re, _ = _quad.quad_pieces(sym, edges, rel_tol=rel_tol)
            vals[i] = re / math.pi
            continue
        split = 4.0 * max(spec.lam, wr + 64 * params.gamma, T)
        head = edges[edges < split]
        # keep each panel to a bounded number of oscillations
        n_osc = int(math.ceil(split * a / (20 * math.pi)))
        head = np.unique(np.concatenate([head, np.linspace(0, split, n_osc + 2)]))
        re, _ = _quad.quad_pieces(lambda w: sym(w) * math.cos(w * a), head,
                                  rel_tol=rel_tol, tail=False, limit=500)
        im, _ = _quad.quad_pieces(lambda w: anti(w) * math.sin(w * a), head,
                                  rel_tol=rel_tol, tail=False, limit=500)
        # QAWF needs an absolute target; scale it by the head integrals
        floor = rel_tol * max(abs(re), abs(im), 1e-300)
        re_t, _ = _quad.quad(sym, split, np.inf, weight="cos", wvar=a, rel_tol=rel_tol,
                             abs_tol=floor, limlst=200)
        im_t, _ = _quad.quad(anti, split, np.inf, weight="sin", wvar=a, rel_tol=rel_tol,
                             abs_tol=floor, limlst=200)
        v = complex(re + re_t, -(im + im_t)) / math.pi
        vals[i] = v if tau >= 0 else v.conjugate()
    return CorrelationTrace(taus, vals, kind)


def noise_kernel_sym(params: ModelParams, tau, cfg: MatsubaraConfig = DEFAULT_CONFIG):
    """Symmetrized noise correlator ``<{xi(tau), xi(0)}>/2``.

    Equals ``(1/pi) int_0^inf sigma(w) coth(w/2T) cos(w tau) dw``; evaluated as
    ``(gamma Lambda^2/2) [cot(Lambda/2T) e^{-Lambda|tau|} - 4T sum_l nu_l e^{-nu_l|tau|}/(Lambda^2 - nu_l^2)]``.
    Diverges logarithmically at ``tau = 0``.

    Raises
    ------
    DomainError
        At ``tau = 0`` or ``T = 0``.
    """
    a = np.abs(np.atleast_1d(np.asarray(tau, dtype=float)))
    if np.any(a == 0):
        raise DomainError("the symmetrized noise kernel diverges at tau = 0")
    if params.gamma == 0:
        out = np.zeros_like(a)
    else:
        res = matsubara_bracket(lambda nu: np.exp(-np.multiply.outer(nu, a)),
                                params.lam, params.temperature, cfg)
        out = 0.5 * params.gamma * params.lam**2 * np.real(res.value)
    return out[0] if np.ndim(tau) == 0 else out


def _ediv(z, t):
    """``(exp(z t) - 1)/z`` with its ``z -> 0`` limit ``t``."""
    z = np.asarray(z, dtype=complex)
    zt = z * t
    small = np.abs(zt) < 1e-8
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.expm1(zt) / np.where(small, 1.0, z)
    return np.where(small, t * (1 + 0.5 * zt), out)


def _ddiff_e(z1, z2, t):
    """Divided difference ``(E(z1) - E(z2))/(z1 - z2)`` of ``E(z) = (exp(zt)-1)/z``."""
    dz = z1 - z2
    near = np.abs(dz * t) < 1e-6
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = (_ediv(z1, t) - _ediv(z2, t)) / np.where(near, 1.0, dz)
    zm = 0.5 * (z1 + z2)
    zmt = zm * t
    tiny = np.abs(zmt) < 1e-6
    with np.errstate(invalid="ignore", divide="ignore"):
        deriv = (t * np.exp(zmt) * zm - np.expm1(zmt)) / np.where(tiny, 1.0, zm * zm)
    deriv = np.where(tiny, t * t / 2, deriv)
    return np.where(near, deriv, direct)


def _noise_phi(lams, cs, t_grid):
    """Matsubara-space kernels for the noise part of the second moments.

    Returns ``phi(nu)`` giving, per time, the three double integrals
    ``int int X(u1) Y(u2) e^{-nu|u1-u2|}`` for ``(X, Y) = (G, G), (G', G'), (G, G')``
    (the last symmetrized, times two).
    """
    t = np.asarray(t_grid, dtype=float)

    def phi(nu):
        nu = np.asarray(nu, dtype=float)
        acc = np.zeros((nu.size, t.size, 3), dtype=complex)
        for a, (la, ca) in enumerate(zip(lams, cs)):
            for b, (lb, cb) in enumerate(zip(lams, cs)):
                # I(la, lb, nu) = [E(la+lb) - E(la-nu)]/(lb+nu)
                z1 = la + lb
                z2 = la - nu[:, None]
                I = _ddiff_e(z1, z2, t[None, :])
                w = ca * cb
                acc[..., 0] += 2 * w * I
                acc[..., 1] += 2 * w * la * lb * I
                acc[..., 2] += 2 * w * (la + lb) * I
        return acc

    return phi


def transient_moments(params: ModelParams, init: InitialMoments, t_grid,
                      mode="full", cfg: MatsubaraConfig = DEFAULT_CONFIG) -> MomentTrajectory:
    """Moments from a factorized initial state, by the exact solution.

    ``q(t) = G'(t) q0 + G(t) p0 + int_0^t G(t-s) xi(s) ds`` and ``p = dq/dt``.
    The initial-data terms come from ``G`` and its derivatives; the noise
    terms are double convolutions of ``G`` with the symmetrized noise
    kernel, done in closed form per Matsubara frequency.

    Parameters
    ----------
    init : InitialMoments
        Raw second moments and means at ``t = 0``.
    t_grid : array_like
        Increasing times starting at or after 0.
    mode : {'full', 'large_lambda'}
        Green's function used for propagation. ``full`` is exact for the
        Drude bath. ``large_lambda`` drops the fast pole, so its momentum
        jumps by ``-gamma q0`` right after ``t = 0``.
    """
    if not isinstance(init, InitialMoments):
        init = InitialMoments(**init)
    t = check_grid(t_grid)
    G = green_time(params, t, mode)
    Gd = green_time(params, t, mode, 1)
    Gdd = green_time(params, t, mode, 2)
    q2 = Gd**2 * init.q2 + G**2 * init.p2 + Gd * G * init.pq_sym
    p2 = Gdd**2 * init.q2 + Gd**2 * init.p2 + Gdd * Gd * init.pq_sym
    pq = (2 * Gd * Gdd * init.q2 + 2 * G * Gd * init.p2
          + (Gd * Gd + G * Gdd) * init.pq_sym)
    if params.gamma > 0:
        if params.temperature <= 0:
            raise DomainError("the closed-form noise convolution needs T > 0")
        lams, cs = green_modes(params, mode)
        res = matsubara_bracket(_noise_phi(lams, cs, t), params.lam,
                                params.temperature, cfg)
        noise = 0.5 * params.gamma * params.lam**2 * np.real(res.value)
        q2 = q2 + noise[:, 0]
        p2 = p2 + noise[:, 1]
        pq = pq + noise[:, 2]
    mq = Gd * init.q + G * init.p
    mp = Gdd * init.q + Gd * init.p
    return MomentTrajectory(t, mq, mp, q2, p2, pq, Method.EXACT_CLOSED,
                            meta={"mode": mode})


def noise_double_convolution_quadrature(params: ModelParams, t, kind="qq", mode="full",
                                        rel_tol=1e-9, abs_tol=1e-13):
    """Noise part of a transient second moment by frequency quadrature.

    ``(1/pi) int_0^inf sigma coth(w/2T) X(w) dw`` where ``X`` is built from
    ``A(w) = int_0^t G(u) e^{i w u} du`` (``|A|^2`` for ``qq``). Slow;
    meant as an independent check.
    """
    lams, cs = green_modes(params, mode)
    spec = params.spectrum()
    T = params.temperature

    def amp(w, deriv):
        z = lams + 1j * w
        return np.sum(cs * lams**deriv * _ediv(z, t))

    def f(w):
        if w == 0.0:
            w = 1e-12
        base = float(spectral_density(spec, w)) * float(coth_thermal(w, T))
        a0, a1 = amp(w, 0), amp(w, 1)
        if kind == "qq":
            x = abs(a0) ** 2
        elif kind == "pp":
            x = abs(a1) ** 2
        else:
            x = 2 * (a0 * a1.conjugate()).real
        return base * x

    edges, hi = _edges(params, spec)
    hi = 50.0 * max(params.lam, params.omega_r, params.temperature)
    edges = edges[edges < hi]
    # panels of about ten oscillations of exp(i w t)
    edges = np.unique(np.concatenate([edges, np.arange(0.0, hi, 20 * math.pi / max(t, 1e-12)), [hi]]))
    val, _ = _quad.quad_pieces(f, edges, rel_tol=rel_tol, abs_tol=abs_tol, limit=200,
                               tail=False)
    # beyond hi, sigma coth -> gamma Lambda^2/w and A ~ (e^{iwt} G(t) - G(0))/(i w),
    # so |A|^2 averages to (G(t)^2 + G(0)^2)/w^2
    g0 = float(np.real(np.sum(cs * np.exp(lams * t))))
    g1 = float(np.real(np.sum(cs * lams * np.exp(lams * t))))
    amp2 = {"qq": g0 * g0, "pp": g1 * g1 + 1.0}.get(kind, 2 * g0 * g1)
    val += params.gamma * params.lam**2 * amp2 / (2 * hi * hi)
    return val / math.pi
