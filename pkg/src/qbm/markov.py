"""Born-Markov moment dynamics.

In the interaction picture of the bare oscillator the second-order master
equation gives closed equations for the moments,

    d<q^2>/dt    = <pq+qp>
    d<pq+qp>/dt  = 2<p^2> - 2(Omega^2 - alpha)<q^2> - beta <pq+qp> + f
    d<p^2>/dt    = -(Omega^2 - alpha)<pq+qp> - 2 beta <p^2> + h

with time-dependent coefficients built from the bath kernels and the bare
frequency ``Omega``. ``alpha, beta`` are elementary. ``f`` and ``h`` are
the sine and cosine transforms of the noise correlator up to time ``t``,
given by the Matsubara bracket of ``(1 - e^{-(nu - i Omega) t})/(nu - i Omega)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import StepFailure
from .params import ModelParams
from .specialfn import DEFAULT_CONFIG, MatsubaraConfig, coth, digamma, matsubara_bracket
from .state import InitialMoments, Method, MomentTrajectory, StationaryMoments, check_grid


@dataclass(frozen=True)
class MarkovCoefficients:
    """Coefficients of the Markov moment equations at time ``t`` (arrays allowed)."""

    t: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    f: np.ndarray
    h: np.ndarray


@dataclass(frozen=True)
class AsymptoticCoefficients:
    """Long-time limits of ``alpha, beta, f, h``."""

    alpha: float
    beta: float
    f: float
    h: float


def _kernel_integral(params: ModelParams, t):
    """``gamma Lambda^2 (1 - e^{-(Lambda - i Omega) t})/(Lambda - i Omega)``."""
    a = complex(params.lam, -params.omega)
    t = np.asarray(t, dtype=float)
    return params.gamma * params.lam**2 * (-np.expm1(-a * t)) / a


def drive_integral(params: ModelParams, t, cfg: MatsubaraConfig = DEFAULT_CONFIG):
    """``J(t) = int_0^t N(tau) e^{i Omega tau} dtau`` with ``N`` the noise correlator.

    ``h(t) = Re J`` and ``f(t) = Im J / Omega``. Pass ``t = np.inf`` for the
    asymptotic value.

    Returns
    -------
    complex or ndarray of complex
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    if params.gamma == 0:
        out = np.zeros(t.shape, dtype=complex)
        return out[0] if scalar else out
    om = params.omega
    finite = np.isfinite(t)

    def phi(nu):
        z = nu[:, None] - 1j * om
        out = np.empty((nu.size, t.size), dtype=complex)
        out[:, finite] = -np.expm1(-z * t[finite]) / z
        out[:, ~finite] = 1.0 / z
        return out

    res = matsubara_bracket(phi, params.lam, params.temperature, cfg)
    out = params.gamma * params.lam**2 * res.value
    out = np.where(t == 0, 0.0, out)
    return out[0] if scalar else out


def markov_coefficients(params: ModelParams, t, cfg: MatsubaraConfig = DEFAULT_CONFIG) -> MarkovCoefficients:
    """``alpha(t), beta(t), f(t), h(t)`` with the upper time limit kept finite.

    Trigonometry uses the bare frequency. ``f`` and ``h`` come from the
    Matsubara bracket with a certified tail.
    """
    t = np.asarray(t, dtype=float)
    k = _kernel_integral(params, t)
    j = drive_integral(params, t, cfg)
    om = params.omega
    return MarkovCoefficients(t, np.real(k), np.imag(k) / om, np.imag(j) / om, np.real(j))


def asymptotic_coefficients(params: ModelParams) -> AsymptoticCoefficients:
    """Closed-form ``t -> inf`` limits.

    ``alpha = gamma Lambda^3/(Lambda^2 + Omega^2)``, ``beta = gamma Lambda^2/(Lambda^2 + Omega^2)``,
    ``h = sigma(Omega) coth(Omega/2T)`` and
    ``f = (2 gamma Lambda^2/(Lambda^2 + Omega^2)) {-T/Lambda - (1/pi) Re[psi(Lambda/2 pi T) - psi(i Omega/2 pi T)]}``.
    At ``T = 0`` the digamma difference becomes ``ln(Lambda/Omega)`` and ``f``
    reduces to ``-(2 gamma/pi) ln(Lambda/Omega)`` times the same prefactor.
    """
    g, lam, om, T = params.gamma, params.lam, params.omega, params.temperature
    lor = lam**2 / (lam**2 + om**2)
    alpha = g * lam * lor
    beta = g * lor
    if T > 0:
        c = float(np.real(coth(om / (2 * T))))
        step = 2 * math.pi * T
        dpsi = (digamma(lam / step) - digamma(1j * om / step)).real
        f = 2 * g * lor * (-T / lam - dpsi / math.pi)
    else:
        c = 1.0
        f = 2 * g * lor * (-math.log(lam / om) / math.pi)
    h = g * om * lor * c
    return AsymptoticCoefficients(float(alpha), float(beta), float(f), float(h))


def stationary_markov(params: ModelParams, form="exact") -> StationaryMoments:
    """Fixed point of the Markov moment equations.

    ``<p^2> = h/(2 beta) = (Omega/2) coth(Omega/2T)`` and
    ``<q^2> = (2<p^2> + f)/(2(Omega^2 - alpha))``.

    Parameters
    ----------
    form : {'exact', 'large_lambda'}
        ``exact`` is the true fixed point of the equations. ``large_lambda``
        replaces ``Omega^2 - alpha`` by ``Omega_R^2`` and drops the
        ``Lambda^2/(Lambda^2 + Omega^2)`` factor in ``f``, which is correct
        to leading order in ``Omega/Lambda``.
    """
    a = asymptotic_coefficients(params)
    om = params.omega
    T = params.temperature
    c = 1.0 if T == 0 else float(np.real(coth(om / (2 * T))))
    p2 = 0.5 * om * c
    if form == "exact":
        q2 = (2 * p2 + a.f) / (2 * (params.omega_sq - a.alpha))
    elif form == "large_lambda":
        f_lead = a.f * (params.lam**2 + om**2) / params.lam**2
        q2 = (2 * p2 + f_lead) / (2 * params.omega_r**2)
    else:
        raise ValueError("form must be 'exact' or 'large_lambda'")
    return StationaryMoments(q2, p2, 0.0, Method.BORN_MARKOV,
                             meta={"omega_bare": om, "omega_r": params.omega_r,
                                   "form": form, "f_inf": a.f, "h_inf": a.h})


def markov_rhs_residual(params: ModelParams, moments: StationaryMoments):
    """Right-hand sides of the three moment equations at ``t = inf``."""
    a = asymptotic_coefficients(params)
    k = params.omega_sq - a.alpha
    q2, p2, pq = moments.q2, moments.p2, moments.pq_sym
    return np.array([pq,
                     2 * p2 - 2 * k * q2 - a.beta * pq + a.f,
                     -k * pq - 2 * a.beta * p2 + a.h])


class DriveTable:
    """Tabulated ``f(t), h(t)`` for time stepping.

    The drives relax like ``exp(-Lambda t)`` and ``exp(-2 pi T t)``. They are
    tabulated on a grid graded towards ``t = 0`` up to
    ``t_c = 45/min(Lambda, 2 pi T)`` and are constant afterwards.
    ``max_interp_error`` records the spline error measured at the grid
    midpoints.
    """

    def __init__(self, params: ModelParams, t_max, n=3000, cfg: MatsubaraConfig = DEFAULT_CONFIG):
        self.params = params
        om = params.omega
        rate = min(params.lam, 2 * math.pi * params.temperature) if params.temperature > 0 else params.lam
        self.t_c = min(float(t_max), 45.0 / rate)
        j_inf = drive_integral(params, np.inf, cfg)
        self.f_inf = float(np.imag(j_inf) / om)
        self.h_inf = float(np.real(j_inf))
        if self.t_c <= 0:
            self._spline = None
            self.max_interp_error = 0.0
            return
        u = np.linspace(0.0, 1.0, n + 1)
        tg = self.t_c * u**3
        j = drive_integral(params, tg, cfg)
        vals = np.stack([np.imag(j) / om, np.real(j)], axis=-1)
        self._spline = CubicSpline(tg, vals, axis=0)
        mid = self.t_c * (0.5 * (u[1:] + u[:-1])) ** 3
        jm = drive_integral(params, mid, cfg)
        ref = np.stack([np.imag(jm) / om, np.real(jm)], axis=-1)
        self.max_interp_error = float(np.max(np.abs(self._spline(mid) - ref)))

    def __call__(self, t):
        if self._spline is None or t >= self.t_c:
            return self.f_inf, self.h_inf
        v = self._spline(t)
        return float(v[0]), float(v[1])


def solve_segments(rhs, y0, t_eval, t_switch, fast_step, slow_step, rtol, atol):
    """DOP853 on ``[t0, t_switch]`` and ``[t_switch, t_end]`` with separate step caps.

    Returns the solution sampled at ``t_eval`` as an array ``(n_state, n_t)``.
    """
    t_eval = np.asarray(t_eval)
    y = np.asarray(y0, dtype=float)
    out = np.empty((y.size, t_eval.size))
    out[:, 0] = y
    t0, t1 = t_eval[0], t_eval[-1]
    cuts = [t0] + ([t_switch] if t0 < t_switch < t1 else []) + [t1]
    for a, b in zip(cuts[:-1], cuts[1:]):
        step = fast_step if a < t_switch else slow_step
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", max_step=step,
                        rtol=rtol, atol=atol, dense_output=True)
        if not sol.success:
            raise StepFailure(sol.message)
        sel = (t_eval > a) & (t_eval <= b)
        if sel.any():
            out[:, sel] = sol.sol(t_eval[sel])
        y = sol.y[:, -1]
    return out


def integrate_markov(params: ModelParams, init: InitialMoments, t_grid, *,
                     rtol=1e-10, atol=1e-12, drives: DriveTable | None = None) -> MomentTrajectory:
    """Integrate the Markov moment equations with time-dependent coefficients.

    Uses DOP853 with step at most ``1/(10 Lambda)`` while ``t < 20/Lambda``
    and ``1/(10 Omega)`` afterwards.

    Raises
    ------
    StepFailure
        If the integrator cannot meet its tolerances.
    """
    if not isinstance(init, InitialMoments):
        init = InitialMoments(**init)
    t = check_grid(t_grid)
    drives = drives or DriveTable(params, t[-1])
    om2, lam = params.omega_sq, params.lam

    def rhs(tt, y):
        q2, pq, p2, q, p = y
        k = _kernel_integral(params, tt)
        alpha, beta = k.real, k.imag / params.omega
        f, h = drives(tt)
        w2 = om2 - alpha
        return [pq,
                2 * p2 - 2 * w2 * q2 - beta * pq + f,
                -w2 * pq - 2 * beta * p2 + h,
                p,
                -w2 * q - beta * p]

    y0 = [init.q2, init.pq_sym, init.p2, init.q, init.p]
    y = solve_segments(rhs, y0, t, 20.0 / lam, 0.1 / lam, 0.1 / params.omega, rtol, atol)
    return MomentTrajectory(t, y[3], y[4], y[0], y[2], y[1], Method.BORN_MARKOV,
                            meta={"drive_interp_error": drives.max_interp_error})
