"""Born-non-Markov moment dynamics.

Keeping the full history of the reduced density matrix inside the
second-order master equation gives a Volterra hierarchy for the moments:

    d<q^2>/dt   = <pq+qp>
    d<pq+qp>/dt = 2<p^2> - 2 Omega^2 <q^2> + int_0^t [2 C <q^2> + S <pq+qp>] + f
    d<p^2>/dt   = -Omega^2 <pq+qp> + int_0^t [C <pq+qp> - 2 Omega^2 S <q^2>] + h

with ``C(tau) = gamma Lambda^2 e^{-Lambda tau} cos(Omega tau)`` and
``S(tau) = gamma Lambda^2 e^{-Lambda tau} sin(Omega tau)/Omega``, both
evaluated at the lag ``t - t1``. The drives ``f, h`` are the Markov ones.
Note the ``+S`` coupling of ``<pq+qp>``: the Markov equations carry
``-beta`` in the same slot, because the time integrals act on ``q`` and ``p``
in swapped order.

Since ``C + i Omega S = gamma Lambda^2 e^{-a tau}`` with ``a = Lambda - i Omega``,
each memory integral equals ``gamma Lambda^2 Z`` where ``dZ/dt = x - a Z``.
The default solver integrates this exact local embedding. A product
trapezoid scheme on the truncated history is kept as an independent route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, InstabilityError, MemoryWindowTooShort
from .markov import DriveTable, asymptotic_coefficients, solve_segments
from .params import ModelParams
from .specialfn import coth
from .state import InitialMoments, Method, MomentTrajectory, StationaryMoments, check_grid


@dataclass(frozen=True)
class MemoryKernels:
    tau: np.ndarray
    c: np.ndarray
    s: np.ndarray


@dataclass(frozen=True)
class DerivativeKernels:
    """Iterated kernels ``K_n(t;t)`` and their ``C_n = Re K_n``, ``S_n = Im K_n/Omega``."""

    t: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    k3: np.ndarray
    omega: float

    def c(self, n):
        return np.real(getattr(self, f"k{n}"))

    def s(self, n):
        return np.imag(getattr(self, f"k{n}")) / self.omega


def memory_kernels(params: ModelParams, tau) -> MemoryKernels:
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise DomainError("tau must be non-negative")
    om = params.omega
    env = params.gamma * params.lam**2 * np.exp(-params.lam * tau)
    return MemoryKernels(tau, env * np.cos(om * tau), env * np.sin(om * tau) / om)


def _regularized_tail(n, z):
    """``1 - e^{-z} sum_{k<n} z^k/k!`` for complex ``z``, series near 0."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1.0
    zs = z[small]
    # e^{-z} sum_{k>=n} z^k/k!
    term = zs**n / math.factorial(n)
    acc = np.zeros_like(zs)
    for k in range(n, n + 40):
        acc += term
        term = term * zs / (k + 1)
    out[small] = np.exp(-zs) * acc
    zb = z[~small]
    part = np.zeros_like(zb)
    term = np.ones_like(zb)
    for k in range(n):
        part += term
        term = term * zb / (k + 1)
    out[~small] = 1.0 - np.exp(-zb) * part
    return out


def derivative_kernels(params: ModelParams, t) -> DerivativeKernels:
    """``K_n(t;t) = gamma Lambda^2 [1 - e^{-a t} sum_{k<n} (a t)^k/k!]/a^n``, ``a = Lambda - i Omega``.

    Repeated integration by parts of a memory integral gives
    ``int_0^t K_0 O = K_1 O - K_2 O' + K_3 O'' - ...`` with these kernels.
    Long-time limits: ``C_1 -> alpha(inf)``, ``S_1 -> beta(inf)``,
    ``C_2 -> gamma`` and ``S_2 -> 2 gamma/Lambda`` up to ``O(Omega^2/Lambda^2)``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be non-negative")
    a = complex(params.lam, -params.omega)
    pref = params.gamma * params.lam**2
    z = a * t
    ks = [pref * _regularized_tail(n, z) / a**n for n in (1, 2, 3)]
    ks = [k[()] if k.ndim == 0 else k for k in ks]
    return DerivativeKernels(t, *ks, params.omega)


def stationary_nonmarkov(params: ModelParams, form="exact") -> StationaryMoments:
    """Stationary point of the hierarchy.

    Setting derivatives to zero turns the memory integrals into
    ``alpha(inf) x`` and ``beta(inf) x``, so ``<pq+qp> = 0``,
    ``<q^2> = h/(2 Omega^2 beta) = coth(Omega/2T)/(2 Omega)`` and
    ``<p^2> = (Omega^2 - alpha) <q^2> - f/2``.

    Parameters
    ----------
    form : {'exact', 'large_lambda'}
        ``large_lambda`` uses ``Omega_R^2`` for ``Omega^2 - alpha`` and the
        leading-order ``f``.
    """
    a = asymptotic_coefficients(params)
    om, T = params.omega, params.temperature
    c = 1.0 if T == 0 else float(np.real(coth(om / (2 * T))))
    q2 = c / (2 * om)
    if form == "exact":
        p2 = float((params.omega_sq - a.alpha) * q2 - a.f / 2)
    elif form == "large_lambda":
        f_lead = a.f * (params.lam**2 + om**2) / params.lam**2
        p2 = float(params.omega_r**2 * q2 - f_lead / 2)
    else:
        raise ValueError("form must be 'exact' or 'large_lambda'")
    return StationaryMoments(q2, p2, 0.0, Method.BORN_NON_MARKOV,
                             meta={"omega_bare": om, "omega_r": params.omega_r,
                                   "form": form, "f_inf": a.f, "h_inf": a.h})


def _init(init):
    return init if isinstance(init, InitialMoments) else InitialMoments(**init)


def integrate_nonmarkov(params: ModelParams, init: InitialMoments, t_grid, memory_window=None, *,
                        scheme="embedding", rtol=1e-11, atol=1e-13, step=None,
                        drives: DriveTable | None = None) -> MomentTrajectory:
    """Solve the non-Markov hierarchy together with the mean equation.

    The mean obeys ``q'' + Omega^2 q - gamma Lambda^2 int_0^t e^{-Lambda(t-s)} q(s) ds = 0``,
    whose solution is ``G'(t) q0 + G(t) p0`` with the full-pole ``G``.

    Parameters
    ----------
    memory_window : float, optional
        History length kept by the ``trapezoid`` scheme. Defaults to
        ``40/Lambda``. Ignored by ``embedding``, which carries the whole
        history exactly.
    scheme : {'embedding', 'trapezoid'}
    step : float, optional
        Trapezoid step, default ``min(1/(20 Lambda), 1/(20 Omega))``.

    Raises
    ------
    MemoryWindowTooShort
        If the kernel mass beyond the window exceeds ``1e-8`` of the total.
    StepFailure
    """
    init = _init(init)
    t = check_grid(t_grid)
    lam = params.lam
    if memory_window is None:
        memory_window = 40.0 / lam
    if memory_window <= 0 or math.exp(-lam * memory_window) > 1e-8:
        raise MemoryWindowTooShort(
            f"window {memory_window:.4g} leaves kernel mass {math.exp(-lam * max(memory_window, 0)):.3g}")
    drives = drives or DriveTable(params, t[-1])
    if scheme == "embedding":
        return _embedding(params, init, t, drives, rtol, atol)
    if scheme == "trapezoid":
        return _trapezoid(params, init, t, drives, memory_window, step)
    raise DomainError("scheme must be 'embedding' or 'trapezoid'")


def _embedding(params, init, t, drives, rtol, atol):
    om, om2, lam = params.omega, params.omega_sq, params.lam
    g = params.gamma * lam**2
    a = complex(lam, -om)

    def rhs(tt, y):
        q2, pq, p2, zq_r, zq_i, zp_r, zp_i, q, p, yq = y
        f, h = drives(tt)
        zq = complex(zq_r, zq_i)
        zp = complex(zp_r, zp_i)
        dzq = q2 - a * zq
        dzp = pq - a * zp
        return [pq,
                2 * p2 - 2 * om2 * q2 + 2 * g * zq_r + g * zp_i / om + f,
                -om2 * pq + g * zp_r - 2 * om * g * zq_i + h,
                dzq.real, dzq.imag, dzp.real, dzp.imag,
                p,
                -om2 * q + g * yq,
                q - lam * yq]

    y0 = [init.q2, init.pq_sym, init.p2, 0, 0, 0, 0, init.q, init.p, 0]
    y = solve_segments(rhs, y0, t, 20.0 / lam, 0.1 / lam, 0.1 / om, rtol, atol)
    return MomentTrajectory(t, y[7], y[8], y[0], y[2], y[1], Method.BORN_NON_MARKOV,
                            meta={"scheme": "embedding", "drive_interp_error": drives.max_interp_error})


def _trapezoid(params, init, t, drives, window, step):
    om, om2, lam = params.omega, params.omega_sq, params.lam
    g = params.gamma * lam**2
    if step is None:
        step = min(1.0 / (20 * lam), 1.0 / (20 * om))
    n = max(1, int(math.ceil((t[-1] - t[0]) / step)))
    hs = (t[-1] - t[0]) / n
    m = int(math.ceil(window / hs))
    lags = hs * np.arange(m + 1)
    ker = memory_kernels(params, lags)
    kc, ks = ker.c, ker.s
    km = g * np.exp(-lam * lags)

    # columns: q2, pq, p2, q, p
    y = np.empty((n + 1, 5))
    y[0] = [init.q2, init.pq_sym, init.p2, init.q, init.p]
    tg = t[0] + hs * np.arange(n + 1)

    def local(yv):
        q2, pq, p2, q, p = yv
        return np.array([pq, 2 * p2 - 2 * om2 * q2, -om2 * pq, p, -om2 * q])

    # implicit part: local operator plus the lag-0 memory weight
    A = np.array([[0, 1, 0, 0, 0],
                  [-2 * om2, 0, 2, 0, 0],
                  [0, -om2, 0, 0, 0],
                  [0, 0, 0, 0, 1],
                  [0, 0, 0, -om2, 0]], dtype=float)
    B = np.zeros((5, 5))
    B[1, 0] = 2 * kc[0]
    B[2, 1] = kc[0]
    B[4, 3] = km[0]
    lhs = np.eye(5) - 0.5 * hs * (A + 0.5 * hs * B)
    lhs_inv = np.linalg.inv(lhs)

    def history(nn, include_self):
        # trapezoid memory sums at t_nn over the retained history
        lo = max(0, nn - m)
        hi = nn + 1 if include_self else nn
        idx = np.arange(lo, hi)
        if idx.size == 0:
            return np.zeros(5)
        w = np.full(idx.size, hs)
        w[0] *= 0.5
        if include_self:
            w[-1] *= 0.5
        lag = nn - idx
        yh = y[idx]
        cq = np.dot(w * kc[lag], yh[:, 0])
        sp = np.dot(w * ks[lag], yh[:, 1])
        cp = np.dot(w * kc[lag], yh[:, 1])
        sq = np.dot(w * ks[lag], yh[:, 0])
        mq = np.dot(w * km[lag], yh[:, 3])
        return np.array([0.0, 2 * cq + sp, cp - 2 * om2 * sq, 0.0, mq])

    def drive(tt):
        f, h = drives(tt)
        return np.array([0.0, f, h, 0.0, 0.0])

    f_prev = local(y[0]) + history(0, True) + drive(tg[0])
    for k in range(n):
        # history at t_{k+1} without the (unknown) endpoint, whose lag-0
        # contribution has half weight and sits in the implicit matrix
        known = history(k + 1, False)
        rhs_vec = y[k] + 0.5 * hs * (f_prev + known + drive(tg[k + 1]))
        y[k + 1] = lhs_inv @ rhs_vec
        f_prev = local(y[k + 1]) + history(k + 1, True) + drive(tg[k + 1])

    sp = CubicSpline(tg, y, axis=0)
    out = sp(t)
    return MomentTrajectory(t, out[:, 3], out[:, 4], out[:, 0], out[:, 2], out[:, 1],
                            Method.BORN_NON_MARKOV,
                            meta={"scheme": "trapezoid", "step": hs, "memory_window": window})


def _local_operator(params: ModelParams, order, t=np.inf):
    """Linear part of the truncated local system for ``(q2, pq, p2)``.

    Replacing each memory integral by ``K_1 O - K_2 O'`` (``order=2``) or
    ``K_1 O`` (``order=1``) gives ``M y' = L y + (0, f, h)``. Returns ``(M, L)``.
    """
    om2 = params.omega_sq
    if params.lam * t > 40:
        a = complex(params.lam, -params.omega)
        g = params.gamma * params.lam**2
        k1, k2 = g / a, g / a**2
        c1, s1 = k1.real, k1.imag / params.omega
        c2, s2 = k2.real, k2.imag / params.omega
    else:
        dk = derivative_kernels(params, t)
        c1, s1, c2, s2 = dk.c(1), dk.s(1), dk.c(2), dk.s(2)
    if order == 1:
        c2 = s2 = 0.0
    elif order != 2:
        raise DomainError("order must be 1 or 2")
    L = np.array([[0.0, 1.0, 0.0],
                  [-2 * (om2 - c1), s1, 2.0],
                  [-2 * om2 * s1, -(om2 - c1), 0.0]])
    # derivative terms: -K_2 O' moved to the left-hand side
    M = np.array([[1.0, 0.0, 0.0],
                  [2 * c2, 1 + s2, 0.0],
                  [-2 * om2 * s2, c2, 1.0]])
    return M, L


def derivative_expansion_fixed_point(params: ModelParams, order=1) -> StationaryMoments:
    """Stationary point of the derivative-expanded local equations.

    All derivative terms vanish there, so the result must coincide with
    :func:`stationary_nonmarkov` for any truncation order.
    """
    a = asymptotic_coefficients(params)
    _, L = _local_operator(params, order)
    y = np.linalg.solve(L, -np.array([0.0, a.f, a.h]))
    return StationaryMoments(float(y[0]), float(y[2]), float(y[1]), Method.BORN_NON_MARKOV,
                             meta={"derivative_order": order})


def local_growth_rate(params: ModelParams, order) -> float:
    """Largest real part of the eigenvalues of the asymptotic local system."""
    M, L = _local_operator(params, order)
    return float(np.max(np.linalg.eigvals(np.linalg.solve(M, L)).real))


def integrate_derivative_expansion(params: ModelParams, init: InitialMoments, t_grid, order=2, *,
                                   rtol=1e-10, atol=1e-12, drives: DriveTable | None = None):
    """Integrate the local equations obtained by truncating the derivative expansion.

    Keeping only ``K_1`` leaves the ``<pq+qp>`` equation with the
    anti-damping ``+S_1``, so the first-order system grows at a rate of
    about ``3 gamma/2`` and is refused. With ``K_2`` the ``-2 C_2`` term
    restores a decay rate of about ``gamma/2``, as long as
    ``gamma Lambda`` stays below ``Omega_R^2``.

    Raises
    ------
    InstabilityError
        If the asymptotic local system has a growing mode.
    """
    init = _init(init)
    t = check_grid(t_grid)
    rate = local_growth_rate(params, order)
    if rate > 0:
        raise InstabilityError(f"order-{order} local system grows at rate {rate:.3g}")
    drives = drives or DriveTable(params, t[-1])

    def rhs(tt, y):
        M, L = _local_operator(params, order, tt)
        f, h = drives(tt)
        return np.linalg.solve(M, L @ y + np.array([0.0, f, h]))

    y0 = [init.q2, init.pq_sym, init.p2]
    y = solve_segments(rhs, y0, t, 20.0 / params.lam, 0.1 / params.lam, 0.1 / params.omega, rtol, atol)
    nan = np.full(t.shape, np.nan)
    return MomentTrajectory(t, nan, nan, y[0], y[2], y[1], Method.BORN_NON_MARKOV,
                            meta={"scheme": f"derivative_expansion_{order}"})
