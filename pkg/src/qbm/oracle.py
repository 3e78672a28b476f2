"""Discrete-bath reference: the oscillator coupled to N explicit bath modes.

The closed Hamiltonian

    H = p^2/2 + Omega^2 q^2/2 + sum_k (P_k^2 + W_k^2 Q_k^2)/2 - q sum_k C_k Q_k

is quadratic, so Gaussian states stay Gaussian and the second moments
evolve exactly under the normal modes of the potential matrix. The bath is
built from Gauss-Legendre nodes on ``[0, omega_max]`` with
``C_k^2 = (2/pi) sigma(W_k) W_k w_k`` and the counterterm uses the discrete
sum ``Omega^2 = Omega_R^2 + sum_k C_k^2/W_k^2``, so the discrete model has
exactly the requested renormalized frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .errors import DiagonalizationFailure, DomainError, ResolutionError, WindowError
from .params import BathSpectrum, ModelParams, spectral_density
from .state import InitialMoments, Method, StationaryMoments, check_grid
from .sysbath import EnergyFlow


@dataclass(frozen=True)
class DiscreteBath:
    """Bath modes and couplings.

    ``t_rec = 2 pi / min gap`` is the global recurrence estimate.
    ``t_rec_resonant`` uses the node spacing next to ``omega_ref`` (the
    system frequency) and is the practical horizon for system observables.
    """

    n_modes: int
    frequencies: np.ndarray
    couplings: np.ndarray
    weights: np.ndarray
    omega_max: float
    spectrum: BathSpectrum
    t_rec: float
    t_rec_resonant: float

    @property
    def counterterm(self) -> float:
        """``sum_k C_k^2/W_k^2``, the discrete analogue of ``gamma Lambda``."""
        return float(np.sum(self.couplings**2 / self.frequencies**2))

    def self_energy_time(self, tau):
        """``-sum_k (C_k^2/W_k) sin(W_k tau)``."""
        tau = np.asarray(tau, dtype=float)
        amp = self.couplings**2 / self.frequencies
        return -np.sin(np.multiply.outer(tau, self.frequencies)) @ amp

    def smeared_density(self, omega, width):
        """Gaussian-smeared ``sum_k (pi C_k^2/2 W_k) delta(omega - W_k)``."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        amp = math.pi * self.couplings**2 / (2 * self.frequencies)
        z = (omega[:, None] - self.frequencies) / width
        return np.exp(-0.5 * z * z) @ amp / (width * math.sqrt(2 * math.pi))


def build_bath(spec: BathSpectrum, n_modes: int, omega_max: float, *,
               horizon: float | None = None, omega_ref: float = 1.0) -> DiscreteBath:
    """Discretize ``spec`` with ``n_modes`` Gauss-Legendre nodes on ``[0, omega_max]``.

    Raises
    ------
    DomainError
        If ``n_modes < 100`` or ``omega_max < 10 Lambda``.
    ResolutionError
        If ``horizon`` exceeds half the recurrence time.
    """
    if n_modes < 100:
        raise DomainError("n_modes must be at least 100")
    if omega_max < 10 * spec.lam:
        raise DomainError("omega_max must be at least 10 Lambda")
    x, w = np.polynomial.legendre.leggauss(n_modes)
    freqs = 0.5 * omega_max * (x + 1.0)
    weights = 0.5 * omega_max * w
    sig = spectral_density(spec, freqs)
    couplings = np.sqrt((2 / math.pi) * sig * freqs * weights)
    gaps = np.diff(freqs)
    t_rec = 2 * math.pi / gaps.min()
    k = int(np.clip(np.searchsorted(freqs, omega_ref), 1, n_modes - 1))
    t_res = 2 * math.pi / gaps[k - 1]
    if horizon is not None and horizon > 0.5 * t_rec:
        raise ResolutionError(f"horizon {horizon:.4g} exceeds t_rec/2 = {0.5 * t_rec:.4g}")
    return DiscreteBath(n_modes, freqs, couplings, weights, float(omega_max), spec, t_rec, t_res)


@dataclass(frozen=True)
class CovarianceState:
    """System-level view of the Gaussian state at one time.

    Second moments are raw (means included); ``pq_sym = <pq + qp>``.
    ``qb = <q B>``. Energies are expectation values of ``H_S``, ``H_SB``
    and ``H_B``. The full ``(2N+2)`` covariance is available through
    :meth:`full_matrix`, which is expensive for large ``N``.
    """

    time: float
    q2: float
    p2: float
    pq_sym: float
    mean_q: float
    mean_p: float
    qb: float
    h_system: float
    h_interaction: float
    h_bath: float
    _propagator: "NormalModePropagator" = field(default=None, repr=False, compare=False)

    @property
    def h_total(self):
        return self.h_system + self.h_interaction + self.h_bath

    def system_covariance(self):
        cov_qp = 0.5 * self.pq_sym - self.mean_q * self.mean_p
        return np.array([[self.q2 - self.mean_q**2, cov_qp],
                         [cov_qp, self.p2 - self.mean_p**2]])

    def heisenberg_margin(self):
        """``det(system covariance) - 1/4``; non-negative for a physical state."""
        return float(np.linalg.det(self.system_covariance()) - 0.25)

    def full_matrix(self):
        """Symmetrized second-moment matrix of ``(q, Q_1..Q_N, p, P_1..P_N)``."""
        if self._propagator is None:
            raise DomainError("state was built without a propagator")
        return self._propagator.full_matrix(self.time)


class NormalModePropagator:
    """Exact propagation of the Gaussian state in the normal-mode frame."""

    def __init__(self, bath: DiscreteBath, params: ModelParams, init: InitialMoments):
        n = bath.n_modes + 1
        om2 = params.omega_r**2 + bath.counterterm
        self.omega_sq = om2
        V = np.zeros((n, n))
        V[0, 0] = om2
        V[0, 1:] = V[1:, 0] = -bath.couplings
        V[np.arange(1, n), np.arange(1, n)] = bath.frequencies**2
        try:
            evals, U = eigh(V, overwrite_a=False, check_finite=True)
        except np.linalg.LinAlgError as exc:
            raise DiagonalizationFailure(str(exc)) from exc
        if evals[0] <= 0:
            raise DiagonalizationFailure(f"potential not positive definite (min eigenvalue {evals[0]:.3g})")
        resid = np.max(np.abs(U.T @ U - np.eye(n)))
        if resid > 1e-10:
            raise DiagonalizationFailure(f"eigenvectors not orthonormal ({resid:.3g})")
        self.bath, self.params, self.init = bath, params, init
        self.freq = np.sqrt(evals)
        self.U = U
        self.u0 = U[0].copy()
        cvec = np.concatenate([[0.0], bath.couplings])
        self.v = U.T @ cvec

        T = params.temperature
        W = bath.frequencies
        cth = np.ones_like(W) if T == 0 else 1.0 / np.tanh(W / (2 * T))
        x0 = np.concatenate([[init.q2 - init.q**2], cth / (2 * W)])
        p0 = np.concatenate([[init.p2 - init.p**2], W * cth / 2])
        self.cqp = 0.5 * init.pq_sym - init.q * init.p
        # covariances in the normal frame; the cross block is cqp * u0 u0^T
        self.A = (U.T * x0) @ U
        self.D = (U.T * p0) @ U
        # bath potential energy sum_k W_k^2 Q_k^2 in the normal frame
        wb = np.concatenate([[0.0], W**2])
        self.MB = (U.T * wb) @ U
        self.MB_A = self.MB * self.A
        self.MB_D = self.MB * self.D
        self.ybar0 = U.T @ np.concatenate([[init.q], np.zeros(bath.n_modes)])
        self.pbar0 = U.T @ np.concatenate([[init.p], np.zeros(bath.n_modes)])

    def _trig(self, t):
        wt = np.multiply.outer(t, self.freq)
        c, s = np.cos(wt), np.sin(wt)
        return c, s / self.freq, s * self.freq

    def states(self, t_grid, chunk=64):
        t_grid = np.asarray(t_grid, dtype=float)
        out = []
        u0, v, A, D, cqp = self.u0, self.v, self.A, self.D, self.cqp
        dA, dD = np.diag(A), np.diag(D)
        om2 = self.omega_sq
        for i0 in range(0, t_grid.size, chunk):
            t = t_grid[i0:i0 + chunk]
            c, st, ws = self._trig(t)
            a, b = u0 * c, u0 * st          # q = a.y0 + b.pi0
            e, f = -u0 * ws, u0 * c         # p = e.y0 + f.pi0
            av, bv = v * c, v * st          # B = av.y0 + bv.pi0
            aA, eA = a @ A, e @ A
            bD, fD = b @ D, f @ D
            u_a, u_b, u_e, u_f = a @ u0, b @ u0, e @ u0, f @ u0
            q2 = np.sum(aA * a, 1) + 2 * cqp * u_a * u_b + np.sum(bD * b, 1)
            p2 = np.sum(eA * e, 1) + 2 * cqp * u_e * u_f + np.sum(fD * f, 1)
            qp = np.sum(aA * e, 1) + cqp * (u_a * u_f + u_e * u_b) + np.sum(bD * f, 1)
            qb = (np.sum(aA * av, 1) + cqp * (u_a * (bv @ u0) + (av @ u0) * u_b)
                  + np.sum(bD * bv, 1))
            # mode coordinates for the bath energy
            tr_pi = (ws**2) @ dA - 2 * cqp * (ws * c) @ (u0 * u0) + (c * c) @ dD
            pot = (np.sum((c @ self.MB_A) * c, 1) + 2 * cqp * np.sum((c * u0) @ self.MB * (st * u0), 1)
                   + np.sum((st @ self.MB_D) * st, 1))
            ybar = c * self.ybar0 + st * self.pbar0
            pibar = -ws * self.ybar0 + c * self.pbar0
            mq, mp, mb = ybar @ u0, pibar @ u0, ybar @ v
            pbar_bath = np.sum(pibar**2, 1) - mp**2
            pot_mean = np.sum((ybar @ self.MB) * ybar, 1)
            q2r, p2r, qpr = q2 + mq**2, p2 + mp**2, qp + mq * mp
            qbr = qb + mq * mb
            h_s = 0.5 * p2r + 0.5 * om2 * q2r
            h_b = 0.5 * (tr_pi - p2 + pbar_bath) + 0.5 * (pot + pot_mean)
            for j, tt in enumerate(t):
                out.append(CovarianceState(float(tt), float(q2r[j]), float(p2r[j]), float(2 * qpr[j]),
                                           float(mq[j]), float(mp[j]), float(qbr[j]),
                                           float(h_s[j]), float(-qbr[j]), float(h_b[j]), self))
        return out

    def full_matrix(self, t):
        """Symmetrized second moments of ``(x, p)`` at time ``t`` (size ``2N + 2``)."""
        c, st, ws = (arr[0] for arr in self._trig(np.array([t])))
        A, D = self.A, self.D
        Bm = self.cqp * np.outer(self.u0, self.u0)
        cy = (c[:, None] * A * c) + (c[:, None] * Bm * st) + (st[:, None] * Bm.T * c) + (st[:, None] * D * st)
        cp = (ws[:, None] * A * ws) - (ws[:, None] * Bm * c) - (c[:, None] * Bm.T * ws) + (c[:, None] * D * c)
        cx = -(c[:, None] * A * ws) + (c[:, None] * Bm * c) - (st[:, None] * Bm.T * ws) + (st[:, None] * D * c)
        ybar = c * self.ybar0 + st * self.pbar0
        pibar = -ws * self.ybar0 + c * self.pbar0
        U = self.U
        X = U @ (cy + np.outer(ybar, ybar)) @ U.T
        P = U @ (cp + np.outer(pibar, pibar)) @ U.T
        XP = U @ (cx + np.outer(ybar, pibar)) @ U.T
        return np.block([[X, XP], [XP.T, P]])


def evolve(bath: DiscreteBath, params: ModelParams, init: InitialMoments | None = None,
           t_grid=None):
    """Evolve a factorized state: system ``init`` times a thermal bath at ``params.temperature``.

    ``init`` defaults to the ground state of ``H_S`` at the discrete bare
    frequency. Only ``params.omega_r`` and ``params.temperature`` are used;
    the couplings come from ``bath``.

    Raises
    ------
    ResolutionError
        If the grid runs past half the recurrence time.
    DiagonalizationFailure
    """
    t = check_grid(t_grid)
    if t[-1] > 0.5 * bath.t_rec:
        raise ResolutionError(f"t_max {t[-1]:.4g} exceeds t_rec/2 = {0.5 * bath.t_rec:.4g}")
    if init is None:
        init = InitialMoments.ground(math.sqrt(params.omega_r**2 + bath.counterterm))
    prop = NormalModePropagator(bath, params, init)
    return prop.states(t)


@dataclass(frozen=True)
class OracleMeasurement:
    moments: StationaryMoments
    interaction_energy: float
    energy_flow: EnergyFlow
    max_energy_drift: float
    n_samples: int


def measure(states, window) -> OracleMeasurement:
    """Time-average the system observables over ``window = (t_start, t_end)``.

    ``energy_flow`` compares the window averages with the first state. The
    drift is ``max |H(t) - H(0)| / |H(0)|`` over all states.

    Raises
    ------
    WindowError
        If fewer than two states fall inside the window.
    """
    t0, t1 = window
    ts = np.array([s.time for s in states])
    sel = [s for s in states if t0 <= s.time <= t1]
    if t1 <= t0 or len(sel) < 2:
        raise WindowError(f"window {window} holds {len(sel)} states (grid {ts.min():.3g}..{ts.max():.3g})")
    tt = np.array([s.time for s in sel])

    def avg(attr):
        y = np.array([getattr(s, attr) for s in sel])
        return float(np.trapezoid(y, tt) / (tt[-1] - tt[0]))

    mom = StationaryMoments(avg("q2"), avg("p2"), avg("pq_sym"), Method.DISCRETE_ORACLE,
                            meta={"window": (t0, t1), "n_samples": len(sel)})
    first = states[0]
    flow = EnergyFlow(avg("h_system") - first.h_system,
                      avg("h_interaction") - first.h_interaction,
                      avg("h_bath") - first.h_bath)
    h = np.array([s.h_total for s in states])
    drift = float(np.max(np.abs(h - h[0])) / abs(h[0]))
    return OracleMeasurement(mom, -avg("qb"), flow, drift, len(sel))
