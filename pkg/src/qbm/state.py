"""Result containers shared by the exact, master-equation and oracle schemes."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnphysicalInitError


class Method(str, enum.Enum):
    EXACT_CLOSED = "ExactClosed"
    EXACT_QUADRATURE = "ExactQuadrature"
    BORN_MARKOV = "BornMarkov"
    BORN_NON_MARKOV = "BornNonMarkov"
    DISCRETE_ORACLE = "DiscreteOracle"


@dataclass(frozen=True)
class StationaryMoments:
    """Equal-time second moments in the stationary state.

    ``pq_sym`` is ``<pq + qp>``. ``q2_err`` and ``p2_err`` are absolute error
    estimates where the producing scheme has one, else 0.
    """

    q2: float
    p2: float
    pq_sym: float
    method: Method
    q2_err: float = 0.0
    p2_err: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))

    def as_tuple(self):
        return (self.q2, self.p2, self.pq_sym)


@dataclass(frozen=True)
class InitialMoments:
    """Factorized initial system state: second moments and means.

    ``q2``, ``p2`` and ``pq_sym`` are raw moments ``<q^2>``, ``<p^2>``,
    ``<pq+qp>``; ``q`` and ``p`` are the means.
    """

    q2: float
    p2: float
    pq_sym: float = 0.0
    q: float = 0.0
    p: float = 0.0

    def __post_init__(self):
        vq = self.q2 - self.q**2
        vp = self.p2 - self.p**2
        cov = 0.5 * self.pq_sym - self.q * self.p
        if vq <= 0 or vp <= 0 or vq * vp - cov**2 < 0.25 * (1 - 1e-12):
            raise UnphysicalInitError(
                f"covariance det {vq * vp - cov**2:.6g} below 1/4")

    @classmethod
    def thermal(cls, omega, temperature, q=0.0, p=0.0):
        """Thermal state of a free oscillator at frequency ``omega``, shifted to means ``(q, p)``."""
        c = 1.0 if temperature == 0 else 1.0 / np.tanh(omega / (2 * temperature))
        return cls(c / (2 * omega) + q * q, omega * c / 2 + p * p, 2 * q * p, q, p)

    @classmethod
    def ground(cls, omega):
        """Ground state of ``p^2/2 + omega^2 q^2/2``."""
        return cls.thermal(omega, 0.0)


@dataclass
class MomentTrajectory:
    """First and second moments on a time grid."""

    t: np.ndarray
    mean_q: np.ndarray
    mean_p: np.ndarray
    q2: np.ndarray
    p2: np.ndarray
    pq_sym: np.ndarray
    method: Method
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        if self.t.ndim != 1 or (self.t.size > 1 and np.any(np.diff(self.t) <= 0)):
            raise DomainError("t grid must be one-dimensional and strictly increasing")
        self.method = Method(self.method)

    def columns(self):
        return {"t": self.t, "mean_q": self.mean_q, "mean_p": self.mean_p,
                "q2": self.q2, "p2": self.p2, "pq_sym": self.pq_sym}


def check_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise DomainError("t grid must be a non-empty 1-D array")
    if t[0] < 0 or (t.size > 1 and np.any(np.diff(t) <= 0)):
        raise DomainError("t grid must start at t >= 0 and increase strictly")
    return t
