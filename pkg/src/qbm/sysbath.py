"""System-bath correlation and energy bookkeeping in the stationary state.

The interaction energy is ``<H_SB> = -<q B>`` with ``B = sum_k C_k Q_k``.
In the stationary state ``B`` is the noise plus the bath response to ``q``,
``B(w) = xi(w) + K(w) q(w)`` with ``K(w) = gamma Lambda^2/(Lambda - i w)``,
and ``q = g xi`` with ``1/g = Omega^2 - w^2 - K``. The response part
cancels the ``K`` in ``1/g`` and leaves

    <q B> = (1/pi) int_0^inf sigma(w) coth(w/2T) (Omega^2 - w^2) |g(w)|^2 dw.

Its classical limit is ``gamma Lambda T/Omega_R^2``, the Gibbs value of
``<q B> = gamma Lambda <q^2>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _quad
from .greens import poles_full
from .errors import ConvergenceError, DomainError, QuadratureFailure
from .exact import resonance_ladder, stationary_closed, stationary_quadrature
from .params import ModelParams
from .specialfn import coth

MODES = ("leading_closed", "numerical")


def _qb_integrand(params: ModelParams):
    om2, lam, g, T = params.omega_sq, params.lam, params.gamma, params.temperature
    wr = params.omega_r

    def f(w):
        if w == 0.0:
            # sigma coth -> 2 T gamma; |g|^2 -> 1/Omega_R^4
            return 0.0 if T == 0 else 2 * T * g * om2 / params.omega_r**4
        c = 1.0 if T == 0 else 1.0 / math.tanh(w / (2 * T))
        sig = g * w * lam**2 / (lam**2 + w * w)
        # 1/g = Omega^2 - w^2 - gamma Lambda^2/(Lambda - i w), real part regrouped
        # around Omega_R^2 - w^2 to avoid cancellation at the resonance
        lor = lam * lam + w * w
        re = (wr - w) * (wr + w) + g * lam * w * w / lor
        im = -g * lam * lam * w / lor
        return sig * c * (om2 - w * w) / (re * re + im * im)

    return f


def _qb_numerical(params: ModelParams, rel_tol):
    wr, lam, T, g = params.omega_r, params.lam, params.temperature, params.gamma
    s1 = poles_full(params).s1
    anchors = resonance_ladder(params.w, g, wr) + resonance_ladder(abs(s1.imag), -2 * s1.real, wr)
    anchors += [0.5 * wr, lam, params.omega]
    if T > 0:
        anchors += [T, 2 * math.pi * T]
    hi = 1e3 * max(lam, wr, T)
    edges = _quad.frequency_edges(anchors, hi=hi)
    val, err = _quad.quad_pieces(_qb_integrand(params), edges, rel_tol=rel_tol * 1e-2, limit=500)
    return val / math.pi, err / math.pi


def interaction_energy_stationary(params: ModelParams, mode="leading_closed", *,
                                  coefficient="corrected", rel_tol=1e-9) -> float:
    """Stationary ``<H_SB> = -<q B>``.

    Parameters
    ----------
    mode : {'leading_closed', 'numerical'}
        ``leading_closed`` is the large-``Lambda`` form
        ``-gamma {(Lambda/4W) [coth((W + i gamma/2)/2T) + coth((W - i gamma/2)/2T)] - (1/pi) ln(Lambda/2 pi T)}``
        with ``ln(Lambda/W)`` in place of the logarithm when ``T >= Lambda``
        (or ``T = 0``). ``numerical`` integrates the exact spectral
        representation of the full model.
    coefficient : {'corrected', 'printed'}
        ``printed`` uses ``Lambda/2W`` for the bracket. That doubles the
        classical limit away from the Gibbs value ``-gamma Lambda T/Omega_R^2``.
    rel_tol : float
        Accuracy target of the numerical mode.

    Raises
    ------
    ConvergenceError
        If the numerical quadrature misses ``rel_tol``.
    """
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}")
    g, lam, T = params.gamma, params.lam, params.temperature
    if g == 0:
        return 0.0
    if mode == "numerical":
        try:
            val, err = _qb_numerical(params, rel_tol)
        except QuadratureFailure as exc:
            raise ConvergenceError(str(exc)) from exc
        if not err <= rel_tol * abs(val):
            raise ConvergenceError(f"interaction energy error {err:.3g} on {val:.6g}")
        return -val
    if coefficient not in ("corrected", "printed"):
        raise DomainError("coefficient must be 'corrected' or 'printed'")
    w = params.w
    zp = complex(w, g / 2)
    if T > 0:
        bracket = (coth(zp / (2 * T)) + coth(zp.conjugate() / (2 * T))).real
    else:
        bracket = 2.0
    scale = lam / (4 * w) if coefficient == "corrected" else lam / (2 * w)
    log = math.log(lam / w) if (T == 0 or T >= lam) else math.log(lam / (2 * math.pi * T))
    return -g * (scale * bracket - log / math.pi)


@dataclass(frozen=True)
class EnergyFlow:
    """Energy changes between the factorized initial state and the stationary state.

    The bath change is fixed by conservation of the total energy, so the
    three fields sum to zero.
    """

    delta_e_system: float
    delta_e_interaction: float
    delta_e_bath: float

    @property
    def total(self):
        return self.delta_e_system + self.delta_e_interaction + self.delta_e_bath


def energy_flow(params: ModelParams, *, exact="closed", interaction_mode="numerical") -> EnergyFlow:
    """Energy flow when the system starts in the ground state of ``H_S``.

    ``Delta E_S = <p^2>/2 + Omega^2 <q^2>/2 - Omega/2`` with the bare
    ``Omega^2 = Omega_R^2 + gamma Lambda`` and exact stationary moments
    (``exact='closed'`` or ``'full'``). ``Delta E_SB = <H_SB(inf)>`` since the
    initial state is factorized.
    """
    if params.gamma == 0:
        return EnergyFlow(0.0, 0.0, 0.0)
    e = stationary_closed(params) if exact == "closed" else stationary_quadrature(params, green="full")
    de_s = 0.5 * e.p2 + 0.5 * params.omega_sq * e.q2 - 0.5 * params.omega
    de_sb = interaction_energy_stationary(params, interaction_mode)
    return EnergyFlow(float(de_s), float(de_sb), float(-(de_s + de_sb)))


def classical_interaction_energy(params: ModelParams) -> float:
    """Gibbs value ``-gamma Lambda T/Omega_R^2`` of ``<H_SB>`` for ``T`` above every other scale."""
    return -params.gamma * params.lam * params.temperature / params.omega_r**2


__all__ = ["EnergyFlow", "classical_interaction_energy", "energy_flow",
           "interaction_energy_stationary"]
