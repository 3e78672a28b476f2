"""Model parameters, bath spectral densities and the self-energy kernel.

Conventions: hbar = k_B = 1. The oscillator has bare frequency ``Omega`` and
renormalized frequency ``Omega_R`` with ``Omega^2 = Omega_R^2 + gamma*Lambda``.
The Drude-Ohmic bath has spectral density

    sigma(w) = gamma * w * Lambda^2 / (Lambda^2 + w^2),

odd in ``w``. All spectral families share the convention that ``sigma(w)/w``
tends to ``gamma`` at small ``w`` for the Ohmic members.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _quad
from .errors import DomainError, InstabilityError, OverdampedError


@dataclass(frozen=True)
class ModelParams:
    """Oscillator plus Drude-Ohmic bath, parameterized by ``Omega_R``.

    Parameters
    ----------
    omega_r : float
        Renormalized frequency, > 0.
    gamma : float
        Relaxation rate, >= 0.
    lam : float
        Bath cutoff Lambda, > 0.
    temperature : float
        Bath temperature, >= 0.

    Attributes
    ----------
    omega_sq : float
        Bare frequency squared, ``omega_r**2 + gamma*lam``.
    w : float
        Damped oscillation frequency ``sqrt(omega_r**2 - gamma**2/4)``.
    """

    omega_r: float
    gamma: float
    lam: float
    temperature: float
    omega_sq: float = field(init=False)
    w: float = field(init=False)

    def __post_init__(self):
        for name in ("omega_r", "gamma", "lam", "temperature"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v}")
        if self.omega_r <= 0 or self.lam <= 0:
            raise DomainError("omega_r and lam must be positive")
        if self.gamma < 0 or self.temperature < 0:
            raise DomainError("gamma and temperature must be non-negative")
        if self.omega_r <= self.gamma / 2:
            raise OverdampedError(
                f"omega_r={self.omega_r} <= gamma/2={self.gamma / 2}: overdamped")
        object.__setattr__(self, "omega_sq", self.omega_r**2 + self.gamma * self.lam)
        object.__setattr__(self, "w", math.sqrt(self.omega_r**2 - self.gamma**2 / 4))

    @property
    def omega(self) -> float:
        """Bare frequency."""
        return math.sqrt(self.omega_sq)

    @property
    def omega_bare(self) -> float:
        return self.omega

    @property
    def stability_ratio(self) -> float:
        """``gamma*Lambda/Omega^2``; below one for every valid instance."""
        return self.gamma * self.lam / self.omega_sq

    def replace(self, **changes) -> "ModelParams":
        kw = dict(omega_r=self.omega_r, gamma=self.gamma, lam=self.lam,
                  temperature=self.temperature)
        kw.update(changes)
        return ModelParams(**kw)

    def spectrum(self) -> "BathSpectrum":
        """The Drude-Ohmic spectrum these parameters describe."""
        return BathSpectrum.drude(self.gamma, self.lam)


def derive_params(omega_r, gamma, lam, temperature) -> ModelParams:
    """Build a :class:`ModelParams` from the renormalized frequency.

    Raises
    ------
    DomainError
        Non-positive ``omega_r`` or ``lam``, negative ``gamma`` or ``temperature``.
    OverdampedError
        ``omega_r <= gamma/2``.
    """
    return ModelParams(float(omega_r), float(gamma), float(lam), float(temperature))


def derive_params_from_bare(omega_bare, gamma, lam, temperature) -> ModelParams:
    """Build a :class:`ModelParams` from the bare frequency.

    Raises
    ------
    InstabilityError
        If ``gamma*lam >= omega_bare**2``; the renormalized frequency would
        be imaginary or zero.
    """
    if not omega_bare > 0:
        raise DomainError("omega_bare must be positive")
    wr2 = omega_bare**2 - gamma * lam
    if wr2 <= 0:
        raise InstabilityError(
            f"gamma*lam={gamma * lam} >= Omega^2={omega_bare**2}")
    return derive_params(math.sqrt(wr2), gamma, lam, temperature)


class SpectrumKind(str, enum.Enum):
    DRUDE_OHMIC = "drude_ohmic"
    EXPONENTIAL_OHMIC = "exponential_ohmic"
    POWER_LAW = "power_law"


@dataclass(frozen=True)
class BathSpectrum:
    """Tagged spectral-density family.

    ``PowerLaw`` is ``gamma * w * |w/omega0|**(k-1) * f(|w|/Lambda)`` with
    ``f(x) = 1/(1+x^2)`` (``cutoff_shape='drude'``) or ``exp(-x)``.
    Exponents in ``(-1, 0)`` are accepted but only lightly validated.
    """

    kind: SpectrumKind
    gamma: float
    lam: float
    omega0: float = 1.0
    k_exponent: float = 1.0
    cutoff_shape: str = "drude"

    def __post_init__(self):
        object.__setattr__(self, "kind", SpectrumKind(self.kind))
        if self.gamma < 0 or not self.lam > 0:
            raise DomainError("need gamma >= 0 and lam > 0")
        if self.kind is SpectrumKind.POWER_LAW:
            if not self.k_exponent > -1:
                raise DomainError("k_exponent must exceed -1 (infrared divergence)")
            if not self.omega0 > 0:
                raise DomainError("omega0 must be positive")
            if self.cutoff_shape not in ("drude", "exponential"):
                raise DomainError(f"unknown cutoff_shape {self.cutoff_shape!r}")

    @classmethod
    def drude(cls, gamma, lam):
        return cls(SpectrumKind.DRUDE_OHMIC, gamma, lam)

    @classmethod
    def exponential(cls, gamma, lam):
        return cls(SpectrumKind.EXPONENTIAL_OHMIC, gamma, lam)

    @classmethod
    def power_law(cls, gamma, lam, k_exponent, omega0=1.0, cutoff_shape="drude"):
        return cls(SpectrumKind.POWER_LAW, gamma, lam, omega0, k_exponent, cutoff_shape)

    def cutoff(self, x):
        """Cutoff function ``f(|w|/Lambda)``."""
        x = np.abs(x)
        if self.kind is SpectrumKind.DRUDE_OHMIC or (
                self.kind is SpectrumKind.POWER_LAW and self.cutoff_shape == "drude"):
            return 1.0 / (1.0 + x * x)
        return np.exp(-x)

    def friction(self, omega):
        """Cutoff-free friction ``sigma(w)/(w f(|w|/Lambda))``.

        Equals ``gamma`` for the Ohmic kinds and
        ``gamma*|w/omega0|**(k-1)`` for the power law.
        """
        omega = np.asarray(omega, dtype=float)
        if self.kind is SpectrumKind.POWER_LAW:
            with np.errstate(divide="ignore"):
                return self.gamma * np.abs(omega / self.omega0) ** (self.k_exponent - 1)
        return np.full_like(omega, self.gamma)


def spectral_density(spec: BathSpectrum, omega):
    """Spectral density ``sigma(w)``, odd in ``w``; accepts arrays."""
    omega = np.asarray(omega, dtype=float)
    x = omega / spec.lam
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if spec.kind is SpectrumKind.DRUDE_OHMIC:
            out = spec.gamma * omega / (1.0 + x * x)
        elif spec.kind is SpectrumKind.EXPONENTIAL_OHMIC:
            out = spec.gamma * omega * np.exp(-np.abs(x))
        else:
            out = omega * spec.friction(omega) * spec.cutoff(x)
            out = np.where(omega == 0, 0.0, out)
        out = np.where(np.isfinite(omega) & ~np.isfinite(out), 0.0, out)
    return out[()] if out.ndim == 0 else out


def self_energy_time(spec: BathSpectrum, tau, rel_tol=1e-10):
    """Self-energy kernel ``Sigma(tau) = -(2/pi) int_0^inf sigma(w) sin(w tau) dw``.

    Drude: ``-gamma Lambda^2 exp(-Lambda|tau|) sign(tau)`` in closed form,
    with ``sign(0) = 0``. Other kinds use a Fourier-weighted quadrature.

    Raises
    ------
    QuadratureFailure
        If the oscillatory quadrature cannot reach ``rel_tol``.
    """
    tau = float(tau)
    if not np.isfinite(tau):
        raise DomainError("tau must be finite")
    if tau == 0.0:
        return 0.0
    sgn = math.copysign(1.0, tau)
    a = abs(tau)
    if spec.kind is SpectrumKind.DRUDE_OHMIC:
        return -sgn * spec.gamma * spec.lam**2 * math.exp(-spec.lam * a)
    f = lambda w: float(spectral_density(spec, w))
    # the first lobe of the integrand holds most of the mass; QAWF does the rest
    split = min(spec.lam, math.pi / a)
    head, _ = _quad.quad(lambda w: f(w) * math.sin(w * a), 0.0, split,
                         rel_tol=rel_tol, abs_tol=0.0)
    # QAWF needs an absolute target; tie it to the head
    tail, _ = _quad.quad(f, split, np.inf, weight="sin", wvar=a,
                         rel_tol=rel_tol, abs_tol=max(rel_tol * abs(head), 1e-300), limlst=200)
    return -sgn * (2.0 / math.pi) * (head + tail)


def self_energy_laplace(spec: BathSpectrum, s, rel_tol=1e-10):
    """Laplace transform of the self-energy.

    Drude: ``-gamma Lambda^2/(Lambda + s)``. Other kinds evaluate
    ``-(2/pi) int_0^inf sigma(w) w / (w^2 + s^2) dw``; on the imaginary axis
    ``s = i y`` this becomes a principal value plus ``i sign(y) sigma(|y|)``.

    Raises
    ------
    DomainError
        ``Re(s) < 0`` (outside the region of convergence).
    """
    s = complex(s)
    if s.real < 0:
        raise DomainError(f"Re(s)={s.real} < 0 is outside the convergence half-plane")
    if spec.kind is SpectrumKind.DRUDE_OHMIC:
        return -spec.gamma * spec.lam**2 / (spec.lam + s)
    sig = lambda w: float(spectral_density(spec, w))
    if s.real == 0.0 and s.imag != 0.0:
        y = abs(s.imag)
        b = 2.0 * y
        # PV of int_0^b sigma(w) w /((w+y)(w-y)) dw via a Cauchy weight
        pv, _ = _quad.quad(lambda w: sig(w) * w / (w + y), 0.0, b, weight="cauchy",
                           wvar=y, rel_tol=rel_tol)
        edges = _quad.frequency_edges([b, spec.lam], lo=b)
        rest, _ = _quad.quad_pieces(lambda w: sig(w) * w / (w * w - y * y), edges,
                                    rel_tol=rel_tol)
        val = -(2.0 / math.pi) * (pv + rest)
        return complex(val, math.copysign(1.0, s.imag) * sig(y))
    s2 = s * s
    anchors = [abs(s), spec.lam]
    edges = _quad.frequency_edges(anchors)
    re, _ = _quad.quad_pieces(lambda w: (sig(w) * w / (w * w + s2)).real, edges,
                              rel_tol=rel_tol)
    im = 0.0
    if s2.imag != 0.0:
        im, _ = _quad.quad_pieces(lambda w: (sig(w) * w / (w * w + s2)).imag, edges,
                                  rel_tol=rel_tol)
    return -(2.0 / math.pi) * complex(re, im)


@dataclass(frozen=True)
class NonOhmicReport:
    """Scaling estimates for a power-law bath.

    Attributes
    ----------
    renorm_ratio : float
        ``(Omega_R^2 - Omega^2)/Omega^2``, about ``-(gamma Lambda/Omega^2)(Lambda/omega0)^(k-1)``.
    born_condition_value : float
        ``(gamma Lambda/Omega^2)(Lambda/omega0)^(k-1)``; must be << 1 for Born.
    k_exponent, gamma, boost : float
        Inputs kept for :attr:`p2_divergence_scale`.
    """

    renorm_ratio: float
    born_condition_value: float
    k_exponent: float
    gamma: float
    boost: float

    @property
    def p2_divergence_scale(self) -> float:
        """Coefficient ``gamma/(k-1) (Lambda/omega0)^(k-1)`` of the divergent ``<p^2>`` part.

        Raises
        ------
        DomainError
            At ``k = 1``, where the divergence is logarithmic instead.
        """
        if self.k_exponent == 1:
            raise DomainError("k=1 gives a logarithmic divergence; use the Ohmic closed form")
        return self.gamma / (self.k_exponent - 1) * self.boost


def nonohmic_report(spec: BathSpectrum, omega, gamma=None) -> NonOhmicReport:
    """Renormalization, divergence and Born scales for a power-law bath.

    Parameters
    ----------
    spec : BathSpectrum
        Usually of kind ``PowerLaw``; an Ohmic spectrum is treated as ``k=1``.
    omega : float
        Oscillator frequency entering ``gamma Lambda/Omega^2``.
    gamma : float, optional
        Overrides ``spec.gamma``.
    """
    k = spec.k_exponent if spec.kind is SpectrumKind.POWER_LAW else 1.0
    g = spec.gamma if gamma is None else gamma
    if not omega > 0:
        raise DomainError("omega must be positive")
    boost = (spec.lam / spec.omega0) ** (k - 1)
    born = g * spec.lam / omega**2 * boost
    return NonOhmicReport(-born, born, k, g, boost)
