import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from qbm import (BathSpectrum, DomainError, InstabilityError, ModelParams, OverdampedError,
                 derive_params, derive_params_from_bare, nonohmic_report, self_energy_laplace,
                 self_energy_time, spectral_density)


def test_derived_fields():
    p = derive_params(1, 0.005, 100, 1)
    assert p.omega_sq == pytest.approx(1.5, rel=1e-15)
    assert p.stability_ratio == pytest.approx(1 / 3, rel=1e-15)
    assert p.w == pytest.approx(math.sqrt(1 - 0.005**2 / 4), rel=1e-15)
    assert p.w == pytest.approx(0.99999687, abs=1e-8)


def test_decoupled_and_stability_ratio():
    p = derive_params(1, 0, 123.0, 1)
    assert p.omega_sq == 1 and p.w == 1
    p = derive_params(1, 0.001, 1e4, 1)
    assert p.omega_sq == pytest.approx(11)
    assert p.stability_ratio == pytest.approx(10 / 11)


def test_rejections():
    with pytest.raises(OverdampedError):
        derive_params(1, 2.0, 10, 1)
    with pytest.raises(DomainError):
        derive_params(0, 0.1, 10, 1)
    with pytest.raises(DomainError):
        derive_params(1, 0.1, 10, -1)
    with pytest.raises(InstabilityError):
        derive_params_from_bare(1, 0.02, 60, 1)


def test_from_bare():
    assert derive_params_from_bare(math.sqrt(1.5), 0.005, 100, 1).omega_r == pytest.approx(1, rel=1e-14)
    assert derive_params_from_bare(1, 0.001, 100, 1).omega_r ** 2 == pytest.approx(0.9, rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 10), st.floats(0, 0.1), st.floats(1, 1e4), st.floats(0, 100))
def test_round_trip(wr, g, lam, T):
    p = derive_params(wr, g, lam, T)
    q = derive_params_from_bare(p.omega_bare, g, lam, T)
    assert q.omega_r == pytest.approx(wr, rel=1e-12)


@pytest.mark.parametrize("spec", [BathSpectrum.drude(0.05, 20), BathSpectrum.exponential(0.05, 20),
                                  BathSpectrum.power_law(0.05, 20, 3), BathSpectrum.power_law(0.05, 20, 0.5)])
def test_spectral_density_odd(spec):
    w = np.linspace(-100, 100, 2001)
    assert np.all(spectral_density(spec, w) + spectral_density(spec, -w) == 0)


def test_spectral_density_values():
    d = BathSpectrum.drude(0.05, 20)
    assert spectral_density(d, 20.0) == pytest.approx(0.05 * 20 / 2)
    assert spectral_density(d, 0.0) == 0
    pl = BathSpectrum.power_law(0.05, 1e4, 3, omega0=1.0)
    assert spectral_density(pl, 1.0) == pytest.approx(0.05, rel=1e-6)


def test_drude_self_energy():
    d = BathSpectrum.drude(0.05, 20)
    assert self_energy_time(d, 0.0) == 0
    assert self_energy_time(d, 1 / 20) == pytest.approx(-0.05 * 400 / math.e, rel=1e-14)
    assert self_energy_time(d, -1 / 20) == pytest.approx(0.05 * 400 / math.e, rel=1e-14)
    assert self_energy_laplace(d, 0) == pytest.approx(-0.05 * 20)
    assert self_energy_laplace(d, 20) == pytest.approx(-0.05 * 10)


@pytest.mark.parametrize("s", [0.1, 1.0, 10.0])
def test_drude_laplace_consistency(s):
    d = BathSpectrum.drude(0.05, 20)
    val, _ = quad(lambda t: math.exp(-s * t) * self_energy_time(d, t), 0, 60 / 20,
                  epsabs=0, epsrel=1e-12, limit=200)
    assert val == pytest.approx(self_energy_laplace(d, s), rel=1e-8)


def test_exponential_self_energy_oracle():
    # independent route: Sigma(tau) = -(2/pi) int sigma(w) sin(w tau) dw, by mpmath
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 30
    g, lam, tau = 0.05, 20.0, 0.3
    ref = -2 / mp.pi * mp.quadosc(lambda w: g * w * mp.e**(-w / lam) * mp.sin(w * tau), [0, mp.inf],
                                  omega=tau)
    spec = BathSpectrum.exponential(g, lam)
    assert self_energy_time(spec, tau) == pytest.approx(float(ref), rel=1e-8)
    # closed form for the exponential cutoff: -(4/pi) g lam^3 tau/(1+lam^2 tau^2)^2
    cf = -(4 / math.pi) * g * lam**3 * tau / (1 + (lam * tau) ** 2) ** 2
    assert float(ref) == pytest.approx(cf, rel=1e-12)


def test_exponential_laplace_oracle():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 30
    g, lam, s = 0.05, 20.0, 0.5
    # Laplace transform of the closed-form time kernel
    ref = mp.quad(lambda t: mp.e**(-s * t) * -(4 / mp.pi) * g * lam**3 * t / (1 + (lam * t) ** 2) ** 2,
                  [0, 1 / lam, 10 / lam, mp.inf])
    val = self_energy_laplace(BathSpectrum.exponential(g, lam), s)
    assert val.real == pytest.approx(float(ref), rel=1e-8)
    assert abs(val.imag) < 1e-12


def test_delta_derivative_limit():
    # int Sigma(tau) phi(tau) dtau -> -gamma phi'(0) on the half line
    g = 0.05
    phi = lambda t: math.sin(2 * t) * math.exp(-t)   # phi'(0) = 2
    errs = []
    for lam in (1e2, 1e3, 1e4):
        d = BathSpectrum.drude(g, lam)
        val, _ = quad(lambda t: self_energy_time(d, t) * phi(t), 0, 60 / lam,
                      epsabs=0, epsrel=1e-12, limit=200)
        errs.append(abs(val + g * 2))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3 * g


def test_nonohmic_report():
    r = nonohmic_report(BathSpectrum.power_law(1e-3, 1e3, 1.0), omega=1.0)
    assert r.renorm_ratio == pytest.approx(-1e-3 * 1e3)
    with pytest.raises(DomainError):
        r.p2_divergence_scale
    r = nonohmic_report(BathSpectrum.power_law(1e-4, 1e3, 3.0), omega=1.0)
    assert r.born_condition_value == pytest.approx(1e5)
    assert r.p2_divergence_scale == pytest.approx(1e-4 / 2 * 1e6)
    r = nonohmic_report(BathSpectrum.power_law(1e-4, 1e4, 0.5), omega=1.0)
    assert r.boost == pytest.approx(1e-2)
