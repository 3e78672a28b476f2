import math

import numpy as np
import pytest
from scipy.integrate import quad

from qbm import (InitialMoments, ModelParams, asymptotic_coefficients, derive_params_from_bare,
                 integrate_markov, markov_coefficients, stationary_closed, stationary_markov)
from qbm.greens import green_time
from qbm.markov import DriveTable, drive_integral, markov_rhs_residual
from qbm.params import spectral_density


def test_coefficients_vanish_at_zero():
    c = markov_coefficients(ModelParams(1, 0.05, 20, 5), 0.0)
    assert (c.alpha, c.beta, c.f, c.h) == (0, 0, 0, 0)


def test_coefficients_at_large_lambda_t():
    p = ModelParams(1, 1e-3, 1e4, 1)
    c = markov_coefficients(p, 50 / p.lam)
    assert c.alpha == pytest.approx(p.gamma * p.lam, rel=2e-3)
    assert c.beta == pytest.approx(p.gamma, rel=2e-3)
    a = asymptotic_coefficients(p)
    lor = p.lam**2 / (p.lam**2 + p.omega_sq)
    assert a.alpha == pytest.approx(p.gamma * p.lam * lor, rel=1e-15)
    assert a.beta == pytest.approx(p.gamma * lor, rel=1e-15)


def test_asymptotic_h():
    p = derive_params_from_bare(1.2, 0.005, 100.0, 2.0)
    a = asymptotic_coefficients(p)
    lor = p.lam**2 / (p.lam**2 + p.omega_sq)
    ref = p.gamma * 1.2 * lor / math.tanh(1.2 / 4.0)
    assert a.h == pytest.approx(ref, rel=1e-6)
    # the certified series at t = inf agrees with the digamma closed forms
    j = drive_integral(p, np.inf)
    assert j.real == pytest.approx(a.h, rel=1e-10)
    assert j.imag / p.omega == pytest.approx(a.f, rel=1e-10)


def _drive_by_frequency(p, t):
    # J(t) = (1/pi) int sigma coth [E(i(W+w)) + E(i(W-w))] dw,  E(z) = (e^{zt} - 1)/z
    om, T = p.omega, p.temperature
    spec = p.spectrum()

    def e(z):
        return t if z == 0 else (np.exp(z * t) - 1) / z

    def kern(w, part):
        s = float(spectral_density(spec, w)) / math.tanh(w / (2 * T))
        v = s * (e(1j * (om + w)) + e(1j * (om - w)))
        return getattr(v, part)

    top = 400 * p.lam
    pts = np.unique(np.concatenate([[1e-12, om, p.lam], np.linspace(1e-12, top, int(top * t / 10) + 2)]))
    out = []
    for part in ("real", "imag"):
        total = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            total += quad(kern, a, b, args=(part,), epsabs=1e-14, epsrel=1e-12, limit=200)[0]
        out.append(total)
    return complex(*out) / math.pi


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_drives_against_frequency_quadrature(t):
    p = ModelParams(1, 0.05, 20, 5)
    ref = _drive_by_frequency(p, t)
    j = drive_integral(p, t)
    # the frequency integral is truncated at 400 Lambda, a relative 1e-5 effect on f
    assert abs(j.real - ref.real) < 1e-6 * abs(ref) + 1e-6
    assert abs(j.imag - ref.imag) < 2e-5 * abs(ref)


def test_drive_table_interpolation():
    p = ModelParams(1, 0.05, 20, 5)
    d = DriveTable(p, 200)
    assert d.max_interp_error < 1e-7
    tt = np.array([0.013, 0.37, 2.2])
    j = drive_integral(p, tt)
    for k, t in enumerate(tt):
        f, h = d(t)
        assert f == pytest.approx(j[k].imag / p.omega, abs=1e-7)
        assert h == pytest.approx(j[k].real, abs=1e-7)


def test_fixed_point_residual():
    for T in (0.2, 1, 5, 20):
        p = ModelParams(1, 5e-3, 100, T)
        assert np.max(np.abs(markov_rhs_residual(p, stationary_markov(p)))) < 1e-8


def test_stationary_limits():
    p = ModelParams(1, 1e-3, 100, 1e-9)
    s = stationary_markov(p)
    assert s.p2 == pytest.approx(p.omega / 2, rel=1e-12)
    assert s.meta["omega_bare"] == p.omega and s.meta["omega_r"] == 1
    # T >> Lambda >> Omega, gamma
    p = ModelParams(1, 1e-3, 100, 1e5)
    s = stationary_markov(p, form="large_lambda")
    T = p.temperature
    assert s.p2 == pytest.approx(T, rel=1e-6)
    assert s.q2 == pytest.approx(T / p.omega_r**2 * (1 + p.gamma / p.lam), rel=2e-4)


def test_markov_log_sits_in_q2_at_fixed_bare_frequency():
    # with the bare frequency fixed, p2 = (Omega/2) coth(Omega/2T) carries no Lambda at all,
    # while (Omega^2 - alpha) q2 - p2 = f/2 falls like -(gamma/pi) ln Lambda
    g, T, om = 1e-5, 20.0, 3.0
    lams = np.array([1e3, 1e4, 1e5])
    st = [stationary_markov(derive_params_from_bare(om, g, lam, T)) for lam in lams]
    assert np.ptp([s.p2 for s in st]) < 1e-13
    a = [asymptotic_coefficients(derive_params_from_bare(om, g, lam, T)) for lam in lams]
    half_f = [(om**2 - c.alpha) * s.q2 - s.p2 for s, c in zip(st, a)]
    assert np.polyfit(np.log(lams), half_f, 1)[0] == pytest.approx(-g / math.pi, rel=0.01)


def test_markov_q2_classical_log():
    # Lambda >> T >> Omega: q2 ~ (T/Omega_R^2)(1 - (gamma/pi T) ln(Lambda/2 pi T))
    g, T = 1e-4, 20.0
    lams = np.array([1e3, 1e4, 1e5])
    q2 = [stationary_markov(ModelParams(1, g, lam, T), form="large_lambda").q2 for lam in lams]
    # the bare Omega in coth also moves with Lambda; remove that known piece
    corr = [stationary_markov(ModelParams(1, g, lam, T), form="large_lambda").p2 for lam in lams]
    y = np.array(q2) - np.array(corr)
    assert np.polyfit(np.log(lams), y, 1)[0] == pytest.approx(-g / math.pi, rel=0.01)


def test_integration_settles():
    for T in (1.0, 5.0):
        p = ModelParams(1, 0.05, 20, T)
        init = InitialMoments(3.0, 0.5, 0.4, 0.3, -0.2)
        t = np.array([0, 1, 10, 30 / p.gamma])
        tr = integrate_markov(p, init, t)
        s = stationary_markov(p)
        assert tr.q2[-1] == pytest.approx(s.q2, rel=1e-3)
        assert tr.p2[-1] == pytest.approx(s.p2, rel=1e-3)
        assert abs(tr.pq_sym[-1]) < 1e-3 * s.p2
        assert tr.q2[0] == 3.0


def test_fixed_point_start_gets_a_boundary_layer_kick():
    # alpha(t), f(t) switch on over 1/Lambda; the fixed point is kicked by O(gamma/Omega)
    # and the kick then decays at rate beta ~ gamma
    p = ModelParams(1, 0.05, 20, 5)
    s = stationary_markov(p)
    t = np.concatenate([np.linspace(0, 100, 2001), [30 / p.gamma]])
    tr = integrate_markov(p, InitialMoments(s.q2, s.p2, 0.0), t)
    late = t >= 50 / p.lam
    dev = np.abs(tr.q2[late] / s.q2 - 1)
    assert dev.max() < 2 * p.gamma / p.omega
    assert dev[-1] < 1e-3


@pytest.mark.parametrize("g,lam", [(0.05, 20), (0.01, 320), (0.002, 100)])
def test_mean_follows_damped_oscillator(g, lam):
    # the Markov frequency is sqrt(Omega^2 - alpha) = Omega_R (1 + O(gamma/Lambda + gamma^2)),
    # so the phase error grows linearly in t
    p = ModelParams(1, g, lam, 5)
    t = np.linspace(0, 200, 2001)
    tr = integrate_markov(p, InitialMoments(2, 1, 0.0, 0.5, 0.3), t)
    ex = 0.5 * green_time(p, t, "full", 1) + 0.3 * green_time(p, t, "full")
    amp = math.hypot(0.5, 0.3 / p.omega_r)
    bound = amp * (g / lam + g * g) * (2 + p.omega_r * t) * np.exp(-g * t / 2)
    assert np.all(np.abs(tr.mean_q - ex) <= bound)
