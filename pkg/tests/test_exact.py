import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from qbm import (BathSpectrum, DomainError, InitialMoments, ModelParams, UnphysicalInitError,
                 correlation_trace, derive_params_from_bare, noise_kernel_sym, stationary_closed,
                 stationary_quadrature, transient_moments)
from qbm.exact import noise_double_convolution_quadrature
from qbm.params import spectral_density


def free_values(wr, T):
    c = 1 / math.tanh(wr / (2 * T))
    return c / (2 * wr), wr * c / 2


@pytest.mark.parametrize("g", [1e-3, 5e-3])
@pytest.mark.parametrize("lam", [10, 1e3])
@pytest.mark.parametrize("T", [0.2, 5])
def test_closed_vs_quadrature(g, lam, T):
    p = ModelParams(1, g, lam, T)
    a, b = stationary_closed(p), stationary_quadrature(p)
    assert a.q2 == pytest.approx(b.q2, rel=1e-6)
    assert a.p2 == pytest.approx(b.p2, rel=1e-6)
    assert a.pq_sym == 0


def test_resonant_point_is_finite_and_matches():
    # Lambda/2 pi T exactly an integer
    p = ModelParams(1, 5e-3, 2 * math.pi * 3, 1.0)
    a, b = stationary_closed(p), stationary_quadrature(p)
    assert a.meta["resonant"]
    assert a.q2 == pytest.approx(b.q2, rel=1e-6)
    assert a.p2 == pytest.approx(b.p2, rel=1e-6)


def test_decoupled_limit():
    q, p = free_values(1, 0.7)
    e = stationary_closed(ModelParams(1, 0, 50, 0.7))
    assert (e.q2, e.p2) == pytest.approx((q, p), rel=1e-14)
    # the cutoff weighs the resonance by Lambda^2/(Lambda^2 + Omega_R^2); keep that below 1e-4
    e = stationary_quadrature(ModelParams(1, 1e-8, 1e3, 0.7))
    assert (e.q2, e.p2) == pytest.approx((q, p), rel=1e-4)


def test_classical_limit():
    # T >> Lambda >> Omega_R, gamma
    p = ModelParams(1, 1e-3, 100, 1e5)
    e = stationary_closed(p)
    assert e.q2 == pytest.approx(p.temperature, rel=2e-3)
    assert e.p2 == pytest.approx(p.temperature, rel=2e-3)


def test_log_enhancement_of_p2():
    # Lambda >> T >> Omega_R, gamma: p2 ~ T + (gamma/pi) ln(Lambda/2 pi T) + O(gamma);
    # only the logarithmic slope is checked, the O(gamma) constant is not predicted
    g, T = 1e-3, 20.0
    lams = np.array([1e4, 1e5, 1e6])
    p2 = [stationary_closed(ModelParams(1, g, lam, T)).p2 for lam in lams]
    assert np.polyfit(np.log(lams), p2, 1)[0] == pytest.approx(g / math.pi, rel=0.01)
    assert p2[0] == pytest.approx(T, rel=1e-3)


def test_exponential_cutoff_log_slope():
    # an exponential cutoff also damps the resonance by exp(-Omega_R/Lambda), an
    # O(1/Lambda) effect that swamps gamma/pi at Lambda = 100; fit it out
    g = 1e-3
    lams = np.array([1e2, 1e3, 1e4, 1e5])
    p2 = [stationary_quadrature(ModelParams(1, g, lam, 1.0), BathSpectrum.exponential(g, lam)).p2
          for lam in lams]
    design = np.stack([np.ones_like(lams), np.log(lams), 1 / lams], axis=1)
    coef = np.linalg.lstsq(design, p2, rcond=None)[0]
    assert coef[1] == pytest.approx(g / math.pi, rel=0.1)


def test_zero_temperature():
    p = ModelParams(1, 5e-3, 100, 0.0)
    with pytest.raises(DomainError):
        stationary_closed(p)
    e = stationary_quadrature(p)
    assert e.q2 * e.p2 > 0.25
    # approaches the T -> 0 limit of the closed form
    c = stationary_closed(p.replace(temperature=1e-3))
    assert (e.q2, e.p2) == pytest.approx((c.q2, c.p2), rel=1e-6)


def test_full_green_differs_by_lambda_corrections():
    p = ModelParams(1, 0.05, 20, 5)
    a = stationary_quadrature(p)
    b = stationary_quadrature(p, green="full")
    assert b.meta["green"] == "full"
    assert abs(b.p2 / a.p2 - 1) < 5 * (p.omega_r**2 / p.lam**2 + p.gamma / p.lam)
    with pytest.raises(DomainError):
        stationary_quadrature(p, BathSpectrum.exponential(0.05, 20), green="full")


def test_slow_tail_warns():
    spec = BathSpectrum.power_law(1e-3, 10.0, 2.5, cutoff_shape="drude")
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        try:
            stationary_quadrature(ModelParams(1, 1e-3, 10, 1), spec, rel_tol=1e-4)
        except Exception:
            pass
    assert any("integrand" in str(r.message) for r in rec)


def test_heisenberg_bound():
    for g in (1e-3, 0.05, 0.5):
        for T in (0.05, 1, 10):
            p = ModelParams(1, g, 30, T)
            f = stationary_quadrature(p, green="full")
            assert f.q2 * f.p2 >= 0.25
            # the large-Lambda reduction can undershoot by O(Omega_R^2/Lambda^2)
            e = stationary_closed(p)
            assert e.q2 * e.p2 >= 0.25 * (1 - 2 * p.omega_r**2 / p.lam**2)


def test_bare_entry_gives_same_result():
    a = ModelParams(1, 5e-3, 100, 1)
    b = derive_params_from_bare(a.omega_bare, 5e-3, 100, 1)
    assert stationary_closed(a).as_tuple() == pytest.approx(stationary_closed(b).as_tuple(), rel=1e-13)


def test_correlation_trace():
    p = ModelParams(1, 0.05, 20, 5)
    e = stationary_closed(p)
    tr = correlation_trace(p, [0.0, 0.7, -0.7])
    assert tr.values[0].real == pytest.approx(e.q2, rel=1e-8)
    assert tr.values[0].imag == 0 and tr.values[0].real > 0
    assert tr.values[2] == pytest.approx(tr.values[1].conjugate(), rel=1e-12)
    pp = correlation_trace(p, [0.0], kind="pp")
    assert pp.values[0].real == pytest.approx(e.p2, rel=1e-8)


def test_pp_trace_log_near_zero_offset():
    # for 1/Lambda << tau << 1/T the pp correlator falls like -(gamma/pi) ln(tau)
    g, lam, T = 1e-2, 1e4, 1.0
    p = ModelParams(1, g, lam, T)
    taus = np.array([1e-3, 1e-2])
    v = correlation_trace(p, taus, kind="pp").values.real
    slope = (v[1] - v[0]) / math.log(taus[1] / taus[0])
    assert slope == pytest.approx(-g / math.pi, rel=0.15)


def test_noise_kernel():
    p = ModelParams(1, 0.05, 20, 5)
    assert noise_kernel_sym(p, 0.3) == pytest.approx(noise_kernel_sym(p, -0.3), rel=1e-15)
    tau = 0.1
    spec = p.spectrum()
    f = lambda w: float(spectral_density(spec, w)) / math.tanh(w / (2 * p.temperature))
    head = quad(lambda w: f(w) * math.cos(w * tau), 0, 200, limit=400, epsabs=0, epsrel=1e-12)[0]
    tail = quad(f, 200, np.inf, weight="cos", wvar=tau, epsabs=1e-11, limlst=200)[0]
    assert noise_kernel_sym(p, tau) == pytest.approx((head + tail) / math.pi, rel=1e-8)
    with pytest.raises(DomainError):
        noise_kernel_sym(p, 0.0)


def test_noise_kernel_classical():
    p = ModelParams(1, 0.05, 20, 1e4)
    tau = 2 / p.lam
    ref = p.gamma * p.temperature * p.lam * math.exp(-2)
    assert noise_kernel_sym(p, tau) == pytest.approx(ref, rel=1e-3)


def test_transient_initial_data():
    p = ModelParams(1, 0.05, 20, 5)
    init = InitialMoments(2.0, 1.5, 0.3, 0.4, -0.2)
    tr = transient_moments(p, init, [0.0, 1.0])
    assert (tr.q2[0], tr.p2[0], tr.pq_sym[0], tr.mean_q[0], tr.mean_p[0]) == pytest.approx(
        (2.0, 1.5, 0.3, 0.4, -0.2), abs=1e-12)


def test_transient_settles():
    p = ModelParams(1, 0.05, 20, 5)
    init = InitialMoments.ground(p.omega)
    t = np.array([15, 20, 25]) / p.gamma
    tr = transient_moments(p, init, t, mode="large_lambda")
    e = stationary_closed(p)
    assert tr.q2[1] == pytest.approx(e.q2, rel=1e-3)
    assert tr.p2[1] == pytest.approx(e.p2, rel=1e-3)
    assert abs(tr.q2[2] / tr.q2[0] - 1) < 1e-3
    # the full Green's function settles to the full-G stationary values
    full = transient_moments(p, init, t)
    ef = stationary_quadrature(p, green="full")
    assert full.q2[2] == pytest.approx(ef.q2, rel=1e-3)
    assert full.p2[2] == pytest.approx(ef.p2, rel=1e-3)


def test_transient_decoupled():
    p = ModelParams(1.3, 0.0, 20, 5)
    init = InitialMoments(2.0, 1.5, 0.0)
    t = np.linspace(0, 10, 51)
    tr = transient_moments(p, init, t)
    c, s = np.cos(1.3 * t), np.sin(1.3 * t)
    assert np.allclose(tr.q2, c**2 * 2.0 + s**2 * 1.5 / 1.69, atol=1e-12)
    energy = 0.5 * tr.p2 + 0.5 * 1.69 * tr.q2
    assert np.ptp(energy) < 1e-12


@pytest.mark.parametrize("kind,col", [("qq", "q2"), ("pp", "p2"), ("qp", "pq_sym")])
def test_transient_noise_against_quadrature(kind, col):
    p = ModelParams(1, 0.05, 20, 5)
    zero = InitialMoments(1.0, 1.0, 0.0)
    t = 3.0
    tr = transient_moments(p, zero, [0.0, t])
    from qbm.greens import green_time
    G, Gd, Gdd = (green_time(p, t, "full", k) for k in range(3))
    init_part = {"q2": Gd**2 + G**2, "p2": Gdd**2 + Gd**2, "pq_sym": 2 * Gd * Gdd + 2 * G * Gd}[col]
    noise = getattr(tr, col)[1] - init_part
    ref = noise_double_convolution_quadrature(p, t, kind=kind)
    assert noise == pytest.approx(ref, rel=1e-6, abs=1e-9)


def test_unphysical_init():
    with pytest.raises(UnphysicalInitError):
        InitialMoments(0.1, 0.1)
