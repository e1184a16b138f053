import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import trapezoid

from vsic.constants import KB_MEV_PER_K
from vsic.fitting import numeric_jacobian
from vsic.models import (OdmrLineshapeParams, OutOfRangeError, RabiParams, angular_jac,
                         angular_model, arrhenius_jac, arrhenius_model,
                         delta_a_from_two_temperatures, fit_angular, fit_arrhenius, fit_odmr,
                         fit_rabi, odmr_jac, odmr_lineshape, odmr_model, rabi_jac, rabi_model)
from vsic.optics import cos2theta_to_theta, thermal_cos2theta


def _rel_close(a, b, rel=1e-6):
    """Entrywise agreement relative to the largest entry of each column."""
    scale = np.max(np.abs(b), axis=0) + 1e-300
    return np.all(np.abs(a - b) <= rel * scale)


# ---------------------------------------------------- Jacobian consistency

@given(st.floats(1, 1e4), st.floats(-0.99, 0.99))
def test_angular_jacobian(i0, c):
    x = np.linspace(0, 180, 19)
    assert _rel_close(numeric_jacobian(angular_model, [i0, c], x), angular_jac(x, i0, c))


@given(st.floats(-1e-2, 1e-2), st.floats(1e-3, 1.0), st.floats(0.5, 80))
def test_arrhenius_jacobian(c0, c1, ea):
    t = np.linspace(20, 300, 15)
    assert _rel_close(numeric_jacobian(arrhenius_model, [c0, c1, ea], t),
                      arrhenius_jac(t, c0, c1, ea))


@given(st.floats(5, 30), st.floats(0.1, 3), st.floats(5, 50), st.floats(0.5, 5),
       st.floats(1e-4, 1))
def test_odmr_jacobian(tc, gamma, d0, dd, scale):
    nu = np.linspace(2 * (d0 - 3 * dd), 2 * (d0 + 3 * dd), 9)
    nu_t = np.column_stack([np.tile(nu, 2), np.repeat([8.0, 24.0], 9)])
    p = [tc, gamma, d0, dd, scale]
    assert _rel_close(numeric_jacobian(odmr_model, p, nu_t), odmr_jac(nu_t, *p))


@given(st.floats(-1, 1), st.floats(0.1, 2), st.floats(0.01, 0.2), st.floats(-3, 3),
       st.floats(50, 500))
def test_rabi_jacobian(a, b, om, ph, t2):
    tau = np.linspace(0, 600, 31)
    p = [a, b, om, ph, t2]
    assert _rel_close(numeric_jacobian(rabi_model, p, tau), rabi_jac(tau, *p))


# ------------------------------------------------------------------ angular

@pytest.mark.parametrize("c", [0.96, -0.89, 0.06])
def test_angular_noise_free_recovery(c):
    phi = np.linspace(0, 180, 19)
    res = fit_angular(phi, angular_model(phi, 500.0, c))
    assert res["cos2theta"] == pytest.approx(c, abs=1e-9)
    assert res["i0"] == pytest.approx(500.0, rel=1e-9)


def test_angular_constant_scan_zero_sensitivity():
    phi = np.linspace(0, 180, 19)
    res = fit_angular(phi, np.full(19, 7.0))
    assert res["cos2theta"] == 0.0 and "zero_sensitivity" in res.flags


def test_angular_clamped():
    phi = np.linspace(0, 180, 19)
    y = angular_model(phi, 100.0, 1.0) + np.where(np.cos(np.radians(2 * phi)) > 0, 1.0, -1.0)
    assert -1.0 <= fit_angular(phi, y)["cos2theta"] <= 1.0


def test_angular_span_required():
    with pytest.raises(ValueError):
        fit_angular(np.linspace(0, 90, 10), np.ones(10))


# ---------------------------------------------------------------- Arrhenius

def test_arrhenius_limits():
    assert arrhenius_model(1e-3, -5e-3, 0.02, 43.0) == pytest.approx(-5e-3)
    assert arrhenius_model(1e-3, -5e-4, 0.02, 4.1) == pytest.approx(-5e-4)
    assert np.allclose(arrhenius_model(np.array([1.0, 100.0]), 0.1, 0.2, 0.0), 0.3)
    with pytest.raises(ValueError):
        arrhenius_model(0.0, 0, 0, 1)


@pytest.mark.parametrize("ea,c0", [(43.0, -5e-3), (4.1, -5e-4)])
def test_arrhenius_recovery(ea, c0):
    t = np.linspace(5, 300, 40)
    rng = np.random.default_rng(1)
    y = arrhenius_model(t, c0, 0.02, ea)
    res = fit_arrhenius(t, y + rng.normal(0, 2e-5, t.size))
    assert res["e_a"] == pytest.approx(ea, rel=0.05)
    assert res["c0"] == pytest.approx(c0, rel=0.1)


def test_arrhenius_anti_activation_flag():
    t = np.linspace(20, 300, 30)
    y = 0.01 + 1e-3 * np.exp(5.0 / (KB_MEV_PER_K * t))
    res = fit_arrhenius(t, y, e_grid=np.linspace(-20, 20, 81))
    assert res["e_a"] < 0 and "anti_activation" in res.flags


# --------------------------------------------------------------------- ODMR

P_ODMR = OdmrLineshapeParams(t_c0=16.0, gamma=1.4, d0=14.0, delta_d=2.0, scale=1.0)


def test_odmr_zero_and_antisymmetry():
    d = np.linspace(0.01, 10, 200)
    plus = odmr_lineshape(2 * (P_ODMR.d0 + d), P_ODMR.t_c0, P_ODMR)
    minus = odmr_lineshape(2 * (P_ODMR.d0 - d), P_ODMR.t_c0, P_ODMR)
    assert np.max(np.abs(plus + minus)) <= 1e-12
    assert odmr_lineshape(2 * P_ODMR.d0, P_ODMR.t_c0, P_ODMR) == 0.0


@given(st.floats(0.1, 10), st.floats(0, 40), st.floats(0.01, 5))
def test_odmr_increasing_in_t_at_center(scale, t, dt):
    p = OdmrLineshapeParams(16.0, 1.4, 14.0, 2.0, scale)
    a = odmr_lineshape(28.0, t, p)
    b = odmr_lineshape(28.0, t + dt, p)
    assert b > a
    assert (b - a) / dt == pytest.approx(scale, rel=1e-9)


def test_odmr_integral_changes_sign():
    nu = np.linspace(0, 60, 6001)
    below = trapezoid(odmr_lineshape(nu, 10.0, P_ODMR), nu)
    above = trapezoid(odmr_lineshape(nu, 22.0, P_ODMR), nu)
    assert below < 0 < above


def test_odmr_params_validation():
    with pytest.raises(ValueError):
        OdmrLineshapeParams(16, 1.4, 14, 0.0)


def test_odmr_fit_recovery():
    nu1 = np.linspace(12, 44, 81)
    temps = np.array([8.0, 12.0, 16.0, 20.0, 24.0])
    nu, t = (a.ravel() for a in np.meshgrid(nu1, temps))
    p = OdmrLineshapeParams(16.0, 1.4, 14.0, 2.0, 1e-4)
    y = odmr_lineshape(nu, t, p)
    rng = np.random.default_rng(0)
    res = fit_odmr(nu, t, y + rng.normal(0, 0.02 * np.max(np.abs(y)), y.size))
    assert res["t_c0"] == pytest.approx(16.0, rel=0.1)
    assert res["gamma"] == pytest.approx(1.4, rel=0.1)


# --------------------------------------------------------------------- Rabi

def test_rabi_basics():
    assert rabi_model(0.0, 0.3, 0.5, 0.1, 0.0, 100.0) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        RabiParams(0, 1, 0.1, 0, 0.0)


@given(st.floats(-1, 1), st.floats(-2, 2), st.floats(0.01, 0.5), st.floats(-3, 3),
       st.floats(10, 500))
def test_rabi_envelope(a, b, om, ph, t2):
    tau = np.linspace(0, 1000, 101)
    s = rabi_model(tau, a, b, om, ph, t2)
    assert np.all(np.abs(s - a) <= abs(b) * np.exp(-tau / t2) + 1e-12)


def test_rabi_noise_free_recovery():
    tau = np.linspace(0, 1000, 501)
    res = fit_rabi(tau, rabi_model(tau, 0.1, 0.8, 0.0628, 0.5, 129.0))
    assert res["t2_star"] == pytest.approx(129.0, rel=1e-6)
    assert res["phi"] == pytest.approx(0.5, abs=1e-6)
    assert res["b_amp"] > 0


def test_rabi_too_short():
    with pytest.raises(ValueError):
        fit_rabi([0, 1, 2], [0, 1, 0])


# ----------------------------------------------------- two-temperature Δ_a

def test_delta_a_examples():
    assert delta_a_from_two_temperatures((15, 0.96), (300, 0.72), "A2-lowest") == \
        pytest.approx(50.4, abs=0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        e = delta_a_from_two_temperatures((15, -0.89), (300, -0.26), "E-lowest")
    assert e == pytest.approx(-16.5, abs=0.1)


def test_delta_a_no_depolarization():
    with pytest.raises(OutOfRangeError):
        delta_a_from_two_temperatures((15, 0.9), (300, 0.9), "A2-lowest")


@pytest.mark.parametrize("pts", [((15, 1.0), (300, 0.5)), ((15, 0.5), (300, -1.2))])
def test_delta_a_unphysical(pts):
    with pytest.raises(ValueError):
        delta_a_from_two_temperatures(*pts, "A2-lowest")


def test_delta_a_negative_difference_and_bad_args():
    with pytest.raises(ValueError):
        delta_a_from_two_temperatures((15, 0.5), (300, 0.9), "A2-lowest")
    with pytest.raises(ValueError):
        delta_a_from_two_temperatures((15, 0.5), (15, 0.4), "A2-lowest")
    with pytest.raises(ValueError):
        delta_a_from_two_temperatures((15, 0.5), (30, 0.4), "T2-lowest")


@given(st.floats(20, 200), st.floats(-0.95, 0.95), st.floats(5, 60),
       st.sampled_from(["A2-lowest", "E-lowest"]), st.floats(0, 10))
def test_delta_a_round_trip(delta, c0, t_cold, branch, t_gap_frac):
    # cold point in the frozen-out regime where the larger root is the physical one
    t_hot = 300.0
    signed = delta if branch == "A2-lowest" else -delta
    th0 = cos2theta_to_theta(c0)
    if delta / (KB_MEV_PER_K * t_cold) < 8:
        t_cold = delta / (8 * KB_MEV_PER_K)
    c1 = float(thermal_cos2theta(t_cold, th0, signed, branch))
    c2 = float(thermal_cos2theta(t_hot, th0, signed, branch))
    if abs(c2) >= 1 or c1 == c2:
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        got = delta_a_from_two_temperatures((t_cold, c1), (t_hot, c2), branch)
    assert got == pytest.approx(signed, rel=1e-9)


def test_delta_a_zero_temperature_point():
    th0 = cos2theta_to_theta(0.9)
    c2 = float(thermal_cos2theta(300.0, th0, 40.0, "A2-lowest"))
    assert delta_a_from_two_temperatures((0.0, 0.9), (300.0, c2), "A2-lowest") == \
        pytest.approx(40.0, rel=1e-12)


def test_delta_a_ambiguity_warns():
    th0 = cos2theta_to_theta(0.96)
    c1 = float(thermal_cos2theta(150.0, th0, 50.39, "A2-lowest"))
    c2 = float(thermal_cos2theta(300.0, th0, 50.39, "A2-lowest"))
    with pytest.warns(RuntimeWarning, match="two splittings"):
        got = delta_a_from_two_temperatures((150.0, c1), (300.0, c2), "A2-lowest")
    assert got == pytest.approx(50.39, rel=1e-9)
