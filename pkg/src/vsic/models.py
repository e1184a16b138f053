"""Parametric models for polarization scans, ODMR contrast, ODMR line shapes and Rabi traces.

Every model has an analytic Jacobian (``*_jac``) and a fit wrapper that
builds its own starting point, so callers only pass data.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .constants import KB_MEV_PER_K
from .fitting import FitResult, fit_curve
from .optics import cos2theta_to_theta, thermal_cos2theta

__all__ = [
    "angular_model", "angular_jac", "fit_angular",
    "arrhenius_model", "arrhenius_jac", "fit_arrhenius",
    "OdmrLineshapeParams", "odmr_lineshape", "odmr_model", "odmr_jac", "fit_odmr",
    "RabiParams", "rabi_model", "rabi_jac", "fit_rabi",
    "delta_a_from_two_temperatures", "OutOfRangeError",
]


class OutOfRangeError(ValueError):
    """The data carry no usable information on the requested quantity."""


# ------------------------------------------------------------------ angular

def angular_model(phi_deg, i0, cos2theta):
    return i0 * (1.0 + cos2theta * np.cos(2.0 * np.radians(phi_deg)))


def angular_jac(phi_deg, i0, cos2theta):
    c = np.cos(2.0 * np.radians(np.asarray(phi_deg, float)))
    return np.column_stack([1.0 + cos2theta * c, i0 * c])


def fit_angular(phi_deg, intensity, sigma=None):
    """Fit ``I0 (1 + cos2theta cos 2phi)`` to a polarizer scan (phi in degrees)."""
    phi = np.asarray(phi_deg, dtype=float)
    y = np.asarray(intensity, dtype=float)
    if phi.shape != y.shape or phi.ndim != 1:
        raise ValueError("phi and intensity must be 1-D arrays of equal length")
    if np.ptp(phi) < 180.0 - 1e-9:
        raise ValueError("angular scan must span at least 180 degrees")
    c = np.cos(2.0 * np.radians(phi))
    # linear start: y = a + b cos 2phi
    a, b = np.linalg.lstsq(np.column_stack([np.ones_like(c), c]), y, rcond=None)[0]
    scale = max(float(np.max(np.abs(y))), 1e-300)
    if np.ptp(y) <= 1e-12 * scale or a == 0:
        res = fit_curve(angular_model, phi, y, {"i0": float(np.mean(y)), "cos2theta": 0.0},
                        sigma=sigma, jac=angular_jac)
        res.params["cos2theta"] = 0.0
        res.flags.append("zero_sensitivity")
        return res
    start = {"i0": float(a), "cos2theta": float(np.clip(b / a, -1.0, 1.0))}
    res = fit_curve(angular_model, phi, y, start, sigma=sigma, jac=angular_jac,
                    bounds=([-np.inf, -1.0], [np.inf, 1.0]))
    res.params["cos2theta"] = float(np.clip(res.params["cos2theta"], -1.0, 1.0))
    return res


# ---------------------------------------------------------------- Arrhenius

def arrhenius_model(t, c0, c1, e_a):
    """Contrast ``c0 + c1 exp(-e_a / kT)``; T in K, e_a in meV."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("temperature must be positive")
    return c0 + c1 * np.exp(-e_a / (KB_MEV_PER_K * t))


def arrhenius_jac(t, c0, c1, e_a):
    t = np.asarray(t, dtype=float)
    ex = np.exp(-e_a / (KB_MEV_PER_K * t))
    return np.column_stack([np.ones_like(t), ex, -c1 * ex / (KB_MEV_PER_K * t)])


def fit_arrhenius(t, contrast, sigma=None, e_grid=None):
    """Fit the activation law; the start comes from a scan over e_a with the
    two amplitudes solved linearly at each grid point."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(contrast, dtype=float)
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, float)
    if e_grid is None:
        e_grid = np.geomspace(0.05, 500.0, 400)
    best = None
    for e in e_grid:
        basis = np.column_stack([np.ones_like(t), np.exp(-e / (KB_MEV_PER_K * t))]) * w[:, None]
        coef, *_ = np.linalg.lstsq(basis, y * w, rcond=None)
        cost = float(np.sum((basis @ coef - y * w) ** 2))
        if best is None or cost < best[0]:
            best = (cost, coef, e)
    _, (c0, c1), e0 = best
    res = fit_curve(arrhenius_model, t, y, {"c0": c0, "c1": c1, "e_a": e0},
                    sigma=sigma, jac=arrhenius_jac)
    if res.params["e_a"] < 0:
        res.flags.append("anti_activation")
    return res


# --------------------------------------------------------------------- ODMR

@dataclass(frozen=True)
class OdmrLineshapeParams:
    t_c0: float          # K
    gamma: float         # K / MHz
    d0: float            # MHz
    delta_d: float       # MHz
    scale: float = 1.0

    def __post_init__(self):
        if not self.delta_d > 0:
            raise ValueError("delta_d must be positive")

    def as_tuple(self):
        return (self.t_c0, self.gamma, self.d0, self.delta_d, self.scale)


def odmr_lineshape(nu, t, p):
    """ODMR signal at microwave frequency ``nu`` (MHz) and temperature ``t`` (K).

    The frequency enters as ``x = nu/2`` so that ``d0`` and ``delta_d`` are
    zero-field-splitting constants in MHz.
    """
    if not isinstance(p, OdmrLineshapeParams):
        p = OdmrLineshapeParams(*p)
    x = 0.5 * np.asarray(nu, dtype=float) - p.d0
    t = np.asarray(t, dtype=float)
    return p.scale * (t - p.t_c0 - p.gamma * x) * np.exp(-x ** 2 / (2.0 * p.delta_d ** 2))


def odmr_model(nu_t, t_c0, gamma, d0, delta_d, scale):
    """Fit-engine adapter; ``nu_t`` is an ``(n, 2)`` array of (nu, T) pairs."""
    nu_t = np.asarray(nu_t, dtype=float)
    x = 0.5 * nu_t[:, 0] - d0
    return scale * (nu_t[:, 1] - t_c0 - gamma * x) * np.exp(-x ** 2 / (2.0 * delta_d ** 2))


def odmr_jac(nu_t, t_c0, gamma, d0, delta_d, scale):
    nu_t = np.asarray(nu_t, dtype=float)
    x = 0.5 * nu_t[:, 0] - d0
    g = np.exp(-x ** 2 / (2.0 * delta_d ** 2))
    lin = nu_t[:, 1] - t_c0 - gamma * x
    return np.column_stack([
        -scale * g,
        -scale * x * g,
        scale * g * (gamma + lin * x / delta_d ** 2),
        scale * lin * g * x ** 2 / delta_d ** 3,
        lin * g,
    ])


def fit_odmr(nu, t, signal, sigma=None, d0_grid=None, width_grid=None):
    """Fit the temperature-inversion line shape to a set of spectra.

    ``nu``, ``t`` and ``signal`` are flat arrays of equal length.  The model
    is linear in (scale, scale*t_c0, scale*gamma) at fixed (d0, delta_d), which
    gives a grid-search start before the full nonlinear fit.
    """
    nu = np.asarray(nu, float).ravel()
    t = np.asarray(t, float).ravel()
    y = np.asarray(signal, float).ravel()
    if not (nu.size == t.size == y.size):
        raise ValueError("nu, t and signal must have equal length")
    x_half = 0.5 * nu
    if d0_grid is None:
        d0_grid = np.linspace(x_half.min(), x_half.max(), 41)
    if width_grid is None:
        span = max(np.ptp(x_half), 1e-6)
        width_grid = np.geomspace(span / 200, span / 2, 30)
    best = None
    for d0 in d0_grid:
        xx = x_half - d0
        for wd in width_grid:
            g = np.exp(-xx ** 2 / (2 * wd ** 2))
            basis = np.column_stack([t * g, -g, -xx * g])
            coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
            cost = float(np.sum((basis @ coef - y) ** 2))
            if best is None or cost < best[0]:
                best = (cost, coef, d0, wd)
    _, (s, s_tc, s_gamma), d0, wd = best
    if s == 0:
        s = 1e-12
    start = {"t_c0": s_tc / s, "gamma": s_gamma / s, "d0": d0, "delta_d": wd, "scale": s}
    res = fit_curve(odmr_model, np.column_stack([nu, t]), y, start, sigma=sigma, jac=odmr_jac,
                    bounds=([-np.inf, -np.inf, -np.inf, 1e-9, -np.inf], np.inf))
    return res


# --------------------------------------------------------------------- Rabi

@dataclass(frozen=True)
class RabiParams:
    a_offset: float
    b_amp: float
    omega: float     # rad/ns
    phi: float       # rad
    t2_star: float   # ns

    def __post_init__(self):
        if not self.t2_star > 0:
            raise ValueError("t2_star must be positive")


def rabi_model(tau, a_offset, b_amp, omega, phi, t2_star):
    """``A + B cos(omega tau + phi) exp(-tau / T2*)``; tau in ns."""
    tau = np.asarray(tau, dtype=float)
    return a_offset + b_amp * np.cos(omega * tau + phi) * np.exp(-tau / t2_star)


def rabi_jac(tau, a_offset, b_amp, omega, phi, t2_star):
    tau = np.asarray(tau, dtype=float)
    env = np.exp(-tau / t2_star)
    c = np.cos(omega * tau + phi)
    s = np.sin(omega * tau + phi)
    return np.column_stack([
        np.ones_like(tau),
        c * env,
        -b_amp * tau * s * env,
        -b_amp * s * env,
        b_amp * c * env * tau / t2_star ** 2,
    ])


def fit_rabi(tau, signal, sigma=None):
    """Fit a damped Rabi oscillation.

    Start: dominant FFT frequency, then a scan over T2* with (A, B cos phi,
    B sin phi) solved linearly.
    """
    tau = np.asarray(tau, dtype=float)
    y = np.asarray(signal, dtype=float)
    if tau.size < 5:
        raise ValueError("need at least 5 points for a Rabi fit")
    order = np.argsort(tau)
    tau_s, y_s = tau[order], y[order]
    dt = float(np.median(np.diff(tau_s)))
    grid = np.arange(tau_s[0], tau_s[-1] + 0.5 * dt, dt)
    yi = np.interp(grid, tau_s, y_s)
    spec = np.abs(np.fft.rfft(yi - yi.mean()))
    freqs = np.fft.rfftfreq(grid.size, dt)
    k = int(np.argmax(spec[1:]) + 1) if spec.size > 1 else 0
    omega0 = 2 * np.pi * freqs[k] if k else 2 * np.pi / max(np.ptp(tau), 1e-12)
    span = max(np.ptp(tau), 1e-12)
    best = None
    for om in omega0 * np.linspace(0.9, 1.1, 21):
        for t2 in np.geomspace(span / 50, span * 20, 60):
            env = np.exp(-tau / t2)
            basis = np.column_stack([np.ones_like(tau), np.cos(om * tau) * env,
                                     -np.sin(om * tau) * env])
            coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
            cost = float(np.sum((basis @ coef - y) ** 2))
            if best is None or cost < best[0]:
                best = (cost, coef, om, t2)
    _, (a, bc, bs), om, t2 = best
    start = {"a_offset": a, "b_amp": math.hypot(bc, bs), "omega": om,
             "phi": math.atan2(bs, bc), "t2_star": t2}
    res = fit_curve(rabi_model, tau, y, start, sigma=sigma, jac=rabi_jac,
                    bounds=([-np.inf, -np.inf, 0.0, -np.inf, 1e-9], np.inf))
    # canonical form: positive amplitude, phase in (-pi, pi]
    if res.params["b_amp"] < 0:
        res.params["b_amp"] = -res.params["b_amp"]
        res.params["phi"] += math.pi
    res.params["phi"] = float(math.remainder(res.params["phi"], 2 * math.pi))
    return res


# ----------------------------------------------------- two-temperature delta_a

def _thermal_excess(c, branch):
    """tan^2(theta) on the A2 branch, cot^2(theta) on the E branch."""
    if abs(c) >= 1:
        raise ValueError(f"|cos2theta| must be < 1, got {c}")
    if branch == "A2-lowest":
        return (1.0 - c) / (1.0 + c)
    if branch == "E-lowest":
        return (1.0 + c) / (1.0 - c)
    raise ValueError("branch must be 'A2-lowest' or 'E-lowest'")


def delta_a_from_two_temperatures(pt1, pt2, branch):
    """Multiplet splitting (meV) from cos(2 theta) measured at two temperatures.

    ``pt1`` and ``pt2`` are ``(T, cos2theta)``.  The colder point is used as the
    zero-temperature value when its own Boltzmann factor is below 1e-6;
    otherwise both thermal equations are solved together.  The sign follows
    the branch: positive for ``A2-lowest``, negative for ``E-lowest``.
    """
    (t1, c1), (t2, c2) = sorted([tuple(map(float, pt1)), tuple(map(float, pt2))])
    if t1 == t2:
        raise ValueError("temperatures must differ")
    if t1 < 0:
        raise ValueError("temperatures must be non-negative")
    x1 = _thermal_excess(c1, branch)
    x2 = _thermal_excess(c2, branch)
    diff = x2 - x1
    if diff < 0:
        raise ValueError("polarization increases with temperature; "
                         "negative Boltzmann difference")
    if diff == 0:
        raise OutOfRangeError("no depolarization between the two temperatures; "
                              "|delta_a| is out of range")
    if diff >= 1.0:
        raise ValueError("Boltzmann factor difference >= 1 is not physical")
    kt2 = KB_MEV_PER_K * t2
    delta = -kt2 * math.log(diff)
    if t1 > 0:
        kt1 = KB_MEV_PER_K * t1
        proxy_ok = math.exp(-delta / kt1) < 1e-6
        # exp(-d/kt2) - exp(-d/kt1) = diff has two roots on either side of the
        # maximum of the left-hand side; the proxy sits above the larger one.
        # The exact solve refines the proxy so round trips stay at 1e-9.

        def f(d):
            return math.exp(-d / kt2) - math.exp(-d / kt1) - diff

        d_peak = math.log(kt2 / kt1) / (1.0 / kt1 - 1.0 / kt2)
        if f(d_peak) < 0:
            raise OutOfRangeError("depolarization too strong for the two-level law")
        hi = max(delta, d_peak) * 2 + 1.0
        while f(hi) > 0:
            hi *= 2
        delta = brentq(f, d_peak, hi, xtol=1e-14, rtol=1e-15)
        if not proxy_ok and f(0.0) < 0:
            small = brentq(f, 0.0, d_peak, xtol=1e-14, rtol=1e-15)
            warnings.warn(f"two splittings fit both points ({small:.4g} and {delta:.4g} meV); "
                          "returning the larger", RuntimeWarning, stacklevel=2)
    return delta if branch == "A2-lowest" else -delta


def _roundtrip_check(theta0, delta_a, t1, t2, branch):  # pragma: no cover - helper for users
    c1 = thermal_cos2theta(t1, theta0, delta_a, branch)
    c2 = thermal_cos2theta(t2, theta0, delta_a, branch)
    return delta_a_from_two_temperatures((t1, c1), (t2, c2), branch)
