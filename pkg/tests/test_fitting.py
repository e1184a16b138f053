"""Damped least-squares engine; scipy.optimize.least_squares is the oracle."""
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import least_squares

from vsic.fitting import fit_curve, numeric_jacobian


def line(x, a, b):
    return a * x + b


def cosine(x, amp, freq, phase, offset):
    return amp * np.cos(freq * x + phase) + offset


def test_line_exact():
    x = np.arange(5.0)
    res = fit_curve(line, x, 2 * x + 1, [0.0, 0.0])
    assert res.converged
    assert abs(res["p0"] - 2) < 1e-10 and abs(res["p1"] - 1) < 1e-10


def test_exact_init_converges_fast():
    x = np.linspace(0, 10, 50)
    truth = {"amp": 1.5, "freq": 0.7, "phase": 0.3, "offset": -0.2}
    res = fit_curve(cosine, x, cosine(x, **truth), truth)
    assert res.converged and res.iterations <= 2
    assert res.residual_norm < 1e-20
    assert res.params == pytest.approx(truth)


def test_matches_scipy_least_squares():
    rng = np.random.default_rng(4)
    x = np.linspace(0, 10, 80)
    y = cosine(x, 1.5, 0.7, 0.3, -0.2) + rng.normal(0, 0.05, x.size)
    p0 = [1.0, 0.68, 0.0, 0.0]
    res = fit_curve(cosine, x, y, p0)
    ref = least_squares(lambda p: cosine(x, *p) - y, p0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    assert np.allclose(res.values(), ref.x, rtol=1e-6, atol=1e-8)
    assert res.residual_norm == pytest.approx(2 * ref.cost, rel=1e-9)


def test_uncertainties_match_scipy_covariance():
    from scipy.optimize import curve_fit
    rng = np.random.default_rng(8)
    x = np.linspace(0, 10, 60)
    y = cosine(x, 1.5, 0.7, 0.3, -0.2) + rng.normal(0, 0.05, x.size)
    p0 = [1.4, 0.69, 0.25, -0.1]
    res = fit_curve(cosine, x, y, p0)
    popt, pcov = curve_fit(cosine, x, y, p0=p0)
    assert np.allclose(res.values(), popt, rtol=1e-6)
    assert np.allclose(list(res.param_uncertainties.values()), np.sqrt(np.diag(pcov)), rtol=1e-4)


def test_weights_and_bounds():
    x = np.linspace(0, 1, 20)
    y = 3 * x + 1
    res = fit_curve(line, x, y, [0, 0], sigma=np.full(20, 0.1), bounds=([-np.inf, 0], [2.5, 5]))
    assert res["p0"] == pytest.approx(2.5)
    assert res["p0"] <= 2.5


def test_history_non_increasing_and_final_not_worse():
    rng = np.random.default_rng(2)
    x = np.linspace(0, 10, 80)
    y = cosine(x, 1.0, 1.1, 0.0, 0.0) + rng.normal(0, 0.1, x.size)
    p0 = [0.5, 1.0, 0.5, 0.3]
    res = fit_curve(cosine, x, y, p0)
    assert all(b <= a for a, b in zip(res.history, res.history[1:]))
    init = np.sum((cosine(x, *p0) - y) ** 2)
    assert res.residual_norm <= init


def test_converged_implies_small_gradient_or_stall():
    x = np.linspace(0, 1, 10)
    res = fit_curve(line, x, 2 * x, [1.0, 1.0])
    assert res.converged and res.gradient_norm < 1e-6


def test_nonconvergence_reported():
    x = np.linspace(0, 10, 50)
    y = cosine(x, 1.5, 0.7, 0.3, -0.2)
    res = fit_curve(cosine, x, y, [1.0, 0.1, 0.0, 0.0], max_iter=2)
    assert not res.converged and "2 iterations" in res.message
    assert np.all(np.isfinite(res.values()))


def test_input_validation():
    x = np.arange(3.0)
    with pytest.raises(ValueError):
        fit_curve(cosine, x, x, [1, 1, 1, 1])
    with pytest.raises(ValueError):
        fit_curve(line, x, x, [np.nan, 0])
    with pytest.raises(ValueError):
        fit_curve(line, x, x, [0, 0], sigma=[1, 0, 1])
    with pytest.raises(ValueError):
        fit_curve(line, x, x, [0, 0], bounds=([1, 1], [0, 0]))
    with pytest.raises(ValueError):
        fit_curve(line, x, x, [0, 0], names=["a"])


def test_deterministic():
    rng = np.random.default_rng(0)
    x = np.linspace(0, 10, 40)
    y = cosine(x, 1, 1, 0, 0) + rng.normal(0, 0.1, 40)
    a = fit_curve(cosine, x, y, [0.9, 1.02, 0.1, 0.0])
    b = fit_curve(cosine, x, y, [0.9, 1.02, 0.1, 0.0])
    assert a.to_dict() == b.to_dict()


@given(st.floats(-5, 5), st.floats(0.1, 3), st.floats(-3, 3), st.floats(-5, 5))
def test_numeric_jacobian_central_difference(a, f, ph, o):
    x = np.linspace(0, 5, 7)
    jac = numeric_jacobian(cosine, [a, f, ph, o], x)
    s = np.sin(f * x + ph)
    analytic = np.column_stack([np.cos(f * x + ph), -a * x * s, -a * s, np.ones_like(x)])
    assert np.allclose(jac, analytic, rtol=1e-6, atol=1e-6)


def test_cosine_coverage_monte_carlo():
    # 1% noise; truth within 3 sigma of the reported uncertainty over 100 seeds
    x = np.linspace(0, 10, 100)
    truth = np.array([1.0, 1.3, 0.4, 0.2])
    misses = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        y = cosine(x, *truth) + rng.normal(0, 0.01, x.size)
        res = fit_curve(cosine, x, y, truth * 1.02)
        sig = np.array(list(res.param_uncertainties.values()))
        misses += int(np.any(np.abs(res.values() - truth) > 3 * sig))
    # four parameters at 3 sigma: ~1% per seed expected to miss
    assert misses <= 5
