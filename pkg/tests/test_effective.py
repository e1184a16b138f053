"""Effective multiplet Hamiltonians against exact 12x12 diagonalization."""
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vsic.effective import (EffectiveE, effective_a2_params, effective_e_hamiltonian,
                            effective_e_params, validate_against_exact)
from vsic.hamiltonian import CenterParams, StrainTensor, solve
from vsic.spin import S_OPS


def _exact_a2_splitting(p):
    """Signed E(|Sz|=3/2) - E(|Sz|=1/2) of the quadruplet from exact diagonalization."""
    es = solve(p)
    idx = np.argsort(es.w_e, kind="stable")[:4]
    sz2 = np.diag(S_OPS[2]).real ** 2
    outer = np.array([np.sum(np.abs(es.eigenvectors[:, i]) ** 2 * sz2) > 1.5 for i in idx])
    e = es.eigenvalues[idx]
    return e[outer].mean() - e[~outer].mean()


def test_a2_examples():
    assert effective_a2_params(CenterParams(100.0, 0.0, 0.2, 0.5)).d_prime == pytest.approx(0.3)
    assert effective_a2_params(CenterParams(100.0, 10.0, 0.2, 0.5)).d_prime == pytest.approx(1.3)
    # leading order of the quadruplet position is -2 delta_a / 3
    eps = effective_a2_params(CenterParams(100.0, 1.0)).epsilon_a2
    assert eps == pytest.approx(-200.0 / 3, rel=1e-3)


def test_v2_target_2d_prime():
    # choose D~ so that D' = 525 MHz (2D' = 1050 MHz) for a given delta_a, lambda, b
    da, lam, b = 60.0 * 241.799, 50.0, 0.0
    p = CenterParams(da, lam, b, 0.525 + b - lam ** 2 / da)
    assert 2 * effective_a2_params(p).d_prime == pytest.approx(1.050, abs=1e-12)


def test_delta_zero_rejected():
    with pytest.raises(ValueError):
        effective_a2_params(CenterParams(0.0, 1.0))
    with pytest.raises(ValueError):
        effective_e_params(CenterParams(0.0, 1.0))


def test_e_only_offset_without_couplings():
    p = CenterParams(delta_a=3.0)
    h = effective_e_hamiltonian(p)
    assert np.allclose(h, np.eye(8) * 1.0)


def test_e_diagonal_spin_orbit_pattern():
    e = EffectiveE(0.0, 0.4, 0.0, 0.0, 0.0, 0.0)
    w = e.spectrum()
    expected = np.sort(np.repeat([-0.6, -0.2, 0.2, 0.6], 2))
    assert np.allclose(w, expected)


def test_e_strain_splits_into_two_quadruplets():
    p = CenterParams(delta_a=10.0, xi_e=2.0)
    u = StrainTensor(u_xx=0.1, u_yy=-0.1)
    w = np.linalg.eigvalsh(effective_e_hamiltonian(p, u))
    assert np.allclose(w[:4], w[0]) and np.allclose(w[4:], w[4])
    assert w[4] - w[0] == pytest.approx(p.xi_e * abs(u.u_xx - u.u_yy))


@given(st.floats(0, 2 * np.pi), st.floats(0.01, 0.3))
def test_e_strain_rotation_invariance(angle, r):
    # only sqrt((uxx-uyy)^2 + 4 uxy^2) enters the spectrum
    p = CenterParams(delta_a=10.0, lambda_so=0.3, b_ss=0.01, d_tilde=0.02, xi_e=1.0)
    u1 = StrainTensor(u_xx=r / 2, u_yy=-r / 2)
    u2 = StrainTensor(u_xx=r / 2 * np.cos(angle), u_yy=-r / 2 * np.cos(angle),
                      u_xy=r / 2 * np.sin(angle))
    w1 = np.linalg.eigvalsh(effective_e_hamiltonian(p, u1))
    w2 = np.linalg.eigvalsh(effective_e_hamiltonian(p, u2))
    assert np.allclose(w1, w2, atol=1e-12)


@given(st.floats(-1, 1), st.floats(-0.05, 0.05), st.floats(-0.05, 0.05))
def test_a2_even_in_lambda(lam, b, d):
    p = CenterParams(10.0, lam, b, d)
    assert effective_a2_params(p) == effective_a2_params(replace(p, lambda_so=-lam))


@pytest.mark.parametrize("lam", [0.2, 0.5])
def test_e_lambda_asymmetry_follows_exact(lam):
    # L.S has an asymmetric spectrum, so the exact octuplet is not even in lambda
    # beyond second order; the renormalized lambda tracks that asymmetry
    def spectra(sign):
        p = CenterParams(10.0, sign * lam)
        es = solve(p)
        idx = np.argsort(es.w_e, kind="stable")[4:]
        return np.sort(es.eigenvalues[idx]), effective_e_params(p).spectrum()

    (ex_p, ef_p), (ex_m, ef_m) = spectra(1.0), spectra(-1.0)
    assert np.max(np.abs((ex_p - ex_m) - (ef_p - ef_m))) < 10 * lam ** 3 / 100


@given(st.floats(-1, 1), st.floats(-0.1, 0.1), st.floats(-0.1, 0.1), st.floats(-0.2, 0.2),
       st.floats(-0.2, 0.2))
def test_effective_e_hermitian(lam, b, d, uxx, uxy):
    h = effective_e_hamiltonian(CenterParams(5.0, lam, b, d, 1.0),
                                StrainTensor(u_xx=uxx, u_xy=uxy))
    assert np.allclose(h, h.conj().T)


def test_exact_when_only_axial_spin_spin():
    rep = validate_against_exact(CenterParams(delta_a=7.0, d_tilde=0.3))
    assert rep.dev_a2_ghz == pytest.approx(0.0, abs=1e-12)
    assert rep.dev_e_ghz == pytest.approx(0.0, abs=1e-12)
    assert rep.classification_ok


def test_b_term_residual_is_second_order():
    # (S.L)^2 couples the multiplets, so b leaves a b^2/delta_a residual
    devs = [validate_against_exact(CenterParams(delta_a=10.0, b_ss=b)).dev_a2_ghz
            for b in (0.01, 0.02, 0.04)]
    slopes = np.diff(np.log(devs)) / np.log(2)
    assert np.allclose(slopes, 2.0, atol=0.05)


def test_third_order_smallness():
    p = CenterParams(delta_a=1.0, lambda_so=0.01)
    rep = validate_against_exact(p)
    assert max(rep.dev_a2_ghz, rep.dev_e_ghz) <= 1e-5


@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_cubic_scaling(sign):
    ratios = np.array([0.0125, 0.025, 0.05, 0.1, 0.15])
    devs = []
    for r in ratios:
        rep = validate_against_exact(CenterParams(delta_a=sign, lambda_so=r))
        devs.append(max(rep.dev_a2_ghz, rep.dev_e_ghz))
    devs = np.array(devs)
    # deviation / ratio^3 stays within a factor of 5
    k = devs / ratios ** 3
    assert k.max() / k.min() < 5.0


def test_converges_as_delta_grows():
    devs = [max(validate_against_exact(CenterParams(da, 0.3, 0.01, 0.02)).dev_a2_ghz,
                validate_against_exact(CenterParams(da, 0.3, 0.01, 0.02)).dev_e_ghz)
            for da in (6.0, 12.0, 24.0, 48.0, 96.0)]
    assert all(b < a for a, b in zip(devs, devs[1:]))


def test_in_plane_strain_within_third_order():
    p = CenterParams(delta_a=1.0, lambda_so=0.01, xi_e=1.0)
    u = StrainTensor(u_xx=0.01, u_yy=-0.005, u_xy=0.004, u_zz=0.01)
    rep = validate_against_exact(p, u)
    assert max(rep.dev_a2_ghz, rep.dev_e_ghz) < 5e-5
    assert rep.ignored_strain == []


def test_shear_reported_as_ignored():
    rep = validate_against_exact(CenterParams(delta_a=1.0, xi_e=1.0), StrainTensor(u_xz=0.01))
    assert rep.ignored_strain == ["u_xz"]
    assert "classification_ok" in rep.to_dict()


def test_mixed_states_reported():
    rep = validate_against_exact(CenterParams(delta_a=1.0, lambda_so=2.0))
    assert rep.mixed_states > 0 and not rep.classification_ok


def test_d_prime_matches_exact_splitting_at_small_ratio():
    p = CenterParams(delta_a=1.0, lambda_so=0.01, d_tilde=0.001)
    exact = _exact_a2_splitting(p) / 2
    assert exact == pytest.approx(effective_a2_params(p).d_prime, rel=0.01)


def test_d_prime_cross_term_not_in_formula():
    # the exact splitting carries a -4 b lambda / delta_a term the formula omits
    p = CenterParams(delta_a=1.0, lambda_so=0.01, b_ss=0.001)
    gap = _exact_a2_splitting(p) / 2 - effective_a2_params(p).d_prime
    third = 2 * 0.01 ** 3 + 1.75 * 0.001 ** 2
    assert gap == pytest.approx(-4 * 0.001 * 0.01 + third, rel=0.1)
