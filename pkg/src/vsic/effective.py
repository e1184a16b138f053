"""Second-order effective Hamiltonians of the 4A2 quadruplet and 4E octuplet.

Spin-spin terms enter at first order and spin-orbit at second order.  Besides
the zero-field constants D', D'' and D''_perp this module keeps the
second-order multiplet shifts and the renormalization of the diagonal
spin-orbit term inside the octuplet, which are needed for the effective
spectra to agree with exact diagonalization up to third order.
"""
from dataclasses import asdict, dataclass

import numpy as np

from .hamiltonian import MagneticField, StrainTensor, build_hamiltonian, eigensystem, \
    classify_multiplets, MIXED
from .spin import angular_momentum_matrices

__all__ = ["EffectiveA2", "EffectiveE", "effective_a2_params", "effective_e_params",
           "effective_e_hamiltonian", "validate_against_exact", "ValidationReport"]

_S = angular_momentum_matrices(1.5)
_SX, _SY, _SZ = _S.jx, _S.jy, _S.jz
_I4 = np.eye(4)
_SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SIGMA_Y = np.array([[0, -1j], [1j, 0]])
_SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
_SZ2 = _SZ @ _SZ - 1.25 * _I4


def _require_delta(p):
    if p.delta_a == 0:
        raise ValueError("delta_a = 0: the multiplets are degenerate and the "
                         "perturbative reduction is undefined")


def _axial_strain(u):
    if u is None:
        return 0.0
    return u.u_zz - (u.u_xx + u.u_yy + u.u_zz) / 3.0


@dataclass(frozen=True)
class EffectiveA2:
    epsilon_a2: float
    d_prime: float

    def matrix(self):
        return self.epsilon_a2 * _I4 + self.d_prime * _SZ2

    def spectrum(self):
        return np.sort(np.diag(self.matrix()).real)


@dataclass(frozen=True)
class EffectiveE:
    epsilon_e: float
    lambda_so: float
    d_dprime: float
    d_dprime_perp: float
    strain_x: float
    strain_y: float

    def matrix(self):
        """8x8 matrix in the basis |sigma_z = +1, -1> (x) |Sz = 3/2 ... -3/2>."""
        h = self.epsilon_e * np.eye(8, dtype=complex)
        h += self.lambda_so * np.kron(_SIGMA_Z, _SZ)
        h += self.d_dprime * np.kron(np.eye(2), _SZ2)
        h += self.d_dprime_perp * (np.kron(_SIGMA_X, _SX @ _SX - _SY @ _SY)
                                   + np.kron(_SIGMA_Y, _SX @ _SY + _SY @ _SX))
        h += self.strain_x * np.kron(_SIGMA_X, _I4) + self.strain_y * np.kron(_SIGMA_Y, _I4)
        return h

    def spectrum(self):
        return np.linalg.eigvalsh(self.matrix())


def effective_a2_params(p, u=None):
    """Quadruplet position and zero-field constant D' = D~ - b + lambda^2/delta_a.

    The position includes the second-order shift -5 lambda^2 / (2 delta_a) and,
    when ``u`` is given, the first-order axial strain shift.
    """
    _require_delta(p)
    lam2 = p.lambda_so ** 2 / p.delta_a
    eps = -2.0 / 3.0 * p.delta_a - 2.5 * lam2 - p.xi_e * _axial_strain(u)
    return EffectiveA2(eps, p.d_tilde - p.b_ss + lam2)


def effective_e_params(p, u=None):
    _require_delta(p)
    u = u or StrainTensor()
    lam2 = p.lambda_so ** 2 / p.delta_a
    return EffectiveE(
        epsilon_e=p.delta_a / 3.0 + 1.25 * lam2 + 0.5 * p.xi_e * _axial_strain(u),
        # the diagonal spin-orbit term picks up -b/2 - lambda^2/(2 delta_a)
        lambda_so=p.lambda_so - 0.5 * p.b_ss - 0.5 * lam2,
        d_dprime=p.d_tilde + 0.5 * p.b_ss - 0.5 * lam2,
        d_dprime_perp=0.5 * p.b_ss + 0.5 * lam2,
        strain_x=0.5 * p.xi_e * (u.u_xx - u.u_yy),
        strain_y=p.xi_e * u.u_xy,
    )


def effective_e_hamiltonian(p, u=None):
    """8x8 effective octuplet Hamiltonian (GHz).  Shear u_xz, u_yz is ignored."""
    return effective_e_params(p, u).matrix()


@dataclass
class ValidationReport:
    params: dict
    dev_a2_ghz: float
    dev_e_ghz: float
    mixed_states: int
    ignored_strain: list

    @property
    def classification_ok(self):
        return self.mixed_states == 0

    def to_dict(self):
        d = asdict(self)
        d["classification_ok"] = self.classification_ok
        return d


def validate_against_exact(p, u=None, backend=None):
    """Max |exact - effective| eigenvalue deviation for both multiplets (GHz).

    The four states with the lowest E-orbital weight are matched to the
    quadruplet, the remaining eight to the octuplet.  States labeled
    ``mixed`` are counted in the report rather than dropped.
    """
    u = u or StrainTensor()
    es = classify_multiplets(eigensystem(build_hamiltonian(p, u, MagneticField()), backend))
    order = np.argsort(es.w_e, kind="stable")
    a2_idx, e_idx = np.sort(order[:4]), np.sort(order[4:])
    exact_a2 = np.sort(es.eigenvalues[a2_idx])
    exact_e = np.sort(es.eigenvalues[e_idx])
    dev_a2 = float(np.max(np.abs(exact_a2 - effective_a2_params(p, u).spectrum())))
    dev_e = float(np.max(np.abs(exact_e - effective_e_params(p, u).spectrum())))
    ignored = [name for name in ("u_xz", "u_yz") if getattr(u, name) != 0.0]
    return ValidationReport(
        params={**asdict(p), **{f"strain_{k}": v for k, v in asdict(u).items()}},
        dev_a2_ghz=dev_a2, dev_e_ghz=dev_e,
        mixed_states=sum(1 for lab in es.labels if lab == MIXED),
        ignored_strain=ignored,
    )
