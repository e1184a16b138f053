"""Angular-momentum matrices and the 12-state orbital x spin product basis.

Basis index ``i = 4*(1 - Lz) + (3/2 - Sz)``: L_z runs +1, 0, -1 (major) and
S_z runs +3/2 ... -3/2 (minor).
"""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = ["AngularMomentumSet", "angular_momentum_matrices", "embed",
           "basis_index", "basis_labels", "L_OPS", "S_OPS", "DIM"]

DIM_L = 3
DIM_S = 4
DIM = DIM_L * DIM_S


@dataclass(frozen=True)
class AngularMomentumSet:
    j: float
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray

    @property
    def dim(self):
        return self.jz.shape[0]

    @property
    def jplus(self):
        return self.jx + 1j * self.jy

    @property
    def jminus(self):
        return self.jx - 1j * self.jy

    def __iter__(self):
        return iter((self.jx, self.jy, self.jz))


def angular_momentum_matrices(j):
    """Spin-j matrices in the descending-m basis |j, j>, ..., |j, -j>.

    ``j`` may be a float, int or ``Fraction``; ``2*j`` must be a non-negative
    integer.
    """
    two_j = Fraction(j).limit_denominator(1000) * 2
    if two_j.denominator != 1 or two_j < 0 or abs(float(two_j) - 2 * float(j)) > 1e-12:
        raise ValueError(f"j must be a non-negative integer or half-integer, got {j!r}")
    jf = float(two_j) / 2
    m = np.arange(jf, -jf - 1, -1)
    jp = np.diag(np.sqrt(jf * (jf + 1) - m[1:] * (m[1:] + 1)), 1).astype(np.complex128)
    jm = jp.conj().T
    jx = 0.5 * (jp + jm)
    jy = -0.5j * (jp - jm)
    jz = np.diag(m).astype(np.complex128)
    return AngularMomentumSet(jf, jx, jy, jz)


def embed(op_l=None, op_s=None):
    """Kronecker embedding ``op_l (x) op_s`` into the product basis.

    ``None`` stands for the identity on that factor.
    """
    op_l = np.eye(DIM_L) if op_l is None else np.asarray(op_l)
    op_s = np.eye(DIM_S) if op_s is None else np.asarray(op_s)
    if op_l.shape != (DIM_L, DIM_L):
        raise ValueError(f"orbital operator must be 3x3, got {op_l.shape}")
    if op_s.shape != (DIM_S, DIM_S):
        raise ValueError(f"spin operator must be 4x4, got {op_s.shape}")
    return np.kron(op_l, op_s).astype(np.complex128)


def basis_index(lz, sz):
    lz_ok = lz in (-1, 0, 1)
    sz2 = 2 * sz
    if not lz_ok or sz2 not in (-3, -1, 1, 3):
        raise ValueError(f"no basis state with Lz={lz}, Sz={sz}")
    return int(4 * (1 - lz) + (3 - sz2) // 2)


def basis_labels():
    """List of ``(Lz, Sz)`` pairs in index order."""
    return [(lz, sz) for lz in (1, 0, -1) for sz in (1.5, 0.5, -0.5, -1.5)]


_L = angular_momentum_matrices(1)
_S = angular_momentum_matrices(1.5)

#: embedded (Lx, Ly, Lz) and (Sx, Sy, Sz), 12x12 each
L_OPS = tuple(embed(op, None) for op in _L)
S_OPS = tuple(embed(None, op) for op in _S)
