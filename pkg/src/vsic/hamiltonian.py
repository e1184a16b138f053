"""Excited-state fine-structure Hamiltonian of the spin-3/2 silicon vacancy.

The 12 states of the 4A2 + 4E excited manifold carry orbital momentum L=1 and
spin S=3/2.  The Hamiltonian is the sum of

* the axial orbital splitting  ``delta_a * (Lz^2 - 2/3)``,
* spin-orbit coupling          ``lambda_so * L.S``,
* spin-spin terms              ``b_ss * ((S.L)^2 - 5/2) + d_tilde * (Sz^2 - 5/4)``,
* deformation                  ``xi_e * sum_ab (u_ab - d_ab Tr u / 3)(L_a L_b - 2/3 d_ab)``,
* spin Zeeman along c          ``g * muB * Bz * Sz``.

The orbital Zeeman coupling to L is left out; only the spin couples to the field.

Energies are in GHz (E/h), fields in mT.
"""
import json
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import eigen
from .constants import MHZ_PER_GHZ, MUB_GHZ_PER_T, MUB_MHZ_PER_MT
from .spin import DIM, L_OPS, S_OPS, angular_momentum_matrices

__all__ = [
    "CenterParams", "StrainTensor", "MagneticField", "EigenSystem",
    "build_hamiltonian", "hamiltonian_terms", "eigensystem", "classify_multiplets",
    "sweep_parameter", "find_level_anticrossings", "lac_gap_scan",
    "load_params", "params_from_dict", "parse_strain", "solve", "degenerate_clusters",
    "E_LIKE", "A2_LIKE", "MIXED", "SWEEP_AXES",
]

E_LIKE = "E-like"
A2_LIKE = "A2-like"
MIXED = "mixed"
W_E_HIGH = 0.75
W_E_LOW = 0.25
SWEEP_AXES = ("lambda_so", "u_xz", "b_z")

_ENERGY_FIELDS = ("delta_a", "lambda_so", "b_ss", "d_tilde", "xi_e")


@dataclass(frozen=True)
class CenterParams:
    """Physical parameters of one vacancy center (energies in GHz)."""

    delta_a: float = 0.0
    lambda_so: float = 0.0
    b_ss: float = 0.0
    d_tilde: float = 0.0
    xi_e: float = 0.0
    g_factor: float = 2.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
                raise ValueError(f"{f.name} must be a finite number, got {v!r}")

    def satisfies_hierarchy(self, ratio=10.0):
        """True if |delta_a| >= ratio*|lambda| >= ratio*max(|b|, |D~|) holds."""
        small = max(abs(self.b_ss), abs(self.d_tilde))
        return (abs(self.delta_a) >= ratio * abs(self.lambda_so)
                and abs(self.lambda_so) >= ratio * small)

    def to_mhz_dict(self):
        d = {name: getattr(self, name) * MHZ_PER_GHZ for name in _ENERGY_FIELDS}
        d["g_factor"] = self.g_factor
        return d


@dataclass(frozen=True)
class StrainTensor:
    """Symmetric dimensionless strain; only the six independent entries are kept."""

    u_xx: float = 0.0
    u_yy: float = 0.0
    u_zz: float = 0.0
    u_xy: float = 0.0
    u_xz: float = 0.0
    u_yz: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ValueError(f"strain component {f.name} must be finite")

    def matrix(self):
        return np.array([[self.u_xx, self.u_xy, self.u_xz],
                         [self.u_xy, self.u_yy, self.u_yz],
                         [self.u_xz, self.u_yz, self.u_zz]], dtype=float)

    @property
    def is_zero(self):
        return not np.any(self.matrix())


@dataclass(frozen=True)
class MagneticField:
    b_z: float = 0.0  # mT along c

    def __post_init__(self):
        if not math.isfinite(self.b_z):
            raise ValueError("b_z must be finite")


@dataclass
class EigenSystem:
    """Ascending eigenvalues, eigenvectors as columns, optional multiplet labels."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    labels: tuple = None
    w_e: np.ndarray = None
    norm: float = field(default=0.0)

    def __len__(self):
        return len(self.eigenvalues)

    def select(self, idx):
        idx = np.asarray(idx)
        return EigenSystem(
            self.eigenvalues[idx], self.eigenvectors[:, idx],
            None if self.labels is None else tuple(self.labels[i] for i in idx),
            None if self.w_e is None else self.w_e[idx], self.norm)


# ---------------------------------------------------------------- operators

_IDENT = np.eye(DIM, dtype=np.complex128)
_LX, _LY, _LZ = L_OPS
_SX, _SY, _SZ = S_OPS
_LS = _LX @ _SX + _LY @ _SY + _LZ @ _SZ

_OP_ORBITAL = _LZ @ _LZ - (2.0 / 3.0) * _IDENT
_OP_SO = _LS
_OP_B = _LS @ _LS - 2.5 * _IDENT
_OP_DTILDE = _SZ @ _SZ - 1.25 * _IDENT
_OP_ZEEMAN = _SZ
_LCART = (_LX, _LY, _LZ)
# Q_ab = L_a L_b - 2/3 d_ab, symmetrized so that sum_ab u_ab Q_ab is Hermitian
_OP_Q = [[0.5 * (_LCART[a] @ _LCART[b] + _LCART[b] @ _LCART[a])
          - (2.0 / 3.0) * (a == b) * _IDENT for b in range(3)] for a in range(3)]


def _deformation(u):
    um = u.matrix()
    um = um - np.trace(um) / 3.0 * np.eye(3)
    out = np.zeros((DIM, DIM), dtype=np.complex128)
    for a in range(3):
        for b in range(3):
            if um[a, b]:
                out += um[a, b] * _OP_Q[a][b]
    return out


def hamiltonian_terms(p, u=None, field_=None):
    """The five contributions as a dict of 12x12 matrices (GHz)."""
    u = u or StrainTensor()
    field_ = field_ or MagneticField()
    zeeman = p.g_factor * MUB_GHZ_PER_T * field_.b_z * 1e-3
    return {
        "orbital": p.delta_a * _OP_ORBITAL,
        "spin_orbit": p.lambda_so * _OP_SO,
        "spin_spin": p.b_ss * _OP_B + p.d_tilde * _OP_DTILDE,
        "deformation": p.xi_e * _deformation(u),
        "zeeman": zeeman * _OP_ZEEMAN,
    }


def build_hamiltonian(p, u=None, field_=None):
    """Assemble the 12x12 excited-state Hamiltonian in GHz."""
    return sum(hamiltonian_terms(p, u, field_).values())


# ------------------------------------------------------------ diagonalization

def eigensystem(h, backend=None):
    h = np.asarray(h, dtype=np.complex128)
    w, v = eigen.eigh(h, backend=backend)
    norm = float(np.linalg.norm(h, 2)) if h.size else 0.0
    return EigenSystem(w, v, norm=norm)


def _e_weight(v):
    # rows with Lz = +1 (0..3) and Lz = -1 (8..11)
    return np.sum(np.abs(v[0:4]) ** 2, axis=0) + np.sum(np.abs(v[8:12]) ** 2, axis=0)


def degenerate_clusters(values, tol):
    """Group consecutive indices of a sorted array whose gaps are <= tol."""
    clusters, start = [], 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[k - 1] > tol:
            clusters.append(list(range(start, k)))
            start = k
    return clusters


def classify_multiplets(es, rel_tol=1e-9):
    """Attach the E-orbital weight and an A2-like/E-like/mixed label per state.

    Inside a degenerate cluster the states are re-ordered by ascending w_E.
    """
    if es.eigenvectors.shape[0] != DIM:
        raise ValueError("multiplet classification needs 12-dimensional eigenvectors")
    w_e = _e_weight(es.eigenvectors)
    tol = rel_tol * max(es.norm, 1.0)
    order = []
    for cl in degenerate_clusters(es.eigenvalues, tol):
        order.extend(sorted(cl, key=lambda i: (round(w_e[i], 12), i)))
    order = np.array(order)
    w_e = np.clip(w_e[order], 0.0, 1.0)
    labels = tuple(E_LIKE if w > W_E_HIGH else A2_LIKE if w < W_E_LOW else MIXED for w in w_e)
    return EigenSystem(es.eigenvalues[order], es.eigenvectors[:, order], labels, w_e, es.norm)


def solve(p, u=None, field_=None, backend=None):
    """Build, diagonalize and classify in one call."""
    return classify_multiplets(eigensystem(build_hamiltonian(p, u, field_), backend))


# -------------------------------------------------------------------- sweeps

def sweep_parameter(p, u, axis, grid, field_=None, backend=None):
    """Eigenvalues over a monotone grid of one axis.

    ``axis`` is ``lambda_so`` (GHz), ``u_xz`` (dimensionless) or ``b_z`` (mT).
    Returns ``(grid, energies)`` with ``energies.shape == (len(grid), 12)``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("sweep grid must be a non-empty 1-D sequence")
    if grid.size > 1:
        d = np.diff(grid)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("sweep grid must be strictly monotone")
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")
    u = u or StrainTensor()
    field_ = field_ or MagneticField()
    stack = np.empty((grid.size, DIM, DIM), dtype=np.complex128)
    for k, x in enumerate(grid):
        if axis == "lambda_so":
            h = build_hamiltonian(replace(p, lambda_so=float(x)), u, field_)
        elif axis == "u_xz":
            h = build_hamiltonian(p, replace(u, u_xz=float(x)), field_)
        else:
            h = build_hamiltonian(p, u, MagneticField(float(x)))
        stack[k] = h
    w, _ = eigen.eigh_batch(stack, backend=backend)
    return grid, w


# ------------------------------------------------------- level anticrossings

def _quadruplet_levels(d_mhz, g, b_mt):
    """Energies (MHz) of D(Sz^2 - 5/4) + g muB B Sz for each m = 3/2..-3/2."""
    m = np.array([1.5, 0.5, -0.5, -1.5])
    return d_mhz * (m ** 2 - 1.25) + g * MUB_MHZ_PER_MT * np.multiply.outer(b_mt, m)


def _in_range(values, b_range, merge_tol=1e-6):
    lo, hi = sorted(b_range)
    out = []
    for b in sorted(values):
        if abs(b) < 1e-12 or b < lo - 1e-12 or b > hi + 1e-12:
            continue
        if out and abs(b - out[-1]) <= merge_tol:
            continue
        out.append(float(b))
    return out


def find_level_anticrossings(d_const, g=2.0, b_range=(0.0, 10.0), method="analytic"):
    """Crossing fields (mT) of the axial spin-3/2 quadruplet.

    ``d_const`` is D in MHz (zero-field splitting 2D).  Zero-field crossings are
    excluded.  ``method="numeric"`` defers to :func:`lac_gap_scan`.
    """
    if b_range[0] == b_range[1]:
        raise ValueError("b_range must be non-empty")
    if method == "numeric":
        return lac_gap_scan(d_const, g, b_range)
    if method != "analytic":
        raise ValueError(f"unknown method {method!r}")
    slope = g * MUB_MHZ_PER_MT
    if slope == 0.0:
        return []
    ms = (1.5, 0.5, -0.5, -1.5)
    fields_ = [-d_const * (m1 + m2) / slope
               for i, m1 in enumerate(ms) for m2 in ms[i + 1:]]
    return _in_range(fields_, b_range)


def lac_gap_scan(d_const, g=2.0, b_range=(0.0, 10.0), step=1e-3, backend=None):
    """Locate crossings by scanning adjacent eigenvalue gaps on a ``step`` grid (mT).

    Each gap minimum is refined by intersecting the two linear branches of the
    V-shaped gap between the bracketing grid points.
    """
    lo, hi = sorted(b_range)
    n = int(math.ceil((hi - lo) / step)) + 1
    grid = lo + step * np.arange(n)
    sz = np.diag(angular_momentum_matrices(1.5).jz).real
    zfs = d_const * (sz ** 2 - 1.25)
    stack = np.zeros((n, 4, 4), dtype=np.complex128)
    idx = np.arange(4)
    stack[:, idx, idx] = zfs + g * MUB_MHZ_PER_MT * np.multiply.outer(grid, sz)
    levels, _ = eigen.eigh_batch(stack, backend=backend)
    gaps = np.diff(levels, axis=1)
    scale = abs(g) * MUB_MHZ_PER_MT * step * 3.0 + 1e-9 * abs(d_const)
    found = []
    for k in range(gaps.shape[1]):
        gk = gaps[:, k]
        for i in range(n):
            left = gk[i - 1] if i > 0 else np.inf
            right = gk[i + 1] if i < n - 1 else np.inf
            if not (gk[i] <= left and gk[i] < right and gk[i] <= scale):
                continue
            if gk[i] == 0.0:
                found.append(grid[i])
                continue
            # crossing lies towards the smaller neighbour
            j = i - 1 if left < right else i + 1
            if j < 0 or j >= n:
                continue
            a, b = (i, j) if j > i else (j, i)
            found.append(grid[a] + step * gk[a] / (gk[a] + gk[b]))
    return _in_range(found, b_range)


# ------------------------------------------------------------------ file I/O

def params_from_dict(d):
    """Build :class:`CenterParams` from a dict with energies in MHz."""
    known = {f.name for f in fields(CenterParams)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
    kw = {}
    for k, v in d.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ValueError(f"parameter {k} must be a number, got {v!r}")
        kw[k] = float(v) / MHZ_PER_GHZ if k in _ENERGY_FIELDS else float(v)
    return CenterParams(**kw)


def load_params(path):
    """Read a JSON parameter file (energies in MHz) into GHz-based params."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: malformed JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return params_from_dict(data)


def parse_strain(text):
    """Parse ``"uxz=0.1,uyz=0"`` (underscores optional) into a StrainTensor."""
    if not text:
        return StrainTensor()
    kw = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"bad strain component {item!r}; expected name=value")
        key = key.strip().lower()
        if not key.startswith("u_"):
            key = "u_" + key[1:] if key.startswith("u") else key
        if key not in {f.name for f in fields(StrainTensor)}:
            raise ValueError(f"unknown strain component {item.split('=')[0]!r}")
        try:
            kw[key] = float(val)
        except ValueError:
            raise ValueError(f"strain component {key} is not a number: {val!r}") from None
    return StrainTensor(**kw)
