"""Optical dipole selection rules between the excited manifold and the 4A2 ground state.

Dipole model: transitions conserve S_z; the orbital part carries the
polarization.  With Cartesian orbitals |X>, |Y>, |Z> and
``|0> = |Z>``, ``|+-1> = -+(|X> +- i|Y>)/sqrt(2)``, the transition to the ground
state has ``d_alpha`` equal to the |alpha> amplitude of the excited state.

The tilt angle of a multiplet uses intensity sums over its states and the
four ground-state spin channels, with the in-plane strength taken as the
mean of the x and y sums:  ``tan^2(theta) = (Sx + Sy) / (2 Sz)``.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constants import KB_MEV_PER_K
from .hamiltonian import (A2_LIKE, E_LIKE, MIXED, CenterParams, MagneticField, StrainTensor,
                          build_hamiltonian, classify_multiplets, degenerate_clusters,
                          eigensystem)

__all__ = [
    "DipoleAmplitudes", "dipole_amplitudes", "tilt_angle_exact", "tilt_angle_perturbative",
    "ThetaMap", "theta_map", "classify_regime", "RegimeReport", "angular_intensity",
    "thermal_cos2theta", "cos2theta_to_theta", "theta_to_cos2theta", "ClassificationError",
    "THETA_V3_DEG", "REGIME_FACTOR",
]

THETA_V3_DEG = 76.0
REGIME_FACTOR = 10.0
_SQRT2 = math.sqrt(2.0)


class ClassificationError(ValueError):
    """The requested multiplet contains states of mixed orbital character."""


@dataclass
class DipoleAmplitudes:
    """Per-state dipole intensities summed over the ground-state spin channels.

    ``channels`` holds the complex (d_x, d_y, d_z) per state and channel with
    shape ``(n_states, 4, 3)``; channel k is S_z = 3/2 - k.
    """

    dx2: np.ndarray
    dy2: np.ndarray
    dz2: np.ndarray
    channels: np.ndarray
    energies: np.ndarray

    @property
    def total(self):
        return self.dx2 + self.dy2 + self.dz2

    def subspace_sums(self, tol=1e-9):
        """(d_x^2, d_y^2, d_z^2) summed within each degenerate cluster."""
        scale = max(1.0, float(np.max(np.abs(self.energies)))) if self.energies.size else 1.0
        out = []
        for cl in degenerate_clusters(self.energies, tol * scale):
            out.append((self.dx2[cl].sum(), self.dy2[cl].sum(), self.dz2[cl].sum()))
        return np.array(out)


def dipole_amplitudes(es):
    v = np.asarray(es.eigenvectors)
    c_plus, c_zero, c_minus = v[0:4], v[4:8], v[8:12]
    d_x = (c_minus - c_plus) / _SQRT2
    d_y = -1j * (c_plus + c_minus) / _SQRT2
    d_z = c_zero
    channels = np.stack([d_x.T, d_y.T, d_z.T], axis=-1)
    return DipoleAmplitudes(
        dx2=np.sum(np.abs(d_x) ** 2, axis=0),
        dy2=np.sum(np.abs(d_y) ** 2, axis=0),
        dz2=np.sum(np.abs(d_z) ** 2, axis=0),
        channels=channels,
        energies=np.asarray(es.eigenvalues, dtype=float),
    )


def _theta_from_sums(sx, sy, sz):
    return math.degrees(math.atan2(math.sqrt(0.5 * (sx + sy)), math.sqrt(sz)))


def _select_multiplet(es, multiplet, delta_a, strict):
    if multiplet == "lowest":
        multiplet = E_LIKE if delta_a < 0 else A2_LIKE
    order = np.argsort(es.w_e, kind="stable")
    if multiplet == E_LIKE:
        idx = order[4:]
    elif multiplet == A2_LIKE:
        idx = order[:4]
    else:
        raise ValueError(f"multiplet must be 'lowest', {A2_LIKE!r} or {E_LIKE!r}")
    if strict:
        bad = [i for i in idx if es.labels[i] != multiplet]
        if bad:
            raise ClassificationError(
                f"{len(bad)} state(s) of the {multiplet} multiplet are {MIXED} or "
                f"mislabeled (min w_E = {es.w_e[idx].min():.3f})")
    return idx


def tilt_angle_exact(p, u=None, multiplet=E_LIKE, strict=True, backend=None):
    """Dipole tilt angle (degrees) of a multiplet from exact diagonalization at B=0."""
    if p.delta_a == 0:
        raise ValueError("delta_a = 0: multiplets are not separated")
    es = classify_multiplets(eigensystem(build_hamiltonian(p, u, MagneticField()), backend))
    idx = _select_multiplet(es, multiplet, p.delta_a, strict)
    amp = dipole_amplitudes(es)
    return _theta_from_sums(amp.dx2[idx].sum(), amp.dy2[idx].sum(), amp.dz2[idx].sum())


def tilt_angle_perturbative(p, u=None):
    """Closed-form weak-mixing angles ``(theta_a2, theta_e)`` in degrees."""
    if p.delta_a == 0:
        raise ValueError("delta_a = 0: perturbative angles undefined")
    u = u or StrainTensor()
    shear2 = p.xi_e ** 2 * (u.u_xz ** 2 + u.u_yz ** 2)
    da = abs(p.delta_a)
    if max(abs(p.lambda_so), math.sqrt(shear2)) / da > 0.3:
        warnings.warn("mixing ratio exceeds 0.3; perturbative angles are unreliable",
                      RuntimeWarning, stacklevel=2)
    theta_a2 = math.sqrt(shear2 / 2.0 + 1.25 * p.lambda_so ** 2) / da
    theta_e = math.pi / 2 - math.sqrt(shear2 + 2.5 * p.lambda_so ** 2) / da
    return math.degrees(theta_a2), math.degrees(theta_e)


# ---------------------------------------------------------------- theta map

@dataclass
class ThetaMap:
    """theta_E (degrees) on a lambda/|delta_a| x Xi u_xz/|delta_a| grid.

    ``theta[i, j]`` belongs to ``lambda_ratio[i]`` and ``strain_ratio[j]``.
    """

    lambda_ratio: np.ndarray
    strain_ratio: np.ndarray
    theta: np.ndarray
    delta_a_sign: float = -1.0

    def rows(self):
        for i, lr in enumerate(self.lambda_ratio):
            for j, sr in enumerate(self.strain_ratio):
                yield float(lr), float(sr), float(self.theta[i, j])

    def contour(self, level=THETA_V3_DEG):
        """Polyline ``[(lambda_ratio, strain_ratio), ...]`` where theta == level.

        Crossings are linearly interpolated along both grid directions and
        ordered by increasing strain ratio.
        """
        pts = set()
        lam, st, th = self.lambda_ratio, self.strain_ratio, self.theta - level
        for j, s in enumerate(st):
            col = th[:, j]
            for i in range(len(lam) - 1):
                a, b = col[i], col[i + 1]
                if a == 0:
                    pts.add((float(lam[i]), float(s)))
                elif a * b < 0:
                    pts.add((float(lam[i] + (lam[i + 1] - lam[i]) * a / (a - b)), float(s)))
        for i, lr in enumerate(lam):
            row = th[i, :]
            for j in range(len(st) - 1):
                a, b = row[j], row[j + 1]
                if a * b < 0:
                    pts.add((float(lr), float(st[j] + (st[j + 1] - st[j]) * a / (a - b))))
        return sorted(pts, key=lambda q: (q[1], -q[0]))

    def strain_free_intercept(self, level=THETA_V3_DEG):
        """lambda/|delta_a| where the exact theta_E reaches ``level`` at zero strain."""
        from scipy.optimize import brentq

        sign = self.delta_a_sign

        def f(r):
            return _theta_cell(r, 0.0, sign) - level

        lo, hi = 1e-6, float(max(self.lambda_ratio.max(), 0.5))
        if f(lo) * f(hi) > 0:
            return float("nan")
        return float(brentq(f, lo, hi, xtol=1e-12))

    @staticmethod
    def perturbative_intercept(level=THETA_V3_DEG):
        return math.radians(90.0 - level) / math.sqrt(2.5)


def _theta_cell(lambda_ratio, strain_ratio, sign, backend=None):
    p = CenterParams(delta_a=sign * 1.0, lambda_so=float(lambda_ratio), xi_e=1.0)
    u = StrainTensor(u_xz=float(strain_ratio))
    return tilt_angle_exact(p, u, E_LIKE, strict=False, backend=backend)


def theta_map(lambda_grid, strain_grid, delta_a_sign=-1.0, backend=None):
    """Exact theta_E over the grid; delta_a = sign * 1, Xi = 1 (dimensionless)."""
    lam = np.asarray(lambda_grid, dtype=float)
    st = np.asarray(strain_grid, dtype=float)
    if lam.ndim != 1 or st.ndim != 1 or lam.size == 0 or st.size == 0:
        raise ValueError("grids must be non-empty 1-D sequences")
    if delta_a_sign == 0:
        raise ValueError("delta_a_sign must be nonzero")
    sign = math.copysign(1.0, delta_a_sign)
    theta = np.empty((lam.size, st.size))
    for i, lr in enumerate(lam):
        for j, sr in enumerate(st):
            theta[i, j] = _theta_cell(lr, sr, sign, backend)
    return ThetaMap(lam, st, theta, sign)


# ----------------------------------------------------------------- regimes

@dataclass
class RegimeReport:
    regime: str
    spin_orbit: float
    strain_energy: float
    transitions: list

    def to_dict(self):
        return {"regime": self.regime, "spin_orbit": self.spin_orbit,
                "strain_energy": self.strain_energy, "transitions": self.transitions}


def _polarization(d):
    """Label the polarization of one complex dipole vector (d_x, d_y, d_z)."""
    dx, dy, dz = d
    inplane = abs(dx) ** 2 + abs(dy) ** 2
    total = inplane + abs(dz) ** 2
    if total < 1e-24:
        return "dark", 0.0
    if abs(dz) ** 2 > 0.9 * total:
        return "z", float(total)
    # projections on e_+- = (e_x +- i e_y)/sqrt(2)
    a_plus = abs(dx - 1j * dy) ** 2 / 2
    a_minus = abs(dx + 1j * dy) ** 2 / 2
    circ = (a_plus - a_minus) / inplane
    if circ > 0.9:
        return "sigma+", float(total)
    if circ < -0.9:
        return "sigma-", float(total)
    if abs(circ) < 0.1:
        return "linear", float(total)
    return "elliptical", float(total)


def classify_regime(p, u=None, backend=None):
    """Circular vs linear selection rules for the lowest excited multiplet.

    The strain energy combines shear and in-plane terms,
    ``Xi * sqrt(u_xz^2 + u_yz^2 + ((u_xx - u_yy)/2)^2 + u_xy^2)``.
    """
    u = u or StrainTensor()
    strain = abs(p.xi_e) * math.sqrt(u.u_xz ** 2 + u.u_yz ** 2
                                     + (0.5 * (u.u_xx - u.u_yy)) ** 2 + u.u_xy ** 2)
    lam = abs(p.lambda_so)
    if lam > REGIME_FACTOR * strain:
        regime = "circular"
    elif strain > REGIME_FACTOR * lam:
        regime = "linear"
    else:
        regime = "intermediate"

    transitions = []
    if p.delta_a != 0:
        es = classify_multiplets(eigensystem(build_hamiltonian(p, u, MagneticField()), backend))
        idx = _select_multiplet(es, "lowest", p.delta_a, strict=False)
        amp = dipole_amplitudes(es)
        for i in sorted(idx, key=lambda k: es.eigenvalues[k]):
            for ch in range(4):
                pol, strength = _polarization(amp.channels[i, ch])
                if pol == "dark" or strength < 1e-6 * max(amp.total[i], 1e-300):
                    continue
                transitions.append({
                    "energy_ghz": float(es.eigenvalues[i]),
                    "gs_sz": 1.5 - ch,
                    "polarization": pol,
                    "strength": strength,
                })
    return RegimeReport(regime, lam, strain, transitions)


# ------------------------------------------------------ intensity and thermal

def angular_intensity(i0, cos2theta, phi_m):
    """Polarizer scan ``I0 * (1 + cos2theta * cos(2 phi_m))``; phi_m in degrees."""
    c = np.asarray(cos2theta, dtype=float)
    if np.any(np.abs(c) > 1.0):
        raise ValueError("|cos2theta| must not exceed 1")
    return i0 * (1.0 + c * np.cos(2.0 * np.radians(phi_m)))


def cos2theta_to_theta(c):
    if abs(c) > 1:
        raise ValueError("|cos2theta| must not exceed 1")
    return math.degrees(0.5 * math.acos(c))


def theta_to_cos2theta(theta_deg):
    return math.cos(2.0 * math.radians(theta_deg))


def _boltzmann(delta_mev, t):
    """exp(-delta/kT) with the T -> 0 limit handled."""
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        x = np.where(t > 0, -delta_mev / (KB_MEV_PER_K * np.where(t > 0, t, 1.0)),
                     -np.inf if delta_mev > 0 else (0.0 if delta_mev == 0 else np.inf))
        return np.exp(x)


def thermal_cos2theta(t, theta0, delta_a, branch):
    """Thermally depolarized cos(2 theta) at temperature ``t`` (K).

    ``theta0`` in degrees, ``delta_a`` in meV.  ``branch="A2-lowest"`` uses
    tan^2(theta) = tan^2(theta0) + exp(-delta_a/kT); ``"E-lowest"`` uses
    cot^2(theta) = cot^2(theta0) + exp(delta_a/kT).
    """
    if np.any(np.asarray(t) < 0):
        raise ValueError("temperature must be non-negative")
    th = math.radians(theta0)
    if branch == "A2-lowest":
        if math.isclose(theta0, 90.0, abs_tol=1e-12):
            raise ValueError("theta0 = 90 deg has no finite tan^2 on the A2 branch")
        if delta_a < 0:
            warnings.warn("A2-lowest branch with negative delta_a", RuntimeWarning, stacklevel=2)
        t2 = math.tan(th) ** 2 + _boltzmann(delta_a, t)
        out = (1.0 - t2) / (1.0 + t2)
    elif branch == "E-lowest":
        if math.isclose(theta0, 0.0, abs_tol=1e-12):
            raise ValueError("theta0 = 0 deg has no finite cot^2 on the E branch")
        if delta_a > 0:
            warnings.warn("E-lowest branch with positive delta_a", RuntimeWarning, stacklevel=2)
        c2 = 1.0 / math.tan(th) ** 2 + _boltzmann(-delta_a, t)
        out = (c2 - 1.0) / (c2 + 1.0)
    else:
        raise ValueError("branch must be 'A2-lowest' or 'E-lowest'")
    out = np.where(np.isinf(out) | np.isnan(out), np.where(branch == "A2-lowest", -1.0, 1.0), out)
    return float(out) if np.ndim(out) == 0 else out

