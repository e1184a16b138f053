"""PL spectrum handling: polarization-sensitivity calibration, ZPL/PSB
decomposition and extraction of angular series.

Spectra are stored as ``wavelength_nm,intensity`` CSV with the sample angle
beta, polarizer angle alpha and temperature in a JSON sidecar next to it.
"""
import csv
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Spectrum", "CalibrationCurve", "AngularSeries", "ZplWindow", "ZplWindows",
    "MixtureRatios", "correction_factor", "apply_calibration", "forward_sensitivity",
    "psb_subtract", "psb_subtract_three", "window_integral", "estimate_mixture_ratios",
    "angular_series_from_spectra", "GridMismatchError",
]


class GridMismatchError(ValueError):
    """Two inputs that must share a sampling grid do not."""


def _atomic_write(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _same_grid(a, b, what="wavelength"):
    if a.shape != b.shape or not np.array_equal(a, b):
        raise GridMismatchError(f"{what} grids differ")


@dataclass
class Spectrum:
    """Intensity on an ascending wavelength grid.

    Negative input intensities are clipped to zero and recorded in
    ``clipped``; ``valid`` marks samples that carry a usable value.
    """
    wavelength: np.ndarray
    intensity: np.ndarray
    beta: float = 0.0
    alpha: float = 0.0
    temperature: float = float("nan")
    sigma: np.ndarray = None
    valid: np.ndarray = None
    clipped: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.wavelength = np.asarray(self.wavelength, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.wavelength.ndim != 1 or self.wavelength.shape != self.intensity.shape:
            raise ValueError("wavelength and intensity must be 1-D and of equal length")
        if self.wavelength.size > 1 and np.any(np.diff(self.wavelength) <= 0):
            raise ValueError("wavelength grid must be strictly ascending")
        if self.valid is None:
            self.valid = np.isfinite(self.intensity)
        self.valid = np.asarray(self.valid, dtype=bool)
        neg = self.valid & (self.intensity < 0)
        prior = np.zeros_like(neg) if self.clipped is None else np.asarray(self.clipped, bool)
        self.clipped = prior | neg
        if neg.any():
            self.intensity = np.where(neg, 0.0, self.intensity)
        if self.sigma is not None:
            self.sigma = np.asarray(self.sigma, dtype=float)
            if self.sigma.shape != self.intensity.shape:
                raise ValueError("sigma must match intensity")

    @property
    def metadata(self):
        return {"beta_deg": self.beta, "alpha_deg": self.alpha, "temperature_k": self.temperature}

    def scaled(self, s):
        sig = None if self.sigma is None else self.sigma * s
        return Spectrum(self.wavelength, self.intensity * s, self.beta, self.alpha,
                        self.temperature, sig, self.valid.copy(), self.clipped.copy())

    def noise(self):
        """Per-sample standard deviation; shot noise when none was given."""
        if self.sigma is not None:
            return self.sigma
        return np.sqrt(np.clip(self.intensity, 0.0, None))

    def write(self, path):
        """Write the CSV and its ``.json`` sidecar, each atomically."""
        path = Path(path)
        lines = ["wavelength_nm,intensity"]
        lines += [f"{w!r},{i!r}" for w, i in zip(self.wavelength.tolist(), self.intensity.tolist())]
        _atomic_write(path, "\n".join(lines) + "\n")
        meta = {k: (None if isinstance(v, float) and np.isnan(v) else v)
                for k, v in self.metadata.items()}
        _atomic_write(path.with_suffix(".json"), json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path):
        path = Path(path)
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["wavelength_nm", "intensity"]:
                raise ValueError(f"{path}: expected header 'wavelength_nm,intensity'")
            rows = [r for r in reader if r]
        try:
            data = np.array([[float(r[0]), float(r[1])] for r in rows]).reshape(-1, 2)
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}: malformed row ({exc})") from None
        meta = {}
        side = path.with_suffix(".json")
        if side.exists():
            meta = json.loads(side.read_text())
        t = meta.get("temperature_k")
        return cls(data[:, 0], data[:, 1], beta=float(meta.get("beta_deg", 0.0)),
                   alpha=float(meta.get("alpha_deg", 0.0)),
                   temperature=float("nan") if t is None else float(t))


@dataclass
class CalibrationCurve:
    """Polarization-sensitivity factor ``1 + 2A`` per wavelength."""
    wavelength: np.ndarray
    factor: np.ndarray
    valid: np.ndarray

    @property
    def a(self):
        return (self.factor - 1.0) / 2.0


def correction_factor(i_0_90, i_90_90, i_0_0, i_90_0, noise_floor=0.0):
    """Ratio of the alpha = 90 deg spectra to the alpha = 0 deg spectra, summed
    over sample orientations 0 and 90 deg (arguments are ``i_<beta>_<alpha>``).

    Wavelengths whose denominator does not exceed ``noise_floor`` are invalid.
    """
    specs = (i_0_90, i_90_90, i_0_0, i_90_0)
    for s in specs[1:]:
        _same_grid(specs[0].wavelength, s.wavelength)
    num = i_0_90.intensity + i_90_90.intensity
    den = i_0_0.intensity + i_90_0.intensity
    valid = (den > noise_floor) & np.isfinite(num) & np.isfinite(den)
    valid &= i_0_90.valid & i_90_90.valid & i_0_0.valid & i_90_0.valid
    if not valid.any():
        raise ValueError("calibration denominator is zero (or below the noise floor) everywhere")
    factor = np.full_like(den, np.nan)
    factor[valid] = num[valid] / den[valid]
    return CalibrationCurve(specs[0].wavelength.copy(), factor, valid)


def forward_sensitivity(true, a, alpha_deg):
    """Apply the detector sensitivity ``1 + A - A cos 2 alpha`` to true intensities."""
    return true * (1.0 + a - a * np.cos(2.0 * np.radians(alpha_deg)))


def apply_calibration(raw, cal, alpha=None):
    """Undo the polarization sensitivity; ``alpha`` defaults to the spectrum's tag."""
    _same_grid(raw.wavelength, cal.wavelength)
    alpha = raw.alpha if alpha is None else alpha
    a = cal.a
    valid = raw.valid & cal.valid
    den = 1.0 + a - a * np.cos(2.0 * np.radians(alpha))
    valid &= den > 0
    out = np.full_like(raw.intensity, np.nan)
    out[valid] = raw.intensity[valid] / den[valid]
    sigma = None
    if raw.sigma is not None:
        sigma = np.full_like(out, np.nan)
        sigma[valid] = raw.sigma[valid] / den[valid]
    return Spectrum(raw.wavelength, out, raw.beta, alpha, raw.temperature, sigma, valid,
                    raw.clipped.copy())


@dataclass
class AngularSeries:
    """Window-integrated intensity versus polarizer angle (deg)."""
    phi_deg: np.ndarray
    intensity: np.ndarray
    sigma: np.ndarray = None
    clipped: np.ndarray = None

    def __post_init__(self):
        self.phi_deg = np.asarray(self.phi_deg, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.phi_deg.shape != self.intensity.shape or self.phi_deg.ndim != 1:
            raise ValueError("phi and intensity must be 1-D and of equal length")
        if self.sigma is not None:
            self.sigma = np.asarray(self.sigma, dtype=float)
        if self.clipped is None:
            self.clipped = np.zeros(self.phi_deg.shape, dtype=bool)

    def __mul__(self, s):
        sig = None if self.sigma is None else self.sigma * abs(s)
        return AngularSeries(self.phi_deg, self.intensity * s, sig, self.clipped.copy())

    __rmul__ = __mul__


def _check_ratio(name, value):
    if not value >= 0:
        raise ValueError(f"{name} must be non-negative, got {value}")


def _clip_series(phi, values, sigma):
    neg = values < 0
    return AngularSeries(phi, np.where(neg, 0.0, values), sigma, neg)


def _combine_sigma(terms):
    parts = [(c, s.sigma) for c, s in terms if s.sigma is not None]
    if not parts:
        return None
    return np.sqrt(sum((c * sg) ** 2 for c, sg in parts))


def psb_subtract(pl_at_v2, zpl_v1, a):
    """V2 ZPL series: intensity in the V2 window minus the V1 sideband ``a * ZPL_V1``."""
    _check_ratio("a", a)
    _same_grid(pl_at_v2.phi_deg, zpl_v1.phi_deg, "phi")
    values = pl_at_v2.intensity - a * zpl_v1.intensity
    return _clip_series(pl_at_v2.phi_deg, values, _combine_sigma([(1.0, pl_at_v2), (a, zpl_v1)]))


def psb_subtract_three(pl_at_v3, zpl_v1, zpl_v2, b, c):
    """V3 ZPL series: remove the V1 and V2 sidebands, ``b * ZPL_V1 + c * ZPL_V2``."""
    _check_ratio("b", b)
    _check_ratio("c", c)
    _same_grid(pl_at_v3.phi_deg, zpl_v1.phi_deg, "phi")
    _same_grid(pl_at_v3.phi_deg, zpl_v2.phi_deg, "phi")
    values = pl_at_v3.intensity - b * zpl_v1.intensity - c * zpl_v2.intensity
    sigma = _combine_sigma([(1.0, pl_at_v3), (b, zpl_v1), (c, zpl_v2)])
    return _clip_series(pl_at_v3.phi_deg, values, sigma)


@dataclass(frozen=True)
class ZplWindow:
    center_nm: float
    half_width_nm: float

    def __post_init__(self):
        if not self.half_width_nm > 0:
            raise ValueError("window half-width must be positive")

    def mask(self, wavelength):
        return np.abs(np.asarray(wavelength) - self.center_nm) <= self.half_width_nm


@dataclass(frozen=True)
class ZplWindows:
    """Integration windows.  The defaults are placeholders near the 6H-SiC
    V1/V2/V3 lines and should be set from the measured spectra.
    ``v3_flank`` is a sideband-only region on the blue side of the V3 line."""
    v1: ZplWindow = ZplWindow(865.0, 1.0)
    v2: ZplWindow = ZplWindow(887.0, 1.0)
    v3: ZplWindow = ZplWindow(908.0, 1.0)
    v3_flank: ZplWindow = ZplWindow(904.0, 1.0)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: ZplWindow(*v) if not isinstance(v, dict) else ZplWindow(**v)
                      for k, v in d.items()})

    def to_dict(self):
        return {k: [getattr(self, k).center_nm, getattr(self, k).half_width_nm]
                for k in ("v1", "v2", "v3", "v3_flank")}


def window_integral(spec, window):
    """Summed intensity inside ``window`` and its standard deviation."""
    m = window.mask(spec.wavelength) & spec.valid
    if not m.any():
        return 0.0, 0.0
    return float(np.sum(spec.intensity[m])), float(np.sqrt(np.sum(spec.noise()[m] ** 2)))


@dataclass
class MixtureRatios:
    a: float
    b: float
    c: float
    sigma_a: float
    sigma_b: float
    sigma_c: float
    flags: list = field(default_factory=list)

    def to_dict(self):
        return {"a": self.a, "b": self.b, "c": self.c, "sigma_a": self.sigma_a,
                "sigma_b": self.sigma_b, "sigma_c": self.sigma_c, "flags": list(self.flags)}


def _ratio(num, den, what):
    (n, sn), (d, sd) = num, den
    if d <= 0:
        raise ValueError(f"reference intensity for {what} vanishes; check the ZPL windows")
    return n / d, float(np.hypot(sn / d, n * sd / d ** 2))


def estimate_mixture_ratios(spec_0, spec_90, windows=ZplWindows()):
    """Sideband ratios from calibrated spectra at phi = 0 and 90 deg.

    At 90 deg the V2 line is suppressed, so the V2 window holds only V1
    sideband (``a``) and the V3 flank holds only V1 sideband (``b``).  At 0 deg
    the flank additionally carries V2 sideband, which gives ``c``.
    """
    _same_grid(spec_0.wavelength, spec_90.wavelength)
    flags = []
    v1_90 = window_integral(spec_90, windows.v1)
    v2_90 = window_integral(spec_90, windows.v2)
    fl_90 = window_integral(spec_90, windows.v3_flank)
    a, sa = _ratio(v2_90, v1_90, "a")
    b, sb = _ratio(fl_90, v1_90, "b")

    v1_0 = window_integral(spec_0, windows.v1)
    v2_0 = window_integral(spec_0, windows.v2)
    fl_0 = window_integral(spec_0, windows.v3_flank)
    zpl_v2_0 = v2_0[0] - a * v1_0[0]
    s_zpl_v2_0 = np.sqrt(v2_0[1] ** 2 + (a * v1_0[1]) ** 2 + (sa * v1_0[0]) ** 2)
    if zpl_v2_0 <= 0:
        raise ValueError("reference intensity for c vanishes; check the ZPL windows")
    num = fl_0[0] - b * v1_0[0]
    s_num = np.sqrt(fl_0[1] ** 2 + (b * v1_0[1]) ** 2 + (sb * v1_0[0]) ** 2)
    c = num / zpl_v2_0
    sc = float(np.hypot(s_num / zpl_v2_0, c * s_zpl_v2_0 / zpl_v2_0))
    out = []
    for name, val in (("a", a), ("b", b), ("c", c)):
        if val < 0:
            flags.append(f"{name}_negative_clipped")
            val = 0.0
        out.append(float(val))
    return MixtureRatios(*out, float(sa), float(sb), sc, flags)


def angular_series_from_spectra(spectra, window):
    """Integrate ``window`` in each spectrum; phi is alpha - beta (deg)."""
    if not spectra:
        raise ValueError("no spectra given")
    phi, vals, sig = [], [], []
    for s in spectra:
        v, dv = window_integral(s, window)
        phi.append(s.alpha - s.beta)
        vals.append(v)
        sig.append(dv)
    order = np.argsort(phi, kind="stable")
    return AngularSeries(np.asarray(phi)[order], np.asarray(vals)[order], np.asarray(sig)[order])
