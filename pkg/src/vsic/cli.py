"""Command-line front end: ``vsic <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .constants import MHZ_PER_GHZ
from .effective import validate_against_exact
from .eigen import BACKEND
from .fitting import FitResult
from .hamiltonian import (SWEEP_AXES, MagneticField, StrainTensor,
                          find_level_anticrossings, load_params, parse_strain, solve,
                          sweep_parameter)
from .models import (OdmrLineshapeParams, OutOfRangeError, angular_model, arrhenius_model,
                     fit_angular, fit_arrhenius, fit_odmr, fit_rabi, odmr_lineshape,
                     rabi_model)
from .optics import THETA_V3_DEG, ThetaMap, theta_map
from .spectra import (Spectrum, ZplWindows, angular_series_from_spectra, apply_calibration,
                      correction_factor, estimate_mixture_ratios, psb_subtract,
                      psb_subtract_three)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

_log = logging.getLogger("vsic")

SYNTH_DEFAULTS = {
    "angular": {"i0": 1000.0, "cos2theta": 0.96, "noise": 0.05},
    "arrhenius": {"c0": -5e-3, "c1": 0.02, "e_a": 43.0, "noise": 1e-5},
    "odmr": {"t_c0": 16.0, "gamma": 1.4, "d0": 14.0, "delta_d": 2.0, "scale": 1e-4,
             "noise": 0.0},
    "rabi": {"a_offset": 0.0, "b_amp": 1.0, "omega": 0.0628, "phi": 0.0, "t2_star": 219.0,
             "noise": 0.02},
}


class NumericFailure(RuntimeError):
    """A computation ran but produced no trustworthy result."""


# ------------------------------------------------------------------ helpers

def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Outputs:
    """Collects output files so a manifest can list them; writes to stdout
    when no output directory was given."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir) if out_dir else None
        self.files = []
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name, text):
        if self.dir is None:
            sys.stdout.write(text)
            return
        (self.dir / name).write_text(text)
        self.files.append(name)

    def manifest(self, args, inputs=()):
        if self.dir is None:
            return
        skip = {"func", "out"}
        arguments = {k: (str(v) if isinstance(v, Path) else v)
                     for k, v in sorted(vars(args).items()) if k not in skip}
        doc = {
            "command": args.command,
            "arguments": arguments,
            "inputs": {str(p): _sha256(p) for p in inputs if p},
            "outputs": sorted(self.files),
            "seed": getattr(args, "seed", None),
            "versions": {"vsic": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "eigen_backend": BACKEND},
        }
        (self.dir / "manifest.json").write_text(_json(doc))


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _params(args):
    if args.params is None:
        raise ValueError("--params is required")
    return load_params(args.params)


def _strain(args):
    return parse_strain(args.strain) if args.strain else StrainTensor()


def _read_table(path, min_cols, max_cols):
    """Numeric CSV with a header row; returns an (n, k) array."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if len(rows) < 2:
        raise ValueError(f"{path}: no data rows")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric value ({exc})") from None
    if data.ndim != 2 or not min_cols <= data.shape[1] <= max_cols:
        raise ValueError(f"{path}: expected {min_cols} to {max_cols} columns")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: non-finite values")
    return data


def _fit_report(res: FitResult, extra=None):
    doc = res.to_dict()
    if extra:
        doc.update(extra)
    return doc


def _finish_fit(args, out, res, extra=None):
    out.write(f"{args.command}.json", _json(_fit_report(res, extra)))
    out.manifest(args, [args.data])
    if not res.converged:
        raise NumericFailure(res.message)


# ----------------------------------------------------------------- commands

def cmd_spectrum(args):
    es = solve(_params(args), _strain(args), MagneticField(args.bz))
    out = Outputs(args.out)
    rows = [(k + 1, float(e), lab, float(w))
            for k, (e, lab, w) in enumerate(zip(es.eigenvalues, es.labels, es.w_e))]
    out.write("spectrum.csv", _csv(["index", "energy_ghz", "label", "e_weight"], rows))
    out.manifest(args, [args.params])


def cmd_sweep(args):
    grid = np.linspace(args.start, args.stop, args.num)
    grid, energies = sweep_parameter(_params(args), _strain(args), args.axis, grid,
                                     MagneticField(args.bz))
    out = Outputs(args.out)
    header = ["axis"] + [f"e{k}" for k in range(1, 13)]
    out.write("sweep.csv", _csv(header, [[x, *e] for x, e in zip(grid, energies)]))
    out.manifest(args, [args.params])


def cmd_theta_map(args):
    lam = np.linspace(args.lambda_min, args.lambda_max, args.n_lambda)
    strain = np.linspace(args.strain_min, args.strain_max, args.n_strain)
    tm = theta_map(lam, strain, delta_a_sign=args.sign)
    out = Outputs(args.out or ".")
    out.write("theta_map.csv", _csv(["lambda_ratio", "strain_ratio", "theta_deg"], tm.rows()))
    contour = tm.contour(args.level)
    level = f"{args.level:g}".replace(".", "p")
    out.write(f"theta_contour_{level}.csv", _csv(["lambda_ratio", "strain_ratio"], contour))
    try:
        intercept = tm.strain_free_intercept(args.level)
    except ValueError:
        intercept = None
    summary = {
        "level_deg": args.level,
        "delta_a_sign": args.sign,
        "strain_free_intercept": intercept,
        "perturbative_intercept": ThetaMap.perturbative_intercept(args.level),
        "reference_intercept": 0.18,
        "deviation_from_reference": None if intercept is None else intercept - 0.18,
        "contour_points": len(contour),
    }
    out.write("theta_summary.json", _json(summary))
    out.manifest(args)


def cmd_lac(args):
    lo, hi = args.bmin, args.bmax
    doc = {"d_mhz": args.d, "g": args.g, "b_range_mt": [lo, hi]}
    doc["analytic_mt"] = find_level_anticrossings(args.d, args.g, (lo, hi), "analytic")
    if args.numeric:
        doc["numeric_mt"] = find_level_anticrossings(args.d, args.g, (lo, hi), "numeric")
    out = Outputs(args.out)
    out.write("lac.json", _json(doc))
    out.manifest(args)


def cmd_validate(args):
    rep = validate_against_exact(_params(args), _strain(args))
    doc = rep.to_dict()
    doc["dev_a2_mhz"] = rep.dev_a2_ghz * MHZ_PER_GHZ
    doc["dev_e_mhz"] = rep.dev_e_ghz * MHZ_PER_GHZ
    out = Outputs(args.out)
    out.write("validate.json", _json(doc))
    out.manifest(args, [args.params])


def cmd_fit_angular(args):
    data = _read_table(args.data, 2, 3)
    sigma = data[:, 2] if data.shape[1] == 3 else None
    res = fit_angular(data[:, 0], data[:, 1], sigma)
    _finish_fit(args, Outputs(args.out), res)


def cmd_fit_arrhenius(args):
    data = _read_table(args.data, 2, 3)
    sigma = data[:, 2] if data.shape[1] == 3 else None
    _finish_fit(args, Outputs(args.out), fit_arrhenius(data[:, 0], data[:, 1], sigma))


def cmd_fit_odmr(args):
    data = _read_table(args.data, 3, 4)
    sigma = data[:, 3] if data.shape[1] == 4 else None
    _finish_fit(args, Outputs(args.out), fit_odmr(data[:, 0], data[:, 1], data[:, 2], sigma))


def cmd_fit_rabi(args):
    data = _read_table(args.data, 2, 3)
    sigma = data[:, 2] if data.shape[1] == 3 else None
    _finish_fit(args, Outputs(args.out), fit_rabi(data[:, 0], data[:, 1], sigma))


def cmd_calibrate(args):
    refs = [Spectrum.read(p) for p in (args.i0_90, args.i90_90, args.i0_0, args.i90_0)]
    cal = correction_factor(*refs, noise_floor=args.noise_floor)
    out = Outputs(args.out or ".")
    rows = [(w, f if v else float("nan"), int(v))
            for w, f, v in zip(cal.wavelength, cal.factor, cal.valid)]
    out.write("calibration.csv", _csv(["wavelength_nm", "factor", "valid"], rows))
    for path in args.spectra:
        corrected = apply_calibration(Spectrum.read(path), cal)
        name = f"{Path(path).stem}_calibrated.csv"
        corrected.write(out.dir / name)
        out.files += [name, Path(name).with_suffix(".json").name]
    out.manifest(args, [args.i0_90, args.i90_90, args.i0_0, args.i90_0, *args.spectra])


def cmd_decompose(args):
    windows = ZplWindows()
    if args.windows:
        windows = ZplWindows.from_dict(json.loads(Path(args.windows).read_text()))
    spectra = [Spectrum.read(p) for p in args.spectra]
    by_phi = {round(s.alpha - s.beta, 9) % 180.0: s for s in spectra}
    if 0.0 not in by_phi or 90.0 not in by_phi:
        raise ValueError("decompose needs spectra at phi = 0 and 90 deg")
    ratios = estimate_mixture_ratios(by_phi[0.0], by_phi[90.0], windows)
    v1 = angular_series_from_spectra(spectra, windows.v1)
    v2_raw = angular_series_from_spectra(spectra, windows.v2)
    v3_raw = angular_series_from_spectra(spectra, windows.v3)
    v2 = psb_subtract(v2_raw, v1, ratios.a)
    v3 = psb_subtract_three(v3_raw, v1, v2, ratios.b, ratios.c)
    doc = ratios.to_dict()
    doc["windows"] = windows.to_dict()
    doc["clipped_points"] = {"v2": int(v2.clipped.sum()), "v3": int(v3.clipped.sum())}
    if np.ptp(v1.phi_deg) >= 180.0:
        doc["cos2theta"] = {name: fit_angular(s.phi_deg, s.intensity).params["cos2theta"]
                            for name, s in (("v1", v1), ("v2", v2), ("v3", v3))}
    out = Outputs(args.out or ".")
    out.write("decomposition.json", _json(doc))
    rows = zip(v1.phi_deg, v1.intensity, v2.intensity, v3.intensity)
    out.write("zpl_series.csv", _csv(["phi_deg", "zpl_v1", "zpl_v2", "zpl_v3"], rows))
    out.manifest(args, [*args.spectra, args.windows])


def _synth_values(args):
    vals = dict(SYNTH_DEFAULTS[args.model])
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep or key not in vals:
            raise ValueError(f"--set {item!r}: unknown key for model {args.model}; "
                             f"choose from {sorted(vals)}")
        vals[key] = float(value)
    return vals


def cmd_synth(args):
    rng = np.random.default_rng(args.seed)
    v = _synth_values(args)
    noise = v.pop("noise")
    if args.model == "angular":
        x = np.linspace(0.0, 180.0, 19)
        y = angular_model(x, **v)
        y = y + rng.normal(0.0, noise * v["i0"], x.size)
        header, cols = ["phi_deg", "intensity"], [x, y]
    elif args.model == "arrhenius":
        x = np.linspace(5.0, 300.0, 40)
        y = arrhenius_model(x, **v) + rng.normal(0.0, noise, x.size)
        header, cols = ["temperature_k", "contrast"], [x, y]
    elif args.model == "odmr":
        p = OdmrLineshapeParams(**v)
        nu1 = np.linspace(2 * (p.d0 - 4 * p.delta_d), 2 * (p.d0 + 4 * p.delta_d), 81)
        temps = np.array([8.0, 12.0, 16.0, 20.0, 24.0])
        nu, t = (a.ravel() for a in np.meshgrid(nu1, temps))
        y = odmr_lineshape(nu, t, p)
        y = y + rng.normal(0.0, noise * np.max(np.abs(y)), y.size)
        header, cols = ["nu_mhz", "temperature_k", "signal"], [nu, t, y]
    else:
        x = np.linspace(0.0, 1000.0, 501)
        y = rabi_model(x, **v) + rng.normal(0.0, noise, x.size)
        header, cols = ["tau_ns", "signal"], [x, y]
    out = Outputs(args.out)
    out.write(f"synth_{args.model}.csv", _csv(header, zip(*cols)))
    out.manifest(args)


# ------------------------------------------------------------------- parser

_EPILOG = """output files (CSV columns):
  spectrum     spectrum.csv        index, energy_ghz, label (E-like|A2-like|mixed), e_weight
  sweep        sweep.csv           axis (swept value), e1..e12 (GHz, ascending)
  theta-map    theta_map.csv       lambda_ratio, strain_ratio, theta_deg
               theta_contour_76.csv lambda_ratio, strain_ratio (points on the contour)
               theta_summary.json  strain-free intercept of the contour
  calibrate    calibration.csv     wavelength_nm, factor (1 + 2A), valid (0|1)
               <name>_calibrated.csv wavelength_nm, intensity
  decompose    zpl_series.csv      phi_deg, zpl_v1, zpl_v2, zpl_v3
  synth        synth_angular.csv   phi_deg, intensity
               synth_arrhenius.csv temperature_k, contrast
               synth_odmr.csv      nu_mhz, temperature_k, signal
               synth_rabi.csv      tau_ns, signal
input data for fit commands (header row, then numbers):
  fit-angular  phi_deg, intensity[, sigma]
  fit-arrhenius temperature_k, contrast[, sigma]
  fit-odmr     nu_mhz, temperature_k, signal[, sigma]
  fit-rabi     tau_ns, signal[, sigma]
params file: JSON with delta_a, lambda_so, b_ss, d_tilde, xi_e in MHz (optional g_factor).
With --out a manifest.json (arguments, input hashes, versions, seed) is written too.
exit codes: 0 success, 2 invalid input, 3 numerical failure
"""


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vsic", description="Fine structure, optical selection rules and spectroscopy "
                                 "fits for silicon-vacancy centers in SiC.",
        epilog=_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="output directory (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--params", type=Path, help="center parameter JSON file (MHz)")
    model.add_argument("--strain", help="strain components, e.g. uxz=0.1,uyz=0")
    model.add_argument("--bz", type=float, default=0.0, help="axial field in mT")

    def add(name, func, help_, parents=(common,)):
        p = sub.add_parser(name, help=help_, parents=list(parents), epilog=_EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.set_defaults(func=func)
        return p

    add("spectrum", cmd_spectrum, "eigenvalues and multiplet labels", (common, model))

    p = add("sweep", cmd_sweep, "sweep one parameter and tabulate all levels", (common, model))
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--num", type=int, default=101)

    p = add("theta-map", cmd_theta_map, "dipole tilt angle over spin-orbit and strain")
    p.add_argument("--lambda-min", type=float, default=0.0)
    p.add_argument("--lambda-max", type=float, default=0.3)
    p.add_argument("--n-lambda", type=int, default=61)
    p.add_argument("--strain-min", type=float, default=0.0)
    p.add_argument("--strain-max", type=float, default=0.5)
    p.add_argument("--n-strain", type=int, default=51)
    p.add_argument("--level", type=float, default=float(THETA_V3_DEG))
    p.add_argument("--sign", type=float, choices=(-1.0, 1.0), default=-1.0,
                   help="sign of delta_a (default -1, inverted ordering)")

    p = add("lac", cmd_lac, "level anticrossing fields of a spin-3/2 quadruplet")
    p.add_argument("--d", type=float, required=True, help="zero-field constant D in MHz")
    p.add_argument("--g", type=float, default=2.0)
    p.add_argument("--bmin", type=float, default=0.0, help="mT")
    p.add_argument("--bmax", type=float, default=10.0, help="mT")
    p.add_argument("--numeric", action="store_true", help="also run the gap scan")

    add("validate", cmd_validate, "compare effective and exact spectra", (common, model))

    for name, func, what in (("fit-angular", cmd_fit_angular, "polarizer scan"),
                             ("fit-arrhenius", cmd_fit_arrhenius, "ODMR contrast vs T"),
                             ("fit-odmr", cmd_fit_odmr, "ODMR line shapes near T_c"),
                             ("fit-rabi", cmd_fit_rabi, "Rabi oscillation trace")):
        p = add(name, func, f"fit a {what}")
        p.add_argument("--data", type=Path, required=True, help="input CSV")

    p = add("calibrate", cmd_calibrate, "polarization-sensitivity correction")
    for flag in ("--i0-90", "--i90-90", "--i0-0", "--i90-0"):
        p.add_argument(flag, type=Path, required=True,
                       help="reference spectrum CSV (sample angle, polarizer angle)")
    p.add_argument("--noise-floor", type=float, default=0.0)
    p.add_argument("spectra", nargs="*", type=Path, help="spectra to correct")

    p = add("decompose", cmd_decompose, "separate ZPL series from phonon sidebands")
    p.add_argument("--windows", type=Path, help="JSON {v1: [center, half_width], ...} in nm")
    p.add_argument("spectra", nargs="+", type=Path, help="calibrated spectra over phi")

    p = add("synth", cmd_synth, "generate a synthetic data set")
    p.add_argument("--model", choices=sorted(SYNTH_DEFAULTS), required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a generator value (repeatable)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except (NumericFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"vsic {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OutOfRangeError, OSError, KeyError, TypeError) as exc:
        print(f"vsic {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
