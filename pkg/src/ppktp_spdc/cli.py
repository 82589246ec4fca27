"""Command-line front end: ``ppktp {tdc, sweep, tomo, rates}``.

Settings come from built-in defaults, then an optional INI file (``--config``),
then command-line flags. Every output file records the resolved RunConfig in
its header so a run can be reproduced from any of its products.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dispersion import CrystalSpec, DEFAULT_SET, available_sets, load_sellmeier
from .emission import (
    cross_section_scan,
    default_filter,
    ellipticity,
    normalize_profiles,
    peak_angle,
    ring_curve,
)
from .errors import ConvergenceError, NumericalError, RecordFormatError
from .io import (
    canonical_json,
    density_to_dict,
    read_coincidence_csv,
    read_tomography_record,
    write_csv,
    write_json,
    write_tomography_record,
)
from .phasematch import PumpSpec, angle_wavelength_slope, degenerate_angle, solve_degenerate_collinear_T
from .polarization import hom_scan
from .rates import LossBudget, brightness, length_scaling, phase_fluctuation, spectral_rate
from .spectrum import center_wavelengths, fwhm
from .tomography import (
    PHI_PLUS,
    concurrence,
    fidelity,
    mle_reconstruct,
    pure_density,
    purity,
    simulate_counts,
    werner_state,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3
SWEEP_KINDS = ("tuning", "bandwidth", "angle", "ring", "cross-section", "hom", "stability")

# (type, default) of every command-specific parameter, keyed by config section
PARAMS = {
    "sweep": {
        "t_min": (float, 42.0),
        "t_max": (float, 122.0),
        "t_step": (float, 2.0),
        "t": (float, 95.0),
        "theta_mode": (float, None),
        "t_design": (float, 95.0),
        "plane": (str, "xy"),
        "temps": (str, "48.6,58.6,68.6,78.6,88.6,98.6"),
        "filter_center": (float, None),
        "filter_fwhm": (float, 3.0),
        "filter_shape": (str, "gaussian"),
        "y_max": (float, 4.0),
        "y_step": (float, 0.02),
        "ring_points": (int, 72),
        "phi": (str, "0"),
        "lp_a": (float, 45.0),
        "lp_b": (float, -45.0),
        "lambda_a": (float, None),
        "lambda_b": (float, None),
        "bandwidth_nm": (float, 0.553),
        "envelope": (str, "gaussian"),
        "d_min": (float, -600.0),
        "d_max": (float, 600.0),
        "d_step": (float, 1.0),
        "delta_lambda": (float, 50.0),
        "m": (int, 5),
        "dl": (float, 0.1),
        "lambda_center": (float, None),
    },
    "tomo": {
        "simulate": (str, None),
        "input": (str, None),
        "p": (float, 1.0),
        "n": (float, 100000.0),
        "noise": (str, "none"),
        "likelihood": (str, "gaussian"),
        "restarts": (int, 5),
    },
    "rates": {
        "input": (str, None),
        "polarizer": (float, 0.8),
        "detector": (float, 0.4),
        "coupling": (float, 1.0),
        "bandwidth_nm": (float, 0.553),
        "length_to": (float, 25.0),
    },
}

BASE = {
    "coefficient_set": (str, DEFAULT_SET),
    "period_um": (float, 10.0),
    "length_mm": (float, 10.0),
    "lambda_p_nm": (float, 406.2),
    "pump_bandwidth_ghz": (float, 0.2),
    "power_mw": (float, 1.0),
    "seed": (int, 0),
}
# INI section holding each base key
BASE_SECTION = {
    "coefficient_set": "crystal",
    "period_um": "crystal",
    "length_mm": "crystal",
    "lambda_p_nm": "pump",
    "pump_bandwidth_ghz": "pump",
    "power_mw": "pump",
    "seed": "run",
}


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    kind: str = ""
    coefficient_set: str = DEFAULT_SET
    period_um: float = 10.0
    length_mm: float = 10.0
    lambda_p_nm: float = 406.2
    pump_bandwidth_ghz: float = 0.2
    power_mw: float = 1.0
    seed: int = 0
    params: dict = field(default_factory=dict)
    out_dir: str = "ppktp-out"

    def header_dict(self) -> dict:
        """Everything except the output location, which the file's own path supplies."""
        d = asdict(self)
        d.pop("out_dir")
        return d

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.header_dict()).encode()).hexdigest()[:16]

    @classmethod
    def from_header(cls, text: str, out_dir: str) -> "RunConfig":
        return cls(**json.loads(text), out_dir=out_dir)

    def crystal(self) -> CrystalSpec:
        return CrystalSpec(load_sellmeier(self.coefficient_set), self.period_um, self.length_mm)

    def pump(self) -> PumpSpec:
        return PumpSpec(self.lambda_p_nm, self.pump_bandwidth_ghz, self.power_mw)


def _convert(kind, raw, key):
    if raw is None or isinstance(raw, kind):
        return raw
    try:
        return kind(raw)
    except ValueError:
        raise InputError(f"{key}: cannot read {raw!r} as {kind.__name__}") from None


def _read_ini(path) -> configparser.ConfigParser:
    ini = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            ini.read_file(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise InputError(f"bad config {path}: {exc}") from None
    return ini


def resolve_config(args: argparse.Namespace) -> RunConfig:
    ini = _read_ini(args.config) if args.config else configparser.ConfigParser()
    flags = vars(args)

    def pick(section, key, kind, default):
        if flags.get(key) is not None:
            return _convert(kind, flags[key], key)
        if ini.has_option(section, key):
            return _convert(kind, ini.get(section, key), f"[{section}] {key}")
        return default

    base = {k: pick(BASE_SECTION[k], k, kind, d) for k, (kind, d) in BASE.items()}
    section = args.command if args.command in PARAMS else None
    params = {}
    if section:
        params = {k: pick(section, k, kind, d) for k, (kind, d) in sorted(PARAMS[section].items())}
    out_dir = flags.get("out") or (ini.get("run", "out") if ini.has_option("run", "out") else "ppktp-out")
    cfg = RunConfig(command=args.command, kind=getattr(args, "kind", "") or "", params=params, out_dir=out_dir, **base)
    if cfg.coefficient_set not in available_sets():
        raise InputError(
            f"unknown coefficient set {cfg.coefficient_set!r}; available: {', '.join(available_sets())}"
        )
    return cfg


def _metadata(cfg: RunConfig, units: str, **extra) -> dict:
    s = load_sellmeier(cfg.coefficient_set)
    meta = {
        "tool": f"ppktp {__version__}",
        "config_hash": cfg.config_hash,
        "coefficient_set": s.name,
        "coefficient_source": s.source,
        "units": units,
    }
    meta.update({k: v for k, v in extra.items()})
    meta["config"] = cfg.header_dict()
    return meta


def _out(cfg: RunConfig, name: str) -> Path:
    d = Path(cfg.out_dir)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"output directory {d} is not writable: {exc.strerror}") from None
    return d / name


def _grid(lo, hi, step):
    if step <= 0 or hi < lo:
        raise InputError("temperature/delay grid needs step > 0 and max >= min")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 10)


def _point(fn, width=1):
    """Evaluate one sweep point; a failure becomes a gap."""
    try:
        return fn()
    except (NumericalError, ValueError):
        return (float("nan"),) * width if width > 1 else float("nan")


_PHI_RE = re.compile(r"^\s*([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_phase(text: str) -> float:
    """Radians from '1.57', 'pi/2', '3pi/2', '0.5*pi'."""
    try:
        return float(text)
    except ValueError:
        pass
    m = _PHI_RE.match(text)
    if not m:
        raise InputError(f"cannot read phase {text!r}; use radians or forms like 'pi/2'")
    coef = m.group(1)
    num = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
    den = float(m.group(2)) if m.group(2) else 1.0
    return num * np.pi / den


def _theta_mode(cfg, crystal, pump):
    p = cfg.params
    if p["theta_mode"] is not None:
        return p["theta_mode"]
    try:
        return degenerate_angle(p["t_design"], p["plane"], crystal, pump)
    except NumericalError as exc:
        raise type(exc)(f"{exc}; choose --theta-mode or a lower --t-design") from None


# ---------------------------------------------------------------- commands


def cmd_tdc(cfg: RunConfig) -> int:
    pump = cfg.pump()
    rows, failed = [], False
    for name in available_sets():
        s = load_sellmeier(name)
        start = time.perf_counter()
        try:
            t = solve_degenerate_collinear_T(CrystalSpec(s, cfg.period_um, cfg.length_mm), pump)
            err = ""
        except NumericalError as exc:
            t, err, failed = float("nan"), str(exc), True
        rows.append({"set": name, "source": s.source, "T_dc_degC": t, "error": err,
                     "selected": name == cfg.coefficient_set, "runtime_s": time.perf_counter() - start})
    width = max(len(r["set"]) for r in rows)
    print(f"{'set':<{width}}  T_dc (degC)  source")
    for r in rows:
        mark = "*" if r["selected"] else " "
        value = f"{r['T_dc_degC']:11.4f}" if not r["error"] else f"{'failed':>11}"
        print(f"{r['set']:<{width}}{mark} {value}  {r['source']}")
    for r in rows:
        if r["error"]:
            print(f"error ({r['set']}): {r['error']}", file=sys.stderr)
        r.pop("runtime_s")
    report = {"metadata": _metadata(cfg, "degC"), "lambda_p_nm": cfg.lambda_p_nm, "results": rows}
    write_json(_out(cfg, "tdc.json"), report)
    return EXIT_NUMERICAL if failed else EXIT_OK


def _sweep_tuning(cfg, crystal, pump):
    p = cfg.params
    theta = _theta_mode(cfg, crystal, pump)
    temps = _grid(p["t_min"], p["t_max"], p["t_step"])
    rows = [(T, *_point(lambda: center_wavelengths(T, theta, crystal, pump, p["plane"]), 2)) for T in temps]
    data = np.array(rows, dtype=float)
    ok = np.all(np.isfinite(data), axis=1)
    if ok.sum() < 2:
        raise NumericalError("fewer than two temperatures solved")
    slope_h = float(np.polyfit(data[ok, 0], data[ok, 1], 1)[0])
    slope_v = float(np.polyfit(data[ok, 0], data[ok, 2], 1)[0])
    meta = _metadata(cfg, "T_degC: degC; lambda: nm", theta_mode_deg=theta,
                     slope_H_nm_per_degC=slope_h, slope_V_nm_per_degC=slope_v)
    write_csv(_out(cfg, "tuning.csv"), ["T_degC", "lambda_H_nm", "lambda_V_nm"], rows, meta)
    print(f"tuning slope: H {slope_h:+.4f} nm/degC, V {slope_v:+.4f} nm/degC at theta = {theta:.4f} deg")


def _sweep_bandwidth(cfg, crystal, pump):
    p = cfg.params
    theta = _theta_mode(cfg, crystal, pump)
    temps = _grid(p["t_min"], p["t_max"], p["t_step"])
    rows = [
        (T, _point(lambda: fwhm(T, theta, "H", crystal, pump, p["plane"])),
         _point(lambda: fwhm(T, theta, "V", crystal, pump, p["plane"])))
        for T in temps
    ]
    meta = _metadata(cfg, "T_degC: degC; fwhm: nm", theta_mode_deg=theta)
    write_csv(_out(cfg, "bandwidth.csv"), ["T_degC", "fwhm_H_nm", "fwhm_V_nm"], rows, meta)
    at = _point(lambda: fwhm(p["t"], theta, "H", crystal, pump, p["plane"]))
    print(f"FWHM (H) at {p['t']} degC: {at:.4f} nm")


def _sweep_angle(cfg, crystal, pump):
    p = cfg.params
    temps = _grid(p["t_min"], p["t_max"], p["t_step"])
    rows = [
        (T, _point(lambda: degenerate_angle(T, "xy", crystal, pump)),
         _point(lambda: degenerate_angle(T, "xz", crystal, pump)),
         _point(lambda: angle_wavelength_slope(T, "xy", crystal, pump)))
        for T in temps
    ]
    meta = _metadata(cfg, "T_degC: degC; theta: deg; slope: deg/nm")
    write_csv(_out(cfg, "angle.csv"), ["T_degC", "theta_xy_deg", "theta_xz_deg", "dtheta_dlambda_xy_deg_per_nm"],
              rows, meta)
    print(f"degenerate angle (xy) at {p['t']} degC: {_point(lambda: degenerate_angle(p['t'], 'xy', crystal, pump)):.4f} deg")


def _sweep_ring(cfg, crystal, pump):
    p = cfg.params
    for pol in ("H", "V"):
        ring = ring_curve(p["t"], pump.degenerate_nm, pol, crystal, pump, p["ring_points"])
        e = ellipticity(ring)
        meta = _metadata(cfg, "y_deg, z_deg: deg (external)", pol=pol, T_degC=p["t"],
                         semi_axis_y_deg=ring.semi_axis_y, semi_axis_z_deg=ring.semi_axis_z, ellipticity=e)
        write_csv(_out(cfg, f"ring_{pol}.csv"), ["y_deg", "z_deg"], zip(ring.y, ring.z), meta)
        print(f"ring {pol} at {p['t']} degC: ellipticity {e:.4f}")


def _sweep_cross_section(cfg, crystal, pump):
    p = cfg.params
    try:
        temps = [float(t) for t in p["temps"].split(",") if t.strip()]
    except ValueError:
        raise InputError(f"temps must be a comma-separated list, got {p['temps']!r}") from None
    filt = default_filter(pump, p["filter_fwhm"], p["filter_shape"])
    if p["filter_center"] is not None:
        filt = type(filt)(p["filter_center"], p["filter_fwhm"], p["filter_shape"])
    profiles = [
        cross_section_scan(T, filt, pol, crystal, pump, (-p["y_max"], p["y_max"]), p["y_step"], p["plane"])
        for T in temps for pol in ("H", "V")
    ]
    for prof in normalize_profiles(profiles):
        meta = _metadata(cfg, "angle_deg: deg (external, along y); intensity: normalized to set peak",
                         pol=prof.pol, T_degC=prof.T, filter_center_nm=filt.center_nm,
                         filter_fwhm_nm=filt.fwhm_nm, peak_angle_deg=peak_angle(prof))
        name = f"cross_section_{prof.pol}_{format(prof.T, '.2f')}.csv"
        write_csv(_out(cfg, name), ["angle_deg", "intensity"], zip(prof.angle_deg, prof.intensity), meta)
        print(f"cross-section {prof.pol} at {prof.T} degC: peak at {peak_angle(prof):.2f} deg")


def _sweep_hom(cfg, crystal, pump):
    p = cfg.params
    phi = parse_phase(p["phi"])
    lam_a = p["lambda_a"] or pump.degenerate_nm
    lam_b = p["lambda_b"] or 1 / (1 / pump.wavelength_nm - 1 / lam_a)
    delays = _grid(p["d_min"], p["d_max"], p["d_step"])
    trace = hom_scan(phi, lam_a, lam_b, p["bandwidth_nm"], p["lp_a"], p["lp_b"], delays, p["envelope"])
    meta = _metadata(cfg, "delay_um: um (path); probability: per pair", phi_rad=phi,
                     lambda_a_nm=lam_a, lambda_b_nm=lam_b)
    write_csv(_out(cfg, "hom.csv"), ["delay_um", "probability"], zip(trace.delay_um, trace.probability), meta)
    print(f"HOM: min {trace.probability.min():.6f}, max {trace.probability.max():.6f}")


def _sweep_stability(cfg, crystal, pump):
    p = cfg.params
    center = p["lambda_center"] or pump.degenerate_nm
    deltas = np.linspace(0.0, p["delta_lambda"], 51)
    rows = []
    for d in deltas:
        r = phase_fluctuation(d, p["m"], p["dl"], center)
        rows.append((d, r.lambda_a_nm, r.lambda_b_nm, r.delta_phi_rad, r.fraction_of_2pi))
    final = phase_fluctuation(p["delta_lambda"], p["m"], p["dl"], center)
    meta = _metadata(cfg, "wavelengths: nm; delta_phi: rad", fraction_of_2pi=final.fraction_of_2pi)
    write_csv(_out(cfg, "stability.csv"),
              ["delta_lambda_nm", "lambda_A_nm", "lambda_B_nm", "delta_phi_rad", "delta_phi_over_2pi"], rows, meta)
    print(f"phase fluctuation: {final.fraction_of_2pi:.5f} x 2pi ({final.delta_phi_rad:.5f} rad)")


SWEEPS = {
    "tuning": _sweep_tuning,
    "bandwidth": _sweep_bandwidth,
    "angle": _sweep_angle,
    "ring": _sweep_ring,
    "cross-section": _sweep_cross_section,
    "hom": _sweep_hom,
    "stability": _sweep_stability,
}


def cmd_sweep(cfg: RunConfig) -> int:
    SWEEPS[cfg.kind](cfg, cfg.crystal(), cfg.pump())
    return EXIT_OK


def cmd_tomo(cfg: RunConfig) -> int:
    p = cfg.params
    if (p["simulate"] is None) == (p["input"] is None):
        raise InputError("tomo needs exactly one of --simulate or --input")
    if p["simulate"] is not None:
        if p["simulate"] == "bell":
            rho_true = pure_density(PHI_PLUS)
        elif p["simulate"] == "werner":
            rho_true = werner_state(p["p"])
        else:
            raise InputError(f"--simulate must be 'bell' or 'werner', got {p['simulate']!r}")
        rec = simulate_counts(rho_true, p["n"], p["noise"], np.random.default_rng(cfg.seed))
        write_tomography_record(_out(cfg, "tomo_counts.txt"), rec, {"config_hash": cfg.config_hash})
    else:
        rec = read_tomography_record(p["input"])
    try:
        result = mle_reconstruct(rec, p["likelihood"], seed=cfg.seed, restarts=p["restarts"], full_output=True)
    except ConvergenceError as exc:
        print(f"diagnostics: {canonical_json(exc.diagnostics or {})}", file=sys.stderr)
        raise
    rho = result.rho
    metrics = {"concurrence": concurrence(rho), "fidelity_phi_plus": fidelity(rho), "purity": purity(rho)}
    report = {
        "metadata": _metadata(cfg, "dimensionless"),
        "rho": density_to_dict(rho),
        "metrics": metrics,
        "fit": {"objective": result.objective, "grad_norm": result.grad_norm, "likelihood": p["likelihood"]},
    }
    write_json(_out(cfg, "tomo.json"), report)
    print(f"concurrence {metrics['concurrence']:.6f}  fidelity {metrics['fidelity_phi_plus']:.6f}  "
          f"purity {metrics['purity']:.6f}")
    return EXIT_OK


def cmd_rates(cfg: RunConfig) -> int:
    p = cfg.params
    if p["input"] is None:
        raise InputError("rates needs --input with label,S_A,S_B,raw,window_ns,P_mW,duration_s rows")
    records = read_coincidence_csv(p["input"])
    arm = LossBudget(p["polarizer"], p["detector"], p["coupling"])
    br = brightness(records, arm, arm)
    sr = spectral_rate(br.pair_rate_khz_per_mw, p["bandwidth_nm"])
    scaled = length_scaling(sr, cfg.length_mm, p["length_to"])
    report = {
        "metadata": _metadata(cfg, "kHz/mW; spectral: kHz/mW/nm"),
        "per_combination_net_khz_per_mw": br.per_combination_khz_per_mw,
        "detected_brightness_khz_per_mw": br.detected_khz_per_mw,
        "crosstalk_khz_per_mw": br.crosstalk_khz_per_mw,
        "pair_rate_khz_per_mw": br.pair_rate_khz_per_mw,
        "pair_rate_is_lower_bound": br.lower_bound,
        "spectral_rate_khz_per_mw_nm": sr,
        "scaled_spectral_rate_khz_per_mw_nm": scaled,
        "scaled_length_mm": p["length_to"],
    }
    write_json(_out(cfg, "rates.json"), report)
    print(f"BR {br.detected_khz_per_mw:.3f} kHz/mW; pair rate {br.pair_rate_khz_per_mw:.2f} kHz/mW"
          f"{' (lower bound)' if br.lower_bound else ''}; spectral {sr:.2f} kHz/mW/nm; "
          f"{p['length_to']:g} mm: {scaled:.1f} kHz/mW/nm")
    return EXIT_OK


COMMANDS = {"tdc": cmd_tdc, "sweep": cmd_sweep, "tomo": cmd_tomo, "rates": cmd_rates}


def _flag(parser, key, kind, help_text=None, **kw):
    parser.add_argument("--" + key.replace("_", "-"), dest=key, type=kind, default=None, help=help_text, **kw)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ppktp", description="PPKTP type-II SPDC design and analysis.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file; flags override its keys")
    common.add_argument("--out", help="output directory (default ppktp-out)")
    common.add_argument("--set", dest="coefficient_set", help="coefficient set name")
    common.add_argument("--lambda-p", "--lambda-p-nm", dest="lambda_p_nm", type=float, help="pump wavelength (nm)")
    _flag(common, "period_um", float, "poling period (um)")
    _flag(common, "length_mm", float, "crystal length (mm)")
    _flag(common, "pump_bandwidth_ghz", float)
    _flag(common, "power_mw", float)
    _flag(common, "seed", int)

    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("tdc", parents=[common], help="degenerate collinear temperature for every coefficient set")

    sw = sub.add_parser("sweep", parents=[common], help="emit CSV curves")
    sw.add_argument("kind", choices=SWEEP_KINDS)
    for key, (kind, _) in PARAMS["sweep"].items():
        _flag(sw, key, kind)

    tm = sub.add_parser("tomo", parents=[common], help="reconstruct a density matrix")
    for key, (kind, _) in PARAMS["tomo"].items():
        _flag(tm, key, kind)

    rt = sub.add_parser("rates", parents=[common], help="brightness and spectral rates from coincidence records")
    for key, (kind, _) in PARAMS["rates"].items():
        _flag(rt, key, kind)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        code = COMMANDS[cfg.command](cfg)
    except (InputError, RecordFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
