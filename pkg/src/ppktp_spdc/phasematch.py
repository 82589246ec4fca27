"""Type-II quasi-phase-matching on the principal planes of PPKTP.

The pump travels along x and is y (H) polarized; the down-converted H photon is
y polarized and the V photon z polarized. On the xy-plane the H photon's field
lies in the plane of propagation, so its index follows the index ellipse
between n_y and n_x; on the xz-plane the same holds for the V photon between
n_z and n_x. Walk-off of the Poynting vector is ignored.

Angles named ``*_int`` are inside the crystal (radians); external angles
follow from Snell's law at an exit face normal to x. Wavelengths are in nm
at the API and in um internally.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dispersion import CrystalSpec, refractive_index
from .errors import NearCollinearViolation, NoEmissionError, NoPhaseMatchError

PLANES = ("xy", "xz")
POLS = ("H", "V")
MAX_INTERNAL_ANGLE = np.radians(3.0)
_FIXED_POINT_ITERS = 12


@dataclass(frozen=True)
class PumpSpec:
    wavelength_nm: float = 406.2
    bandwidth_ghz: float = 0.2
    power_mw: float = 1.0

    def __post_init__(self):
        if self.wavelength_nm <= 0:
            raise ValueError("pump wavelength must be positive")
        if self.bandwidth_ghz < 0 or self.power_mw < 0:
            raise ValueError("pump bandwidth and power must be non-negative")

    @property
    def wavelength_um(self) -> float:
        return self.wavelength_nm * 1e-3

    @property
    def degenerate_nm(self) -> float:
        return 2.0 * self.wavelength_nm


@dataclass(frozen=True)
class PhaseMatchPoint:
    """Signed external angles in degrees; the signal photon is on the positive side."""

    lambda_h: float
    lambda_v: float
    theta_h: float
    theta_v: float
    T: float
    plane: str
    theta_h_int: float = 0.0
    theta_v_int: float = 0.0
    longitudinal_residual: float = 0.0
    transverse_residual: float = 0.0


def partner_wavelength(wl_nm, pump: PumpSpec):
    """Energy conservation: 1/l_p = 1/l_1 + 1/l_2."""
    return 1.0 / (1.0 / pump.wavelength_nm - 1.0 / np.asarray(wl_nm, dtype=float))


def _in_plane_index(n_perp, n_x, theta):
    return 1.0 / np.sqrt(np.cos(theta) ** 2 / n_perp**2 + np.sin(theta) ** 2 / n_x**2)


def mode_index(pol: str, plane: str, wl_um, T, theta_int, crystal: CrystalSpec):
    """Index seen by a down-converted photon travelling at ``theta_int`` from x on ``plane``."""
    s = crystal.sellmeier
    if pol == "H":
        n_y = refractive_index("y", wl_um, T, s)
        if plane == "xz":
            return n_y + 0.0 * theta_int
        return _in_plane_index(n_y, refractive_index("x", wl_um, T, s), theta_int)
    if pol == "V":
        n_z = refractive_index("z", wl_um, T, s)
        if plane == "xy":
            return n_z + 0.0 * theta_int
        return _in_plane_index(n_z, refractive_index("x", wl_um, T, s), theta_int)
    raise ValueError(f"polarization must be 'H' or 'V', got {pol!r}")


def _check_plane(plane):
    if plane not in PLANES:
        raise ValueError(f"plane must be one of {PLANES}, got {plane!r}")


def _other(pol):
    if pol not in POLS:
        raise ValueError(f"polarization must be 'H' or 'V', got {pol!r}")
    return "V" if pol == "H" else "H"


def pump_k(T, crystal: CrystalSpec, pump: PumpSpec):
    wl = pump.wavelength_um
    return 2 * np.pi * refractive_index("y", wl, T, crystal.sellmeier) / wl


def _k(pol, plane, wl_um, T, theta, crystal):
    return 2 * np.pi * mode_index(pol, plane, wl_um, T, theta, crystal) / wl_um


def _angle_for_transverse(q, pol, plane, wl_um, T, crystal):
    """Internal angle at which a photon carries transverse wavenumber ``q``."""
    theta = np.arcsin(np.clip(q / _k(pol, plane, wl_um, T, 0.0, crystal), -1, 1))
    for _ in range(_FIXED_POINT_ITERS):
        theta = np.arcsin(np.clip(q / _k(pol, plane, wl_um, T, theta, crystal), -1, 1))
    return theta


def internal_angle(theta_ext, pol, plane, wl_um, T, crystal):
    """Invert Snell's law sin(ext) = n(int) sin(int); radians in and out."""
    s = np.sin(theta_ext)
    theta = np.arcsin(s / mode_index(pol, plane, wl_um, T, 0.0, crystal))
    for _ in range(_FIXED_POINT_ITERS):
        theta = np.arcsin(s / mode_index(pol, plane, wl_um, T, theta, crystal))
    return theta


def external_angle(theta_int, pol, plane, wl_um, T, crystal):
    n = mode_index(pol, plane, wl_um, T, theta_int, crystal)
    return np.arcsin(np.clip(n * np.sin(theta_int), -1, 1))


def _pair_mismatch(wl_sig_um, theta_sig_int, T, plane, signal, crystal, pump):
    """Longitudinal residual and partner angle for a signal photon at ``theta_sig_int``.

    The partner angle follows from cancelling the transverse wavevector.
    """
    idler = _other(signal)
    wl_idl_um = partner_wavelength(wl_sig_um * 1e3, pump) * 1e-3
    k_sig = _k(signal, plane, wl_sig_um, T, theta_sig_int, crystal)
    q = k_sig * np.sin(theta_sig_int)
    theta_idl = _angle_for_transverse(q, idler, plane, wl_idl_um, T, crystal)
    k_idl = _k(idler, plane, wl_idl_um, T, theta_idl, crystal)
    dk = pump_k(T, crystal, pump) - k_sig * np.cos(theta_sig_int) - k_idl * np.cos(theta_idl) - crystal.grating_k(T)
    return dk, theta_idl, q - k_idl * np.sin(theta_idl)


def mode_mismatch(wl_nm, theta_ext_deg, T, pol, crystal: CrystalSpec, pump: PumpSpec, plane: str = "xy"):
    """Longitudinal QPM residual (1/um) for a ``pol`` photon at a fixed external angle.

    Broadcasts over ``wl_nm`` and ``theta_ext_deg``. The partner photon takes
    whatever direction cancels the transverse momentum.
    """
    _check_plane(plane)
    wl_um = np.asarray(wl_nm, dtype=float) * 1e-3
    theta_ext = np.radians(np.abs(np.asarray(theta_ext_deg, dtype=float)))
    theta_int = internal_angle(theta_ext, pol, plane, wl_um, T, crystal)
    dk, _, _ = _pair_mismatch(wl_um, theta_int, T, plane, pol, crystal, pump)
    return dk


def collinear_mismatch(lambda_h_nm, T, crystal: CrystalSpec, pump: PumpSpec):
    """k_p - k_H - k_V - K with every wavevector along x (1/um)."""
    wl_h = np.asarray(lambda_h_nm, dtype=float) * 1e-3
    wl_v = partner_wavelength(lambda_h_nm, pump) * 1e-3
    s = crystal.sellmeier
    k_h = 2 * np.pi * refractive_index("y", wl_h, T, s) / wl_h
    k_v = 2 * np.pi * refractive_index("z", wl_v, T, s) / wl_v
    return pump_k(T, crystal, pump) - k_h - k_v - crystal.grating_k(T)


def solve_degenerate_collinear_T(crystal: CrystalSpec, pump: PumpSpec, bracket=(20.0, 200.0)) -> float:
    """Temperature at which degenerate collinear emission is phase matched."""
    lam = pump.degenerate_nm
    f = lambda T: float(collinear_mismatch(lam, T, crystal, pump))
    lo, hi = bracket
    if f(lo) * f(hi) > 0:
        raise NoPhaseMatchError(f"no phase match in range {lo}-{hi} degC")
    return brentq(f, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=200)


def noncollinear_emission_angle(
    wavelength_nm: float,
    T: float,
    plane: str,
    crystal: CrystalSpec,
    pump: PumpSpec,
    signal: str = "H",
) -> PhaseMatchPoint:
    """Emission direction of a ``signal`` photon at ``wavelength_nm`` and its partner.

    Raises NoEmissionError when only collinear or no emission is possible and
    NearCollinearViolation when the internal angle would exceed 3 degrees.
    """
    _check_plane(plane)
    idler = _other(signal)
    wl = wavelength_nm * 1e-3
    K = float(crystal.grating_k(T))
    res = lambda th: float(_pair_mismatch(wl, th, T, plane, signal, crystal, pump)[0])
    r0 = res(0.0)
    if abs(r0) < 1e-10 * K:
        theta_sig = 0.0
    elif r0 > 0:
        raise NoEmissionError(
            f"collinear-only or no emission at {wavelength_nm:.4f} nm, T = {T:.3f} degC ({plane}-plane)"
        )
    else:
        if res(MAX_INTERNAL_ANGLE) < 0:
            raise NearCollinearViolation(
                f"near-collinear approximation violated: internal angle exceeds 3 deg "
                f"at {wavelength_nm:.4f} nm, T = {T:.3f} degC"
            )
        theta_sig = brentq(res, 0.0, MAX_INTERNAL_ANGLE, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
    dk, theta_idl, tr = _pair_mismatch(wl, theta_sig, T, plane, signal, crystal, pump)
    wl_idl = float(partner_wavelength(wavelength_nm, pump))
    ext_sig = np.degrees(external_angle(theta_sig, signal, plane, wl, T, crystal))
    ext_idl = -np.degrees(external_angle(theta_idl, idler, plane, wl_idl * 1e-3, T, crystal))
    by_pol = {signal: (wavelength_nm, float(ext_sig), theta_sig), idler: (wl_idl, float(ext_idl), -float(theta_idl))}
    return PhaseMatchPoint(
        lambda_h=by_pol["H"][0],
        lambda_v=by_pol["V"][0],
        theta_h=by_pol["H"][1],
        theta_v=by_pol["V"][1],
        T=T,
        plane=plane,
        theta_h_int=by_pol["H"][2],
        theta_v_int=by_pol["V"][2],
        longitudinal_residual=float(dk),
        transverse_residual=float(tr),
    )


def degenerate_angle(T, plane, crystal, pump) -> float:
    """External degenerate emission angle (deg, >= 0)."""
    return noncollinear_emission_angle(pump.degenerate_nm, T, plane, crystal, pump).theta_h


def degenerate_temperature_for_angle(theta_ext_deg, plane, crystal, pump, bracket=(20.0, 200.0)) -> float:
    """Temperature at which degenerate pairs leave the crystal at ``theta_ext_deg``."""
    t_dc = solve_degenerate_collinear_T(crystal, pump, bracket)

    def f(T):
        try:
            return degenerate_angle(T, plane, crystal, pump) - theta_ext_deg
        except NearCollinearViolation:
            return 10.0
        except NoEmissionError:
            return -theta_ext_deg

    lo = bracket[0]
    if f(lo) < 0:
        raise NoPhaseMatchError(f"angle {theta_ext_deg} deg not reached within {bracket} degC")
    return brentq(f, lo, t_dc, xtol=1e-10)


def _solvable(wl_nm, T, plane, crystal, pump):
    try:
        return noncollinear_emission_angle(wl_nm, T, plane, crystal, pump)
    except NoPhaseMatchError:
        return None


def _symmetric_pair(T, plane, crystal, pump, half_window_nm, shrink=0.8, min_window_nm=1e-3):
    """Solutions at 2 l_p -/+ w for the largest w <= ``half_window_nm`` where both ends emit."""
    lam0 = pump.degenerate_nm
    w = half_window_nm
    while w >= min_window_nm:
        hi = _solvable(lam0 + w, T, plane, crystal, pump)
        lo = _solvable(lam0 - w, T, plane, crystal, pump)
        if hi is not None and lo is not None:
            return lo, hi, w
        w *= shrink
    raise NoEmissionError(f"no non-degenerate solutions around {lam0} nm at T = {T} degC")


def _warn_shrunk(requested, used, T):
    if used < requested:
        warnings.warn(
            f"slope window shrunk from +/-{requested} nm to +/-{used:.4g} nm at T = {T} degC",
            RuntimeWarning,
            stacklevel=3,
        )


def _partner_secant(lo, hi):
    d_theta = lambda p: np.radians(p.theta_h - abs(p.theta_v))
    d_lam = lambda p: p.lambda_h - p.lambda_v
    return float((d_theta(hi) - d_theta(lo)) / (d_lam(hi) - d_lam(lo)) * 1e6)


def partner_angle_slope(
    T, plane, crystal, pump, half_window_nm: float = 5.0, rel_tol: float = 0.02, shrink: float = 0.8
) -> float:
    """d(theta_H - |theta_V|)/d(lambda_H - lambda_V) in urad/nm.

    Symmetric secant over +/-w of the H wavelength around degeneracy, starting
    from w = ``half_window_nm``. The window shrinks (with a warning) until both
    ends emit and the secants over w and w/2 agree to ``rel_tol``, which keeps
    the estimate clear of the curvature near the emission edge.
    """
    lam0 = pump.degenerate_nm
    lo, hi, w = _symmetric_pair(T, plane, crystal, pump, half_window_nm, shrink)
    while True:
        est = _partner_secant(lo, hi)
        hlo, hhi, _ = _symmetric_pair(T, plane, crystal, pump, w / 2, 1.0)
        if abs(est - _partner_secant(hlo, hhi)) <= rel_tol * abs(est) or w < 1e-3:
            _warn_shrunk(half_window_nm, w, T)
            return est
        w *= shrink
        lo = noncollinear_emission_angle(lam0 - w, T, plane, crystal, pump)
        hi = noncollinear_emission_angle(lam0 + w, T, plane, crystal, pump)


def angle_wavelength_slope(T, plane, crystal, pump, h_nm: float = 0.05) -> float:
    """d(theta_H)/d(lambda_H) at the degenerate point, deg/nm (central difference)."""
    lo, hi, w = _symmetric_pair(T, plane, crystal, pump, h_nm)
    _warn_shrunk(h_nm, w, T)
    return float((hi.theta_h - lo.theta_h) / (2 * w))
