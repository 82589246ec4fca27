"""Spectra of photons collected in a fixed spatial mode.

A photon of polarization ``pol`` observed at external angle ``theta_mode``
has relative spectral intensity sinc^2(dk L / 2), where dk is the
longitudinal phase mismatch with the partner photon in its momentum-conserving
direction and L is the thermally expanded crystal length. The pump is taken
as monochromatic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .dispersion import CrystalSpec
from .errors import ModeDarkError, NoPhaseMatchError
from .phasematch import PumpSpec, mode_mismatch, partner_wavelength

SEARCH_HALF_SPAN_NM = 30.0
DARK_LEVEL = 1e-6


@dataclass(frozen=True)
class SpectralCurve:
    wavelength_nm: np.ndarray
    intensity: np.ndarray
    pol: str
    T: float
    theta_mode: float

    def __post_init__(self):
        if len(self.wavelength_nm) != len(self.intensity):
            raise ValueError("wavelength and intensity lengths differ")


@dataclass(frozen=True)
class FilterSpec:
    """Bandpass filter; ``shape`` is 'gaussian' or 'top-hat'."""

    center_nm: float
    fwhm_nm: float
    shape: str = "gaussian"

    def __post_init__(self):
        if self.fwhm_nm <= 0:
            raise ValueError("filter FWHM must be positive")
        if self.shape not in ("gaussian", "top-hat"):
            raise ValueError(f"unknown filter shape {self.shape!r}")

    def transmission(self, wl_nm):
        x = np.asarray(wl_nm, dtype=float) - self.center_nm
        if self.shape == "gaussian":
            return np.exp(-4 * np.log(2) * (x / self.fwhm_nm) ** 2)
        return (np.abs(x) <= self.fwhm_nm / 2).astype(float)

    def support(self):
        half = 3.0 * self.fwhm_nm if self.shape == "gaussian" else self.fwhm_nm / 2
        return self.center_nm - half, self.center_nm + half


def _sinc2(x):
    return np.sinc(np.asarray(x) / np.pi) ** 2


def spectral_intensity(wl_nm, T, theta_mode_deg, pol, crystal: CrystalSpec, pump: PumpSpec, plane="xy"):
    dk = mode_mismatch(wl_nm, theta_mode_deg, T, pol, crystal, pump, plane)
    return _sinc2(dk * crystal.length_um(T) / 2)


def spectral_curve(
    T, theta_mode_deg, pol, crystal, pump, half_span_nm=2.0, n=2001, plane="xy", center_nm=None
) -> SpectralCurve:
    if center_nm is None:
        center_nm = center_wavelength(T, theta_mode_deg, pol, crystal, pump, plane)
    wl = np.linspace(center_nm - half_span_nm, center_nm + half_span_nm, n)
    inten = spectral_intensity(wl, T, theta_mode_deg, pol, crystal, pump, plane)
    return SpectralCurve(wl, inten / inten.max(), pol, T, theta_mode_deg)


def center_wavelength(T, theta_mode_deg, pol, crystal, pump, plane="xy") -> float:
    """Wavelength of peak intensity for a ``pol`` photon in the mode.

    Where several phase-matched roots exist the one nearest degeneracy wins.
    """
    lam0 = pump.degenerate_nm
    grid = np.linspace(lam0 - SEARCH_HALF_SPAN_NM, lam0 + SEARCH_HALF_SPAN_NM, 1201)
    f = lambda wl: float(mode_mismatch(wl, theta_mode_deg, T, pol, crystal, pump, plane))
    dk = mode_mismatch(grid, theta_mode_deg, T, pol, crystal, pump, plane)
    idx = np.nonzero(np.sign(dk[:-1]) * np.sign(dk[1:]) <= 0)[0]
    if len(idx):
        i = idx[np.argmin(np.abs(grid[idx] - lam0))]
        if dk[i] == 0:
            return float(grid[i])
        return brentq(f, grid[i], grid[i + 1], xtol=1e-9)
    i = int(np.argmin(np.abs(dk)))
    if i in (0, len(grid) - 1):
        raise ModeDarkError(f"mode dark at T = {T} degC: no spectral peak within +/-{SEARCH_HALF_SPAN_NM} nm")
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    best = minimize_scalar(lambda wl: abs(f(wl)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-7})
    peak = float(spectral_intensity(best.x, T, theta_mode_deg, pol, crystal, pump, plane))
    if peak < DARK_LEVEL:
        raise ModeDarkError(f"mode dark at T = {T} degC (peak {peak:.2e})")
    return float(best.x)


def center_wavelengths(T, theta_mode_deg, crystal, pump, plane="xy") -> tuple[float, float]:
    """(lambda_H, lambda_V) for pairs whose H photon peaks in the mode.

    lambda_V is the energy-conserving partner, so the pair always satisfies
    1/lambda_H + 1/lambda_V = 1/lambda_p; the V photon's own peak in the same
    mode differs by a few hundredths of a nm (see ``center_wavelength``).
    """
    lam_h = center_wavelength(T, theta_mode_deg, "H", crystal, pump, plane)
    return lam_h, float(partner_wavelength(lam_h, pump))


def fwhm(T, theta_mode_deg, pol, crystal, pump, plane="xy", max_half_width_nm=10.0) -> float:
    """Full width at half maximum, from bisection on both half-maximum crossings."""
    c = center_wavelength(T, theta_mode_deg, pol, crystal, pump, plane)
    peak = float(spectral_intensity(c, T, theta_mode_deg, pol, crystal, pump, plane))
    g = lambda wl: float(spectral_intensity(wl, T, theta_mode_deg, pol, crystal, pump, plane)) - peak / 2
    edges = []
    for direction in (-1.0, 1.0):
        step, far = 0.01, c
        while g(far) > 0:
            far = far + direction * step
            step *= 1.5
            if abs(far - c) > max_half_width_nm:
                raise NoPhaseMatchError("half-maximum crossing not found")
        edges.append(brentq(g, min(c, far), max(c, far), xtol=1e-10))
    return edges[1] - edges[0]


def _temperatures_that_solve(temps, fn):
    ok_t, vals = [], []
    for T in temps:
        try:
            vals.append(fn(T))
            ok_t.append(T)
        except NoPhaseMatchError:
            continue
    return np.asarray(ok_t, dtype=float), vals


def tuning_curve(temps, theta_mode_deg, crystal, pump, plane="xy"):
    """Arrays (T, lambda_H, lambda_V); temperatures without a solution are dropped."""
    ts, pairs = _temperatures_that_solve(temps, lambda T: center_wavelengths(T, theta_mode_deg, crystal, pump, plane))
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    return ts, pairs[:, 0], pairs[:, 1]


def tuning_slope(temps, theta_mode_deg, crystal, pump, plane="xy") -> dict[str, float]:
    """Least-squares slope (nm/degC) of each branch's centre wavelength against T."""
    ts, lam_h, lam_v = tuning_curve(temps, theta_mode_deg, crystal, pump, plane)
    if len(ts) < 5:
        raise ValueError(f"need at least 5 solvable temperatures, got {len(ts)}")
    return {"H": float(np.polyfit(ts, lam_h, 1)[0]), "V": float(np.polyfit(ts, lam_v, 1)[0])}


def bandwidth_vs_T(temps, theta_mode_deg, crystal, pump, plane="xy") -> dict[str, tuple[np.ndarray, np.ndarray]]:
    out = {}
    for pol in ("H", "V"):
        ts, w = _temperatures_that_solve(temps, lambda T: fwhm(T, theta_mode_deg, pol, crystal, pump, plane))
        out[pol] = (ts, np.asarray(w, dtype=float))
    return out


def branch_crossing_temperature(theta_mode_deg, crystal, pump, bracket, plane="xy") -> float:
    """Temperature at which the H and V centre wavelengths coincide."""
    f = lambda T: (lambda p: p[0] - p[1])(center_wavelengths(T, theta_mode_deg, crystal, pump, plane))
    return brentq(f, *bracket, xtol=1e-8)


def curve_fwhm(wl, inten) -> float:
    """FWHM of a sampled single-peaked curve by linear interpolation of the crossings."""
    wl = np.asarray(wl, dtype=float)
    y = np.asarray(inten, dtype=float)
    half = y.max() / 2
    i = int(np.argmax(y))
    left = i
    while left > 0 and y[left] >= half:
        left -= 1
    right = i
    while right < len(y) - 1 and y[right] >= half:
        right += 1
    if y[left] >= half or y[right] >= half:
        raise ValueError("curve does not fall below half maximum on both sides")
    xl = np.interp(half, [y[left], y[left + 1]], [wl[left], wl[left + 1]])
    xr = np.interp(half, [y[right], y[right - 1]], [wl[right], wl[right - 1]])
    return float(xr - xl)


def convolve_with_filter(curve: SpectralCurve, tf: FilterSpec) -> SpectralCurve:
    """Spectrum seen through a scanned filter, normalized to unit peak.

    The curve must be sampled on a uniform grid. A filter narrower than one
    sample acts as the identity.
    """
    wl = np.asarray(curve.wavelength_nm, dtype=float)
    step = np.diff(wl)
    if len(wl) < 3 or not np.allclose(step, step[0], rtol=1e-6, atol=0):
        raise ValueError("convolution needs a uniformly sampled curve")
    dx = step[0]
    half = int(np.ceil((tf.support()[1] - tf.center_nm) / dx))
    offsets = np.arange(-half, half + 1) * dx
    kernel = FilterSpec(0.0, tf.fwhm_nm, tf.shape).transmission(offsets)
    if kernel.sum() == 0 or tf.fwhm_nm < dx:
        kernel = np.array([1.0])
    if len(kernel) > len(wl):
        raise ValueError("filter wider than the sampled curve")
    kernel = kernel / kernel.sum()
    out = np.convolve(curve.intensity, kernel, mode="same")
    return SpectralCurve(wl.copy(), out / out.max(), curve.pol, curve.T, curve.theta_mode)
