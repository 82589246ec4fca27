"""Ring images on the transverse (yz) plane and filtered 1-D cross-sections.

Only the two principal planes are solved exactly; the ring between them is the
ellipse through the four principal-plane crossings.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dispersion import CrystalSpec
from .errors import NoPhaseMatchError
from .phasematch import PumpSpec, noncollinear_emission_angle
from .spectrum import FilterSpec, spectral_intensity

IF_OFFSET_NM = 0.07


@dataclass(frozen=True)
class RingCurve:
    y: np.ndarray
    z: np.ndarray
    T: float
    wavelength_nm: float
    pol: str
    semi_axis_y: float = 0.0
    semi_axis_z: float = 0.0


@dataclass(frozen=True)
class CrossSection:
    angle_deg: np.ndarray
    intensity: np.ndarray
    T: float
    pol: str


def default_filter(pump: PumpSpec, fwhm_nm: float = 3.0, shape: str = "gaussian") -> FilterSpec:
    """Interference filter sitting 0.07 nm to the red of degeneracy."""
    return FilterSpec(pump.degenerate_nm + IF_OFFSET_NM, fwhm_nm, shape)


def plane_angle(T, wavelength_nm, pol, plane, crystal, pump) -> float:
    """Unsigned external angle of a ``pol`` photon at ``wavelength_nm`` on ``plane`` (deg)."""
    pt = noncollinear_emission_angle(wavelength_nm, T, plane, crystal, pump, signal=pol)
    return abs(pt.theta_h if pol == "H" else pt.theta_v)


def ring_curve(T, wavelength_nm, pol, crystal: CrystalSpec, pump: PumpSpec, n_points: int = 72) -> RingCurve:
    a = plane_angle(T, wavelength_nm, pol, "xy", crystal, pump)
    b = plane_angle(T, wavelength_nm, pol, "xz", crystal, pump)
    phi = np.linspace(0, 2 * np.pi, n_points, endpoint=False)
    return RingCurve(a * np.cos(phi), b * np.sin(phi), T, wavelength_nm, pol, a, b)


def ellipticity(ring: RingCurve) -> float:
    """sqrt(1 - (b/a)^2) of the origin-centred conic A y^2 + B yz + C z^2 = 1 fitted by least squares."""
    y = np.asarray(ring.y, dtype=float)
    z = np.asarray(ring.z, dtype=float)
    if len(y) < 8:
        raise ValueError("ellipse fit needs at least 8 points")
    if np.max(np.hypot(y, z)) < 1e-12:
        raise ValueError("no ellipse: ring has zero radius")
    design = np.column_stack([y**2, y * z, z**2])
    (A, B, C), *_ = np.linalg.lstsq(design, np.ones_like(y), rcond=None)
    w = np.linalg.eigvalsh(np.array([[A, B / 2], [B / 2, C]]))
    if np.any(w <= 0):
        raise ValueError("no ellipse: fitted conic is not an ellipse")
    semi = 1 / np.sqrt(w)
    a, b = semi.max(), semi.min()
    return float(np.sqrt(max(0.0, 1 - (b / a) ** 2)))


def _wavelength_grid(filt: FilterSpec, crystal, pump):
    lo, hi = filt.support()
    step = min(filt.fwhm_nm / 20, 0.01)
    n = int(np.ceil((hi - lo) / step)) + 1
    return np.linspace(lo, hi, n)


def cross_section_scan(
    T, filt: FilterSpec, pol, crystal: CrystalSpec, pump: PumpSpec, y_range=(-3.0, 3.0), step=0.02, plane="xy"
) -> CrossSection:
    """Single-photon counts along the y axis behind a bandpass filter.

    Each point is the filter-weighted mean of the sinc^2 spectral intensity,
    so values lie in [0, 1] and are comparable between temperatures. Use
    ``normalize_profiles`` for unit peak across a set.
    """
    n = int(round((y_range[1] - y_range[0]) / step)) + 1
    angles = y_range[0] + step * np.arange(n)
    wl = _wavelength_grid(filt, crystal, pump)
    weights = filt.transmission(wl)
    inten = spectral_intensity(wl[None, :], T, np.abs(angles)[:, None], pol, crystal, pump, plane)
    profile = inten @ weights / weights.sum()
    return CrossSection(angles, profile, T, pol)


def normalize_profiles(profiles: list[CrossSection]) -> list[CrossSection]:
    peak = max(float(np.max(p.intensity)) for p in profiles)
    if peak <= 0:
        return profiles
    return [CrossSection(p.angle_deg, p.intensity / peak, p.T, p.pol) for p in profiles]


def peak_angle(profile: CrossSection, positive: bool = True) -> float:
    mask = profile.angle_deg >= 0 if positive else profile.angle_deg <= 0
    a = profile.angle_deg[mask]
    return float(a[np.argmax(profile.intensity[mask])])


def ellipticity_vs_T(temps, crystal, pump, pol="H"):
    out = []
    for T in temps:
        try:
            out.append(ellipticity(ring_curve(T, pump.degenerate_nm, pol, crystal, pump)))
        except (NoPhaseMatchError, ValueError):
            out.append(float("nan"))
    return np.asarray(out)
