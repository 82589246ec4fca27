import numpy as np
import pytest
from scipy.optimize import brentq

from ppktp_spdc.dispersion import CrystalSpec
from ppktp_spdc.errors import ModeDarkError
from ppktp_spdc.phasematch import degenerate_temperature_for_angle, mode_mismatch
from ppktp_spdc.spectrum import (
    FilterSpec,
    SpectralCurve,
    bandwidth_vs_T,
    branch_crossing_temperature,
    center_wavelength,
    center_wavelengths,
    convolve_with_filter,
    curve_fwhm,
    fwhm,
    spectral_curve,
    spectral_intensity,
    tuning_curve,
    tuning_slope,
)


def _gauss_curve(center, width, lo=805.0, hi=820.0, n=15001):
    wl = np.linspace(lo, hi, n)
    return SpectralCurve(wl, np.exp(-4 * np.log(2) * ((wl - center) / width) ** 2), "H", 95.0, 0.0)


def test_unit_intensity_at_phase_match(crystal, pump, theta95):
    lam = center_wavelength(95.0, theta95, "H", crystal, pump)
    assert spectral_intensity(lam, 95.0, theta95, "H", crystal, pump) == pytest.approx(1.0, abs=1e-9)


def test_first_sinc_zero(crystal, pump, theta95):
    L = crystal.length_um(95.0)
    x = lambda wl: float(mode_mismatch(wl, theta95, 95.0, "H", crystal, pump)) * L / 2
    lam0 = center_wavelength(95.0, theta95, "H", crystal, pump)
    edge = brentq(lambda wl: abs(x(wl)) - np.pi, lam0, lam0 + 2.0, xtol=1e-13)
    assert spectral_intensity(edge, 95.0, theta95, "H", crystal, pump) < 1e-12


def test_intensity_in_unit_interval(crystal, pump, theta95):
    wl = np.linspace(800, 825, 2001)
    inten = spectral_intensity(wl, 95.0, theta95, "V", crystal, pump)
    assert np.all((inten >= 0) & (inten <= 1))


def test_degenerate_center_wavelengths(crystal, pump, theta95):
    lh, lv = center_wavelengths(95.0, theta95, crystal, pump)
    assert abs(lh - 812.4) <= 0.2 and abs(lv - 812.4) <= 0.2


@pytest.mark.parametrize("T", [60.0, 85.0, 110.0])
def test_center_pairs_conserve_energy(crystal, pump, theta95, T):
    lh, lv = center_wavelengths(T, theta95, crystal, pump)
    assert abs(1 / lh + 1 / lv - 1 / pump.wavelength_nm) * pump.wavelength_nm < 1e-12


@pytest.mark.parametrize("pol", ["H", "V"])
def test_center_matches_grid_argmax(crystal, pump, theta95, pol):
    lam = center_wavelength(80.0, theta95, pol, crystal, pump)
    grid = np.arange(lam - 0.5, lam + 0.5, 0.001)
    best = grid[np.argmax(spectral_intensity(grid, 80.0, theta95, pol, crystal, pump))]
    assert abs(best - lam) <= 1e-3


def test_mode_dark_without_phase_match(sellmeier, pump):
    far = CrystalSpec(sellmeier, period_um=9.0)
    with pytest.raises(ModeDarkError, match="mode dark"):
        center_wavelength(95.0, 1.0, "H", far, pump)


def test_degenerate_fwhm(crystal, pump, theta95):
    assert abs(fwhm(95.0, theta95, "H", crystal, pump) - 0.553) <= 0.1


@pytest.mark.parametrize("pol", ["H", "V"])
def test_bisection_fwhm_matches_grid(crystal, pump, theta95, pol):
    width = fwhm(70.0, theta95, pol, crystal, pump)
    curve = spectral_curve(70.0, theta95, pol, crystal, pump, half_span_nm=1.5, n=30001)
    assert abs(curve_fwhm(curve.wavelength_nm, curve.intensity) - width) / width < 0.005


def test_bandwidth_decreases_with_temperature(crystal, pump, theta95):
    bw = bandwidth_vs_T(np.arange(42.0, 123.0, 10.0), theta95, crystal, pump)
    for pol in ("H", "V"):
        assert np.all(np.diff(bw[pol][1]) < 0)


def test_tuning_slope_magnitude_and_signs(crystal, pump, theta95):
    slopes = tuning_slope(np.arange(42.0, 123.0, 2.0), theta95, crystal, pump)
    assert abs(abs(slopes["H"]) - 0.23) <= 0.03
    assert abs(abs(slopes["V"]) - 0.23) <= 0.03
    assert slopes["H"] * slopes["V"] < 0


def test_tuning_slope_needs_five_points(crystal, pump, theta95):
    with pytest.raises(ValueError, match="at least 5"):
        tuning_slope([60.0, 70.0, 80.0], theta95, crystal, pump)


def test_tuning_curve_linear_over_40_degrees(crystal, pump, theta95):
    ts, lh, lv = tuning_curve(np.arange(60.0, 100.1, 2.0), theta95, crystal, pump)
    for lam in (lh, lv):
        resid = lam - np.polyval(np.polyfit(ts, lam, 1), ts)
        assert np.sqrt(np.mean(resid**2)) < 0.02 * np.ptp(lam)
    assert np.allclose(1 / lh + 1 / lv, 1 / pump.wavelength_nm, rtol=1e-12)


def test_branches_cross_once_at_degenerate_temperature(crystal, pump, theta95):
    ts, lh, lv = tuning_curve(np.arange(42.0, 123.0, 1.0), theta95, crystal, pump)
    signs = np.sign(lh - lv)
    assert np.count_nonzero(np.diff(signs[signs != 0])) == 1
    t_cross = branch_crossing_temperature(theta95, crystal, pump, (80.0, 110.0))
    assert abs(t_cross - degenerate_temperature_for_angle(theta95, "xy", crystal, pump)) < 0.05


def test_convolution_of_gaussians_adds_in_quadrature():
    out = convolve_with_filter(_gauss_curve(812.4, 0.553), FilterSpec(0.0, 1.82))
    assert curve_fwhm(out.wavelength_nm, out.intensity) == pytest.approx(np.hypot(0.553, 1.82), rel=1e-3)
    assert out.intensity.max() == 1.0


def test_model_spectrum_through_broad_filter(crystal, pump, theta95):
    curve = spectral_curve(95.0, theta95, "H", crystal, pump, half_span_nm=8.0, n=16001)
    out = convolve_with_filter(curve, FilterSpec(0.0, 1.82))
    apparent = curve_fwhm(out.wavelength_nm, out.intensity)
    assert 1.82 < apparent < 2.11 + 0.1


def test_delta_filter_is_identity():
    curve = _gauss_curve(812.4, 0.553)
    out = convolve_with_filter(curve, FilterSpec(0.0, 1e-6))
    assert np.array_equal(out.intensity, curve.intensity)


def test_convolution_commutes_with_shift():
    step = 0.001
    shift = 300
    a = convolve_with_filter(_gauss_curve(811.0, 0.553), FilterSpec(0.0, 1.0))
    b = convolve_with_filter(_gauss_curve(811.0 + shift * step, 0.553), FilterSpec(0.0, 1.0))
    assert np.allclose(a.intensity[1000:-1000], b.intensity[1000 + shift : -1000 + shift], atol=1e-9)


def test_convolution_rejects_bad_input():
    wl = np.array([1.0, 2.0, 4.0, 5.0])
    with pytest.raises(ValueError, match="uniformly"):
        convolve_with_filter(SpectralCurve(wl, np.ones(4), "H", 0, 0), FilterSpec(0.0, 1.0))
    with pytest.raises(ValueError, match="wider"):
        convolve_with_filter(_gauss_curve(812.4, 0.5, 811, 813, 201), FilterSpec(0.0, 5.0))


def test_filter_spec_validation():
    with pytest.raises(ValueError):
        FilterSpec(812.0, 0.0)
    with pytest.raises(ValueError):
        FilterSpec(812.0, 1.0, "lorentzian")
    tophat = FilterSpec(812.0, 2.0, "top-hat")
    assert tophat.transmission(812.9) == 1.0 and tophat.transmission(813.1) == 0.0
