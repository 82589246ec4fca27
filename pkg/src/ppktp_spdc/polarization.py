"""Jones calculus for the compensator and analyzers, and the two-photon polarization state.

Basis order is (H, V) for one photon and (HH, HV, VH, VV) for pairs, with the
first letter belonging to mode A. Path delays are in micrometres of free-space
optical path; a delay ``d`` gives the two-photon term the phase
2*pi*(1/lambda_A - 1/lambda_B)*d.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dispersion import CrystalSpec, group_index

RETARDANCE = {"HWP": np.pi, "QWP": np.pi / 2}
ENVELOPES = ("gaussian", "sinc2")


def rotation(angle_rad):
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    return np.array([[c, s], [-s, c]])


def waveplate(kind: str, angle_deg: float) -> np.ndarray:
    """Retarder with its fast axis at ``angle_deg`` from H."""
    try:
        gamma = RETARDANCE[kind]
    except KeyError:
        raise ValueError(f"kind must be 'HWP' or 'QWP', got {kind!r}") from None
    a = np.radians(angle_deg)
    core = np.diag([np.exp(-0.5j * gamma), np.exp(0.5j * gamma)])
    return rotation(-a) @ core @ rotation(a)


def polarizer(angle_deg: float) -> np.ndarray:
    v = analyzer_state(angle_deg)
    return np.outer(v, v.conj())


def analyzer_state(angle_deg: float) -> np.ndarray:
    a = np.radians(angle_deg)
    return np.array([np.cos(a), np.sin(a)], dtype=complex)


def phase_shifter_matrix(hwp_angle_deg: float) -> np.ndarray:
    """QWP(45) . HWP(angle) . QWP(45); diagonal in (H, V)."""
    q = waveplate("QWP", 45.0)
    return q @ waveplate("HWP", hwp_angle_deg) @ q


def phase_shifter(hwp_angle_deg: float) -> float:
    """Relative V-to-H phase of the QWP-HWP-QWP shifter, wrapped to [0, 2*pi).

    Equals pi + 4*angle (radians), so a 22.5 deg turn of the HWP adds pi/2.
    """
    m = phase_shifter_matrix(hwp_angle_deg)
    return float(np.mod(np.angle(m[1, 1] / m[0, 0]), 2 * np.pi))


def hwp_angle_for_phase(phi: float) -> float:
    """HWP angle (deg, in [0, 90)) giving relative phase ``phi``."""
    return float(np.mod(np.degrees((phi - np.pi) / 4), 90.0))


@dataclass(frozen=True)
class TwoPhotonState:
    amplitudes: np.ndarray
    lambda_a: float
    lambda_b: float
    bandwidth_nm: float
    delay_um: float = 0.0

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (4,) or abs(np.linalg.norm(amp) - 1) > 1e-12:
            raise ValueError("amplitudes must be a unit 4-vector")

    @property
    def phi(self) -> float:
        return float(np.angle(self.amplitudes[3] / self.amplitudes[0]))

    def density_matrix(self, envelope: str = "gaussian") -> np.ndarray:
        """Polarization density matrix after tracing out timing; HH-VV coherence shrinks with delay."""
        return two_photon_density(self.phi, self.lambda_a, self.lambda_b, self.bandwidth_nm, self.delay_um, envelope)


def output_state(phi, lambda_a, lambda_b, bandwidth_nm, delay_um=0.0) -> TwoPhotonState:
    """(|HH> + e^{i phi}|VV>)/sqrt(2) with its wavelength and timing labels."""
    amp = np.array([1, 0, 0, np.exp(1j * phi)], dtype=complex) / np.sqrt(2)
    return TwoPhotonState(amp, lambda_a, lambda_b, bandwidth_nm, delay_um)


def compensator_delay(T, crystal: CrystalSpec, wavelength_nm: float = 812.4) -> float:
    """ODL offset (um) cancelling the H/V group delay of the crystal: (n_g,y - n_g,z) L.

    Negative for KTP: the ODL must shorten the path of the mode-b photon
    that left the crystal H polarized.
    """
    wl = wavelength_nm * 1e-3
    s = crystal.sellmeier
    return float((group_index("y", wl, T, s) - group_index("z", wl, T, s)) * crystal.length_um(T))


def residual_delay(odl_um, T, crystal, wavelength_nm=812.4):
    """Delay between the HH and VV terms for an ODL set to ``odl_um``."""
    return np.asarray(odl_um, dtype=float) - compensator_delay(T, crystal, wavelength_nm)


def coherence_envelope(delay_um, lambda_center_nm, bandwidth_nm, envelope="gaussian"):
    """|g1| of a single-photon spectrum of FWHM ``bandwidth_nm`` as a function of path delay.

    gaussian: Gaussian power spectrum. sinc2: sinc^2 power spectrum (triangle
    in delay).
    """
    if bandwidth_nm <= 0:
        raise ValueError("bandwidth must be positive")
    d = np.asarray(delay_um, dtype=float)
    dnu = bandwidth_nm / lambda_center_nm**2 * 1e3  # FWHM in 1/um
    if envelope == "gaussian":
        return np.exp(-((np.pi * dnu * d) ** 2) / (4 * np.log(2)))
    if envelope == "sinc2":
        # FWHM of sinc^2(pi nu / nu0) is 0.8859 nu0; its transform is a triangle of half-base 1/nu0
        half_base = 0.885892941378904 / dnu
        return np.clip(1 - np.abs(d) / half_base, 0, None)
    raise ValueError(f"envelope must be one of {ENVELOPES}")


def beat_wavenumber(lambda_a_nm, lambda_b_nm) -> float:
    """2*pi*(1/lambda_A - 1/lambda_B) in 1/um."""
    return 2 * np.pi * (1e3 / lambda_a_nm - 1e3 / lambda_b_nm)


def two_photon_density(phi, lambda_a, lambda_b, bandwidth_nm, delay_um, envelope="gaussian") -> np.ndarray:
    lam_c = 2 / (1 / lambda_a + 1 / lambda_b)
    gamma = float(coherence_envelope(delay_um, lam_c, bandwidth_nm, envelope))
    coh = 0.5 * gamma * np.exp(-1j * (phi + beat_wavenumber(lambda_a, lambda_b) * delay_um))
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[0, 3] = coh
    rho[3, 0] = np.conj(coh)
    return rho


def coincidence_probability(rho, lp_a_deg, lp_b_deg) -> float:
    proj = np.kron(polarizer(lp_a_deg), polarizer(lp_b_deg))
    return float(np.real(np.trace(rho @ proj)))


@dataclass(frozen=True)
class HomTrace:
    delay_um: np.ndarray
    probability: np.ndarray
    phi: float
    envelope: str


def hom_scan(
    phi, lambda_a, lambda_b, bandwidth_nm, lp_a_deg, lp_b_deg, delays_um, envelope="gaussian"
) -> HomTrace:
    """Coincidence probability per pair behind linear analyzers as the delay is scanned.

    P(d) = P_dist - cos(phi + dk d) * g(d) * P_int, with P_dist the
    distinguishable-photon baseline and P_int the analyzer-dependent
    interference weight.
    """
    d = np.asarray(delays_um, dtype=float)
    a, b = np.radians(lp_a_deg), np.radians(lp_b_deg)
    ca, sa, cb, sb = np.cos(a), np.sin(a), np.cos(b), np.sin(b)
    p_dist = 0.5 * ((ca * cb) ** 2 + (sa * sb) ** 2)
    p_int = -ca * cb * sa * sb
    lam_c = 2 / (1 / lambda_a + 1 / lambda_b)
    g = coherence_envelope(d, lam_c, bandwidth_nm, envelope)
    phase = np.mod(phi, 2 * np.pi) + beat_wavenumber(lambda_a, lambda_b) * d
    return HomTrace(d, p_dist - np.cos(phase) * g * p_int, phi, envelope)


def correlation_scan(rho, lp_a_deg, lp_b_deg) -> np.ndarray:
    """Coincidence probability vs LP_B at fixed LP_A for density matrix ``rho``."""
    rho = np.asarray(rho, dtype=complex)
    return np.array([coincidence_probability(rho, lp_a_deg, b) for b in np.atleast_1d(lp_b_deg)])


def correlation_visibility(rho, lp_a_deg, n=721) -> float:
    """(max - min)/(max + min) over a full LP_B turn."""
    c = correlation_scan(rho, lp_a_deg, np.linspace(0, 180, n))
    return float((c.max() - c.min()) / (c.max() + c.min()))


def simulate_trace_counts(probability, pairs, accidentals=0.0, rng=None) -> np.ndarray:
    """Poisson counts for a probability trace with a flat accidental background."""
    rng = np.random.default_rng(rng)
    mean = np.asarray(probability, dtype=float) * pairs + accidentals
    return rng.poisson(mean)
