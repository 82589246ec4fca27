"""Count-rate bookkeeping and interferometric phase stability."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

EXPECTED = ("HH", "VV")
CROSSTALK = ("HV", "VH")


@dataclass(frozen=True)
class CoincidenceRecord:
    """Rates in Hz, window in s, pump power in mW."""

    singles_a: float
    singles_b: float
    raw: float
    window_s: float
    power_mw: float
    duration_s: float = 1.0

    def __post_init__(self):
        for name in ("singles_a", "singles_b", "raw", "window_s", "power_mw", "duration_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class LossBudget:
    polarizer: float = 1.0
    detector: float = 1.0
    coupling: float = 1.0

    def __post_init__(self):
        for name in ("polarizer", "detector", "coupling"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} efficiency must lie in (0, 1], got {v}")

    @property
    def efficiency(self) -> float:
        return self.polarizer * self.detector * self.coupling


def accidental_rate(singles_a, singles_b, window_s):
    return singles_a * singles_b * window_s


def net_coincidences(rec: CoincidenceRecord) -> float:
    return max(0.0, rec.raw - accidental_rate(rec.singles_a, rec.singles_b, rec.window_s))


@dataclass(frozen=True)
class BrightnessReport:
    detected_khz_per_mw: float
    pair_rate_khz_per_mw: float
    crosstalk_khz_per_mw: float
    per_combination_khz_per_mw: dict
    lower_bound: bool


def brightness(
    records: Mapping[str, CoincidenceRecord], arm_a: LossBudget = LossBudget(), arm_b: LossBudget = LossBudget()
) -> BrightnessReport:
    """Detected brightness from the HH and VV analyzer combinations.

    HV and VH records, when present, are reported as crosstalk and do not
    enter the brightness. The pair rate divides out both arms' efficiencies;
    it is a lower bound while fibre coupling is left at 1.
    """
    per = {}
    for key, rec in records.items():
        if rec.power_mw <= 0:
            raise ValueError(f"record {key!r} has zero pump power")
        per[key] = net_coincidences(rec) / rec.power_mw * 1e-3
    missing = [k for k in EXPECTED if k not in per]
    if missing:
        raise ValueError(f"brightness needs records for {missing}")
    detected = sum(per[k] for k in EXPECTED)
    crosstalk = sum(per.get(k, 0.0) for k in CROSSTALK)
    pair = detected / (arm_a.efficiency * arm_b.efficiency)
    return BrightnessReport(detected, pair, crosstalk, per, arm_a.coupling == 1.0 or arm_b.coupling == 1.0)


def spectral_rate(pair_rate, bandwidth_nm):
    if bandwidth_nm <= 0:
        raise ValueError("bandwidth must be positive")
    return pair_rate / bandwidth_nm


def length_scaling(rate, length_from_mm, length_to_mm):
    """Scale a spectral pair rate with crystal length as L^(3/2)."""
    if length_from_mm <= 0 or length_to_mm <= 0:
        raise ValueError("lengths must be positive")
    return rate * (length_to_mm / length_from_mm) ** 1.5


def nondegenerate_pair(delta_lambda_nm, center_nm):
    """(lambda_A, lambda_B) with lambda_B - lambda_A = delta and 1/lambda_A + 1/lambda_B = 2/center."""
    lp = center_nm / 2
    d = delta_lambda_nm
    lam_a = ((2 * lp - d) + math.sqrt(4 * lp * lp + d * d)) / 2
    return lam_a, lam_a + d


@dataclass(frozen=True)
class PhaseFluctuation:
    delta_phi_rad: float
    fraction_of_2pi: float
    lambda_a_nm: float
    lambda_b_nm: float


def phase_fluctuation(delta_lambda_nm, m: int = 5, dl_um: float = 0.1, center_nm: float = 812.4) -> PhaseFluctuation:
    """Phase noise sqrt(m) |k_A - k_B| dl of the two-path compensator."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if dl_um < 0:
        raise ValueError("dl must be non-negative")
    lam_a, lam_b = nondegenerate_pair(abs(delta_lambda_nm), center_nm)
    dk = 2 * np.pi * abs(1e3 / lam_a - 1e3 / lam_b)
    dphi = math.sqrt(m) * dk * dl_um
    return PhaseFluctuation(float(dphi), float(dphi / (2 * np.pi)), lam_a, lam_b)
