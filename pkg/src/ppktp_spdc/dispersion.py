"""Temperature-dependent principal indices and thermal expansion of KTP.

Each coefficient set lives in ``data/<name>.json``. The room-temperature index
of an axis is

    n0(l)^2 = A + sum_i B_i / (1 - C_i / l^2) + sum_j P_j / (l^2 - Q_j) - D l^2

with ``l`` the vacuum wavelength in micrometres, and the temperature
correction is

    n(l, T) = n0(l) + n1(l) dT + n2(l) dT^2,   nk(l) = sum_m c_m / l^m

where ``dT`` is measured from the axis' thermo-optic reference temperature.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import DispersionRangeError

AXES = ("x", "y", "z")
DEFAULT_SET = "fan-fradkin-emanueli"
GROUP_INDEX_STEP_UM = 1e-4


@dataclass(frozen=True)
class AxisDispersion:
    A: float
    resonances: tuple[tuple[float, float], ...] = ()
    poles: tuple[tuple[float, float], ...] = ()
    D: float = 0.0
    dn1: tuple[float, ...] = ()
    dn2: tuple[float, ...] = ()
    thermo_t_ref_c: float | None = None

    def bare_index(self, wl_um):
        l2 = np.asarray(wl_um, dtype=float) ** 2
        n2 = self.A - self.D * l2
        for b, c in self.resonances:
            n2 = n2 + b / (1.0 - c / l2)
        for p, q in self.poles:
            n2 = n2 + p / (l2 - q)
        return np.sqrt(n2)

    def thermal_terms(self, wl_um):
        inv = 1.0 / np.asarray(wl_um, dtype=float)
        n1 = sum(c * inv**m for m, c in enumerate(self.dn1)) if self.dn1 else 0.0 * inv
        n2 = sum(c * inv**m for m, c in enumerate(self.dn2)) if self.dn2 else 0.0 * inv
        return n1, n2


@dataclass(frozen=True)
class SellmeierSet:
    """Dispersion and thermal expansion data from one combination of sources."""

    name: str
    source: str
    axes: dict[str, AxisDispersion]
    t_ref_c: float = 25.0
    alpha: float = 0.0
    beta: float = 0.0
    valid_um: tuple[float, float] = (0.39, 1.6)

    def without_thermo_optics(self) -> "SellmeierSet":
        axes = {k: replace(a, dn1=(), dn2=()) for k, a in self.axes.items()}
        return replace(self, axes=axes)


@dataclass(frozen=True)
class CrystalSpec:
    """Periodically poled crystal; ``period_um`` and ``length_mm`` are given at ``t_ref_c``."""

    sellmeier: SellmeierSet
    period_um: float = 10.0
    length_mm: float = 10.0

    def __post_init__(self):
        if self.period_um <= 0 or self.length_mm <= 0:
            raise ValueError("poling period and crystal length must be positive")

    @property
    def t_ref_c(self) -> float:
        return self.sellmeier.t_ref_c

    def grating_k(self, T):
        """Grating wavenumber 2*pi/Lambda(T) in 1/um."""
        return 2 * np.pi / (self.period_um * thermal_scale(T, self.sellmeier))

    def length_um(self, T):
        return self.length_mm * 1e3 * thermal_scale(T, self.sellmeier)


def _axis_from_dict(d: dict) -> AxisDispersion:
    return AxisDispersion(
        A=float(d["A"]),
        resonances=tuple((float(b), float(c)) for b, c in d.get("resonances", ())),
        poles=tuple((float(p), float(q)) for p, q in d.get("poles", ())),
        D=float(d.get("D", 0.0)),
        dn1=tuple(float(c) for c in d.get("dn1", ())),
        dn2=tuple(float(c) for c in d.get("dn2", ())),
        thermo_t_ref_c=d.get("thermo_t_ref_c"),
    )


def sellmeier_from_dict(d: dict) -> SellmeierSet:
    missing = {"name", "source", "axes"} - d.keys()
    if missing:
        raise ValueError(f"coefficient file lacks keys: {sorted(missing)}")
    exp = d.get("expansion", {})
    lo, hi = d.get("valid_um", (0.39, 1.6))
    return SellmeierSet(
        name=d["name"],
        source=d["source"],
        axes={ax: _axis_from_dict(d["axes"][ax]) for ax in AXES},
        t_ref_c=float(d.get("t_ref_c", 25.0)),
        alpha=float(exp.get("alpha", 0.0)),
        beta=float(exp.get("beta", 0.0)),
        valid_um=(float(lo), float(hi)),
    )


def available_sets() -> list[str]:
    files = resources.files(__package__).joinpath("data").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".json"))


@lru_cache(maxsize=None)
def load_sellmeier(name: str = DEFAULT_SET) -> SellmeierSet:
    names = available_sets()
    if name not in names:
        raise KeyError(f"unknown coefficient set {name!r}; available: {', '.join(names)}")
    text = resources.files(__package__).joinpath("data").joinpath(f"{name}.json").read_text()
    return sellmeier_from_dict(json.loads(text))


def _check_range(wl_um, s: SellmeierSet, margin: float = 0.0):
    lo, hi = s.valid_um
    wl = np.asarray(wl_um, dtype=float)
    if np.any(wl - margin < lo) or np.any(wl + margin > hi) or np.any(~np.isfinite(wl)):
        raise DispersionRangeError(
            f"wavelength {np.min(wl):.6g}-{np.max(wl):.6g} um outside the valid range "
            f"[{lo + margin:.6g}, {hi - margin:.6g}] um of coefficient set {s.name!r}"
        )


def refractive_index(axis: str, wl_um, T, s: SellmeierSet):
    """Principal index along ``axis`` at vacuum wavelength ``wl_um`` and temperature ``T`` (deg C)."""
    _check_range(wl_um, s)
    a = s.axes[axis]
    t0 = s.t_ref_c if a.thermo_t_ref_c is None else a.thermo_t_ref_c
    dT = np.asarray(T, dtype=float) - t0
    n1, n2 = a.thermal_terms(wl_um)
    return a.bare_index(wl_um) + n1 * dT + n2 * dT**2


def group_index(axis: str, wl_um, T, s: SellmeierSet, h: float = GROUP_INDEX_STEP_UM):
    """n - l dn/dl with a central difference of step ``h`` (um)."""
    _check_range(wl_um, s, margin=h)
    wl = np.asarray(wl_um, dtype=float)
    dn = (refractive_index(axis, wl + h, T, s) - refractive_index(axis, wl - h, T, s)) / (2 * h)
    return refractive_index(axis, wl, T, s) - wl * dn


def thermal_scale(T, s: SellmeierSet):
    """Length scale factor 1 + alpha dT + beta dT^2 relative to the set's reference temperature."""
    dT = np.asarray(T, dtype=float) - s.t_ref_c
    return 1.0 + s.alpha * dT + s.beta * dT**2


def default_crystal(name: str = DEFAULT_SET, period_um: float = 10.0, length_mm: float = 10.0) -> CrystalSpec:
    return CrystalSpec(load_sellmeier(name), period_um=period_um, length_mm=length_mm)
