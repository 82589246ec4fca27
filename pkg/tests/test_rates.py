import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppktp_spdc.rates import (
    CoincidenceRecord,
    LossBudget,
    accidental_rate,
    brightness,
    length_scaling,
    net_coincidences,
    nondegenerate_pair,
    phase_fluctuation,
    spectral_rate,
)

TAU = 55e-9
S = 33e3


def paper_records(power=1.0, scale=1.0):
    acc = accidental_rate(S * scale, S * scale, TAU)
    nets = {"HH": 2000.0, "VV": 2200.0, "HV": 36.0, "VH": 36.0}
    return {k: CoincidenceRecord(S * scale, S * scale, v * power + acc, TAU, power) for k, v in nets.items()}


def test_accidental_rate():
    assert accidental_rate(S, S, 0.0) == 0.0
    assert accidental_rate(S, S, TAU) == pytest.approx(59.895, abs=1e-3)
    assert accidental_rate(2 * S, S, TAU) == pytest.approx(2 * accidental_rate(S, S, TAU))


def test_net_coincidences():
    acc = accidental_rate(S, S, TAU)
    assert net_coincidences(CoincidenceRecord(S, S, acc, TAU, 1.0)) == 0.0
    recs = paper_records()
    assert net_coincidences(recs["HH"]) / 1e3 == pytest.approx(2.0)
    assert net_coincidences(recs["VV"]) / 1e3 == pytest.approx(2.2)
    nets = [net_coincidences(CoincidenceRecord(S, S, 3000.0, t, 1.0)) for t in np.linspace(0, 2e-6, 50)]
    assert all(a >= b for a, b in zip(nets, nets[1:]))


def test_record_validation():
    with pytest.raises(ValueError):
        CoincidenceRecord(-1.0, S, 10.0, TAU, 1.0)


def test_brightness_chain():
    arm = LossBudget(0.8, 0.4, 1.0)
    br = brightness(paper_records(), arm, arm)
    assert br.detected_khz_per_mw == pytest.approx(4.2, abs=0.1)
    assert br.crosstalk_khz_per_mw == pytest.approx(0.072)
    assert br.pair_rate_khz_per_mw == pytest.approx(41.0, abs=1.0)
    assert br.lower_bound
    sr = spectral_rate(br.pair_rate_khz_per_mw, 0.553)
    assert sr == pytest.approx(74.0, abs=2.0)
    assert length_scaling(sr, 10.0, 25.0) == pytest.approx(293.0, abs=5.0)


def test_lossless_correction_is_identity():
    br = brightness(paper_records())
    assert br.pair_rate_khz_per_mw == br.detected_khz_per_mw


def test_brightness_errors():
    with pytest.raises(ValueError, match="zero pump power"):
        brightness({"HH": CoincidenceRecord(S, S, 100.0, TAU, 0.0), "VV": CoincidenceRecord(S, S, 100.0, TAU, 1.0)})
    with pytest.raises(ValueError, match="needs records"):
        brightness({"HH": paper_records()["HH"]})


def test_loss_budget_bounds():
    for bad in (0.0, 1.2, -0.5):
        with pytest.raises(ValueError):
            LossBudget(bad, 0.4)
    assert LossBudget(0.8, 0.4, 0.5).efficiency == pytest.approx(0.16)


def test_spectral_rate():
    assert spectral_rate(41.0, 1.0) == 41.0
    assert spectral_rate(41.0, 0.25) == pytest.approx(2 * spectral_rate(41.0, 0.5))
    with pytest.raises(ValueError):
        spectral_rate(41.0, 0.0)


def test_length_scaling():
    assert length_scaling(74.0, 10.0, 10.0) == 74.0
    assert length_scaling(length_scaling(74.0, 10.0, 20.0), 20.0, 25.0) == pytest.approx(length_scaling(74.0, 10.0, 25.0))
    with pytest.raises(ValueError):
        length_scaling(74.0, 0.0, 25.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 100.0), st.floats(0.0, 1e-6))
def test_rates_scale_covariant(k, window):
    """Net coincidences and pump power scaled together leave kHz/mW unchanged."""
    def records(scale):
        acc = accidental_rate(S, S, window)
        nets = {"HH": 2000.0, "VV": 2200.0}
        return {key: CoincidenceRecord(S, S, v * scale + acc, window, scale) for key, v in nets.items()}

    base = brightness(records(1.0))
    out = brightness(records(k))
    assert out.detected_khz_per_mw == pytest.approx(base.detected_khz_per_mw, rel=1e-9)


def test_phase_fluctuation_examples():
    r = phase_fluctuation(50.0, 5, 0.1, 812.4)
    assert r.fraction_of_2pi == pytest.approx(0.017, abs=0.001)
    assert r.delta_phi_rad == pytest.approx(2 * np.pi * r.fraction_of_2pi)
    assert phase_fluctuation(0.0, 5, 0.1).delta_phi_rad == 0.0
    assert phase_fluctuation(50.0, 5, 0.0).delta_phi_rad == 0.0


def test_phase_fluctuation_pair_conserves_energy():
    a, b = nondegenerate_pair(50.0, 812.4)
    assert b - a == pytest.approx(50.0)
    assert 1 / a + 1 / b == pytest.approx(2 / 812.4, rel=1e-14)


def test_phase_fluctuation_monotone_and_small_near_degeneracy():
    d = np.linspace(0, 60, 61)
    f = [phase_fluctuation(x, 5, 0.1).fraction_of_2pi for x in d]
    assert all(a < b for a, b in zip(f, f[1:]))
    assert all(x < 0.004 for x, dl in zip(f, d) if dl < 10)
    ms = [phase_fluctuation(50, m, 0.1).delta_phi_rad for m in range(1, 10)]
    assert all(a < b for a, b in zip(ms, ms[1:]))
    dls = [phase_fluctuation(50, 5, x).delta_phi_rad for x in (0.05, 0.1, 0.2)]
    assert dls[0] < dls[1] < dls[2]


def test_phase_fluctuation_preconditions():
    with pytest.raises(ValueError):
        phase_fluctuation(50.0, 0, 0.1)
    with pytest.raises(ValueError):
        phase_fluctuation(50.0, 5, -0.1)
