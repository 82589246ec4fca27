import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppktp_spdc.errors import InvalidDensityMatrixError
from ppktp_spdc.tomography import (
    LABELS,
    PHI_PLUS,
    TomographyRecord,
    _objective,
    concurrence,
    expected_probabilities,
    fidelity,
    linear_reconstruct,
    mle_reconstruct,
    projector_set,
    projector_states,
    pure_density,
    purity,
    random_density_matrix,
    random_local_unitary,
    simulate_counts,
    validate_density_matrix,
    visibility_fit,
    werner_state,
)

BELL = pure_density(PHI_PLUS)


def _assert_physical(rho, tol=1e-10):
    assert np.max(np.abs(rho - rho.conj().T)) < tol
    assert abs(np.trace(rho).real - 1) < tol
    assert np.linalg.eigvalsh(rho).min() > -tol


def test_projector_axioms():
    for p in projector_set():
        assert np.allclose(p @ p, p, atol=1e-12)
        assert abs(np.trace(p) - 1) < 1e-12
        assert np.linalg.matrix_rank(p, tol=1e-10) == 1


def test_projectors_span_operator_space():
    flat = projector_set().reshape(16, 16)
    gram = flat.conj() @ flat.T
    assert np.linalg.matrix_rank(gram) == 16


def test_bell_marginal():
    probs = dict(zip(LABELS, expected_probabilities(BELL)))
    assert probs["HH"] == pytest.approx(0.5, abs=1e-15)


def test_simulate_counts_examples():
    mixed = simulate_counts(np.eye(4) / 4, 1000.0)
    assert np.allclose(mixed.counts, 250.0)
    bell = simulate_counts(BELL, 1000.0)
    assert bell.counts[LABELS.index("HH")] == pytest.approx(500.0)


def test_simulate_counts_rejects_invalid_state():
    with pytest.raises(InvalidDensityMatrixError):
        simulate_counts(np.diag([1.0, 0.5, 0.0, -0.5]), 100)
    with pytest.raises(ValueError):
        simulate_counts(BELL, 100, noise="gaussian")


def test_poisson_mean_within_three_sigma():
    rng = np.random.default_rng(7)
    rho = random_density_matrix(rng)
    n, draws = 500.0, 10_000
    mean = simulate_counts(rho, n).counts
    total = np.zeros(16)
    for _ in range(draws):
        total += simulate_counts(rho, n, "poisson", rng).counts
    sigma = np.sqrt(mean / draws)
    assert np.all(np.abs(total / draws - mean) < 3 * sigma + 1e-12)


def test_record_validation_and_reordering():
    with pytest.raises(ValueError):
        TomographyRecord(np.ones(15))
    with pytest.raises(ValueError):
        TomographyRecord(-np.ones(16))
    counts = np.arange(16.0)
    rec = TomographyRecord(counts[::-1], tuple(reversed(LABELS)))
    assert rec.labels == LABELS
    assert np.array_equal(rec.counts, counts[::-1][::-1])


def test_linear_bell_and_random_round_trip():
    assert fidelity(linear_reconstruct(simulate_counts(BELL, 1e4))) == pytest.approx(1.0, abs=1e-10)
    rng = np.random.default_rng(11)
    for _ in range(100):
        rho = random_density_matrix(rng)
        assert np.linalg.norm(linear_reconstruct(simulate_counts(rho, 1e4)) - rho) < 1e-10


def test_linear_can_go_negative_under_heavy_noise():
    rng = np.random.default_rng(5)
    mins = [np.linalg.eigvalsh(linear_reconstruct(simulate_counts(BELL, 100, "poisson", rng))).min()
            for _ in range(20)]
    assert min(mins) < -1e-3


@pytest.mark.parametrize("likelihood", ["gaussian", "poisson"])
def test_objective_gradient(likelihood):
    rng = np.random.default_rng(2)
    n = simulate_counts(random_density_matrix(rng), 1.0).counts
    n = n / n.sum()
    psi = projector_states()
    t = rng.normal(size=16)
    _, grad = _objective(t, psi, n, likelihood)
    h = 1e-6
    numeric = np.array([
        (_objective(t + h * e, psi, n, likelihood)[0] - _objective(t - h * e, psi, n, likelihood)[0]) / (2 * h)
        for e in np.eye(16)
    ])
    assert np.allclose(grad, numeric, rtol=1e-4, atol=1e-6)


def test_mle_bell_fidelity():
    rho = mle_reconstruct(simulate_counts(BELL, 1e5))
    assert fidelity(rho) >= 1 - 1e-8


def test_mle_random_round_trip():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        rho = random_density_matrix(rng)
        worst = max(worst, np.linalg.norm(mle_reconstruct(simulate_counts(rho, 1e4)) - rho))
    assert worst < 1e-6


def test_linear_and_mle_agree_on_noiseless_input():
    rng = np.random.default_rng(4)
    for _ in range(10):
        rec = simulate_counts(random_density_matrix(rng), 1e4)
        assert np.linalg.norm(linear_reconstruct(rec) - mle_reconstruct(rec)) < 1e-6


@pytest.mark.parametrize("likelihood", ["gaussian", "poisson"])
def test_mle_physical_under_poisson_noise(likelihood):
    rng = np.random.default_rng(9)
    for _ in range(10):
        rec = simulate_counts(BELL, 100, "poisson", rng)
        _assert_physical(mle_reconstruct(rec, likelihood=likelihood, seed=1))


def test_mle_deterministic_for_seed():
    rec = simulate_counts(werner_state(0.8), 200, "poisson", np.random.default_rng(0))
    assert np.array_equal(mle_reconstruct(rec, seed=4), mle_reconstruct(rec, seed=4))


def test_mle_visibility_degraded_bell_matches_table_scale():
    v = 0.975
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[0, 3] = rho[3, 0] = v / 2
    rec = simulate_counts(rho, 5000, "poisson", np.random.default_rng(12))
    assert concurrence(mle_reconstruct(rec)) == pytest.approx(v, abs=0.02)


def test_concurrence_examples():
    assert concurrence(BELL) == pytest.approx(1.0, abs=1e-12)
    assert concurrence(np.eye(4) / 4) == 0.0
    for p in (0.2, 0.5, 0.9):
        assert concurrence(werner_state(p)) == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-12)


def test_concurrence_rejects_invalid():
    with pytest.raises(InvalidDensityMatrixError):
        concurrence(2 * BELL)


def test_concurrence_local_unitary_invariance():
    rng = np.random.default_rng(21)
    rho = 0.7 * BELL + 0.3 * random_density_matrix(rng)
    c0 = concurrence(rho)
    for _ in range(100):
        u = random_local_unitary(rng)
        assert abs(concurrence(u @ rho @ u.conj().T) - c0) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_metrics_continuous(seed):
    rng = np.random.default_rng(seed)
    rho = 0.5 * BELL + 0.5 * random_density_matrix(rng)
    d = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    d = d + d.conj().T
    d -= np.trace(d) / 4 * np.eye(4)
    d *= 1e-6 / np.linalg.norm(d)
    assert abs(concurrence(rho + d) - concurrence(rho)) < 1e-4
    assert abs(fidelity(rho + d) - fidelity(rho)) < 1e-4


def test_fidelity_and_purity():
    assert fidelity(BELL) == pytest.approx(1.0)
    assert fidelity(np.eye(4) / 4) == pytest.approx(0.25)
    assert purity(np.eye(4) / 4) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        fidelity(BELL, np.array([1, 0, 0, 1]))


def test_validate_density_matrix_messages():
    with pytest.raises(InvalidDensityMatrixError, match="4x4"):
        validate_density_matrix(np.eye(2))
    with pytest.raises(InvalidDensityMatrixError, match="Hermitian"):
        validate_density_matrix(np.eye(4) / 4 + 0.1j * np.eye(4, k=1))


def test_visibility_fit_exact():
    ang = np.arange(0, 180, 10.0)
    a, v = 1000.0, 0.98
    counts = a * (1 + v * np.sin(2 * np.radians(ang) + 0.4))
    fit = visibility_fit(ang, counts)
    assert abs(fit.visibility - v) < 1e-10
    assert fit.phase == pytest.approx(0.4, abs=1e-10)


def test_visibility_fit_monte_carlo_coverage():
    rng = np.random.default_rng(8)
    ang = np.arange(0, 180, 10.0)
    v, a = 0.974, 2000.0
    mean = a * (1 + v * np.sin(2 * np.radians(ang)))
    inside = 0
    trials = 400
    for _ in range(trials):
        fit = visibility_fit(ang, rng.poisson(mean))
        inside += abs(fit.visibility - v) <= 2 * fit.visibility_err
    assert inside / trials > 0.9


def test_visibility_fit_preconditions():
    with pytest.raises(ValueError, match="6 points"):
        visibility_fit([0, 10, 20], [1, 2, 3])
    with pytest.raises(ValueError, match="half a period"):
        visibility_fit(np.arange(0, 60, 10.0), np.ones(6))
