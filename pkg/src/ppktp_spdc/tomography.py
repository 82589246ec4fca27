"""Two-qubit polarization tomography and entanglement measures.

The measurement set is the usual sixteen product states built from H, V,
D = (H+V)/sqrt2, R = (H-iV)/sqrt2 and L = (H+iV)/sqrt2. Counts for setting i
are modelled as N <psi_i|rho|psi_i>.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, InvalidDensityMatrixError

SQ2 = np.sqrt(2)
SINGLE = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([1, 1], dtype=complex) / SQ2,
    "R": np.array([1, -1j], dtype=complex) / SQ2,
    "L": np.array([1, 1j], dtype=complex) / SQ2,
}
LABELS = ("HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH", "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL")
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / SQ2
SIGMA_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))
PSD_TOL = 1e-10


def projector_states() -> np.ndarray:
    return np.array([np.kron(SINGLE[l[0]], SINGLE[l[1]]) for l in LABELS])


def projector_set() -> np.ndarray:
    """The sixteen rank-1 projectors, shape (16, 4, 4), ordered as ``LABELS``."""
    psi = projector_states()
    return np.einsum("ni,nj->nij", psi, psi.conj())


@dataclass
class TomographyRecord:
    counts: np.ndarray
    labels: tuple[str, ...] = LABELS
    duration_s: float = 1.0
    power_mw: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        if self.counts.shape != (16,) or len(self.labels) != 16:
            raise ValueError("a tomography record needs exactly 16 counts")
        if np.any(self.counts < 0) or not np.all(np.isfinite(self.counts)):
            raise ValueError("counts must be finite and non-negative")
        if tuple(self.labels) != LABELS:
            order = [list(self.labels).index(l) for l in LABELS]
            self.counts = self.counts[order]
            self.labels = LABELS


def validate_density_matrix(rho, tol=PSD_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidDensityMatrixError(f"expected a 4x4 matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidDensityMatrixError("matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > tol:
        raise InvalidDensityMatrixError(f"trace is {np.trace(rho).real:.12g}, not 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise InvalidDensityMatrixError("matrix has a negative eigenvalue")
    return rho


def pure_density(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def werner_state(p: float, psi=PHI_PLUS) -> np.ndarray:
    return p * pure_density(psi) + (1 - p) * np.eye(4) / 4


def expected_probabilities(rho) -> np.ndarray:
    psi = projector_states()
    return np.real(np.einsum("ni,ij,nj->n", psi.conj(), rho, psi))


def simulate_counts(rho, n_per_setting: float, noise: str = "none", rng=None) -> TomographyRecord:
    rho = validate_density_matrix(rho)
    mean = n_per_setting * np.clip(expected_probabilities(rho), 0, None)
    if noise == "none":
        counts = mean
    elif noise == "poisson":
        counts = np.random.default_rng(rng).poisson(mean).astype(float)
    else:
        raise ValueError(f"noise must be 'none' or 'poisson', got {noise!r}")
    return TomographyRecord(counts)


def _hermitian_basis() -> np.ndarray:
    paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    return np.array([np.kron(a, b) / 2 for a in paulis for b in paulis], dtype=complex)


def linear_reconstruct(rec: TomographyRecord) -> np.ndarray:
    """Linear inversion; Hermitian with unit trace but not necessarily positive."""
    basis = _hermitian_basis()
    design = expected_probabilities_matrix(basis)
    if np.linalg.matrix_rank(design) < 16:
        raise np.linalg.LinAlgError("tomography system is singular")
    coef = np.linalg.solve(design, rec.counts)
    rho = np.einsum("k,kij->ij", coef, basis)
    tr = np.trace(rho).real
    if tr <= 0:
        raise ValueError("counts do not determine a positive trace")
    rho = rho / tr
    return (rho + rho.conj().T) / 2


def expected_probabilities_matrix(basis) -> np.ndarray:
    psi = projector_states()
    return np.real(np.einsum("ni,kij,nj->nk", psi.conj(), basis, psi))


_TRIL = np.tril_indices(4, -1)


def _t_from_params(t):
    T = np.zeros((4, 4), dtype=complex)
    T[np.diag_indices(4)] = t[:4]
    T[_TRIL] = t[4:10] + 1j * t[10:16]
    return T


def _params_from_t(T):
    return np.concatenate([T[np.diag_indices(4)].real, T[_TRIL].real, T[_TRIL].imag])


def _initial_params(rho, scale):
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0, None) + 1e-9
    m = (v * w) @ v.conj().T * scale
    # rho = T^dag T with T lower triangular: take the Cholesky factor of the index-reversed matrix
    rev = m[::-1, ::-1]
    c = np.linalg.cholesky(rev)
    T = c[::-1, ::-1].conj().T
    return _params_from_t(T)


def _objective(t, psi, n, likelihood):
    T = _t_from_params(t)
    v = psi @ T.T  # rows are T psi_i
    m = np.maximum(np.sum(np.abs(v) ** 2, axis=1), 1e-300)
    if likelihood == "gaussian":
        f = np.sum((m - n) ** 2 / (2 * m))
        dfdm = (m**2 - n**2) / (2 * m**2)
    else:
        pos = n > 0
        f = np.sum(m) - np.sum(n[pos] * np.log(m[pos]))
        dfdm = 1 - n / m
    # dm_i/dT_jk = 2 conj(v_ij) psi_ik for the real part, -2 Im(conj(v_ij) psi_ik) for the imaginary
    g = 2 * np.einsum("i,ij,ik->jk", dfdm, v.conj(), psi)
    grad = np.concatenate([g[np.diag_indices(4)].real, g[_TRIL].real, -g[_TRIL].imag])
    return f, grad


@dataclass
class MLEResult:
    rho: np.ndarray
    objective: float
    grad_norm: float
    iterations: int
    restarts: int


def mle_reconstruct(
    rec: TomographyRecord,
    likelihood: str = "gaussian",
    seed: int = 0,
    restarts: int = 5,
    max_iter: int = 10_000,
    gtol: float = 1e-8,
    full_output: bool = False,
):
    """Maximum-likelihood density matrix with rho = T^dag T / tr(T^dag T).

    Counts are rescaled to unit total before fitting so that ``gtol`` applies
    to a scale-free objective. The first start is the eigenvalue-clipped linear
    estimate; the remaining ``restarts - 1`` are random, seeded by ``seed``.
    """
    if likelihood not in ("gaussian", "poisson"):
        raise ValueError("likelihood must be 'gaussian' or 'poisson'")
    total = rec.counts.sum()
    if total <= 0:
        raise ValueError("record has no counts")
    n = rec.counts / total
    psi = projector_states()
    try:
        rho0 = linear_reconstruct(rec)
    except (ValueError, np.linalg.LinAlgError):
        rho0 = np.eye(4) / 4
    scale = n[:4].sum()
    rng = np.random.default_rng(seed)
    starts = [_initial_params(rho0, scale)]
    for _ in range(max(restarts, 1) - 1):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        r = g @ g.conj().T
        starts.append(_initial_params(r / np.trace(r).real, scale))

    best = None
    for x0 in starts:
        res = minimize(
            _objective, x0, args=(psi, n, likelihood), jac=True, method="BFGS",
            options={"gtol": gtol, "maxiter": max_iter},
        )
        if best is None or res.fun < best.fun:
            best = res
    T = _t_from_params(best.x)
    m = T.conj().T @ T
    rho = m / np.trace(m).real
    rho = (rho + rho.conj().T) / 2
    gnorm = float(np.linalg.norm(best.jac))
    # BFGS may stop on precision loss right at the optimum; accept a small gradient there
    if not best.success and gnorm > 1e-5:
        raise ConvergenceError(
            f"MLE did not converge: {best.message}",
            best=rho,
            diagnostics={"grad_norm": gnorm, "iterations": int(best.nit), "objective": float(best.fun)},
        )
    if full_output:
        return MLEResult(rho, float(best.fun), gnorm, int(best.nit), len(starts))
    return rho


def concurrence(rho) -> float:
    """Wootters concurrence from the square roots of eig(sqrt(rho) rho~ sqrt(rho))."""
    rho = validate_density_matrix(rho)
    w, v = np.linalg.eigh(rho)
    sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    tilde = SIGMA_YY @ rho.conj() @ SIGMA_YY
    lam = np.sqrt(np.clip(np.linalg.eigvalsh(sq @ tilde @ sq), 0, None))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def fidelity(rho, psi=PHI_PLUS) -> float:
    rho = validate_density_matrix(rho)
    psi = np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise ValueError("target state is not normalized")
    return float(np.real(psi.conj() @ rho @ psi))


def purity(rho) -> float:
    rho = validate_density_matrix(rho)
    return float(np.real(np.trace(rho @ rho)))


def random_density_matrix(rng, rank: int = 4) -> np.ndarray:
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    r = g @ g.conj().T
    return r / np.trace(r).real


def random_local_unitary(rng) -> np.ndarray:
    def u2():
        z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        q, r = np.linalg.qr(z)
        return q * (np.diag(r) / np.abs(np.diag(r)))

    return np.kron(u2(), u2())


@dataclass(frozen=True)
class VisibilityFit:
    visibility: float
    visibility_err: float
    amplitude: float
    offset: float
    phase: float
    amplitude_err: float
    offset_err: float


def visibility_fit(angles_deg, counts) -> VisibilityFit:
    """Fit counts = a + b sin(2 angle + c) by linear least squares in (a, b cos c, b sin c).

    Standard errors come from the residual variance; with b >= 0 by
    construction the visibility is b / a.
    """
    x = np.radians(np.asarray(angles_deg, dtype=float))
    y = np.asarray(counts, dtype=float)
    if len(x) < 6:
        raise ValueError("visibility fit needs at least 6 points")
    if np.ptp(np.asarray(angles_deg, dtype=float)) < 90:
        raise ValueError("angles must span at least half a period (90 deg)")
    X = np.column_stack([np.ones_like(x), np.sin(2 * x), np.cos(2 * x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    a, p, q = coef
    b = float(np.hypot(p, q))
    if a <= 0:
        raise ValueError("fitted offset is not positive")
    dof = len(x) - 3
    rss = float(np.sum((y - X @ coef) ** 2))
    cov = (rss / dof if dof > 0 else 0.0) * np.linalg.inv(X.T @ X)
    # gradient of (b, V) with respect to (a, p, q)
    jb = np.array([0.0, p / b, q / b]) if b > 0 else np.zeros(3)
    jv = np.array([-b / a**2, p / (a * b), q / (a * b)]) if b > 0 else np.array([0.0, 0.0, 0.0])
    return VisibilityFit(
        visibility=b / a,
        visibility_err=float(np.sqrt(jv @ cov @ jv)),
        amplitude=b,
        offset=float(a),
        phase=float(np.arctan2(q, p)),
        amplitude_err=float(np.sqrt(jb @ cov @ jb)),
        offset_err=float(np.sqrt(cov[0, 0])),
    )
