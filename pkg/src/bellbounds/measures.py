"""CHSH violation and entanglement measures for two-qubit states.

All scalar measures accept a single 4x4 matrix (or :class:`DensityMatrix`)
and also stacks of shape ``(k, 4, 4)``, in which case an array is returned.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCorrelation, DomainError, NotEntangled
from .qcore import (
    PAULI,
    PAULI_PAIRS,
    as_matrix,
    correlation_matrix,
    hermitian_eig,
    partial_transpose,
    projector,
)

# |M - 1| below this is treated as M == 1.  sqrt(M - 1) turns 1e-16 of
# round-off into B ~ 1e-8, so threshold states need the snap.
M_SNAP_ATOL = 1e-12

# eigenvalues of rho below this are treated as exact zeros in the concurrence
RANK_FLOOR = 1e-15

SIGMA_YY = np.kron(PAULI[1], PAULI[1]).real  # real for the y (x) y pair


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def correlation_spectrum(rho) -> np.ndarray:
    """Eigenvalues ``h`` of ``T^T T`` (ascending)."""
    T = correlation_matrix(rho)
    U = np.swapaxes(T, -1, -2) @ T
    return hermitian_eig(U.astype(complex), check=False).eigenvalues


def horodecki_m(rho):
    """Sum of the two largest eigenvalues of ``T^T T``; CHSH is violated iff > 1."""
    h = correlation_spectrum(rho)
    m = h[..., -1] + h[..., -2]
    m = np.where(np.abs(m - 1.0) <= M_SNAP_ATOL, 1.0, m)
    return _scalar(np.clip(m, 0.0, 2.0))


def chsh_violation_b(rho):
    """Degree of CHSH violation ``sqrt(max(0, M - 1))``, in [0, 1]."""
    m = np.asarray(horodecki_m(rho))
    return _scalar(np.sqrt(np.maximum(0.0, m - 1.0)))


@dataclass(frozen=True)
class ChshSettings:
    a: np.ndarray
    a_prime: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray

    def __post_init__(self):
        for name in ("a", "a_prime", "b", "b_prime"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise DomainError(f"setting {name} must be a unit 3-vector")
            object.__setattr__(self, name, v)


def _dot_sigma(v):
    return sum(c * s for c, s in zip(v, PAULI))


def chsh_operator(s: ChshSettings) -> np.ndarray:
    return np.kron(_dot_sigma(s.a), _dot_sigma(s.b + s.b_prime)) + np.kron(
        _dot_sigma(s.a_prime), _dot_sigma(s.b - s.b_prime)
    )


def chsh_expectation(rho, s: ChshSettings) -> float:
    return float(np.trace(as_matrix(rho) @ chsh_operator(s)).real)


def optimal_settings(rho) -> ChshSettings:
    """Settings reaching ``|<B_CHSH>| = 2 sqrt(M)``, built from the top
    eigenvectors of ``T^T T``.

    Raises :class:`DegenerateCorrelation` when ``T`` vanishes.
    """
    T = correlation_matrix(rho)
    es = hermitian_eig((T.T @ T).astype(complex), check=False)
    h = es.eigenvalues
    vecs = es.eigenvectors.real
    h1, h2 = h[2], max(h[1], 0.0)
    if h1 <= 1e-12:
        raise DegenerateCorrelation("T^T T has no positive eigenvalue")
    c1, c2 = vecs[:, 2], vecs[:, 1]
    theta = np.arctan(np.sqrt(h2 / h1))
    b = np.cos(theta) * c1 + np.sin(theta) * c2
    bp = np.cos(theta) * c1 - np.sin(theta) * c2
    t1, t2 = T @ c1, T @ c2
    a = t1 / np.linalg.norm(t1)
    n2 = np.linalg.norm(t2)
    if n2 > 1e-12:
        ap = t2 / n2
    else:
        # sin(theta) = 0, so a' never contributes; any unit vector will do
        ap = np.cross(a, c1)
        if np.linalg.norm(ap) < 1e-8:
            ap = np.cross(a, c2)
        ap = ap / np.linalg.norm(ap)
    return ChshSettings(a, ap, b / np.linalg.norm(b), bp / np.linalg.norm(bp))


def negativity(rho, subsystem: int = 1):
    """``max(0, -2 min eig(rho^Gamma))``."""
    w = hermitian_eig(partial_transpose(rho, subsystem), check=False).eigenvalues
    return _scalar(np.maximum(0.0, -2.0 * w[..., 0]))


def negativity_sum_form(rho, subsystem: int = 1):
    """Negativity from the sum over all negative eigenvalues of the partial transpose."""
    w = hermitian_eig(partial_transpose(rho, subsystem), check=False).eigenvalues
    return _scalar(np.maximum(0.0, -2.0 * np.sum(np.minimum(w, 0.0), axis=-1)))


def wootters_lambdas(rho) -> np.ndarray:
    """Square roots of the eigenvalues of ``rho (s_y s_y) rho* (s_y s_y)``, descending.

    Computed as the singular values of ``W^T (s_y s_y) W`` with
    ``rho = W W^dagger``; these are the same numbers but avoid taking a square
    root of round-off for rank-deficient states.
    """
    r = as_matrix(rho)
    single = r.ndim == 2
    r = r.reshape(-1, 4, 4)
    es = hermitian_eig(r, check=False)
    # eigenvalues at round-off level of zero would enter as sqrt(1e-17) ~ 3e-9
    mu = es.eigenvalues
    w = np.sqrt(np.where(mu > RANK_FLOOR, mu, 0.0))
    W = es.eigenvectors * w[:, None, :]
    tau = np.swapaxes(W, -1, -2) @ SIGMA_YY @ W
    k = len(r)
    aug = np.zeros((k, 8, 8), dtype=complex)
    aug[:, :4, 4:] = tau
    aug[:, 4:, :4] = np.conj(np.swapaxes(tau, -1, -2))
    sv = hermitian_eig(aug, check=False).eigenvalues[:, 4:][:, ::-1]
    sv = np.where(sv > -1e-12, np.maximum(sv, 0.0), sv)
    return sv[0] if single else sv


def concurrence(rho):
    lam = wootters_lambdas(rho)
    c = 2 * lam[..., 0] - np.sum(lam, axis=-1)
    return _scalar(np.clip(c, 0.0, 1.0))


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy needs x in [0, 1], got {x}")
    out = 0.0
    for p in (x, 1.0 - x):
        if p > 0:
            out -= p * np.log2(p)
    return float(out)


def von_neumann_entropy(rho) -> float:
    """Entropy in bits; eigenvalues below 1e-15 contribute nothing."""
    w = hermitian_eig(as_matrix(rho), check=False).eigenvalues
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log2(w)))


@dataclass(frozen=True)
class NegativityWitness:
    psi: np.ndarray
    psi_gamma: np.ndarray


def negativity_witness(rho) -> NegativityWitness:
    """Ket minimizing ``<psi|rho^Gamma|psi>`` and its partial transpose.

    ``N(rho) = -2 Tr[psi_gamma rho]`` for entangled ``rho``.
    """
    n = negativity(rho)
    if n <= 1e-10:
        raise NotEntangled(f"negativity {n:.3e} is zero; no witness")
    es = hermitian_eig(partial_transpose(rho), check=False)
    psi = es.eigenvectors[:, 0]
    psi = psi / np.linalg.norm(psi)
    return NegativityWitness(psi, partial_transpose(projector(psi)))


@dataclass(frozen=True)
class MeasureReport:
    M: float
    B: float
    N: float
    C: float
    E_R: float
    ree_converged: bool
    ree_iterations: int

    def as_dict(self) -> dict:
        return {
            "M": self.M,
            "B": self.B,
            "N": self.N,
            "C": self.C,
            "E_R": self.E_R,
            "ree_converged": self.ree_converged,
            "ree_iterations": self.ree_iterations,
        }


def measure_report(rho, ree_tol: float = 1e-9) -> MeasureReport:
    from .ree import ree

    m = horodecki_m(rho)
    res = ree(rho, tol=ree_tol)
    return MeasureReport(
        M=m,
        B=float(np.sqrt(max(0.0, m - 1.0))),
        N=negativity(rho),
        C=concurrence(rho),
        E_R=res.value,
        ree_converged=res.converged,
        ree_iterations=res.iterations,
    )


__all__ = [
    "ChshSettings",
    "MeasureReport",
    "NegativityWitness",
    "PAULI_PAIRS",
    "binary_entropy",
    "chsh_expectation",
    "chsh_operator",
    "chsh_violation_b",
    "concurrence",
    "correlation_spectrum",
    "horodecki_m",
    "measure_report",
    "negativity",
    "negativity_sum_form",
    "negativity_witness",
    "optimal_settings",
    "von_neumann_entropy",
    "wootters_lambdas",
]
