"""Small dense linear algebra and the Pauli/Bloch structure of two-qubit states.

Basis ordering is |00>, |01>, |10>, |11> (row-major Kronecker convention) and
Pauli indices run x, y, z.  Most functions accept a single matrix or a stack
of matrices with shape ``(..., n, n)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidState, NonHermitianInput, ParseError

STATE_ATOL = 1e-10
HERMITIAN_ATOL = 1e-8
JACOBI_OFF_TOL = 1e-13
JACOBI_MAX_SWEEPS = 60

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SX, SY, SZ)
AXES = "xyz"

# PAULI_PAIRS[m, n] = sigma_m (x) sigma_n
PAULI_PAIRS = np.array([[np.kron(a, b) for b in PAULI] for a in PAULI])


def axis_index(axis) -> int:
    if isinstance(axis, (int, np.integer)):
        if 0 <= axis < 3:
            return int(axis)
    elif axis in AXES and len(axis) == 1:
        return AXES.index(axis)
    raise ValueError(f"unknown Pauli axis {axis!r}")


def close(a, b, atol: float) -> bool:
    """Elementwise absolute comparison with an explicit tolerance."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= atol))


def tensor(a, b) -> np.ndarray:
    """Kronecker product ``a (x) b``."""
    return np.kron(np.asarray(a), np.asarray(b))


# ---------------------------------------------------------------------------
# eigensolver


@dataclass(frozen=True)
class EigenSystem:
    eigenvalues: np.ndarray  # ascending, shape (..., n)
    eigenvectors: np.ndarray  # columns, shape (..., n, n)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def _off_norm(a):
    n = a.shape[-1]
    mask = ~np.eye(n, dtype=bool)
    return np.sqrt(np.sum(np.abs(a[..., mask]) ** 2, axis=-1))


def _eig2(a):
    """Closed-form eigensystem for a stack of 2x2 Hermitian matrices."""
    p = a[:, 0, 0].real
    d = a[:, 1, 1].real
    b = a[:, 0, 1]
    mean = 0.5 * (p + d)
    rad = np.hypot(0.5 * (p - d), np.abs(b))
    lo, hi = mean - rad, mean + rad
    w = np.stack([lo, hi], axis=-1)

    vecs = np.empty(a.shape, dtype=complex)
    for k, lam in enumerate((lo, hi)):
        # two candidate null vectors of (A - lam); keep the better-conditioned one
        v1 = np.stack([b, lam - p + 0j], axis=-1)
        v2 = np.stack([lam - d + 0j, np.conj(b)], axis=-1)
        n1 = np.linalg.norm(v1, axis=-1)
        n2 = np.linalg.norm(v2, axis=-1)
        v = np.where((n1 >= n2)[:, None], v1, v2)
        nv = np.maximum(n1, n2)
        flat = nv <= 1e-300
        v = v / np.where(flat, 1.0, nv)[:, None]
        if np.any(flat):
            # already diagonal (b == 0, or degenerate)
            v[flat] = 0
            v[flat, k] = 1
        vecs[:, :, k] = v
    return w, vecs


def _jacobi(a):
    """Cyclic complex Jacobi on a stack of Hermitian matrices (modified in place)."""
    m, n, _ = a.shape
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    scale = np.maximum(1.0, np.linalg.norm(a, axis=(-2, -1)))
    for _ in range(JACOBI_MAX_SWEEPS):
        if np.all(_off_norm(a) < JACOBI_OFF_TOL * scale):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                mag = np.abs(apq)
                act = mag > 1e-300
                if not np.any(act):
                    continue
                safe = np.where(act, mag, 1.0)
                e = np.where(act, apq / safe, 1.0)
                tau = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe)
                sgn = np.where(tau >= 0, 1.0, -1.0)
                t = sgn / (np.abs(tau) + np.hypot(1.0, tau))
                t = np.where(act, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ec = np.conj(e)
                # A <- A J, with J = [[c, s], [-s conj(e), c conj(e)]] on (p, q)
                cp_ = a[:, :, p].copy()
                cq_ = a[:, :, q].copy()
                a[:, :, p] = cp_ * c[:, None] - cq_ * (s * ec)[:, None]
                a[:, :, q] = cp_ * s[:, None] + cq_ * (c * ec)[:, None]
                # A <- J^H A
                rp = a[:, p, :].copy()
                rq = a[:, q, :].copy()
                a[:, p, :] = rp * c[:, None] - rq * (s * e)[:, None]
                a[:, q, :] = rp * s[:, None] + rq * (c * e)[:, None]
                a[:, p, q] = 0
                a[:, q, p] = 0
                a[:, p, p] = a[:, p, p].real
                a[:, q, q] = a[:, q, q].real
                vp = v[:, :, p].copy()
                vq = v[:, :, q].copy()
                v[:, :, p] = vp * c[:, None] - vq * (s * ec)[:, None]
                v[:, :, q] = vp * s[:, None] + vq * (c * ec)[:, None]
    w = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    return w, v


def hermitian_eig(h, check: bool = True) -> EigenSystem:
    """Eigen-decomposition of a Hermitian matrix or a stack of them.

    2x2 inputs use the closed form; larger ones use cyclic Jacobi rotations
    until the off-diagonal norm drops below 1e-13 (relative to the matrix
    norm when that exceeds one).  Eigenvalues come back ascending, with the
    eigenvectors as matching columns.

    Raises
    ------
    NonHermitianInput
        If ``max |H - H^dagger|`` exceeds 1e-8.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {h.shape}")
    if check:
        resid = np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2))), initial=0.0)
        if resid > HERMITIAN_ATOL:
            raise NonHermitianInput(f"symmetry residual {resid:.3e}")
    batch = h.shape[:-2]
    n = h.shape[-1]
    a = h.reshape(-1, n, n)
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    if n == 1:
        w, v = a[:, :, 0].real.copy(), np.ones_like(a)
    elif n == 2:
        w, v = _eig2(a)
    else:
        w, v = _jacobi(a.copy())
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return EigenSystem(w.reshape(batch + (n,)), v.reshape(batch + (n, n)))


def eigvalsh(h, check: bool = True) -> np.ndarray:
    return hermitian_eig(h, check=check).eigenvalues


# ---------------------------------------------------------------------------
# states


def validate_state(mat, atol: float = STATE_ATOL) -> np.ndarray:
    """Return ``mat`` as a 4x4 complex array or raise :class:`InvalidState`."""
    m = np.asarray(mat, dtype=complex)
    if m.shape != (4, 4):
        raise InvalidState("shape", f"expected 4x4, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidState("shape", "non-finite entries")
    herm = np.max(np.abs(m - m.conj().T))
    if herm > atol:
        raise InvalidState("hermitian", f"max |rho - rho^dagger| = {herm:.3e}")
    tr = np.trace(m).real
    if abs(tr - 1.0) > atol:
        raise InvalidState("trace", f"trace = {tr:.12g}")
    lo = eigvalsh(m, check=False)[0]
    if lo < -atol:
        raise InvalidState("psd", f"minimum eigenvalue = {lo:.3e}")
    return m


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated two-qubit density matrix (immutable 4x4 complex array)."""

    mat: np.ndarray

    def __post_init__(self):
        m = validate_state(self.mat).copy()
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    def close_to(self, other, atol: float = STATE_ATOL) -> bool:
        return close(self.mat, as_matrix(other), atol)

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))


def as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.mat
    return np.asarray(rho, dtype=complex)


def ket(bits: str) -> np.ndarray:
    """Computational basis ket, e.g. ``ket("01")``."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


_S2 = 1 / np.sqrt(2)
PHI_PLUS = _S2 * (ket("00") + ket("11"))
PHI_MINUS = _S2 * (ket("00") - ket("11"))
PSI_PLUS = _S2 * (ket("01") + ket("10"))
PSI_MINUS = _S2 * (ket("01") - ket("10"))
BELL_BASIS = (PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS)


def singlet() -> DensityMatrix:
    return DensityMatrix(projector(PSI_MINUS))


# ---------------------------------------------------------------------------
# Bloch structure


@dataclass(frozen=True)
class BlochDecomposition:
    T: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def to_matrix(self) -> np.ndarray:
        rho = np.kron(I2, I2).astype(complex)
        for i, s in enumerate(PAULI):
            rho = rho + self.x[i] * np.kron(s, I2) + self.y[i] * np.kron(I2, s)
        rho = rho + np.einsum("mn,mnij->ij", self.T, PAULI_PAIRS)
        return rho / 4


def correlation_matrix(rho) -> np.ndarray:
    """``T[..., m, n] = Tr[rho (sigma_m (x) sigma_n)]`` for one state or a stack."""
    r = as_matrix(rho)
    return np.einsum("...ij,mnji->...mn", r, PAULI_PAIRS).real


def bloch_decompose(rho) -> BlochDecomposition:
    r = as_matrix(rho)
    T = correlation_matrix(r)
    x = np.array([np.trace(r @ np.kron(s, I2)).real for s in PAULI])
    y = np.array([np.trace(r @ np.kron(I2, s)).real for s in PAULI])
    return BlochDecomposition(T, x, y)


def pauli_expectation(rho, m, n) -> float:
    r = as_matrix(rho)
    return float(np.trace(r @ PAULI_PAIRS[axis_index(m), axis_index(n)]).real)


def partial_transpose(rho, subsystem: int = 1) -> np.ndarray:
    """Partial transpose on qubit B (``subsystem=1``) or A (``subsystem=0``)."""
    r = as_matrix(rho)
    shape = r.shape[:-2]
    t = r.reshape(shape + (2, 2, 2, 2))  # (a, b, a', b')
    if subsystem == 1:
        t = np.swapaxes(t, -3, -1)
    elif subsystem == 0:
        t = np.swapaxes(t, -4, -2)
    else:
        raise ValueError("subsystem must be 0 or 1")
    return t.reshape(shape + (4, 4))


def reduced_state(rho, keep: int) -> np.ndarray:
    """Partial trace leaving qubit ``keep`` (0 = A, 1 = B)."""
    t = as_matrix(rho).reshape(2, 2, 2, 2)
    if keep == 0:
        return np.einsum("ajbj->ab", t)
    return np.einsum("jajb->ab", t)


# ---------------------------------------------------------------------------
# state files


def serialize_state(rho) -> str:
    m = as_matrix(rho)
    rows = [[[float(z.real), float(z.imag)] for z in row] for row in m]
    return json.dumps({"rho": rows})


def parse_state(text: str) -> DensityMatrix:
    """Parse the JSON state-file format ``{"rho": [[[re, im], ...], ...]}``."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "rho" not in obj:
        raise ParseError('expected an object with key "rho"')
    rows = obj["rho"]
    if not isinstance(rows, list) or len(rows) != 4:
        raise ParseError("rho must be a list of 4 rows")
    m = np.empty((4, 4), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != 4:
            raise ParseError(f"row {i} must have 4 entries")
        for j, z in enumerate(row):
            ok = (
                isinstance(z, list)
                and len(z) == 2
                and all(isinstance(u, (int, float)) and not isinstance(u, bool) for u in z)
            )
            if not ok:
                raise ParseError(f"entry ({i},{j}) must be a [re, im] pair of numbers")
            m[i, j] = complex(z[0], z[1])
    return DensityMatrix(m)
