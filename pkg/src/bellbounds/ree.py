"""Relative entropy of entanglement by projected gradient descent over PPT states.

For two qubits the separable states are exactly the PPT states, so

    E_R(rho) = min_{sigma >= 0, sigma^Gamma >= 0, Tr sigma = 1} S(rho || sigma).

The objective ``f(sigma) = -Tr rho log sigma`` is minimized with projected
gradient steps.  The gradient uses the divided-difference (Daleckii-Krein)
form of the Frechet derivative of the matrix logarithm, projection onto the
feasible set is done with Dykstra's alternating projections, and steps are
accepted by Armijo backtracking.

The inner loops call :func:`numpy.linalg.eigh` (LAPACK) rather than the
Jacobi solver in :mod:`qcore`: a single solve needs tens of thousands of 4x4
decompositions.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoConvergenceWarning, SupportError
from .qcore import PAULI, as_matrix, hermitian_eig, partial_transpose, reduced_state

LN2 = np.log(2.0)
EIG_FLOOR = 1e-14
ARMIJO_SLOPE = 1e-4
BACKTRACK = 0.5
MAX_ITER = 5000
DYKSTRA_CYCLES = 200
DYKSTRA_TOL = 1e-13
PPT_ATOL = 1e-10
PURE_ATOL = 1e-10
# objective changes below this are round-off; STALL_ITERS of them in a row end the run
STALL_REL = 1e-13
STALL_ITERS = 5
# Dykstra cycles projected gradient may spend before "auto" hands over to the
# barrier method (well-conditioned full-rank solves need a few hundred)
PGD_PATIENCE = 5_000
BARRIER_MU0 = 1.0
BARRIER_MU_END = 1e-13
BARRIER_SHRINK = 0.1


@dataclass
class REEResult:
    value: float  # bits
    css: np.ndarray  # closest separable state found
    converged: bool
    iterations: int
    method: str  # "ppt", "pure", "projected-gradient" or "barrier"
    grad_norm: float = 0.0
    dykstra_residual: float = 0.0
    history: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.value = float(self.value)
        self.grad_norm = float(self.grad_norm)
        self.dykstra_residual = float(self.dykstra_residual)


def _herm(a):
    return 0.5 * (a + a.conj().T)


def _simplex(w):
    """Euclidean projection of a real vector onto the probability simplex."""
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(w) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(w - css[rho] / (rho + 1), 0.0)


def _proj_states(x):
    w, v = np.linalg.eigh(_herm(x))
    return (v * _simplex(w)) @ v.conj().T


def _proj_ppt(x):
    return partial_transpose(_proj_states(partial_transpose(x)))


def _repair(x):
    """Mix with I/4 just enough that sigma and sigma^Gamma are both PSD."""
    x = _herm(x)
    x = x / np.trace(x).real
    lo = min(np.linalg.eigvalsh(x)[0], np.linalg.eigvalsh(partial_transpose(x))[0])
    if lo < 0:
        x = (x - lo * np.eye(4)) / (1 - 4 * lo)
    return x


def project_feasible(x, cycles: int = DYKSTRA_CYCLES, tol: float = DYKSTRA_TOL):
    """Project a Hermitian matrix onto the unit-trace PPT states.

    Returns the projection and the final Dykstra residual (distance between
    the two alternating iterates).
    """
    sigma, resid, _ = _dykstra(x, cycles, tol)
    return sigma, resid


def _dykstra(x, cycles=DYKSTRA_CYCLES, tol=DYKSTRA_TOL):
    x = _herm(np.asarray(x, dtype=complex))
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    resid = np.inf
    n = 0
    for n in range(1, cycles + 1):
        y = _proj_states(x + p)
        p = x + p - y
        x_new = _proj_ppt(y + q)
        q = y + q - x_new
        resid = np.linalg.norm(x_new - y)
        x = x_new
        if resid < tol:
            break
    return _repair(x), float(resid), n


def _objective(rho, sigma):
    w, v = np.linalg.eigh(_herm(sigma))
    logs = np.log(np.maximum(w, EIG_FLOOR))
    r = v.conj().T @ rho @ v
    return -float(np.real(np.sum(np.diag(r) * logs)))


def _gradient(rho, sigma):
    """Gradient of ``-Tr rho log sigma`` (Frobenius inner product)."""
    w, v = np.linalg.eigh(_herm(sigma))
    w = np.maximum(w, EIG_FLOOR)
    lw = np.log(w)
    dw = w[:, None] - w[None, :]
    dl = lw[:, None] - lw[None, :]
    same = np.abs(dw) <= 1e-12 * np.maximum(w[:, None], w[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        kern = np.where(same, 1.0 / np.maximum(w[:, None], w[None, :]), dl / dw)
    r = v.conj().T @ rho @ v
    return -_herm(v @ (kern * r) @ v.conj().T)


def _entropy_nats(rho):
    w = np.linalg.eigvalsh(_herm(rho))
    w = w[w > 1e-15]
    return -float(np.sum(w * np.log(w)))


def relative_entropy(rho, sigma) -> float:
    """``S(rho || sigma)`` in bits (eigenvalues of sigma floored at 1e-14)."""
    rho = as_matrix(rho)
    return (_objective(rho, as_matrix(sigma)) - _entropy_nats(rho)) / LN2


def ree_pure_shortcut(rho):
    """Entanglement entropy for a pure state, or ``None`` if ``rho`` is mixed."""
    r = as_matrix(rho)
    if np.trace(r @ r).real <= 1 - PURE_ATOL:
        return None
    w = hermitian_eig(reduced_state(r, 0), check=False).eigenvalues
    w = w[w > 1e-15]
    return float(max(0.0, -np.sum(w * np.log2(w))))


def _pure_css(rho):
    """Schmidt-diagonal closest separable state of a pure state."""
    es = hermitian_eig(rho, check=False)
    psi = es.eigenvectors[:, -1]
    coeff = psi.reshape(2, 2)  # psi = sum_jk coeff[j, k] |j>|k>
    red = hermitian_eig(coeff @ coeff.conj().T, check=False)
    sigma = np.zeros((4, 4), dtype=complex)
    for mu, a in zip(red.eigenvalues, red.eigenvectors.T):
        if mu <= 1e-15:
            continue
        b = coeff.T @ a.conj() / np.sqrt(mu)
        ab = np.kron(a, b)
        sigma += mu * np.outer(ab, ab.conj())
    return sigma


# ---------------------------------------------------------------------------
# log-det barrier Newton method
#
# sigma = I/4 + sum_k theta_k G_k over the 15 traceless Pauli products
# G_k = s_a s_b / 2 (orthonormal).  Partial transposition only flips the sign
# of the terms whose B factor is s_y, so sigma^Gamma stays linear in theta.

_ONE = (np.eye(2, dtype=complex),) + PAULI
_BASIS = np.array([np.kron(_ONE[a], _ONE[b]) / 2 for a in range(4) for b in range(4) if a or b])
_PT_SIGN = np.array([-1.0 if b == 2 else 1.0 for a in range(4) for b in range(4) if a or b])


def _f1_pair(a, b):
    """First divided difference of log, elementwise."""
    d = a - b
    with np.errstate(divide="ignore", invalid="ignore"):
        r = d / b
        gen = (np.log(a) - np.log(b)) / d
    ser = (1 - r / 2 + r * r / 3) / b
    return np.where(np.abs(r) < 1e-5, ser, gen)


def _f2(w):
    """Second divided differences of log on all triples of ``w``."""
    n = len(w)
    tri = np.stack(np.meshgrid(w, w, w, indexing="ij"), axis=-1).reshape(-1, 3)
    tri = np.sort(tri, axis=1)
    x, y, z = tri[:, 0], tri[:, 1], tri[:, 2]
    spread = z - x
    with np.errstate(divide="ignore", invalid="ignore"):
        gen = (_f1_pair(z, y) - _f1_pair(y, x)) / spread
    m = (x + y + z) / 3
    out = np.where(spread > 1e-4 * x, gen, -0.5 / (m * m))
    return out.reshape(n, n, n)


def _barrier_parts(rho, theta, mu, want_hessian=True):
    s = np.eye(4) / 4 + np.einsum("k,kij->ij", theta, _BASIS)
    sg = np.eye(4) / 4 + np.einsum("k,kij->ij", theta * _PT_SIGN, _BASIS)
    w, v = np.linalg.eigh(s)
    wg, vg = np.linalg.eigh(sg)
    if w[0] <= 0 or wg[0] <= 0:
        return None
    r = v.conj().T @ rho @ v
    A = np.einsum("ai,kab,bj->kij", v.conj(), _BASIS, v)
    F = -np.real(np.sum(np.diag(r) * np.log(w))) - mu * (np.sum(np.log(w)) + np.sum(np.log(wg)))
    if not want_hessian:
        return F, None, None
    si = (v / w) @ v.conj().T
    sgi = (vg / wg) @ vg.conj().T
    g = -np.real(np.einsum("ij,kij,ji->k", _kernel(w), A, r))
    g -= mu * (np.real(np.einsum("ij,kji->k", si, _BASIS)) + _PT_SIGN * np.real(np.einsum("ij,kji->k", sgi, _BASIS)))
    T = np.einsum("ijm,kij,ljm,mi->kl", _f2(w), A, A, r)
    X = np.einsum("ab,kbc->kac", si, _BASIS)
    Y = np.einsum("ab,kbc->kac", sgi, _BASIS * _PT_SIGN[:, None, None])
    H = -np.real(T + T.T) + mu * np.real(np.einsum("kab,lba->kl", X, X) + np.einsum("kab,lba->kl", Y, Y))
    return F, g, H


def _kernel(w):
    return _f1_pair(w[:, None], w[None, :])


def _barrier_solve(rho, mu_end=BARRIER_MU_END):
    """Minimize ``-Tr rho log sigma - mu (log det sigma + log det sigma^Gamma)``
    along a decreasing ``mu`` path with damped Newton steps.

    The barrier has parameter 8, so the final point is within ``8 mu_end``
    nats of the optimum.  Returns ``(sigma, newton_steps, decrement)``.
    """
    theta = np.zeros(15)
    mu = BARRIER_MU0
    steps = 0
    dec = np.inf
    while True:
        for _ in range(100):
            F, g, H = _barrier_parts(rho, theta, mu)
            try:
                dx = -np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                dx = -np.linalg.lstsq(H, g, rcond=None)[0]
            dec = float(-g @ dx)
            steps += 1
            if dec / 2 <= 1e-20 + 1e-15 * abs(F):
                break
            t = 1.0
            while t >= 1e-16:
                p = _barrier_parts(rho, theta + t * dx, mu, want_hessian=False)
                if p is not None and p[0] <= F + 0.25 * t * (g @ dx):
                    break
                t *= 0.5
            theta = theta + t * dx
        if mu <= mu_end:
            break
        mu *= BARRIER_SHRINK
    sigma = np.eye(4) / 4 + np.einsum("k,kij->ij", theta, _BASIS)
    return _herm(sigma), steps, dec


def _pgd(rho, tol, max_iter, keep_history, warn, cycle_budget=None):
    """Projected gradient descent from the projection of ``0.9 rho + 0.1 I/4``."""
    s_rho = _entropy_nats(rho)
    sigma, dres = project_feasible(0.9 * rho + 0.1 * np.eye(4) / 4)
    f = _objective(rho, sigma)
    if not np.isfinite(f):
        raise SupportError("relative entropy diverges at the initial point")
    g = _gradient(rho, sigma)
    step = 1.0
    prev = None
    stalled = 0
    history = []
    converged = False
    gmap = np.inf
    it = 0
    spent = 0
    for it in range(1, max_iter + 1):
        if cycle_budget is not None and spent > cycle_budget:
            break
        while True:
            trial, dres, n = _dykstra(sigma - step * g)
            spent += n
            d = trial - sigma
            f_trial = _objective(rho, trial)
            decrease = np.real(np.vdot(g, d))
            if f_trial <= f + ARMIJO_SLOPE * decrease or step < 1e-12:
                break
            step *= BACKTRACK
        if not np.isfinite(f_trial):
            raise SupportError("relative entropy diverged along the iteration")
        gmap = float(np.linalg.norm(d) / step)
        g_new = _gradient(rho, trial)
        # Barzilai-Borwein guess for the next trial step
        yk = g_new - g
        sy = np.real(np.vdot(d, yk))
        step = float(np.clip(np.real(np.vdot(d, d)) / sy, 1e-6, 1e3)) if sy > 0 else step * 2
        rel = abs(f - f_trial) / max(1.0, abs(f))
        sigma, f, g = trial, f_trial, g_new
        if keep_history:
            history.append((f - s_rho) / LN2)
        stalled = stalled + 1 if rel <= STALL_REL else 0
        if rel < tol and prev is not None and prev < tol and (gmap <= tol or stalled >= STALL_ITERS):
            converged = True
            break
        prev = rel
    if not converged and warn:
        warnings.warn(f"REE hit the iteration cap ({max_iter})", NoConvergenceWarning, stacklevel=3)
    value = max(0.0, (f - s_rho) / LN2)
    return REEResult(value, sigma, converged, it, "projected-gradient", gmap, dres, history)


def ree(rho, tol: float = 1e-9, max_iter: int = MAX_ITER, keep_history: bool = False, method: str = "auto") -> REEResult:
    """Relative entropy of entanglement (bits) and the closest separable state.

    Parameters
    ----------
    rho : array_like or DensityMatrix
        Two-qubit state.
    tol : float
        Stopping tolerance, in [1e-10, 1e-3].  Projected gradient stops once
        the relative objective change stays below ``tol`` and either the
        gradient-mapping norm is below ``tol`` or the objective has stopped
        moving beyond round-off.
    max_iter : int
        Iteration cap for projected gradient.  With ``method="pgd"`` hitting
        it returns the last iterate with ``converged=False`` and a
        :class:`NoConvergenceWarning`.
    method : {"auto", "pgd", "barrier"}
        ``"auto"`` runs projected gradient and, if it has not converged within
        ``PGD_PATIENCE`` Dykstra cycles, switches to the barrier Newton method.
        Rank-deficient states whose closest separable state is singular in
        both the plain and the partially transposed picture make projected
        gradient crawl; the barrier method handles them in ~100 Newton steps.

    Examples
    --------
    >>> from bellbounds.families import rho_min
    >>> round(ree(rho_min(0.5)).value, 6)
    0.188722
    """
    if not 1e-10 <= tol <= 1e-3:
        raise DomainError(f"tol must lie in [1e-10, 1e-3], got {tol}")
    if method not in ("auto", "pgd", "barrier"):
        raise DomainError(f"unknown REE method {method!r}")
    rho = _herm(as_matrix(rho))
    if np.linalg.eigvalsh(partial_transpose(rho))[0] >= -PPT_ATOL:
        return REEResult(0.0, rho.copy(), True, 0, "ppt")
    pure = ree_pure_shortcut(rho)
    if pure is not None:
        return REEResult(pure, _pure_css(rho), True, 0, "pure")

    if method != "barrier":
        budget = None if method == "pgd" else PGD_PATIENCE
        res = _pgd(rho, tol, max_iter, keep_history, warn=method == "pgd", cycle_budget=budget)
        if res.converged or method == "pgd":
            return res
    sigma, steps, dec = _barrier_solve(rho)
    value = max(0.0, (_objective(rho, sigma) - _entropy_nats(rho)) / LN2)
    return REEResult(value, sigma, bool(dec <= 1e-8), steps, "barrier", grad_norm=float(np.sqrt(max(dec, 0.0))))
