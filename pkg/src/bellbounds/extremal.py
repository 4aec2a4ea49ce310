"""Closed-form entanglement bounds at fixed CHSH violation, the concurrence
vs negativity region of non-violating states, and the Verstraete-Wolf
optimality parameters of the maximal states."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RankError, UndefinedGradient
from .families import (
    AmplitudeDampedParams,
    amplitude_damped,
    bell_diagonal,
    horodecki_state,
    rho_max,
)
from .measures import binary_entropy, chsh_violation_b, concurrence, negativity
from .qcore import PAULI_PAIRS, DensityMatrix

SQ2 = np.sqrt(2.0)

# landmark negativities of the B = 0 region
N1 = 1 / SQ2 + np.sqrt(2 - SQ2) - 1
N2 = (SQ2 + np.sqrt(14 - 4 * SQ2) - 2) / 4
N3 = SQ2 - 1
N4 = (3 * SQ2 - 2) / 4
C_PLATEAU = 1 / SQ2

# plateau of the C(N) upper bound: M = 1 and C = 1/sqrt 2 for alpha in this range
PLATEAU_HALF_WIDTH = np.sqrt(8 * SQ2 - 11) / 2
ALPHA_MINUS = 0.5 - PLATEAU_HALF_WIDTH
ALPHA_PLUS = 0.5 + PLATEAU_HALF_WIDTH


def _xi(B):
    if not 0.0 <= B <= 1.0:
        raise DomainError(f"B must lie in [0, 1], got {B}")
    return np.sqrt(1.0 + B * B)


def n_max(B: float) -> float:
    xi = _xi(B)
    return float(SQ2 / 4 * (xi + np.sqrt(5 * xi * xi - 2 * SQ2 * xi + 2)) - 0.5)


def c_max(B: float) -> float:
    xi = _xi(B)
    # the radicand is (xi + sqrt 2)^2
    return float((SQ2 * xi * xi + 2 * xi) / (2 * np.sqrt(xi * xi + 2 * SQ2 * xi + 2)))


def lower_bounds(B: float) -> tuple[float, float, float]:
    """``(N_min, C_min, E_R_min)`` reached by :func:`families.rho_min`."""
    _xi(B)
    return float(B), float(B), 1.0 - binary_entropy((1 + B) / 2)


@dataclass(frozen=True)
class BoundCurves:
    B: np.ndarray
    n_max: np.ndarray
    c_max: np.ndarray
    n_min: np.ndarray
    c_min: np.ndarray
    er_min: np.ndarray
    er_max: np.ndarray | None = None


def bound_curves(grid, with_er_max: bool = False, ree_tol: float = 1e-9) -> BoundCurves:
    """Evaluate every bound on a grid of B values.

    ``with_er_max`` adds the numerical REE along the REE-maximal
    amplitude-damped family (``B0 = 0.81686``).
    """
    from .families import B0_REE
    from .ree import ree

    B = np.asarray(grid, dtype=float)
    low = np.array([lower_bounds(b) for b in B]).reshape(-1, 3)
    er_max = None
    if with_er_max:
        er_max = np.array([ree(rho_max(b, B0_REE), tol=ree_tol).value for b in B])
    return BoundCurves(
        B=B,
        n_max=np.array([n_max(b) for b in B]),
        c_max=np.array([c_max(b) for b in B]),
        n_min=low[:, 0],
        c_min=low[:, 1],
        er_min=low[:, 2],
        er_max=er_max,
    )


# ---------------------------------------------------------------------------
# concurrence vs negativity at B = 0


def c_of_n_upper_b0(N: float) -> float:
    """Largest concurrence of a non-violating state with negativity ``N``."""
    if N < 0 or N > N2 + 1e-12:
        raise DomainError(f"no B = 0 state has negativity {N}")
    if N <= N1:
        return float(np.sqrt(2 * N * (N + 1)) - N)
    return float(C_PLATEAU)


def c_of_n_lower_b0(N: float):
    """Smallest concurrence at negativity ``N`` for B = 0, or ``None`` where no
    analytic boundary is known (``N4 < N <= N2``)."""
    if N < 0 or N > N2 + 1e-12:
        raise DomainError(f"no B = 0 state has negativity {N}")
    return float(N) if N <= N4 else None


def plateau_state(alpha: float) -> DensityMatrix:
    """Amplitude-damped state on the ``C = 1/sqrt 2`` plateau (``M = 1``)."""
    if not ALPHA_MINUS - 1e-12 <= alpha <= ALPHA_PLUS + 1e-12:
        raise DomainError(f"alpha must lie in [{ALPHA_MINUS:.6f}, {ALPHA_PLUS:.6f}]")
    p = 1 / (2 * np.sqrt(2 * alpha * (1 - alpha)))
    return amplitude_damped(AmplitudeDampedParams(alpha, min(p, 1.0)))


def _bd_isotropic(n):
    a = (1 - n) / 6
    return bell_diagonal((a, a, a, (1 + n) / 2))


@dataclass(frozen=True)
class Landmark:
    name: str
    state: DensityMatrix
    N: float
    C: float
    B: float
    N_expected: float
    C_expected: float

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "N": self.N,
            "C": self.C,
            "B": self.B,
            "N_expected": self.N_expected,
            "C_expected": self.C_expected,
        }


def _landmark(name, rho, n_exp, c_exp):
    return Landmark(name, rho, negativity(rho), concurrence(rho), chsh_violation_b(rho), n_exp, c_exp)


def region_landmarks() -> dict[str, Landmark]:
    """Corner points X1..X5 of the B = 0 concurrence-negativity region."""
    a = (1 - N3) / 4
    x3 = bell_diagonal((0.0, a, a, (1 + N3) / 2))
    return {
        "X1": _landmark("X1", horodecki_state(C_PLATEAU), N1, C_PLATEAU),
        "X2": _landmark("X2", rho_max(0.0, 1.0), N2, C_PLATEAU),
        "X3": _landmark("X3", x3, N3, N3),
        "X4": _landmark("X4", _bd_isotropic(N4), N4, N4),
        "X5": _landmark("X5", _bd_isotropic(N1), N1, N1),
    }


def mixture_rho_q(q: float) -> DensityMatrix:
    """``q rho_X2 + (1 - q) rho_X4``."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q}")
    marks = region_landmarks()
    return DensityMatrix(q * marks["X2"].state.mat + (1 - q) * marks["X4"].state.mat)


@dataclass(frozen=True)
class OrderingPair:
    first: str
    second: str
    relation: str  # "N<,C>", "N=,C>", "N<,C=", "N>,C>"
    N: tuple
    C: tuple
    B: tuple
    holds: bool

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("first", "second", "relation", "N", "C", "B", "holds")}


def _relation_holds(rel, n, c, margin, eq_tol):
    dn, dc = n[0] - n[1], c[0] - c[1]
    checks = {"<": lambda d: d < -margin, ">": lambda d: d > margin, "=": lambda d: abs(d) <= eq_tol}
    rn, rc = rel.split(",")
    return checks[rn[1]](dn) and checks[rc[1]](dc)


def ordering_counterexamples(margin: float = 1e-6, eq_tol: float = 1e-9) -> list[OrderingPair]:
    """Pairs of non-violating states ordered differently by N and C.

    The last entry, (X2, X4), is a control pair ordered the same way.
    """
    marks = region_landmarks()
    out = []
    for a, b, rel in (("X1", "X4", "N<,C>"), ("X1", "X5", "N=,C>"), ("X1", "X2", "N<,C="), ("X2", "X4", "N>,C>")):
        n = (marks[a].N, marks[b].N)
        c = (marks[a].C, marks[b].C)
        bb = (marks[a].B, marks[b].B)
        ok = _relation_holds(rel, n, c, margin, eq_tol) and max(bb) <= eq_tol
        out.append(OrderingPair(a, b, rel, n, c, bb, ok))
    return out


# ---------------------------------------------------------------------------
# CHSH gradient operator and Verstraete-Wolf parameters


def chsh_gradient_operator(params: AmplitudeDampedParams) -> np.ndarray:
    """Operator ``B'`` with ``Tr(rho B') = B(rho)`` for amplitude-damped states.

    Raises :class:`UndefinedGradient` when the radicand under the
    normalization vanishes (no violation, the gradient of B diverges).
    """
    a, p = params.alpha, params.p
    y2 = p * p * a * (1 - a)
    c = 2 * p * np.sqrt(a * (1 - a))
    xx, yy, zz = PAULI_PAIRS[0, 0], PAULI_PAIRS[1, 1], PAULI_PAIRS[2, 2]
    one = np.eye(4)
    if 4 * y2 - (1 - 2 * p) ** 2 < 0:
        rad = (1 - 2 * p) ** 2 + 4 * y2 - 1
        op = (1 - 2 * p) * zz + c * xx - one
    else:
        rad = 8 * y2 - 1
        op = c * (xx + yy) - one
    if rad <= 1e-12:
        raise UndefinedGradient(f"radicand {rad:.3e} <= 1e-12; state does not violate CHSH")
    return op / np.sqrt(rad)


@dataclass(frozen=True)
class VwReport:
    B: float
    a_plus: float
    a_minus: float
    x: float
    y: float
    z: float
    cond1: bool
    lhs2: float
    rhs2: float
    lhs3: float
    rhs3: float
    saturation2: float
    saturation3: float

    @property
    def cond2(self) -> bool:
        return self.lhs2 >= self.rhs2 - 1e-12

    @property
    def cond3(self) -> bool:
        return self.lhs3 >= self.rhs3 - 1e-12

    @property
    def saturated(self) -> bool:
        return abs(self.saturation2) <= 1e-12 and abs(self.saturation3) <= 1e-12

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(cond2=self.cond2, cond3=self.cond3, saturated=self.saturated,
                 residual3=self.lhs3 - self.rhs3)
        return d


def vw_check(B: float) -> VwReport:
    """Verstraete-Wolf parameters of ``rho_max(B, 1)`` and their conditions.

    The third condition, taken as ``(1 - z)^2 - (a+ - a-)^2 >= (x + y)^2``,
    fails with ``lhs3 - rhs3 = -2 xi^2``; the saturation identities ``(1 +- z)^2 = (a+ +- a-)^2`` are reported
    separately.
    """
    xi = _xi(B)
    root = np.sqrt(xi * xi + 2 * SQ2 * xi + 2)
    base = -SQ2 * (xi * xi - 2) / (4 * (xi + SQ2))
    ap = base + SQ2 / 4 * root
    am = base - SQ2 / 4 * root
    x = y = SQ2 / 2 * xi
    z = -(SQ2 * xi + xi * xi) / (SQ2 * xi + 2)
    lhs2 = (1 + z) ** 2 - (ap + am) ** 2
    lhs3 = (1 - z) ** 2 - (ap - am) ** 2
    return VwReport(
        B=float(B),
        a_plus=float(ap),
        a_minus=float(am),
        x=float(x),
        y=float(y),
        z=float(z),
        cond1=bool(abs(z) <= 1 + 1e-12),
        lhs2=float(lhs2),
        rhs2=float((x - y) ** 2),
        lhs3=float(lhs3),
        rhs3=float((x + y) ** 2),
        saturation2=float(lhs2),
        saturation3=float(lhs3),
    )


# ---------------------------------------------------------------------------
# KKT optimality of the maximal states

# eigenvalues of T^T T closer than this are treated as tied
TIE_TOL = 1e-9
RANK_TOL = 1e-10


@dataclass
class KktReport:
    """Outcome of :func:`kkt_check`.

    ``X = B'(P) - B I + l (N/2 I + psi^Gamma)`` with ``B'(P)`` an element of
    the generalized gradient of ``B`` selected by the weight matrix
    ``subgradient``; ``lam = l N / 2 - B``.  ``closed_form`` holds the same
    diagnostics for the closed-form operator of :func:`chsh_gradient_operator`.
    """

    l: float
    lam: float
    X: np.ndarray
    subgradient: np.ndarray
    min_eig_x_on_support: float
    min_eig_x: float
    trace_x_rho: float
    condition0_residual: float
    condition1_residual: float
    passed: bool
    rank: int
    closed_form: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "l": self.l,
            "lambda": self.lam,
            "minEigXOnSupport": self.min_eig_x_on_support,
            "minEigX": self.min_eig_x,
            "traceXRho": self.trace_x_rho,
            "condition0Residual": self.condition0_residual,
            "condition1Residual": self.condition1_residual,
            "rank": self.rank,
            "subgradient": self.subgradient.tolist(),
            "closedForm": self.closed_form,
            "pass": self.passed,
        }


def _grad_operator(T, P, b):
    """``(sum_ij (T P)_ij s_i s_j - I) / B``."""
    G = T @ P
    return (np.einsum("ij,ijab->ab", G, PAULI_PAIRS) - np.eye(4)) / b


def _support_block(X, E):
    return E.conj().T @ X @ E


def _closed_form_diagnostics(params, rho, E, K, b):
    out = {}
    try:
        Bp = chsh_gradient_operator(params)
    except UndefinedGradient as exc:
        return {"error": str(exc)}
    base = Bp - b * np.eye(4)
    A, Ks = _support_block(base, E), _support_block(K, E)
    l = np.nan
    if E.shape[1] == 2 and abs(Ks[0, 1]) >= 1e-12:
        l, source = -float(np.real(A[0, 1] / Ks[0, 1])), "condition0"
    elif abs(Ks[0, 0]) >= 1e-12:
        l, source = -float(np.real(A[0, 0] / Ks[0, 0])), "condition1"
    else:
        source = "none"
    out["multiplier_source"] = source
    out["trace_rho_bprime"] = float(np.trace(rho @ Bp).real)
    if np.isfinite(l):
        X = base + l * K
        out["l"] = l
        out["min_eig_x_on_support"] = float(np.linalg.eigvalsh(_support_block(X, E))[0])
        out["min_eig_x"] = float(np.linalg.eigvalsh(X)[0])
    return out


def _subgradient_sdp(T, b, K):
    """Maximize the smallest eigenvalue of X over the generalized gradient and l."""
    import cvxpy as cp

    h, V = np.linalg.eigh(T.T @ T)
    P = cp.Variable((3, 3), symmetric=True)
    l = cp.Variable()
    t = cp.Variable()
    Pv = V.T @ P @ V
    cons = [P >> 0, np.eye(3) - P >> 0, cp.trace(P) == 2]
    for i in range(3):
        for j in range(3):
            if i != j and abs(h[i] - h[j]) > TIE_TOL:
                cons.append(Pv[i, j] == 0)
        if h[i] < h[1] - TIE_TOL:
            cons.append(Pv[i, i] == 0)
        if h[i] > h[1] + TIE_TOL:
            cons.append(Pv[i, i] == 1)
    G = T @ P
    Bp = sum(G[i, j] * PAULI_PAIRS[i, j] for i in range(3) for j in range(3)) / b - np.eye(4) / b
    X = Bp - b * np.eye(4) + l * K
    cons.append((X + X.H) / 2 - t * np.eye(4) >> 0)
    cp.Problem(cp.Maximize(t), cons).solve(solver="CLARABEL")
    Pval = np.asarray(P.value)
    return 0.5 * (Pval + Pval.T), float(l.value)


def kkt_check_state(rho, tol: float = 1e-8, params: AmplitudeDampedParams | None = None) -> KktReport:
    """KKT test for maximal entanglement at fixed CHSH violation, any rank <= 2 state.

    The stationarity operator ``X`` must be positive semidefinite and vanish
    on the support of ``rho``.  ``B`` is not differentiable where ``T^T T``
    has tied eigenvalues (which is where the maximal states sit), so ``X`` is
    built from the best element of the generalized gradient, found by a
    small SDP; the multiplier is then refitted on the support.
    """
    from .measures import negativity_witness

    r = np.asarray(rho.mat if isinstance(rho, DensityMatrix) else rho, dtype=complex)
    w, v = np.linalg.eigh(r)
    w, v = w[::-1], v[:, ::-1]
    rank = int(np.sum(w > RANK_TOL))
    if rank > 2:
        raise RankError(f"state has rank {rank}; the KKT construction needs rank <= 2")
    b = chsh_violation_b(r)
    if b <= 1e-6:
        raise UndefinedGradient(f"B = {b:.3e}; gradient of B diverges at the violation boundary")
    wit = negativity_witness(r)
    n = negativity(r)
    K = n / 2 * np.eye(4) + wit.psi_gamma
    E = v[:, :rank]

    from .qcore import correlation_matrix

    T = correlation_matrix(r)
    P, l = _subgradient_sdp(T, b, K)
    base = _grad_operator(T, P, b) - b * np.eye(4)
    # refit l so that X vanishes on the support as closely as possible
    A, Ks = _support_block(base, E), _support_block(K, E)
    kk = np.real(np.vdot(Ks, Ks))
    if kk >= 1e-24:
        l = -float(np.real(np.vdot(Ks, A)) / kk)
    X = base + l * K
    X = 0.5 * (X + X.conj().T)
    Xs = _support_block(X, E)
    res0 = float(abs(Xs[0, 1])) if rank == 2 else 0.0
    res1 = float(abs(Xs[0, 0].real))
    report = KktReport(
        l=l,
        lam=l * n / 2 - b,
        X=X,
        subgradient=P,
        min_eig_x_on_support=float(np.linalg.eigvalsh(Xs)[0]),
        min_eig_x=float(np.linalg.eigvalsh(X)[0]),
        trace_x_rho=float(np.trace(X @ r).real),
        condition0_residual=res0,
        condition1_residual=res1,
        passed=False,
        rank=rank,
    )
    report.passed = bool(
        report.min_eig_x >= -tol
        and report.min_eig_x_on_support >= -tol
        and abs(report.trace_x_rho) <= tol
        and res0 <= tol
        and res1 <= tol
    )
    if params is not None:
        report.closed_form = _closed_form_diagnostics(params, r, E, K, b)
    return report


def kkt_check(params: AmplitudeDampedParams, tol: float = 1e-8) -> KktReport:
    """KKT test for the amplitude-damped state ``rho(alpha, p)``.

    Examples
    --------
    >>> from bellbounds.families import rho_max_params
    >>> kkt_check(rho_max_params(0.5)).passed
    True
    """
    return kkt_check_state(amplitude_damped(params), tol=tol, params=params)
