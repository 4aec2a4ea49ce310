"""Two-copy measurement of ``T^T T`` and a shot-level simulator of the
six-setting optical scheme.

With ``U = I - 4 |Psi-><Psi-|`` acting on the two A photons and
``s_m (x) s_n`` on the two B photons,

    (T^T T)_mn = Tr[(rho (x) rho)' (U (x) s_m s_n)],

where the prime reorders ``A1 B1 A2 B2`` into ``A1 A2 B1 B2``.

Event model.  Each shot falls in one of two regimes.  In the *overlap*
regime the A photons interfere and leave by different ports (a cross
coincidence) exactly on their singlet component; a cross event with right
outcome ``r`` scores ``a = -4 r``.  In the *delayed* regime the A photons are
distinguishable, give a cross coincidence with probability 1/2 and score
``a = +r``, with ``r`` drawn from the product of the B marginals.  Shots
without a cross coincidence score 0.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyRegime
from .families import substream
from .qcore import (
    AXES,
    PAULI,
    PAULI_PAIRS,
    PSI_MINUS,
    as_matrix,
    axis_index,
    hermitian_eig,
    projector,
    reduced_state,
)

OVERLAP, DELAYED = 0, 1
REGIME_NAMES = ("overlap", "delayed")
DEFAULT_WEIGHTS = (1 / 3, 2 / 3)
ESTIMATORS = ("regimeNormalized", "pooledK0")

SINGLET_PROJECTOR = projector(PSI_MINUS).real
SWAP = np.eye(4)[[0, 2, 1, 3]]
SWAP_A2B1 = np.kron(np.kron(np.eye(2), SWAP), np.eye(2))


@dataclass(frozen=True)
class Setting:
    m: str
    n: str

    def __post_init__(self):
        axis_index(self.m)
        axis_index(self.n)

    @property
    def label(self) -> str:
        return self.m + self.n


SCHEDULE = tuple(Setting(AXES[i], AXES[j]) for i in range(3) for j in range(i, 3))


def u_operator() -> np.ndarray:
    return np.eye(4) - 4 * SINGLET_PROJECTOR


def swap_reorder(rho1, rho2) -> np.ndarray:
    """``S (rho1 (x) rho2) S`` with ``S`` swapping the A2 and B1 slots."""
    big = np.kron(as_matrix(rho1), as_matrix(rho2))
    return SWAP_A2B1 @ big @ SWAP_A2B1


def _pauli_pair(s: Setting):
    return PAULI_PAIRS[axis_index(s.m), axis_index(s.n)]


def ttt_expectation(rho, s: Setting) -> float:
    op = np.kron(u_operator(), _pauli_pair(s))
    return float(np.trace(swap_reorder(rho, rho) @ op).real)


def ttt_expectation_batch(rhos, s: Setting) -> np.ndarray:
    """:func:`ttt_expectation` for a stack of states, contracting indices
    directly instead of forming 16x16 matrices."""
    r = np.asarray(rhos, dtype=complex).reshape(-1, 2, 2, 2, 2)  # a b a' b'
    U = u_operator().reshape(2, 2, 2, 2)  # a1 a2, a1' a2'
    P = _pauli_pair(s).reshape(2, 2, 2, 2)  # b1 b2, b1' b2'
    # <a1 b1|r|a1' b1'> <a2 b2|r|a2' b2'> U[a1' a2', a1 a2] P[b1' b2', b1 b2]
    val = np.einsum("kabcd,kefgh,cgae,dhbf->k", r, r, U, P, optimize=True)
    return val.real


def _event_probabilities(rho, s: Setting):
    """Per-regime joint probabilities of (cross, r) in the order
    (cross, r=+1), (cross, r=-1), (no cross, r=+1), (no cross, r=-1)."""
    r = as_matrix(rho)
    big = swap_reorder(r, r)
    pp = _pauli_pair(s)
    out = {}
    rows = []
    for cross_op in (SINGLET_PROJECTOR, np.eye(4) - SINGLET_PROJECTOR):
        for sign in (1, -1):
            proj = (np.eye(4) + sign * pp) / 2
            rows.append(np.trace(big @ np.kron(cross_op, proj)).real)
    out[OVERLAP] = np.clip(np.array(rows), 0.0, None)
    rb = reduced_state(r, 1)
    ym = np.trace(rb @ PAULI[axis_index(s.m)]).real
    yn = np.trace(rb @ PAULI[axis_index(s.n)]).real
    plus = (1 + ym * yn) / 2
    d = np.array([plus, 1 - plus, plus, 1 - plus]) / 2
    out[DELAYED] = np.clip(d, 0.0, None)
    for k in out:
        out[k] = out[k] / out[k].sum()
    return out


@dataclass(frozen=True)
class ShotStream:
    """Shots for one setting; ``a`` is the assigned value of each shot."""

    setting: Setting
    regime: np.ndarray  # uint8, OVERLAP or DELAYED
    cross: np.ndarray  # bool, cross-port coincidence at the left module
    r: np.ndarray  # int8, right-module outcome +1 / -1
    a: np.ndarray  # int8

    def __len__(self):
        return len(self.a)

    def to_csv(self, offset: int = 0) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["shot_index", "setting", "regime", "a_value"])
        for i, (g, a) in enumerate(zip(self.regime, self.a)):
            w.writerow([offset + i, self.setting.label, REGIME_NAMES[g], int(a)])
        return buf.getvalue()


def _check_weights(weights):
    w = np.asarray(weights, dtype=float)
    if w.shape != (2,) or np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
        raise DomainError(f"regime weights must be two non-negative numbers summing to 1, got {weights}")
    return w / w.sum()


def sample_shots(rho, s: Setting, shots: int, weights=DEFAULT_WEIGHTS, seed: int = 0, stream: int | None = None) -> ShotStream:
    """Simulate ``shots`` measurement instances for setting ``s``.

    The PRNG substream is keyed by ``(seed, stream)``; ``stream`` defaults
    to the setting's position in :data:`SCHEDULE`.
    """
    w = _check_weights(weights)
    if shots < 1:
        raise DomainError("shots must be >= 1")
    if stream is None:
        stream = SCHEDULE.index(Setting(*sorted((s.m, s.n))))
    rng = substream(seed, stream)
    probs = _event_probabilities(rho, s)
    regime = (rng.random(shots) >= w[0]).astype(np.uint8)
    u = rng.random(shots)
    event = np.empty(shots, dtype=np.int64)
    for g in (OVERLAP, DELAYED):
        mask = regime == g
        cdf = np.cumsum(probs[g])
        event[mask] = np.minimum(np.searchsorted(cdf, u[mask], side="right"), 3)
    cross = event < 2
    r = np.where(event % 2 == 0, 1, -1).astype(np.int8)
    a = np.where(cross, np.where(regime == OVERLAP, -4 * r, r), 0).astype(np.int8)
    return ShotStream(s, regime, cross, r, a)


def simulate(rho, shots: int, weights=DEFAULT_WEIGHTS, seed: int = 0) -> list[ShotStream]:
    """One stream per setting of the six-setting schedule."""
    return [sample_shots(rho, s, shots, weights, seed, stream=i) for i, s in enumerate(SCHEDULE)]


@dataclass(frozen=True)
class TttEstimate:
    matrix: np.ndarray
    stderr: np.ndarray
    shots: int
    estimator: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "matrix": self.matrix.tolist(),
                "stderr": self.stderr.tolist(),
                "shots": int(self.shots),
                "estimator": self.estimator,
            }
        )


def _entry_regime(st: ShotStream):
    v = np.where(st.cross, st.r, 0).astype(float)
    out = 0.0
    var = 0.0
    for g, scale in ((OVERLAP, -4.0), (DELAYED, 2.0)):
        x = v[st.regime == g]
        if len(x) == 0:
            raise EmptyRegime(f"setting {st.setting.label}: no {REGIME_NAMES[g]} shots")
        out += scale * x.mean()
        var += scale**2 * x.var(ddof=1) / len(x) if len(x) > 1 else 0.0
    return out, np.sqrt(var)


def _entry_pooled(st: ShotStream):
    a = st.a.astype(float)
    d = (np.abs(st.a) == 1).astype(float)
    k0 = d.sum()
    if k0 == 0:
        raise EmptyRegime(f"setting {st.setting.label}: no shots with |a| = 1")
    est = a.sum() / k0
    # ratio estimator, delta method
    z = a - est * d
    se = np.sqrt(z.var(ddof=1) * len(a)) / k0 if len(a) > 1 else 0.0
    return est, se


def estimate_ttt(streams, estimator: str = "regimeNormalized") -> TttEstimate:
    """Fold per-setting shot streams into an estimate of ``T^T T``."""
    if estimator in ("regime", "pooled"):
        estimator = {"regime": "regimeNormalized", "pooled": "pooledK0"}[estimator]
    if estimator not in ESTIMATORS:
        raise DomainError(f"unknown estimator {estimator!r}")
    by = {}
    for st in streams:
        by[Setting(*sorted((st.setting.m, st.setting.n)))] = st
    missing = [s.label for s in SCHEDULE if s not in by]
    if missing:
        raise DomainError(f"missing settings: {', '.join(missing)}")
    fold = _entry_regime if estimator == "regimeNormalized" else _entry_pooled
    mat = np.zeros((3, 3))
    se = np.zeros((3, 3))
    for s in SCHEDULE:
        i, j = axis_index(s.m), axis_index(s.n)
        v, e = fold(by[s])
        mat[i, j] = mat[j, i] = v
        se[i, j] = se[j, i] = e
    return TttEstimate(mat, se, int(sum(len(by[s]) for s in SCHEDULE)), estimator)


@dataclass(frozen=True)
class BEstimate:
    M: float
    B: float
    out_of_range: bool
    M_stderr: float = float("nan")
    B_stderr: float = float("nan")


def _m_of(mat):
    h = hermitian_eig(np.asarray(mat, dtype=complex), check=False).eigenvalues
    return h[..., -1] + h[..., -2]


def b_from_ttt(estimate, draws: int = 4000, seed: int = 0) -> BEstimate:
    """``M = h1 + h2`` and ``B = sqrt(max(0, min(M, 2) - 1))`` from an estimate.

    ``out_of_range`` flags a noisy ``M`` outside [0, 2].  For a
    :class:`TttEstimate` the standard errors come from a parametric bootstrap
    over the per-entry errors (the top eigenvalues are often degenerate, so
    the delta method is unreliable).
    """
    mat = estimate.matrix if isinstance(estimate, TttEstimate) else np.asarray(estimate, dtype=float)
    mat = 0.5 * (mat + mat.T)
    m = float(_m_of(mat))
    b = float(np.sqrt(max(0.0, min(m, 2.0) - 1.0)))
    flag = not 0.0 <= m <= 2.0
    if not isinstance(estimate, TttEstimate):
        return BEstimate(m, b, flag)
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(3)
    noise = np.zeros((draws, 3, 3))
    noise[:, iu[0], iu[1]] = rng.standard_normal((draws, 6)) * estimate.stderr[iu]
    noise = noise + np.triu(noise, 1).transpose(0, 2, 1)
    ms = _m_of(mat + noise)
    bs = np.sqrt(np.maximum(0.0, np.minimum(ms, 2.0) - 1.0))
    return BEstimate(m, b, flag, float(ms.std(ddof=1)), float(bs.std(ddof=1)))


def exact_ttt(rho) -> np.ndarray:
    from .qcore import correlation_matrix

    T = correlation_matrix(rho)
    return T.T @ T


def error_scaling(rho, shots_grid, replicates: int = 8, weights=DEFAULT_WEIGHTS, estimator="regimeNormalized", seed: int = 0):
    """RMS Frobenius error of the estimate against the exact ``T^T T``.

    Returns ``(shots_grid, rms_errors, slope)`` with ``slope`` the
    least-squares slope of log error vs log shots.
    """
    exact = exact_ttt(rho)
    grid = np.asarray(shots_grid, dtype=int)
    errs = []
    for gi, n in enumerate(grid):
        sq = []
        for rep in range(replicates):
            rep_seed = int(np.random.SeedSequence([seed, gi, rep]).generate_state(1, np.uint64)[0])
            est = estimate_ttt(simulate(rho, int(n), weights, rep_seed), estimator)
            sq.append(np.sum((est.matrix - exact) ** 2))
        errs.append(np.sqrt(np.mean(sq)))
    errs = np.array(errs)
    slope = float(np.polyfit(np.log(grid), np.log(errs), 1)[0])
    return grid, errs, slope
