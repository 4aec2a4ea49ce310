"""State families: Werner, amplitude-damped, Bell-diagonal, the extremal
rho_min / rho_max curves, and reproducible random states."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .qcore import BELL_BASIS, PSI_MINUS, DensityMatrix, ket, projector

# CHSH level above which the REE-maximizing amplitude-damped states become pure
B0_REE = 0.81686

# samples per PRNG substream; fixed so sharding never changes the output
BLOCK_SIZE = 4096


def _unit(name, v):
    if not (0.0 <= v <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {v}")
    return float(v)


def werner(p: float) -> DensityMatrix:
    p = _unit("p", p)
    return DensityMatrix(p * projector(PSI_MINUS) + (1 - p) / 4 * np.eye(4))


@dataclass(frozen=True)
class AmplitudeDampedParams:
    alpha: float
    p: float

    def __post_init__(self):
        _unit("alpha", self.alpha)
        _unit("p", self.p)


def psi_alpha(alpha: float) -> np.ndarray:
    return np.sqrt(alpha) * ket("01") + np.sqrt(1 - alpha) * ket("10")


def amplitude_damped(params, p=None) -> DensityMatrix:
    """``p |psi_alpha><psi_alpha| + (1 - p) |00><00|``.

    Accepts an :class:`AmplitudeDampedParams` or ``(alpha, p)``.
    """
    if p is not None:
        params = AmplitudeDampedParams(params, p)
    a, p = params.alpha, params.p
    return DensityMatrix(p * projector(psi_alpha(a)) + (1 - p) * projector(ket("00")))


def horodecki_state(p: float) -> DensityMatrix:
    return amplitude_damped(AmplitudeDampedParams(0.5, p))


@dataclass(frozen=True)
class BellDiagonalParams:
    lambdas: tuple

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.shape != (4,) or np.any(lam < 0) or abs(lam.sum() - 1) > 1e-12:
            raise DomainError(f"Bell-diagonal weights must be a 4-point distribution, got {self.lambdas}")
        object.__setattr__(self, "lambdas", tuple(float(v) for v in lam))


def bell_diagonal(params) -> DensityMatrix:
    """Mixture of the Bell states in the order Phi+, Phi-, Psi+, Psi-."""
    if not isinstance(params, BellDiagonalParams):
        params = BellDiagonalParams(tuple(params))
    return DensityMatrix(sum(l * projector(b) for l, b in zip(params.lambdas, BELL_BASIS)))


def rho_min(B: float) -> DensityMatrix:
    """Bell-diagonal state of least entanglement at CHSH level ``B``."""
    B = _unit("B", B)
    return bell_diagonal(((1 + B) / 2, (1 - B) / 2, 0.0, 0.0))


def rho_max_params(B: float, B0: float = 1.0) -> AmplitudeDampedParams:
    """Amplitude-damping parameters of the maximally entangled state at level ``B``.

    ``B0 = 1`` gives the negativity/concurrence optimum for every ``B``;
    ``B0 = 0.81686`` gives the REE optimum, which switches to ``p = 1``
    (pure states) for ``B >= B0``.
    """
    B = _unit("B", B)
    if B0 not in (1.0, B0_REE):
        raise DomainError(f"B0 must be 1 or {B0_REE}, got {B0}")
    xi = np.sqrt(1 + B * B)
    if B0 == 1.0:
        p = (2 + np.sqrt(2) * xi) / 4
        ratio = 4 * xi**4 / (xi**2 + np.sqrt(2) * xi) ** 2
        alpha = 0.5 * (1 - np.sqrt(max(0.0, 1 - ratio)))
    else:
        # p = 1 at and above B0 (the range allowed at B = B0 is resolved upward)
        p = (2 + np.sqrt(2 + 2 * B * B)) / 4 if B < B0 else 1.0
        alpha = (p - np.sqrt(max(0.0, 5 * p * p - 4 * p - B * B))) / (2 * p)
    return AmplitudeDampedParams(float(min(max(alpha, 0.0), 1.0)), float(min(p, 1.0)))


def rho_max(B: float, B0: float = 1.0) -> DensityMatrix:
    return amplitude_damped(rho_max_params(B, B0))


# ---------------------------------------------------------------------------
# random states


@dataclass(frozen=True)
class RandomStateSpec:
    rank: int = 4
    seed: int = 0
    count: int = 1

    def __post_init__(self):
        if self.rank not in (1, 2, 3, 4):
            raise DomainError(f"rank must be 1..4, got {self.rank}")
        if self.count < 0:
            raise DomainError("count must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


def substream(seed: int, index: int) -> np.random.Generator:
    """Philox generator for substream ``index`` of ``seed``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def _block(seed, rank, b):
    rng = substream(seed, b)
    g = rng.standard_normal((BLOCK_SIZE, 4, rank, 2))
    return g[..., 0] + 1j * g[..., 1]


def random_state_array(spec: RandomStateSpec, start: int = 0) -> np.ndarray:
    """Samples ``start .. start + count - 1`` as a ``(count, 4, 4)`` array.

    ``rho = G G^dagger / Tr(G G^dagger)`` with ``G`` a 4 x rank complex
    Gaussian matrix; rank 4 gives the Hilbert-Schmidt measure.  Sample ``i``
    always comes from block ``i // BLOCK_SIZE``, so any split of the index
    range reproduces the same states.
    """
    stop = start + spec.count
    out = np.empty((spec.count, 4, 4), dtype=complex)
    b0, b1 = start // BLOCK_SIZE, (stop - 1) // BLOCK_SIZE if spec.count else -1
    pos = 0
    for b in range(b0, b1 + 1):
        g = _block(spec.seed, spec.rank, b)
        lo = max(start, b * BLOCK_SIZE) - b * BLOCK_SIZE
        hi = min(stop, (b + 1) * BLOCK_SIZE) - b * BLOCK_SIZE
        gg = g[lo:hi]
        r = gg @ np.conj(np.swapaxes(gg, -1, -2))
        r /= np.trace(r, axis1=-2, axis2=-1).real[:, None, None]
        out[pos : pos + hi - lo] = r
        pos += hi - lo
    return out


def random_state(spec: RandomStateSpec, start: int = 0) -> list[DensityMatrix]:
    return [DensityMatrix(r) for r in random_state_array(spec, start)]
