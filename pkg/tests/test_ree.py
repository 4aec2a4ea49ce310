import warnings

import numpy as np
import pytest
from hypothesis import given, settings

import oracles
from bellbounds.errors import DomainError, NoConvergenceWarning
from bellbounds.families import amplitude_damped, bell_diagonal, psi_alpha, rho_min, werner
from bellbounds.qcore import ket, partial_transpose, projector, singlet
from bellbounds.ree import project_feasible, ree, ree_pure_shortcut, relative_entropy
from strategies import states

# S(rho || sigma) for Werner(0.5) against the symmetric Bell-diagonal CSS,
# frozen from a 20-digit evaluation of 0.625 log2 1.25 + 0.375 log2 0.75
WERNER_HALF_REE = 0.045565997075035035


def test_rho_min_half():
    assert ree(rho_min(0.5)).value == pytest.approx(0.18872187554086714, abs=1e-8)


def test_singlet():
    res = ree(singlet())
    assert res.value == pytest.approx(1.0, abs=1e-12)
    assert res.method == "pure"


def test_werner_half_frozen():
    assert ree(werner(0.5)).value == pytest.approx(WERNER_HALF_REE, abs=1e-8)


def test_werner_half_bruteforce():
    lam = (0.125, 0.125, 0.125, 0.625)
    assert oracles.bell_diagonal_ree_bruteforce(lam) == pytest.approx(WERNER_HALF_REE, abs=1e-6)
    assert ree(bell_diagonal(lam)).value == pytest.approx(oracles.bell_diagonal_ree_bruteforce(lam), abs=1e-4)


@pytest.mark.parametrize("lam", [(0.7, 0.1, 0.1, 0.1), (0.6, 0.3, 0.1, 0.0), (0.05, 0.15, 0.2, 0.6)])
def test_bell_diagonal_bruteforce(lam):
    assert ree(bell_diagonal(lam)).value == pytest.approx(oracles.bell_diagonal_ree_bruteforce(lam), abs=1e-4)


class TestShortcut:
    def test_pure_values(self):
        assert ree_pure_shortcut(singlet()) == pytest.approx(1.0)
        assert ree_pure_shortcut(projector(psi_alpha(0.5))) == pytest.approx(1.0)
        assert ree_pure_shortcut(projector(ket("00"))) == pytest.approx(0.0, abs=1e-15)

    def test_mixed_is_none(self):
        assert ree_pure_shortcut(werner(0.9)) is None

    def test_pure_css_is_optimal(self):
        rho = projector(psi_alpha(0.2))
        res = ree(rho)
        assert relative_entropy(rho, res.css) == pytest.approx(res.value, abs=1e-10)
        assert np.linalg.eigvalsh(partial_transpose(res.css))[0] >= -1e-12


def test_ppt_input_is_zero():
    res = ree(werner(0.3))
    assert res.value == 0.0 and res.method == "ppt"


def test_tol_domain():
    with pytest.raises(DomainError):
        ree(werner(0.9), tol=1e-2)


def test_iteration_cap_warns():
    with pytest.warns(NoConvergenceWarning):
        res = ree(amplitude_damped(0.3, 0.8), max_iter=2, method="pgd")
    assert not res.converged


@settings(max_examples=15)
@given(states())
def test_css_feasible_and_consistent(rho):
    with warnings.catch_warnings():
        warnings.simplefilter("error", NoConvergenceWarning)
        res = ree(rho)
    sigma = res.css
    assert abs(np.trace(sigma).real - 1) <= 1e-10
    assert np.linalg.eigvalsh(sigma)[0] >= -1e-10
    assert np.linalg.eigvalsh(partial_transpose(sigma))[0] >= -1e-10
    assert res.value >= 0
    assert relative_entropy(rho, sigma) == pytest.approx(res.value, abs=1e-9)
    # E_R is bounded by the distance to any separable state, e.g. the maximally mixed one
    assert res.value <= relative_entropy(rho, np.eye(4) / 4) + 1e-9


@pytest.mark.parametrize("seed", [1, 2])
@pytest.mark.parametrize("rank", [3, 4])
def test_barrier_agrees_with_projected_gradient(rank, seed):
    from bellbounds.families import RandomStateSpec, random_state_array

    rho = random_state_array(RandomStateSpec(rank=rank, seed=seed))[0]
    a = ree(rho, method="pgd", max_iter=5000)
    b = ree(rho, method="barrier")
    assert a.converged and b.converged
    assert b.method == "barrier"
    assert a.value == pytest.approx(b.value, abs=1e-9)


def test_barrier_rank_deficient():
    # amplitude-damped states are rank 2; the CSS sits on the boundary
    rho = amplitude_damped(0.3, 0.8)
    res = ree(rho, method="barrier")
    assert res.converged
    assert np.linalg.eigvalsh(partial_transpose(res.css))[0] >= -1e-10
    assert ree(rho).value == pytest.approx(res.value, abs=1e-9)


def test_unknown_method():
    with pytest.raises(DomainError):
        ree(werner(0.9), method="newton")


def test_tighter_tol_does_not_increase():
    rho = amplitude_damped(0.3, 0.85)
    loose, tight = ree(rho, tol=1e-5), ree(rho, tol=1e-9)
    assert tight.value <= loose.value + 1e-5


def test_projection_fixed_point():
    s, _ = project_feasible(np.eye(4) / 4)
    assert np.allclose(s, np.eye(4) / 4)
    s, resid = project_feasible(singlet().mat)
    assert np.linalg.eigvalsh(partial_transpose(s))[0] >= -1e-12
    assert np.linalg.eigvalsh(s)[0] >= -1e-12
