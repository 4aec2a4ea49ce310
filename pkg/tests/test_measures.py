import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from bellbounds.errors import DegenerateCorrelation, DomainError, NotEntangled
from bellbounds.families import amplitude_damped, horodecki_state, werner
from bellbounds.measures import (
    ChshSettings,
    binary_entropy,
    chsh_expectation,
    chsh_violation_b,
    concurrence,
    horodecki_m,
    measure_report,
    negativity,
    negativity_sum_form,
    negativity_witness,
    optimal_settings,
    von_neumann_entropy,
)
from bellbounds.qcore import ket, projector, singlet
from strategies import states

SQ2 = np.sqrt(2)


def _local_unitary(seed):
    rng = np.random.default_rng(seed)
    us = []
    for _ in range(2):
        z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        q, r = np.linalg.qr(z)
        us.append(q * (np.diag(r) / np.abs(np.diag(r))))
    return np.kron(*us)


class TestHorodecki:
    def test_werner_threshold(self):
        assert horodecki_m(werner(1 / SQ2)) == pytest.approx(1.0, abs=1e-12)
        assert chsh_violation_b(werner(1 / SQ2)) == 0.0

    def test_singlet(self):
        assert horodecki_m(singlet()) == pytest.approx(2.0, abs=1e-14)
        assert chsh_violation_b(singlet()) == pytest.approx(1.0, abs=1e-14)

    def test_product(self):
        assert horodecki_m(projector(ket("00"))) == pytest.approx(1.0, abs=1e-14)

    def test_werner_values(self):
        assert chsh_violation_b(werner(0.9)) == pytest.approx(0.787400787401181, abs=1e-12)
        assert chsh_violation_b(werner(0.5)) == 0.0

    @given(states())
    def test_matches_lapack(self, rho):
        assert horodecki_m(rho) == pytest.approx(oracles.horodecki_m(rho), abs=1e-11)
        assert chsh_violation_b(rho) == pytest.approx(np.sqrt(max(0, oracles.horodecki_m(rho) - 1)), abs=1e-6)


class TestChshSettings:
    def test_textbook_singlet(self):
        z, x = np.array([0, 0, 1.0]), np.array([1.0, 0, 0])
        s = ChshSettings(z, x, -(z + x) / SQ2, (x - z) / SQ2)
        assert chsh_expectation(singlet(), s) == pytest.approx(2 * SQ2, abs=1e-14)

    def test_product_all_z(self):
        z = np.array([0, 0, 1.0])
        assert chsh_expectation(projector(ket("00")), ChshSettings(z, z, z, z)) == pytest.approx(2.0)

    @pytest.mark.parametrize("rho,m", [(singlet(), 2.0), (werner(0.9), 1.62)])
    def test_optimal(self, rho, m):
        val = chsh_expectation(rho, optimal_settings(rho))
        assert abs(val) == pytest.approx(2 * np.sqrt(m), abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateCorrelation):
            optimal_settings(np.eye(4) / 4)

    def test_not_unit(self):
        with pytest.raises(DomainError):
            ChshSettings([1, 1, 0], [1, 0, 0], [1, 0, 0], [1, 0, 0])

    @given(states(), st.integers(0, 2**31))
    def test_optimal_beats_random(self, rho, seed):
        m = oracles.horodecki_m(rho)
        if m < 1e-8:
            return
        best = abs(chsh_expectation(rho, optimal_settings(rho)))
        assert best == pytest.approx(2 * np.sqrt(m), abs=1e-8)
        rng = np.random.default_rng(seed)
        for _ in range(100):
            v = rng.standard_normal((4, 3))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            assert abs(chsh_expectation(rho, ChshSettings(*v))) <= best + 1e-8

    @given(states(), st.sampled_from([[1, 0, 0], [0, 0, 1], [0.6, 0.8, 0]]))
    def test_collapsed_settings(self, rho, a):
        a = np.array(a, dtype=float)
        val = chsh_expectation(rho, ChshSettings(a, a, a, a))
        assert val == pytest.approx(2 * a @ oracles.t_matrix(rho) @ a, abs=1e-12)
        assert abs(val) <= 2 + 1e-12


class TestNegativity:
    @pytest.mark.parametrize("p,n", [(1 / 3, 0.0), (0.9, 0.85), (1.0, 1.0), (0.2, 0.0)])
    def test_werner(self, p, n):
        assert negativity(werner(p)) == pytest.approx(n, abs=1e-14)

    def test_singlet(self):
        assert negativity(singlet()) == pytest.approx(1.0, abs=1e-14)

    def test_sum_form_on_hs_states(self, hs_states):
        assert np.allclose(negativity(hs_states), negativity_sum_form(hs_states), atol=1e-14)

    @given(states())
    def test_matches_lapack_and_either_subsystem(self, rho):
        assert negativity(rho) == pytest.approx(oracles.negativity(rho), abs=1e-12)
        assert negativity(rho, 0) == pytest.approx(negativity(rho, 1), abs=1e-12)


class TestConcurrence:
    def test_horodecki(self):
        assert concurrence(horodecki_state(0.6)) == pytest.approx(0.6, abs=1e-14)

    def test_singlet(self):
        assert concurrence(singlet()) == pytest.approx(1.0, abs=1e-14)

    def test_ads_example(self):
        assert concurrence(amplitude_damped(0.2, 0.8)) == pytest.approx(0.64, abs=1e-14)

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_ads_formula(self, a, p):
        assert concurrence(amplitude_damped(a, p)) == pytest.approx(2 * p * np.sqrt(a * (1 - a)), abs=1e-12)

    @given(states())
    def test_matches_wootters_reference(self, rho):
        # the reference takes sqrt of eigenvalues, which loses ~1e-8 on rank-deficient input
        assert concurrence(rho) == pytest.approx(oracles.concurrence(rho), abs=1e-6)

    def test_matches_reference_full_rank(self, hs_states):
        ref = np.array([oracles.concurrence(r) for r in hs_states[:300]])
        assert np.allclose(concurrence(hs_states[:300]), ref, atol=1e-10)


@given(states(), st.integers(0, 2**31))
def test_local_unitary_invariance(rho, seed):
    u = _local_unitary(seed)
    rot = u @ rho @ u.conj().T
    for f in (negativity, concurrence, chsh_violation_b):
        assert f(rot) == pytest.approx(f(rho), abs=1e-9)


@given(states())
def test_measure_orderings(rho):
    b, n, c = chsh_violation_b(rho), negativity(rho), concurrence(rho)
    assert n <= c + 1e-9
    if b > 0:
        assert n > 0 and c > 0
    assert 0 <= b <= 1 and 0 <= n <= 1 and 0 <= c <= 1


def test_violation_implies_entanglement_bulk():
    from bellbounds.families import RandomStateSpec, random_state_array

    r = random_state_array(RandomStateSpec(seed=11, count=10_000))
    b, n, c = chsh_violation_b(r), negativity(r), concurrence(r)
    viol = b > 0
    assert viol.any()
    assert np.all(n[viol] > 0) and np.all(c[viol] > 0)
    assert np.all(n <= c + 1e-9)


class TestWitness:
    def test_singlet(self):
        w = negativity_witness(singlet())
        assert np.trace(w.psi_gamma @ singlet().mat).real == pytest.approx(-0.5, abs=1e-14)

    def test_werner(self):
        rho = werner(0.9)
        w = negativity_witness(rho)
        assert -2 * np.trace(w.psi_gamma @ rho.mat).real == pytest.approx(0.85, abs=1e-13)

    def test_separable(self):
        with pytest.raises(NotEntangled):
            negativity_witness(werner(0.3))


class TestEntropy:
    @pytest.mark.parametrize("x,h", [(0.5, 1.0), (0.0, 0.0), (1.0, 0.0), (0.75, 0.8112781244591328)])
    def test_binary(self, x, h):
        assert binary_entropy(x) == pytest.approx(h, abs=1e-14)

    def test_binary_domain(self):
        with pytest.raises(DomainError):
            binary_entropy(1.5)

    def test_von_neumann(self):
        assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(2.0)
        assert von_neumann_entropy(singlet()) == pytest.approx(0.0, abs=1e-12)


def test_measure_report_singlet():
    rep = measure_report(singlet())
    assert rep.as_dict() == pytest.approx(
        {"M": 2.0, "B": 1.0, "N": 1.0, "C": 1.0, "E_R": 1.0, "ree_converged": True, "ree_iterations": 0}, abs=1e-12
    )
