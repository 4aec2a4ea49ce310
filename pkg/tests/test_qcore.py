import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellbounds.errors import InvalidState, NonHermitianInput, ParseError
from bellbounds.families import werner
from bellbounds.qcore import (
    PSI_MINUS,
    SX,
    SY,
    SZ,
    DensityMatrix,
    bloch_decompose,
    correlation_matrix,
    hermitian_eig,
    ket,
    parse_state,
    partial_transpose,
    pauli_expectation,
    projector,
    reduced_state,
    serialize_state,
    singlet,
    tensor,
)
from bellbounds.families import amplitude_damped

from strategies import hermitian4, states


def _random_unitary(rng, n):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


class TestEigensolver:
    def test_diagonal(self):
        es = hermitian_eig(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(es.eigenvalues, [1, 2, 3], atol=1e-14)

    def test_pauli_x(self):
        assert np.allclose(hermitian_eig(SX).eigenvalues, [-1, 1], atol=1e-15)

    def test_singlet_ttt_is_identity(self):
        T = correlation_matrix(singlet())
        assert np.allclose(hermitian_eig(T.T @ T).eigenvalues, [1, 1, 1], atol=1e-14)

    @given(hermitian4())
    def test_matches_lapack(self, h):
        es = hermitian_eig(h)
        assert np.allclose(es.eigenvalues, np.linalg.eigvalsh(h), atol=1e-12)
        assert np.allclose(es.reconstruct(), h, atol=1e-9)
        assert np.allclose(es.eigenvectors.conj().T @ es.eigenvectors, np.eye(4), atol=1e-12)

    @given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4, 8]))
    def test_unitary_invariance(self, seed, n):
        rng = np.random.default_rng(seed)
        h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = h + h.conj().T
        u = _random_unitary(rng, n)
        w0 = hermitian_eig(h).eigenvalues
        w1 = hermitian_eig(u @ h @ u.conj().T).eigenvalues
        assert np.allclose(w0, w1, atol=1e-9)

    def test_stack(self):
        rng = np.random.default_rng(1)
        h = rng.standard_normal((50, 4, 4)) + 1j * rng.standard_normal((50, 4, 4))
        h = h + np.conj(np.swapaxes(h, -1, -2))
        assert np.allclose(hermitian_eig(h).eigenvalues, np.linalg.eigvalsh(h), atol=1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(NonHermitianInput):
            hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


class TestTensor:
    def test_identities(self):
        assert np.array_equal(tensor(np.eye(2), np.eye(2)), np.eye(4))
        assert np.array_equal(tensor(SZ, SZ).real, np.diag([1, -1, -1, 1]))

    def test_bit_flip(self):
        assert np.allclose(tensor(SX, SX) @ ket("01"), ket("10"))


class TestBloch:
    def test_singlet(self):
        b = bloch_decompose(singlet())
        assert np.allclose(b.T, -np.eye(3), atol=1e-15)
        assert np.allclose(b.x, 0) and np.allclose(b.y, 0)

    def test_product(self):
        b = bloch_decompose(projector(ket("00")))
        assert np.allclose(b.T, np.diag([0, 0, 1]))
        assert np.allclose(b.x, [0, 0, 1]) and np.allclose(b.y, [0, 0, 1])

    def test_werner(self):
        assert np.allclose(bloch_decompose(werner(0.9)).T, -0.9 * np.eye(3), atol=1e-15)

    @given(states())
    def test_reconstruction(self, rho):
        b = bloch_decompose(rho)
        assert np.allclose(b.to_matrix(), rho, atol=1e-10)
        assert np.linalg.norm(b.x) <= 1 + 1e-10
        assert np.linalg.norm(b.y) <= 1 + 1e-10


class TestPartialTranspose:
    def test_product_fixed(self):
        p = projector(ket("00"))
        assert np.array_equal(partial_transpose(p), p)

    def test_singlet_min_eig(self):
        assert np.linalg.eigvalsh(partial_transpose(singlet()))[0] == pytest.approx(-0.5, abs=1e-14)

    @pytest.mark.parametrize("p", [0.0, 0.2, 1 / 3, 0.7, 1.0])
    def test_werner_min_eig(self, p):
        assert np.linalg.eigvalsh(partial_transpose(werner(p)))[0] == pytest.approx(
            min((1 - 3 * p) / 4, (1 + p) / 4), abs=1e-14
        )

    @given(states())
    def test_involution(self, rho):
        assert np.max(np.abs(partial_transpose(partial_transpose(rho)) - rho)) <= 1e-14

    @given(states())
    def test_subsystem_choice_same_spectrum(self, rho):
        a = np.linalg.eigvalsh(partial_transpose(rho, 0))
        b = np.linalg.eigvalsh(partial_transpose(rho, 1))
        assert np.allclose(a, b, atol=1e-12)


class TestPauliExpectation:
    def test_examples(self):
        assert pauli_expectation(singlet(), "z", "z") == pytest.approx(-1)
        assert pauli_expectation(projector(ket("00")), "x", "x") == pytest.approx(0)
        assert pauli_expectation(amplitude_damped(0.5, 0.6), "x", "x") == pytest.approx(0.6, abs=1e-15)


class TestValidation:
    def test_trace(self):
        with pytest.raises(InvalidState) as e:
            DensityMatrix(np.diag([0.3, 0.2, 0.2, 0.2]))
        assert e.value.kind == "trace"

    def test_psd(self):
        m = np.diag([0.55, 0.25, 0.25, -0.05])
        with pytest.raises(InvalidState) as e:
            DensityMatrix(m)
        assert e.value.kind == "psd"

    def test_hermitian(self):
        m = np.eye(4) / 4 + 0j
        m[0, 1] = 0.1
        with pytest.raises(InvalidState) as e:
            DensityMatrix(m)
        assert e.value.kind == "hermitian"

    def test_shape(self):
        with pytest.raises(InvalidState) as e:
            DensityMatrix(np.eye(2) / 2)
        assert e.value.kind == "shape"

    def test_immutable(self):
        rho = singlet()
        with pytest.raises(ValueError):
            rho.mat[0, 0] = 1

    @given(states())
    def test_purity_range(self, rho):
        assert 0.25 - 1e-10 <= DensityMatrix(rho).purity <= 1 + 1e-10

    def test_reduced_state_of_singlet(self):
        assert np.allclose(reduced_state(singlet(), 0), np.eye(2) / 2)
        assert np.allclose(reduced_state(singlet(), 1), np.eye(2) / 2)


class TestSerialization:
    def test_singlet_round_trip_exact(self):
        rho = singlet()
        back = parse_state(serialize_state(rho))
        assert np.array_equal(back.mat, rho.mat)

    @given(states())
    def test_round_trip(self, rho):
        back = parse_state(serialize_state(rho))
        assert np.array_equal(back.mat, np.asarray(rho, dtype=complex))

    def test_bad_trace(self):
        m = np.diag([0.3, 0.2, 0.2, 0.2])
        with pytest.raises(InvalidState, match="trace"):
            parse_state(serialize_state(m))

    def test_bad_psd(self):
        with pytest.raises(InvalidState, match="psd"):
            parse_state(serialize_state(np.diag([0.55, 0.25, 0.25, -0.05])))

    @pytest.mark.parametrize(
        "text",
        ["not json", "[]", json.dumps({"rho": [[1, 2]]}), json.dumps({"rho": [[[0, 0]] * 4] * 3})],
    )
    def test_malformed(self, text):
        with pytest.raises(ParseError):
            parse_state(text)


def test_singlet_is_psi_minus():
    assert np.allclose(singlet().mat, projector(PSI_MINUS))
    assert np.allclose(SY @ SY, np.eye(2))
