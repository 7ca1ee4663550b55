import numpy as np
import pytest

from pulse_jcm import (
    CapacityError,
    DimensionError,
    SystemState,
    annihilation_op,
    check_state,
    embed,
    expectation,
    hermitian_eigs,
    identity_op,
    kron,
    lowering_op,
    number_op,
    partial_trace,
)


def fock_state(n, n_max, dims_extra=()):
    dim = n_max + 1
    vec = np.zeros(dim, dtype=complex)
    vec[n] = 1.0
    return vec


def pure_state(vec, dims):
    return SystemState(np.outer(vec, vec.conj()), dims)


class TestAnnihilation:
    def test_lowers_one_quantum(self):
        a = annihilation_op(1)
        one = fock_state(1, 1)
        assert np.allclose(a.entries @ one, fock_state(0, 1))

    def test_matrix_elements(self):
        a = annihilation_op(3)
        assert a.toarray()[2, 3] == pytest.approx(np.sqrt(3))
        assert np.count_nonzero(a.toarray()) == 3

    def test_number_operator_spectrum(self):
        n_max = 5
        n_op = number_op(n_max).toarray()
        for n in range(n_max + 1):
            vec = fock_state(n, n_max)
            assert np.allclose(n_op @ vec, n * vec)

    def test_invalid_dimension(self):
        with pytest.raises(DimensionError):
            annihilation_op(0)

    def test_commutator_defect_confined_to_top_level(self):
        n_max = 6
        a = annihilation_op(n_max)
        comm = (a @ a.dag()).toarray() - (a.dag() @ a).toarray()
        expected = np.eye(n_max + 1)
        expected[n_max, n_max] = -n_max  # truncation artifact lives here only
        assert np.allclose(comm, expected, atol=1e-14)


class TestKronEmbed:
    def test_identity_kron(self):
        assert np.allclose(
            kron(identity_op([2]), identity_op([3])).toarray(), np.eye(6)
        )

    def test_mixed_product_property(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        import scipy.sparse as sp

        from pulse_jcm import Operator

        A = Operator(sp.csr_array(a), (3,))
        B = Operator(sp.csr_array(b), (4,))
        left = kron(A, identity_op([4])) @ kron(identity_op([3]), B)
        assert np.allclose(left.toarray(), kron(A, B).toarray())

    def test_factorized_action(self):
        sm = lowering_op()
        a = annihilation_op(1)
        op = kron(sm, a)
        e1 = np.kron(fock_state(1, 1), fock_state(1, 1))  # |e> x |1>
        g0 = np.kron(fock_state(0, 1), fock_state(0, 1))
        assert np.allclose(op.entries @ e1, g0)

    def test_capacity_error(self):
        big = identity_op([2048])
        with pytest.raises(CapacityError):
            kron(big, identity_op([2048]))

    def test_embed_action(self):
        dims = (2, 21)
        op = embed(lowering_op(), 0, dims)
        e_n = np.kron(fock_state(1, 1), fock_state(5, 20))
        g_n = np.kron(fock_state(0, 1), fock_state(5, 20))
        assert np.allclose(op.entries @ e_n, g_n)

    def test_embed_identity_is_global_identity(self):
        dims = (2, 3, 3)
        op = embed(identity_op([3]), 1, dims)
        assert np.allclose(op.toarray(), np.eye(18))

    def test_embed_disjoint_supports_commute(self):
        dims = (2, 3, 3)
        a = embed(annihilation_op(2), 1, dims)
        s = embed(lowering_op(), 0, dims)
        assert np.allclose((a @ s).toarray(), (s @ a).toarray())

    def test_embed_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            embed(annihilation_op(3), 0, (2, 3))

    def test_embed_preserves_max_norm(self):
        op = annihilation_op(4)
        lifted = embed(op, 1, (2, 5, 3))
        assert np.abs(lifted.toarray()).max() == pytest.approx(
            np.abs(op.toarray()).max()
        )


class TestPartialTrace:
    def test_product_state_marginal(self):
        rng = np.random.default_rng(3)
        va = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        vb = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        va /= np.linalg.norm(va)
        vb /= np.linalg.norm(vb)
        joint = pure_state(np.kron(va, vb), (2, 3))
        rho_a = partial_trace(joint, [0]).rho
        assert np.allclose(rho_a, np.outer(va, va.conj()), atol=1e-12)
        rho_b = partial_trace(joint, [1]).rho
        assert np.allclose(rho_b, np.outer(vb, vb.conj()), atol=1e-12)

    def test_trace_preserved(self):
        rng = np.random.default_rng(11)
        m = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        rho = m @ m.conj().T
        rho /= np.trace(rho)
        state = SystemState(rho, (2, 2, 3))
        for keep in ([0], [1], [2], [0, 2], [1, 2]):
            reduced = partial_trace(state, keep)
            assert np.trace(reduced.rho) == pytest.approx(1.0, abs=1e-12)

    def test_entangled_marginal_is_mixed(self):
        # (|g,0> + |e,1>)/sqrt(2) -> field marginal diag(1/2, 1/2)
        vec = np.zeros(4, dtype=complex)
        vec[0] = vec[3] = 1 / np.sqrt(2)
        state = pure_state(vec, (2, 2))
        rho_field = partial_trace(state, [1]).rho
        assert np.allclose(rho_field, 0.5 * np.eye(2), atol=1e-12)

    def test_empty_keep_rejected(self):
        state = pure_state(np.array([1.0, 0, 0, 0], dtype=complex), (2, 2))
        with pytest.raises(DimensionError):
            partial_trace(state, [])


class TestExpectation:
    def test_identity_expectation(self):
        rng = np.random.default_rng(5)
        m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        rho = m @ m.conj().T
        rho /= np.trace(rho)
        state = SystemState(rho, (2, 3))
        assert expectation(state, identity_op([2, 3])) == pytest.approx(1.0, abs=1e-12)

    def test_photon_number(self):
        n_max = 20
        state = pure_state(fock_state(20, n_max), (n_max + 1,))
        assert expectation(state, number_op(n_max)).real == pytest.approx(20.0)

    def test_ground_state_excitation_zero(self):
        sm = lowering_op()
        state = pure_state(fock_state(0, 1), (2,))
        assert abs(expectation(state, sm.dag() @ sm)) < 1e-15

    def test_hermitian_expectation_is_real(self):
        rng = np.random.default_rng(9)
        m = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        rho = m @ m.conj().T
        rho /= np.trace(rho)
        state = SystemState(rho, (8,))
        h = m + m.conj().T
        import scipy.sparse as sp

        from pulse_jcm import Operator

        op = Operator(sp.csr_array(h), (8,))
        assert abs(expectation(state, op).imag) < 1e-10

    def test_dimension_mismatch(self):
        state = pure_state(fock_state(0, 1), (2,))
        with pytest.raises(DimensionError):
            expectation(state, identity_op([3]))


class TestHermitianEigs:
    def test_diagonal(self):
        import scipy.sparse as sp

        from pulse_jcm import Operator

        op = Operator(sp.csr_array(np.diag([1.0, 2.0, 3.0]).astype(complex)), (3,))
        assert np.allclose(hermitian_eigs(op), [1, 2, 3])

    def test_pure_state_spectrum(self):
        vec = fock_state(0, 4)
        rho = np.outer(vec, vec.conj())
        spectrum = hermitian_eigs(rho)
        assert np.allclose(spectrum[:-1], 0.0, atol=1e-14)
        assert spectrum[-1] == pytest.approx(1.0)

    def test_eigenvalue_sum_equals_trace(self):
        rng = np.random.default_rng(13)
        m = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
        h = m + m.conj().T
        assert np.sum(hermitian_eigs(h)) == pytest.approx(np.trace(h).real, abs=1e-12)

    def test_non_hermitian_rejected(self):
        m = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(DimensionError):
            hermitian_eigs(m)


class TestCheckState:
    def test_valid_pure_state(self):
        state = pure_state(fock_state(1, 3), (4,))
        diag = check_state(state)
        assert diag.healthy
        assert diag.trace_deviation < 1e-12
        assert diag.hermiticity_defect < 1e-12
        assert diag.min_eigenvalue > -1e-12

    def test_trace_deficit_flagged(self):
        rho = 0.9 * np.outer(fock_state(0, 1), fock_state(0, 1))
        diag = check_state(SystemState(rho, (2,)))
        assert "trace" in diag.flags
        assert diag.trace_deviation == pytest.approx(0.1)

    def test_hermiticity_perturbation_reported(self):
        rho = np.outer(fock_state(0, 1), fock_state(0, 1)).astype(complex)
        rho[0, 1] += 1e-3
        diag = check_state(SystemState(rho, (2,)))
        assert diag.hermiticity_defect == pytest.approx(1e-3, rel=1e-6)
        assert "hermiticity" in diag.flags
