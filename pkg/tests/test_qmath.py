import numpy as np
import pytest

from zenosim.qmath import (
    DensityMatrix,
    HermitianOperator,
    Ket,
    evolve_unitary,
    hermitian_eig,
    partial_trace_device,
    propagator,
    tensor,
    trace_distance,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


# ----- independent oracles -------------------------------------------------

def kron_oracle(a, b):
    """Elementwise Kronecker product, independent of numpy.kron."""
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def ptrace_oracle(m, d_sys, d_dev):
    """Explicit sum over the device index."""
    out = np.zeros((d_sys, d_sys), dtype=complex)
    for s in range(d_sys):
        for t in range(d_sys):
            for j in range(d_dev):
                out[s, t] += m[s * d_dev + j, t * d_dev + j]
    return out


def qubit_propagator_oracle(t):
    """Closed form exp(-i sz t) = cos(t) I - i sin(t) sz."""
    return np.cos(t) * np.eye(2) - 1j * np.sin(t) * SZ


def random_density(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = a @ a.conj().T
    return DensityMatrix(m / np.trace(m).real)


# ----- construction invariants ---------------------------------------------

def test_hermitian_operator_symmetrizes_and_rejects():
    h = HermitianOperator(SX + 1e-12 * np.array([[0, 1j], [0, 0]]))
    assert np.abs(h.matrix - h.matrix.conj().T).max() == 0.0
    with pytest.raises(ValueError):
        HermitianOperator(np.array([[0, 1], [0, 0]], dtype=complex))


def test_hermitian_operator_rejects_nonfinite():
    with pytest.raises(ValueError):
        HermitianOperator(np.array([[np.nan, 0], [0, 1]]))


def test_ket_normalizes_on_build():
    k = Ket([3.0, 4.0])
    assert abs(np.linalg.norm(k.amplitudes) - 1.0) <= 1e-10
    assert np.allclose(k.amplitudes, [0.6, 0.8])
    with pytest.raises(ValueError):
        Ket([0.0, 0.0])


def test_density_matrix_validation():
    DensityMatrix(np.eye(2) / 2)
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2))  # trace 2
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]))  # negative eigenvalue


def test_types_are_immutable():
    rho = DensityMatrix(np.eye(2) / 2)
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 9.0


# ----- tensor ----------------------------------------------------------------

def test_tensor_identity():
    assert np.array_equal(tensor(np.eye(2), np.eye(2)), np.eye(4))


def test_tensor_diagonal_ordering():
    # system-first ordering forces diag(1, 0, -1, 0)
    proj0 = np.outer(KET0, KET0)
    assert np.allclose(tensor(SZ, proj0), np.diag([1, 0, -1, 0]))


def test_tensor_matches_kron_oracle():
    got = tensor(SX, SX)
    assert np.allclose(got, kron_oracle(SX, SX))
    # 4x4 anti-diagonal of ones
    assert np.allclose(got, np.fliplr(np.eye(4)))


def test_tensor_bilinear_and_associative():
    rng = np.random.default_rng(11)
    for _ in range(5):
        a, b, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
                   for _ in range(3))
        assert np.allclose(tensor(a, tensor(b, c)), tensor(tensor(a, b), c))
        assert np.allclose(
            tensor(2.0 * a + b, c), 2.0 * tensor(a, c) + tensor(b, c)
        )


# ----- partial trace ---------------------------------------------------------

def test_partial_trace_product_state():
    rng = np.random.default_rng(3)
    rho = random_density(rng, 3)
    phi = Ket(rng.normal(size=4) + 1j * rng.normal(size=4))
    joint = tensor(rho.matrix, phi.projector())
    assert np.allclose(partial_trace_device(joint, 3, 4), rho.matrix, atol=1e-12)


def test_partial_trace_maximally_mixed():
    assert np.allclose(partial_trace_device(np.eye(4) / 4, 2, 2), np.eye(2) / 2)


def test_partial_trace_matches_index_sum_oracle():
    rng = np.random.default_rng(5)
    rho = random_density(rng, 4)
    got = partial_trace_device(rho.matrix, 2, 2)
    assert np.allclose(got, ptrace_oracle(rho.matrix, 2, 2), atol=1e-14)
    assert abs(np.trace(got) - np.trace(rho.matrix)) <= 1e-12


def test_partial_trace_of_tensor_scales_by_trace():
    rng = np.random.default_rng(7)
    for _ in range(5):
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        got = partial_trace_device(tensor(a, b), 3, 2)
        assert np.allclose(got, a * np.trace(b), atol=1e-12)


def test_partial_trace_dimension_mismatch():
    with pytest.raises(ValueError):
        partial_trace_device(np.eye(4), 3, 2)


# ----- eigendecomposition ----------------------------------------------------

def test_eig_pauli_spectrum():
    w, _ = hermitian_eig(HermitianOperator(SZ))
    assert np.allclose(w, [-1.0, 1.0])


def test_eig_zero_matrix():
    w, _ = hermitian_eig(HermitianOperator(np.zeros((3, 3))))
    assert np.allclose(w, 0.0)


def test_eig_reconstruction_random():
    rng = np.random.default_rng(13)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = HermitianOperator((a + a.conj().T) / 2)
    w, v = hermitian_eig(h)
    scale = np.abs(w).max()
    assert np.abs(v @ np.diag(w) @ v.conj().T - h.matrix).max() <= 1e-9 * scale
    assert np.abs(v.conj().T @ v - np.eye(6)).max() <= 1e-9
    # residual per eigenpair
    for k in range(6):
        res = np.linalg.norm(h.matrix @ v[:, k] - w[k] * v[:, k])
        assert res <= 1e-9 * scale


# ----- unitary evolution -----------------------------------------------------

def test_evolve_t_zero_and_h_zero():
    rng = np.random.default_rng(17)
    rho = random_density(rng, 3)
    a = rng.normal(size=(3, 3))
    sym = HermitianOperator((a + a.T) / 2)
    out = evolve_unitary(sym, 0.0, rho)
    assert np.allclose(out.matrix, rho.matrix, atol=1e-12)
    out = evolve_unitary(HermitianOperator(np.zeros((3, 3))), 2.7, rho)
    assert np.allclose(out.matrix, rho.matrix, atol=1e-12)


def test_evolve_matches_qubit_closed_form():
    # oracle: exp(-i sz t) = cos t I - i sin t sz.  A quarter period maps
    # |+> to |->; a half period is -identity and leaves any state fixed.
    rho_plus = DensityMatrix(np.outer(PLUS, PLUS.conj()))
    out = evolve_unitary(HermitianOperator(SZ), np.pi / 2, rho_plus)
    u = qubit_propagator_oracle(np.pi / 2)
    assert np.allclose(out.matrix, u @ rho_plus.matrix @ u.conj().T, atol=1e-12)
    assert np.allclose(out.matrix, np.outer(MINUS, MINUS.conj()), atol=1e-12)

    out_full = evolve_unitary(HermitianOperator(SZ), np.pi, rho_plus)
    assert np.allclose(out_full.matrix, rho_plus.matrix, atol=1e-12)
    # the half-coefficient generator reaches |-> at t = pi
    out_half = evolve_unitary(HermitianOperator(SZ / 2), np.pi, rho_plus)
    assert np.allclose(out_half.matrix, np.outer(MINUS, MINUS.conj()), atol=1e-12)


def test_propagator_unitarity():
    rng = np.random.default_rng(19)
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    h = HermitianOperator((a + a.conj().T) / 2)
    u = propagator(h, 0.83)
    assert np.abs(u @ u.conj().T - np.eye(5)).max() <= 1e-9


def test_evolve_preserves_spectrum_trace_hermiticity():
    rng = np.random.default_rng(23)
    rho = random_density(rng, 4)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = HermitianOperator((a + a.conj().T) / 2)
    out = evolve_unitary(h, 1.3, rho)
    assert np.abs(out.matrix - out.matrix.conj().T).max() <= 1e-9
    assert abs(np.trace(out.matrix).real - 1.0) <= 1e-10
    assert np.allclose(
        np.linalg.eigvalsh(out.matrix), np.linalg.eigvalsh(rho.matrix), atol=1e-9
    )


def test_evolve_dimension_mismatch():
    rho = DensityMatrix(np.eye(2) / 2)
    with pytest.raises(ValueError):
        evolve_unitary(HermitianOperator(np.zeros((3, 3))), 1.0, rho)


# ----- trace distance --------------------------------------------------------

def test_trace_distance_basics():
    rng = np.random.default_rng(29)
    rho = random_density(rng, 3)
    assert trace_distance(rho, rho) == 0.0
    zero = DensityMatrix(np.outer(KET0, KET0))
    one = DensityMatrix(np.outer(KET1, KET1))
    assert abs(trace_distance(zero, one) - 1.0) <= 1e-12


def test_trace_distance_matches_eigenvalue_oracle():
    zero = DensityMatrix(np.outer(KET0, KET0))
    plus = DensityMatrix(np.outer(PLUS, PLUS.conj()))
    # oracle: eigenvalues of the difference are +-sqrt(det-free invariant);
    # for these two states the difference has eigenvalues +-1/sqrt(2)
    diff = zero.matrix - plus.matrix
    ev = np.linalg.eigvalsh(diff)
    assert np.allclose(sorted(ev), [-1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-12)
    assert abs(trace_distance(zero, plus) - 1 / np.sqrt(2)) <= 1e-12


def test_trace_distance_triangle_inequality():
    rng = np.random.default_rng(31)
    for _ in range(10):
        a, b, c = (random_density(rng, 3) for _ in range(3))
        assert trace_distance(a, c) <= (
            trace_distance(a, b) + trace_distance(b, c) + 1e-12
        )


def test_trace_distance_dimension_mismatch():
    with pytest.raises(ValueError):
        trace_distance(DensityMatrix(np.eye(2) / 2), DensityMatrix(np.eye(3) / 3))
