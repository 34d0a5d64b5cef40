import numpy as np
import pytest

from zenosim.model import (
    DeviceModel,
    build_joint_hamiltonian,
    effective_hamiltonian,
)
from zenosim.qmath import (
    DensityMatrix,
    HermitianOperator,
    Ket,
    evolve_unitary,
    trace_distance,
)
from zenosim.zeno import (
    ProtocolConfig,
    convergence_sweep,
    run_zeno,
    step_euler,
    step_exact,
    zeno_measure,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def commutator_oracle(rho, h):
    """[rho, h] by explicit index loops (2x2 only)."""
    out = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                out[i, j] += rho[i, k] * h[k, j] - h[i, k] * rho[k, j]
    return out


def random_density(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = a @ a.conj().T
    return DensityMatrix(m / np.trace(m).real)


def product_state(rho_s, phi):
    return DensityMatrix(np.kron(rho_s.matrix, phi.projector()))


# ----- steppers ---------------------------------------------------------------

def test_step_exact_identity_cases(qubit_model, equal_phi, rho_zero):
    _, joint = qubit_model
    rho = product_state(rho_zero, equal_phi)
    out = step_exact(rho, joint, 0.0)
    assert np.allclose(out.matrix, rho.matrix, atol=1e-12)

    zero_dev = DeviceModel(
        labels=("a", "b"),
        hamiltonians=(HermitianOperator(np.zeros((2, 2))),) * 2,
    )
    zero_joint = build_joint_hamiltonian(zero_dev)
    out = step_exact(rho, zero_joint, 0.7)
    assert np.allclose(out.matrix, rho.matrix, atol=1e-12)


def test_step_euler_cases(qubit_model, equal_phi, rho_zero):
    _, joint = qubit_model
    rho = product_state(rho_zero, equal_phi)
    assert np.allclose(step_euler(rho, joint, 0.0), rho.matrix)

    # commuting: rho diagonal in the eigenbasis of a single-branch joint
    dev = DeviceModel(labels=("z",), hamiltonians=(HermitianOperator(SZ),))
    jz = build_joint_hamiltonian(dev)
    diag = DensityMatrix(np.diag([0.7, 0.3]))
    assert np.allclose(step_euler(diag, jz, 0.3), diag.matrix, atol=1e-15)

    # random qubit state against the explicit commutator oracle
    rng = np.random.default_rng(3)
    rho_q = random_density(rng, 2)
    got = step_euler(rho_q, jz, 0.05)
    expected = rho_q.matrix + 1j * 0.05 * commutator_oracle(rho_q.matrix, SZ)
    assert np.abs(got - expected).max() <= 1e-14
    # trace and Hermiticity preserved exactly
    assert abs(np.trace(got) - 1.0) <= 1e-14
    assert np.abs(got - got.conj().T).max() <= 1e-14


def test_exact_euler_agree_to_second_order(qubit_model, equal_phi, rho_zero):
    _, joint = qubit_model
    rho = product_state(rho_zero, equal_phi)
    diffs = []
    for dt in (0.02, 0.01, 0.005):
        d = np.abs(
            step_exact(rho, joint, dt).matrix - step_euler(rho, joint, dt)
        ).max()
        diffs.append(d)
    # halving dt should quarter the gap
    assert 3.2 <= diffs[0] / diffs[1] <= 4.8
    assert 3.2 <= diffs[1] / diffs[2] <= 4.8


# ----- measurement -------------------------------------------------------------

def test_measure_frozen_product_state(qubit_model, equal_phi, rho_zero):
    rho = product_state(rho_zero, equal_phi)
    out, p = zeno_measure(rho, equal_phi, "selective")
    assert abs(p - 1.0) <= 1e-12
    assert np.allclose(out.matrix, rho.matrix, atol=1e-12)


def test_measure_orthogonal_branch(rho_zero):
    phi = Ket([1, 1])
    phi_perp = Ket([1, -1])
    rho = product_state(rho_zero, phi_perp)
    with pytest.raises(RuntimeError, match="extinguished"):
        zeno_measure(rho, phi, "selective")
    out, p = zeno_measure(rho, phi, "nonselective")
    assert p <= 1e-12
    assert np.allclose(out.matrix, rho.matrix, atol=1e-12)


def test_euler_step_then_measure_reproduces_commutator(qubit_model, equal_phi, rho_zero):
    """One first-order step plus conditioning gives exactly the system
    commutator update with the effective generator (all higher orders cancel
    for a product input; the euler output is raw because it is not
    tolerance-positive)."""
    _, joint = qubit_model
    rho = product_state(rho_zero, equal_phi)
    dt = 0.05
    stepped = step_euler(rho, joint, dt)
    out, p = zeno_measure(stepped, equal_phi, "selective")
    sys_out = out.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
    h_eff = effective_hamiltonian(joint, equal_phi).matrix
    expected = rho_zero.matrix + 1j * dt * commutator_oracle(rho_zero.matrix, h_eff)
    assert abs(p - 1.0) <= 1e-14
    assert np.abs(sys_out - expected).max() <= 1e-14


def test_exact_step_then_measure_first_order(qubit_model, equal_phi, rho_zero):
    """With the exact stepper the conditioned update matches the first-order
    commutator up to a stable O(dt^2) remainder."""
    _, joint = qubit_model
    rho = product_state(rho_zero, equal_phi)
    h_eff = effective_hamiltonian(joint, equal_phi).matrix
    consts = []
    for dt in (0.08, 0.04, 0.02):
        stepped = step_exact(rho, joint, dt)
        out, _ = zeno_measure(stepped, equal_phi, "selective")
        sys_out = out.matrix.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
        first_order = rho_zero.matrix + 1j * dt * commutator_oracle(
            rho_zero.matrix, h_eff
        )
        consts.append(np.abs(sys_out - first_order).max() / dt**2)
    assert consts[0] / 2 <= consts[1] <= consts[0] * 2
    assert consts[1] / 2 <= consts[2] <= consts[1] * 2


def test_selective_output_device_factor_is_phi(qubit_model, rho_zero):
    _, joint = qubit_model
    phi = Ket([0.6, 0.8j])
    rho = product_state(rho_zero, phi)
    mat = rho
    for _ in range(5):
        mat = step_exact(mat, joint, 0.07)
        mat, _ = zeno_measure(mat, phi, "selective")
        dev = mat.matrix.reshape(2, 2, 2, 2).trace(axis1=0, axis2=2)
        assert np.abs(dev - phi.projector()).max() <= 1e-12


# ----- full runs ----------------------------------------------------------------

def test_run_zeno_classical_device(qubit_model, rho_zero):
    _, joint = qubit_model
    res = run_zeno(
        rho_zero, Ket([1, 0]), joint,
        ProtocolConfig(total_time=1.0, n_steps=50),
    )
    assert res.error <= 1e-9
    assert abs(res.survival_probability - 1.0) <= 1e-12


def test_run_zeno_zero_hamiltonian(equal_phi, rho_zero):
    dev = DeviceModel(
        labels=("a", "b"),
        hamiltonians=(HermitianOperator(np.zeros((2, 2))),) * 2,
    )
    joint = build_joint_hamiltonian(dev)
    res = run_zeno(rho_zero, equal_phi, joint,
                   ProtocolConfig(total_time=1.0, n_steps=20))
    assert np.allclose(res.final_system_state.matrix, rho_zero.matrix, atol=1e-12)
    assert abs(res.survival_probability - 1.0) <= 1e-12
    assert res.error <= 1e-12


def test_run_zeno_exact_convergence_superconvergent_model(
    qubit_model, equal_phi, rho_zero
):
    # Both branches of the sx/sz model square to the identity, so the
    # second-order defect of the conditioned exact step cancels and the
    # error gains an extra order: halving dt quarters it.
    _, joint = qubit_model
    errs = {}
    for n in (100, 200):
        res = run_zeno(rho_zero, equal_phi, joint,
                       ProtocolConfig(total_time=1.0, n_steps=n))
        errs[n] = res.error
    assert 3.2 <= errs[100] / errs[200] <= 4.8


def test_run_zeno_exact_convergence_generic_model(equal_phi, rho_zero):
    # A model whose branch traces correlate with their traceless parts shows
    # the generic first-order error: halving dt halves it.
    dev = DeviceModel(
        labels=("shifted", "z"),
        hamiltonians=(HermitianOperator(np.eye(2) + SX), HermitianOperator(SZ)),
    )
    joint = build_joint_hamiltonian(dev)
    errs = {}
    for n in (100, 200):
        res = run_zeno(rho_zero, equal_phi, joint,
                       ProtocolConfig(total_time=1.0, n_steps=n))
        errs[n] = res.error
    assert 1.6 <= errs[100] / errs[200] <= 2.4


def test_run_zeno_euler_convergence(qubit_model, equal_phi, rho_zero):
    # euler + selective conditioning is exactly forward-Euler integration of
    # the effective von Neumann equation: first-order error, no leakage.
    # The horizon is short because the euler eigenvalue dip grows like T*dt
    # and must stay above the physicality floor.
    _, joint = qubit_model
    errs = {}
    for n in (2000, 4000):
        res = run_zeno(
            rho_zero, equal_phi, joint,
            ProtocolConfig(total_time=0.05, n_steps=n, stepper="euler"),
        )
        errs[n] = res.error
        assert abs(res.survival_probability - 1.0) <= 1e-11
    assert 1.6 <= errs[2000] / errs[4000] <= 2.4


def test_run_zeno_survival_record(qubit_model, equal_phi, rho_zero):
    _, joint = qubit_model
    res = run_zeno(rho_zero, equal_phi, joint,
                   ProtocolConfig(total_time=1.0, n_steps=40))
    assert res.per_step_survival.shape == (40,)
    assert np.all(res.per_step_survival >= 0.0)
    assert np.all(res.per_step_survival <= 1.0)
    assert abs(res.survival_probability - np.prod(res.per_step_survival)) <= 1e-12
    # cumulative survival is non-increasing
    cum = np.cumprod(res.per_step_survival)
    assert np.all(np.diff(cum) <= 1e-15)


def test_run_zeno_reference_is_effective_unitary(qubit_model, equal_phi, rho_zero):
    _, joint = qubit_model
    cfg = ProtocolConfig(total_time=0.9, n_steps=64)
    res = run_zeno(rho_zero, equal_phi, joint, cfg)
    h_eff = effective_hamiltonian(joint, equal_phi)
    ref = evolve_unitary(h_eff, 0.9, rho_zero)
    assert trace_distance(res.reference_state, ref) <= 1e-12


def test_exact_and_euler_final_states_differ_by_order_dt(
    qubit_model, equal_phi, rho_zero
):
    # short horizon so euler intermediates stay physical (dip ~ T * dt)
    _, joint = qubit_model
    gaps = []
    for n in (2000, 4000, 8000):
        out = {}
        for stepper in ("exact", "euler"):
            res = run_zeno(
                rho_zero, equal_phi, joint,
                ProtocolConfig(total_time=0.05, n_steps=n, stepper=stepper),
            )
            out[stepper] = res.final_system_state
        gaps.append(trace_distance(out["exact"], out["euler"]))
    assert 1.5 <= gaps[0] / gaps[1] <= 2.6
    assert 1.5 <= gaps[1] / gaps[2] <= 2.6


def test_euler_rejects_unphysical_dt(qubit_model, equal_phi, rho_zero):
    _, joint = qubit_model
    with pytest.raises(RuntimeError, match="reduce dt"):
        run_zeno(
            rho_zero, equal_phi, joint,
            ProtocolConfig(total_time=40.0, n_steps=2, stepper="euler"),
        )


# ----- sweep --------------------------------------------------------------------

def test_sweep_slopes_superconvergent_model(qubit_model, equal_phi, rho_zero):
    # sx/sz branches: leakage converges at first order, the error at second
    # (branch-involution cancellation; see the exact-convergence test above)
    _, joint = qubit_model
    sweep = convergence_sweep(
        rho_zero, equal_phi, joint, total_time=1.0,
        n_list=[50, 100, 200, 400],
    )
    assert 0.8 <= sweep.leakage_slope <= 1.2
    assert 1.8 <= sweep.error_slope <= 2.2
    assert [pt.n_steps for pt in sweep.points] == [50, 100, 200, 400]


def test_sweep_slopes_generic_model(equal_phi, rho_zero):
    dev = DeviceModel(
        labels=("shifted", "z"),
        hamiltonians=(HermitianOperator(np.eye(2) + SX), HermitianOperator(SZ)),
    )
    joint = build_joint_hamiltonian(dev)
    sweep = convergence_sweep(
        rho_zero, equal_phi, joint, total_time=1.0,
        n_list=[50, 100, 200, 400],
    )
    assert 0.8 <= sweep.error_slope <= 1.2
    assert 0.8 <= sweep.leakage_slope <= 1.2


def test_sweep_euler_error_slope(qubit_model, equal_phi, rho_zero):
    _, joint = qubit_model
    sweep = convergence_sweep(
        rho_zero, equal_phi, joint, total_time=0.05,
        n_list=[2000, 4000, 8000], stepper="euler",
    )
    assert 0.8 <= sweep.error_slope <= 1.2


def test_sweep_commuting_model_error_floor(rho_zero):
    # single classical value: the effective generator is exact at any dt
    dev = DeviceModel(labels=("z",), hamiltonians=(HermitianOperator(SZ),))
    joint = build_joint_hamiltonian(dev)
    sweep = convergence_sweep(
        rho_zero, Ket([1.0]), joint, total_time=1.0, n_list=[4, 8, 16],
    )
    assert all(pt.error <= 1e-9 for pt in sweep.points)
    assert all(pt.one_minus_survival <= 1e-12 for pt in sweep.points)


def test_sweep_requires_ascending_n_list(qubit_model, equal_phi, rho_zero):
    _, joint = qubit_model
    with pytest.raises(ValueError):
        convergence_sweep(rho_zero, equal_phi, joint, 1.0, [100, 50])


def test_protocol_config_validation():
    with pytest.raises(ValueError):
        ProtocolConfig(total_time=0.0, n_steps=10)
    with pytest.raises(ValueError):
        ProtocolConfig(total_time=1.0, n_steps=0)
    with pytest.raises(ValueError):
        ProtocolConfig(total_time=1.0, n_steps=10, stepper="rk4")
    with pytest.raises(ValueError):
        ProtocolConfig(total_time=1.0, n_steps=10, measurement_mode="weak")
