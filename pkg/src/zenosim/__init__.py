"""Simulator for system dynamics under a device parameter promoted to a
quantum degree of freedom: coherent measurement-freezing of the device state,
its incoherent randomized counterpart, and quantitative convergence of both
to the effective-Hamiltonian unitary."""

from .qmath import (
    DEFAULT_TOL,
    DensityMatrix,
    HermitianOperator,
    Ket,
    Tolerances,
    evolve_unitary,
    hermitian_eig,
    partial_trace_device,
    propagator,
    tensor,
    trace_distance,
)
from .model import (
    DeviceModel,
    DeviceState,
    JointModel,
    WeightVector,
    build_joint_hamiltonian,
    classical_weights,
    effective_hamiltonian,
)
from .zeno import (
    ProtocolConfig,
    SweepResult,
    ZenoRunResult,
    convergence_sweep,
    run_zeno,
    step_euler,
    step_exact,
    zeno_measure,
)
from .incoherent import (
    QuantumChannel,
    TrajectoryRecord,
    channel_distance,
    channel_from_unitary,
    channel_power,
    channel_probe_distance,
    compose,
    exact_average_channel,
    identity_channel,
    monte_carlo_average,
    run_trajectory,
    sample_sequence,
)
from .cases import (
    PotentialSample,
    ScattererSpec,
    SGSpec,
    SpectrumResult,
    bound_states,
    cavity_model,
    fd_hamiltonian,
    momentum_blocks,
    scatterer_device_model,
    scatterer_potential,
    sg_effective,
    sg_model,
    sg_rotation_covariance,
)

__version__ = "0.1.0"
