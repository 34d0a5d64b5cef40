"""Coherent freezing protocol: short joint evolutions interleaved with
projective device measurements, plus convergence analysis against the
effective-Hamiltonian unitary.

One protocol step is {evolve the joint state for dt} followed by {measure the
device in a basis containing the frozen state phi, coarse-grained to the two
outcomes |phi><phi| and its complement}.  In selective mode only the phi
branch is kept (renormalized); in nonselective mode both projected branches
are summed.  Measurements are instantaneous.

Steppers: "exact" conjugates by exp(-i H dt) and is the default (it stays a
physical channel at any dt); "euler" applies the first-order update
rho + i dt [rho, H], which preserves trace and Hermiticity but not
positivity, and is retained for replicating the first-order analysis.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import DeviceState, JointModel, effective_hamiltonian
from .qmath import (
    DensityMatrix,
    evolve_unitary,
    partial_trace_device,
    propagator,
    tensor,
    trace_distance,
)

__all__ = [
    "ProtocolConfig",
    "ZenoRunResult",
    "SweepPoint",
    "SweepResult",
    "step_exact",
    "step_euler",
    "zeno_measure",
    "run_zeno",
    "convergence_sweep",
]

STEPPERS = ("exact", "euler")
MEASUREMENT_MODES = ("selective", "nonselective")

# Selective measurement aborts below this branch weight.
_EXTINCTION_EPS = 1e-14
# Euler intermediates may go slightly negative; beyond this they are unusable.
_EULER_EIG_FLOOR = -1e-6


@dataclass(frozen=True)
class ProtocolConfig:
    """Stroboscopic protocol parameters; dt = total_time / n_steps."""

    total_time: float
    n_steps: int
    stepper: str = "exact"
    measurement_mode: str = "selective"

    def __post_init__(self) -> None:
        if not (self.total_time > 0):
            raise ValueError("total_time must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.stepper not in STEPPERS:
            raise ValueError(f"unknown stepper {self.stepper!r}")
        if self.measurement_mode not in MEASUREMENT_MODES:
            raise ValueError(f"unknown measurement mode {self.measurement_mode!r}")

    @property
    def dt(self) -> float:
        return self.total_time / self.n_steps


@dataclass(frozen=True, eq=False)
class ZenoRunResult:
    """Outcome of one stroboscopic run.

    ``survival_probability`` is the product of the per-step phi-branch
    weights; in selective mode that is the probability that every
    measurement returned the frozen-state outcome.  ``error`` is the trace
    distance between the conditioned final system state and the
    effective-Hamiltonian reference.
    """

    final_system_state: DensityMatrix
    survival_probability: float
    per_step_survival: np.ndarray
    reference_state: DensityMatrix
    error: float


@dataclass(frozen=True)
class SweepPoint:
    n_steps: int
    dt: float
    error: float
    one_minus_survival: float


@dataclass(frozen=True)
class SweepResult:
    """Per-resolution errors plus fitted log-log slopes vs dt."""

    points: tuple[SweepPoint, ...]
    error_slope: float
    leakage_slope: float


def step_exact(rho_sd: DensityMatrix, joint: JointModel, dt: float) -> DensityMatrix:
    """One exact joint step U rho U^dag with U = exp(-i H dt)."""
    if rho_sd.dim != joint.h_sd.dim:
        raise ValueError(
            f"state dimension {rho_sd.dim} != joint dimension {joint.h_sd.dim}"
        )
    return evolve_unitary(joint.h_sd, dt, rho_sd)


def step_euler(rho_sd: DensityMatrix, joint: JointModel, dt: float) -> np.ndarray:
    """First-order update rho + i dt [rho, H].

    Returns a raw matrix: the update preserves trace and Hermiticity exactly
    but is not positive in general, so the caller owns the physicality check.
    """
    if rho_sd.dim != joint.h_sd.dim:
        raise ValueError(
            f"state dimension {rho_sd.dim} != joint dimension {joint.h_sd.dim}"
        )
    return _euler_raw(rho_sd.matrix, joint.h_sd.matrix, dt)


def _euler_raw(mat: np.ndarray, h: np.ndarray, dt: float) -> np.ndarray:
    comm = mat @ h - h @ mat
    return mat + 1j * dt * comm


def _clamp_probability(p: float) -> float:
    # tolerate float excursions just outside [0, 1]
    if -1e-12 < p < 0.0:
        return 0.0
    if 1.0 < p < 1.0 + 1e-12:
        return 1.0
    return p


def _measure_raw(
    mat: np.ndarray, phi: np.ndarray, d_sys: int, mode: str
) -> tuple[np.ndarray, float]:
    """Project the device factor onto |phi><phi| (and complement).

    Returns (post-measurement matrix, phi-branch weight).  The phi branch of
    the output is exactly (system block) (x) |phi><phi|.
    """
    d_dev = phi.size
    four = mat.reshape(d_sys, d_dev, d_sys, d_dev)
    # system block <phi| rho |phi>, a d_sys x d_sys matrix
    block = np.einsum("j,ajbk,k->ab", phi.conj(), four, phi)
    p = _clamp_probability(float(np.trace(block).real))
    proj = np.outer(phi, phi.conj())
    branch = np.kron(block, proj)
    if mode == "selective":
        if p <= _EXTINCTION_EPS:
            raise RuntimeError("Zeno branch extinguished")
        return np.kron(block / p, proj), p
    if mode == "nonselective":
        big_proj = np.kron(np.eye(d_sys), proj)
        rest = mat - big_proj @ mat - mat @ big_proj + branch
        return branch + rest, p
    raise ValueError(f"unknown measurement mode {mode!r}")


def zeno_measure(
    rho_sd, phi: DeviceState, mode: str = "selective"
):
    """Two-outcome device measurement {|phi><phi|, complement}.

    selective: keep and renormalize the phi branch (raises RuntimeError
    "Zeno branch extinguished" when its weight falls below 1e-14).
    nonselective: sum both projected branches, no renormalization.

    Accepts either a DensityMatrix (returned as one) or a raw Hermitian
    matrix, e.g. an Euler-step output that is not tolerance-positive; raw in,
    raw out.  Returns (state, phi-branch weight).
    """
    raw = not isinstance(rho_sd, DensityMatrix)
    mat = np.asarray(rho_sd) if raw else rho_sd.matrix
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"state must be a square matrix, got shape {mat.shape}")
    if mat.shape[0] % phi.dim != 0:
        raise ValueError(
            f"state dimension {mat.shape[0]} not divisible by "
            f"device dimension {phi.dim}"
        )
    d_sys = mat.shape[0] // phi.dim
    out, p = _measure_raw(mat, phi.amplitudes, d_sys, mode)
    if raw:
        return out, p
    return DensityMatrix(out, tol=rho_sd.tol), p


def run_zeno(
    rho_s0: DensityMatrix,
    phi: DeviceState,
    joint: JointModel,
    cfg: ProtocolConfig,
) -> ZenoRunResult:
    """Run n_steps of {step, measure} and compare against the effective unitary.

    The reference is exp(-i H_eff T) applied to the initial system state,
    with H_eff = <phi| H_joint |phi>.
    """
    if rho_s0.dim != joint.d_sys:
        raise ValueError(
            f"system state dimension {rho_s0.dim} != d_sys {joint.d_sys}"
        )
    if phi.dim != joint.d_dev:
        raise ValueError(
            f"device state dimension {phi.dim} != d_dev {joint.d_dev}"
        )
    dt = cfg.dt
    h_sd = joint.h_sd.matrix
    mat = np.kron(rho_s0.matrix, phi.projector())
    step_u = propagator(joint.h_sd, dt) if cfg.stepper == "exact" else None

    survivals = np.empty(cfg.n_steps)
    for k in range(cfg.n_steps):
        if step_u is not None:
            mat = step_u @ mat @ step_u.conj().T
        else:
            mat = _euler_raw(mat, h_sd, dt)
            low = np.linalg.eigvalsh((mat + mat.conj().T) / 2)[0]
            if low < _EULER_EIG_FLOOR:
                raise RuntimeError(
                    "Euler step left physical regime, reduce dt "
                    f"(eigenvalue {low:.3e})"
                )
        mat, p = _measure_raw(mat, phi.amplitudes, joint.d_sys, cfg.measurement_mode)
        survivals[k] = p

    survivals.flags.writeable = False
    survival = _clamp_probability(float(np.prod(survivals)))
    # euler finals keep the first-order negative dip (within the run floor),
    # so they carry a correspondingly loosened positivity tolerance
    final_tol = (
        rho_s0.tol
        if cfg.stepper == "exact"
        else replace(rho_s0.tol, positivity=-_EULER_EIG_FLOOR)
    )
    final = DensityMatrix(
        partial_trace_device(mat, joint.d_sys, joint.d_dev), tol=final_tol
    )
    reference = evolve_unitary(
        effective_hamiltonian(joint, phi), cfg.total_time, rho_s0
    )
    return ZenoRunResult(
        final_system_state=final,
        survival_probability=survival,
        per_step_survival=survivals,
        reference_state=reference,
        error=trace_distance(final, reference),
    )


def fit_loglog_slope(x: np.ndarray, y: np.ndarray, floor: float = 1e-300) -> float:
    """Least-squares slope of log(y) vs log(x); y is floored to stay finite.

    Below ~1e-12 the data is dominated by rounding noise and the slope is
    not meaningful; callers decide what bands to accept.
    """
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.maximum(np.asarray(y, dtype=float), floor))
    slope, _ = np.polyfit(lx, ly, 1)
    return float(slope)


def convergence_sweep(
    rho_s0: DensityMatrix,
    phi: DeviceState,
    joint: JointModel,
    total_time: float,
    n_list: list[int],
    stepper: str = "exact",
    measurement_mode: str = "selective",
) -> SweepResult:
    """One run per step count in ascending ``n_list``; fits error and
    leakage (1 - survival) slopes on a log-log scale against dt."""
    if list(n_list) != sorted(n_list) or len(n_list) < 2:
        raise ValueError("n_list must be ascending with at least two entries")
    points = []
    for n in n_list:
        cfg = ProtocolConfig(
            total_time=total_time,
            n_steps=int(n),
            stepper=stepper,
            measurement_mode=measurement_mode,
        )
        res = run_zeno(rho_s0, phi, joint, cfg)
        points.append(
            SweepPoint(
                n_steps=int(n),
                dt=cfg.dt,
                error=res.error,
                one_minus_survival=1.0 - res.survival_probability,
            )
        )
    dts = np.array([pt.dt for pt in points])
    return SweepResult(
        points=tuple(points),
        error_slope=fit_loglog_slope(dts, np.array([pt.error for pt in points])),
        leakage_slope=fit_loglog_slope(
            dts, np.array([pt.one_minus_survival for pt in points])
        ),
    )
