"""Finite device models, the joint Hamiltonian, and the effective Hamiltonian.

A device is a finite set of classical parameter values, each carrying its own
system Hamiltonian.  Promoting the parameter to a quantum degree of freedom
gives the block-diagonal joint generator

    H_joint = sum_j H_sys(j) (x) |j><j|,

with the classical values as the orthonormal standard basis of the device
space.  Projecting the joint generator onto a fixed device state ``phi``
yields the effective system generator ``<phi| H_joint |phi>``; for
block-diagonal joints this is the weight average ``sum_j |phi_j|^2 H_sys(j)``
and never depends on the device coherences.

Generic (non-block-diagonal) joint Hamiltonians are also accepted, through
``JointModel.from_hamiltonian``; the block-diagonal structure then becomes an
advisory flag rather than an invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qmath import DEFAULT_TOL, HermitianOperator, Ket, Tolerances, tensor

__all__ = [
    "DeviceModel",
    "DeviceState",
    "JointModel",
    "WeightVector",
    "build_joint_hamiltonian",
    "classical_weights",
    "effective_hamiltonian",
]

# A device state is just a normalized ket over the classical basis.
DeviceState = Ket


@dataclass(frozen=True, eq=False)
class DeviceModel:
    """A finite family of classical parameter values and their Hamiltonians.

    ``labels`` are opaque unique strings naming each classical value;
    ``payloads`` optionally attach a real vector (a direction, a position) to
    each label for bookkeeping.  Physics enters only through ``hamiltonians``.
    """

    labels: tuple[str, ...]
    hamiltonians: tuple[HermitianOperator, ...]
    payloads: tuple = ()

    def __post_init__(self) -> None:
        labels = tuple(str(x) for x in self.labels)
        hams = tuple(self.hamiltonians)
        if len(labels) == 0:
            raise ValueError("device model needs at least one classical value")
        if len(labels) != len(hams):
            raise ValueError(
                f"{len(labels)} labels but {len(hams)} Hamiltonians"
            )
        if len(set(labels)) != len(labels):
            raise ValueError("device labels must be unique")
        dims = {h.dim for h in hams}
        if len(dims) != 1:
            raise ValueError(f"mixed system dimensions {sorted(dims)}")
        payloads = tuple(self.payloads)
        if payloads and len(payloads) != len(labels):
            raise ValueError("payloads, when given, must match label count")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "hamiltonians", hams)
        object.__setattr__(self, "payloads", payloads)

    @property
    def d_sys(self) -> int:
        return self.hamiltonians[0].dim

    @property
    def d_dev(self) -> int:
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Probabilities over the classical device values (sum to one)."""

    p: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=float).reshape(-1)
        if p.size == 0:
            raise ValueError("empty weight vector")
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            raise ValueError("weights must lie in [0, 1]")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {p.sum()!r}, not 1")
        p = np.clip(p, 0.0, 1.0)
        p.flags.writeable = False
        object.__setattr__(self, "p", p)

    def __len__(self) -> int:
        return self.p.size


@dataclass(frozen=True, eq=False)
class JointModel:
    """The joint system+device Hamiltonian with its index bookkeeping.

    ``block_diagonal`` is True when the operator has no matrix elements
    between different device basis states.  Joints built from a DeviceModel
    satisfy this by construction; generic Hermitian joints may not, in which
    case the flag records that the invariant is waived.
    """

    h_sd: HermitianOperator
    d_sys: int
    d_dev: int
    source: DeviceModel | None = None
    block_diagonal: bool = field(default=True)

    def __post_init__(self) -> None:
        if self.h_sd.dim != self.d_sys * self.d_dev:
            raise ValueError(
                f"joint dimension {self.h_sd.dim} != "
                f"d_sys*d_dev = {self.d_sys * self.d_dev}"
            )

    @classmethod
    def from_hamiltonian(
        cls, h: HermitianOperator, d_sys: int, d_dev: int
    ) -> "JointModel":
        """Wrap a generic Hermitian joint; flags whether blocks are coupled."""
        blocks = _is_device_block_diagonal(h.matrix, d_sys, d_dev)
        return cls(h_sd=h, d_sys=d_sys, d_dev=d_dev, source=None,
                   block_diagonal=blocks)


def _is_device_block_diagonal(m: np.ndarray, d_sys: int, d_dev: int) -> bool:
    four = m.reshape(d_sys, d_dev, d_sys, d_dev)
    off = four.copy()
    for j in range(d_dev):
        off[:, j, :, j] = 0.0
    return bool(np.abs(off).max() == 0.0) if off.size else True


def build_joint_hamiltonian(dev: DeviceModel, tol: Tolerances = DEFAULT_TOL) -> JointModel:
    """sum_j H_sys(j) (x) |j><j|, block-diagonal in the device index."""
    m = dev.d_dev
    dtype = np.result_type(*(h.matrix.dtype for h in dev.hamiltonians), float)
    h = np.zeros((dev.d_sys * m, dev.d_sys * m), dtype=dtype)
    for j, branch in enumerate(dev.hamiltonians):
        proj = np.zeros((m, m), dtype=dtype)
        proj[j, j] = 1.0
        h += tensor(branch.matrix, proj)
    return JointModel(
        h_sd=HermitianOperator(h, tol=tol),
        d_sys=dev.d_sys,
        d_dev=m,
        source=dev,
        block_diagonal=True,
    )


def classical_weights(phi: DeviceState) -> WeightVector:
    """|phi_j|^2 for each classical value; phases drop out."""
    return WeightVector(np.abs(phi.amplitudes) ** 2)


def effective_hamiltonian(joint: JointModel, phi: DeviceState) -> HermitianOperator:
    """<phi| H_joint |phi>, the system generator seen at a frozen device state.

    For block-diagonal joints this equals the classical-weight average of the
    branch Hamiltonians; for generic Hermitian joints the contraction is
    still Hermitian.
    """
    if phi.dim != joint.d_dev:
        raise ValueError(
            f"device state dimension {phi.dim} != device dimension {joint.d_dev}"
        )
    four = joint.h_sd.matrix.reshape(
        joint.d_sys, joint.d_dev, joint.d_sys, joint.d_dev
    )
    amps = phi.amplitudes
    h_eff = np.einsum("j,ajbk,k->ab", amps.conj(), four, amps)
    return HermitianOperator(h_eff, tol=joint.h_sd.tol)
