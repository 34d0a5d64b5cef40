"""Incoherent scheme: i.i.d. random classical-parameter sequences, their
per-trajectory channels, and the exact mixture channel they average to.

The per-step mixture is implemented at the channel level,

    C(rho) = sum_j p_j U_j rho U_j^dag,

which is completely positive and trace-preserving for any dt (a plain
operator average of the unitaries would only make sense at first order).

Superoperators act on column-stacked vectorized density matrices: the
(i, j) matrix unit E_ij vectorizes to the basis column j*d + i, and the
channel of a unitary U has superoperator kron(conj(U), U).  Tests pin this
convention constructively via the matrix units.

Randomness is counter-based: every trajectory seeds its own Philox stream
with ``seed XOR splitmix64(trajectory_index)``, so results are reproducible
bit-for-bit for a fixed seed regardless of scheduling, and the ensemble mean
is accumulated in trajectory-index order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import WeightVector
from .qmath import DEFAULT_TOL, DensityMatrix, Tolerances, trace_distance

__all__ = [
    "QuantumChannel",
    "TrajectoryRecord",
    "channel_from_unitary",
    "identity_channel",
    "exact_average_channel",
    "compose",
    "channel_power",
    "sample_sequence",
    "run_trajectory",
    "monte_carlo_average",
    "channel_distance",
    "channel_probe_distance",
    "splitmix64",
]

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """Standard 64-bit splitmix finalizer; used to derive substream keys."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def _vec(m: np.ndarray) -> np.ndarray:
    # column stacking
    return m.reshape(-1, order="F")


def _unvec(v: np.ndarray, d: int) -> np.ndarray:
    return v.reshape(d, d, order="F")


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """A linear map on density matrices, stored as a d^2 x d^2 superoperator
    over column-stacked inputs.

    Construction checks, structurally, that the map preserves trace and
    Hermiticity within tolerance.
    """

    d: int
    superop: np.ndarray
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self) -> None:
        s = np.asarray(self.superop, dtype=np.complex128)
        if s.shape != (self.d**2, self.d**2):
            raise ValueError(
                f"superoperator shape {s.shape} != ({self.d**2}, {self.d**2})"
            )
        # trace preservation: the trace functional must be a fixed point of
        # the adjoint map.  Row vector t[k] = sum_i S[(i,i), k].
        diag_rows = np.arange(self.d) * self.d + np.arange(self.d)
        t = s[diag_rows, :].sum(axis=0)
        expect = np.zeros(self.d**2, dtype=np.complex128)
        expect[diag_rows] = 1.0
        if np.abs(t - expect).max() > 1e-10:
            raise ValueError("superoperator is not trace-preserving")
        # Hermiticity preservation: S[(i,j),(k,l)] == conj(S[(j,i),(l,k)])
        four = s.reshape(self.d, self.d, self.d, self.d)
        if np.abs(four - four.transpose(1, 0, 3, 2).conj()).max() > 1e-10:
            raise ValueError("superoperator does not preserve Hermiticity")
        s = s.copy()
        s.flags.writeable = False
        object.__setattr__(self, "superop", s)

    def apply_matrix(self, m: np.ndarray) -> np.ndarray:
        """Apply to a raw matrix (no density-matrix validation)."""
        return _unvec(self.superop @ _vec(np.asarray(m, dtype=np.complex128)), self.d)

    def apply(self, rho: DensityMatrix) -> DensityMatrix:
        if rho.dim != self.d:
            raise ValueError(f"state dimension {rho.dim} != channel dimension {self.d}")
        return DensityMatrix(self.apply_matrix(rho.matrix), tol=rho.tol)


def channel_from_unitary(u: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> QuantumChannel:
    """The conjugation channel rho -> U rho U^dag of a unitary U."""
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"unitary must be square, got shape {u.shape}")
    d = u.shape[0]
    defect = np.abs(u @ u.conj().T - np.eye(d)).max()
    if defect > 1e-9:
        raise ValueError(f"matrix is not unitary: defect {defect:.3e}")
    # column-stacking: vec(U rho U^dag) = kron(conj(U), U) vec(rho)
    return QuantumChannel(d=d, superop=np.kron(u.conj(), u), tol=tol)


def identity_channel(d: int, tol: Tolerances = DEFAULT_TOL) -> QuantumChannel:
    return QuantumChannel(d=d, superop=np.eye(d**2, dtype=np.complex128), tol=tol)


def exact_average_channel(
    weights: WeightVector, unitaries: list[np.ndarray], tol: Tolerances = DEFAULT_TOL
) -> QuantumChannel:
    """Convex mixture of unitary channels, sum_j p_j U_j . U_j^dag."""
    if len(weights) != len(unitaries):
        raise ValueError(
            f"{len(weights)} weights but {len(unitaries)} unitaries"
        )
    d = np.asarray(unitaries[0]).shape[0]
    s = np.zeros((d**2, d**2), dtype=np.complex128)
    for p, u in zip(weights.p, unitaries):
        s += p * channel_from_unitary(u, tol=tol).superop
    return QuantumChannel(d=d, superop=s, tol=tol)


def compose(c1: QuantumChannel, c2: QuantumChannel) -> QuantumChannel:
    """Channel composition; c2 acts first."""
    if c1.d != c2.d:
        raise ValueError(f"dimension mismatch: {c1.d} vs {c2.d}")
    return QuantumChannel(d=c1.d, superop=c1.superop @ c2.superop, tol=c1.tol)


def channel_power(c: QuantumChannel, n: int) -> QuantumChannel:
    """n-fold composition of a channel with itself (n >= 0)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return QuantumChannel(
        d=c.d, superop=np.linalg.matrix_power(c.superop, n), tol=c.tol
    )


def sample_sequence(weights: WeightVector, n: int, seed: int) -> np.ndarray:
    """Draw n i.i.d. classical indices by inverse CDF from a Philox stream."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed & _MASK64))
    cum = np.cumsum(weights.p)
    cum[-1] = max(cum[-1], 1.0)  # guard against rounding below 1
    return np.searchsorted(cum, rng.random(n), side="right").astype(np.int64)


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """One realized parameter sequence and the state it produced."""

    sequence: np.ndarray
    final_state: DensityMatrix


def run_trajectory(
    rho_s0: DensityMatrix, sequence, unitaries: list[np.ndarray]
) -> TrajectoryRecord:
    """Apply the drawn unitaries in sequence order (first drawn acts first)."""
    seq = np.asarray(sequence, dtype=np.int64).reshape(-1)
    m = len(unitaries)
    if seq.size and (seq.min() < 0 or seq.max() >= m):
        raise ValueError(f"sequence indices must lie in [0, {m})")
    mat = rho_s0.matrix
    for idx in seq:
        u = unitaries[idx]
        mat = u @ mat @ u.conj().T
    seq = seq.copy()
    seq.flags.writeable = False
    return TrajectoryRecord(
        sequence=seq, final_state=DensityMatrix(mat, tol=rho_s0.tol)
    )


def monte_carlo_average(
    rho_s0: DensityMatrix,
    weights: WeightVector,
    unitaries: list[np.ndarray],
    n_steps: int,
    n_traj: int,
    seed: int,
    keep_distances: bool = False,
):
    """Ensemble mean over n_traj random trajectories, plus a spread estimate.

    Per-trajectory streams are keyed by ``seed XOR splitmix64(index)`` and the
    mean is accumulated in index order, so the result is bit-reproducible for
    a fixed seed.  The returned stderr is the sample standard deviation of the
    trajectory-to-mean trace distances divided by sqrt(n_traj).

    Returns (mean, stderr), or (mean, stderr, distances) with the
    per-trajectory distances to the mean when ``keep_distances`` is set.
    """
    if n_traj < 2:
        raise ValueError("n_traj must be >= 2")
    finals = []
    acc = np.zeros((rho_s0.dim, rho_s0.dim), dtype=np.complex128)
    for i in range(n_traj):
        sub = (seed & _MASK64) ^ splitmix64(i)
        seq = sample_sequence(weights, n_steps, sub)
        rec = run_trajectory(rho_s0, seq, unitaries)
        acc += rec.final_state.matrix
        finals.append(rec.final_state)
    mean = DensityMatrix(acc / n_traj, tol=rho_s0.tol)
    dists = np.array([trace_distance(f, mean) for f in finals])
    stderr = float(dists.std(ddof=1) / np.sqrt(n_traj))
    if keep_distances:
        return mean, stderr, dists
    return mean, stderr


def channel_distance(c1: QuantumChannel, c2: QuantumChannel) -> float:
    """Frobenius norm of the superoperator difference, normalized by d."""
    if c1.d != c2.d:
        raise ValueError(f"dimension mismatch: {c1.d} vs {c2.d}")
    return float(np.linalg.norm(c1.superop - c2.superop)) / c1.d


def _probe_states(d: int) -> list[np.ndarray]:
    """d^2 pure probe states spanning Hermitian space: the basis states plus
    the two standard superpositions of every pair."""
    probes = []
    eye = np.eye(d, dtype=np.complex128)
    for i in range(d):
        probes.append(np.outer(eye[i], eye[i].conj()))
    for i in range(d):
        for j in range(i + 1, d):
            plus = (eye[i] + eye[j]) / np.sqrt(2)
            plus_i = (eye[i] + 1j * eye[j]) / np.sqrt(2)
            probes.append(np.outer(plus, plus.conj()))
            probes.append(np.outer(plus_i, plus_i.conj()))
    return probes


def channel_probe_distance(c1: QuantumChannel, c2: QuantumChannel) -> float:
    """Diagnostic: max trace distance between outputs over the d^2 probes."""
    if c1.d != c2.d:
        raise ValueError(f"dimension mismatch: {c1.d} vs {c2.d}")
    worst = 0.0
    for probe in _probe_states(c1.d):
        a = DensityMatrix(c1.apply_matrix(probe))
        b = DensityMatrix(c2.apply_matrix(probe))
        worst = max(worst, trace_distance(a, b))
    return worst
