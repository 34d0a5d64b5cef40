"""Dense complex linear algebra primitives shared by the whole package.

Conventions used everywhere:

* hbar = 1.
* Composite indices are system-first: the joint basis state (s, j) of a
  system of dimension ``d_sys`` and a device of dimension ``d_dev`` sits at
  flat index ``s * d_dev + j``.  ``tensor(a, b)`` therefore places its first
  argument on the slow (system) index, exactly like ``numpy.kron``.
* Matrix exponentials of Hermitian operators go through the
  eigendecomposition, never a series: the dimensions here are small and an
  exactly unitary propagator matters more than speed.

All wrapper types are immutable after construction (their arrays are marked
read-only), so instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "HermitianOperator",
    "Ket",
    "DensityMatrix",
    "tensor",
    "partial_trace_device",
    "hermitian_eig",
    "propagator",
    "evolve_unitary",
    "trace_distance",
]


@dataclass(frozen=True)
class Tolerances:
    """Construction and validation tolerances, bundled so callers can relax
    or tighten all checks through a single record."""

    hermiticity: float = 1e-10
    trace: float = 1e-9
    positivity: float = 1e-9
    unitarity: float = 1e-9
    ket_norm: float = 1e-10


DEFAULT_TOL = Tolerances()


def _as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate a 2-D finite array; keeps the input dtype (real stays real)."""
    m = np.asarray(a)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.issubdtype(m.dtype, np.number):
        m = m.astype(np.complex128)
    if not np.all(np.isfinite(m.real)) or (
        np.iscomplexobj(m) and not np.all(np.isfinite(m.imag))
    ):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return m


def _as_square(a, name: str = "matrix") -> np.ndarray:
    m = _as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    return m


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A Hermitian matrix, stored exactly symmetrized as (M + M†)/2.

    Construction rejects inputs whose anti-Hermitian part exceeds the
    hermiticity tolerance (max-norm).
    """

    matrix: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self) -> None:
        m = _as_square(self.matrix, "HermitianOperator")
        defect = np.abs(m - m.conj().T).max() if m.size else 0.0
        if defect > self.tol.hermiticity:
            raise ValueError(
                f"matrix is not Hermitian: max |M - M^dag| = {defect:.3e} "
                f"> {self.tol.hermiticity:.1e}"
            )
        sym = (m + m.conj().T) / 2
        if not np.iscomplexobj(m):
            sym = sym.real  # keep real symmetric storage for real input
        object.__setattr__(self, "matrix", _freeze(sym))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Ket:
    """A normalized state vector; normalization happens on build."""

    amplitudes: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if v.size == 0:
            raise ValueError("Ket needs at least one amplitude")
        if not np.all(np.isfinite(v.real)) or not np.all(np.isfinite(v.imag)):
            raise ValueError("Ket amplitudes contain NaN or Inf")
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise ValueError("cannot normalize a (near-)zero vector")
        object.__setattr__(self, "amplitudes", _freeze(v / norm))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        """|v><v| as a plain array."""
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.projector(), tol=self.tol)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Trace-one, tolerance-positive Hermitian operator.

    The stored matrix is the symmetrized input; trace must be 1 within
    ``tol.trace`` and the smallest eigenvalue must be >= -``tol.positivity``.
    """

    matrix: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self) -> None:
        m = _as_square(self.matrix, "DensityMatrix")
        defect = np.abs(m - m.conj().T).max()
        if defect > self.tol.hermiticity:
            raise ValueError(
                f"density matrix is not Hermitian: max defect {defect:.3e}"
            )
        sym = (m + m.conj().T) / 2
        tr = np.trace(sym).real
        if abs(tr - 1.0) > self.tol.trace:
            raise ValueError(f"density matrix trace is {tr!r}, not 1")
        lo = np.linalg.eigvalsh(sym)[0]
        if lo < -self.tol.positivity:
            raise ValueError(
                f"density matrix has eigenvalue {lo:.3e} below "
                f"-{self.tol.positivity:.1e}"
            )
        object.__setattr__(self, "matrix", _freeze(sym))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_ket(cls, amplitudes, tol: Tolerances = DEFAULT_TOL) -> "DensityMatrix":
        return Ket(amplitudes, tol=tol).density()


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with system-first ordering.

    The joint index of (row s of ``a``, row j of ``b``) is ``s * b.rows + j``,
    so ``tensor(H_sys, P_dev)`` puts the system on the slow index.
    """
    return np.kron(_as_matrix(a, "tensor lhs"), _as_matrix(b, "tensor rhs"))


def partial_trace_device(m: np.ndarray, d_sys: int, d_dev: int) -> np.ndarray:
    """Trace out the device (fast) index of a (d_sys*d_dev)-dim operator."""
    mat = _as_square(m, "partial_trace_device input")
    if mat.shape[0] != d_sys * d_dev:
        raise ValueError(
            f"matrix dimension {mat.shape[0]} != d_sys*d_dev = {d_sys * d_dev}"
        )
    return mat.reshape(d_sys, d_dev, d_sys, d_dev).trace(axis1=1, axis2=3)


def partial_trace_system(m: np.ndarray, d_sys: int, d_dev: int) -> np.ndarray:
    """Trace out the system (slow) index, leaving the device operator."""
    mat = _as_square(m, "partial_trace_system input")
    if mat.shape[0] != d_sys * d_dev:
        raise ValueError(
            f"matrix dimension {mat.shape[0]} != d_sys*d_dev = {d_sys * d_dev}"
        )
    return mat.reshape(d_sys, d_dev, d_sys, d_dev).trace(axis1=0, axis2=2)


def hermitian_eig(h: HermitianOperator) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending, real) and orthonormal eigenvector columns.

    Raises RuntimeError if LAPACK fails to converge.  No eigenvector
    uniqueness is guaranteed in degenerate subspaces; downstream code must
    only rely on subspace-invariant quantities.
    """
    try:
        w, v = np.linalg.eigh(h.matrix)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"eigendecomposition did not converge: {exc}") from exc
    return w, v


def propagator(h: HermitianOperator, t: float, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """U = exp(-i h t) via eigendecomposition (hbar = 1)."""
    w, v = hermitian_eig(h)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    defect = np.abs(u @ u.conj().T - np.eye(h.dim)).max()
    if defect > tol.unitarity:
        raise RuntimeError(f"propagator lost unitarity: defect {defect:.3e}")
    return u


def evolve_unitary(
    h: HermitianOperator, t: float, rho: DensityMatrix
) -> DensityMatrix:
    """U rho U^dag with U = exp(-i h t)."""
    if h.dim != rho.dim:
        raise ValueError(f"dimension mismatch: H is {h.dim}, rho is {rho.dim}")
    u = propagator(h, t, tol=rho.tol)
    return DensityMatrix(u @ rho.matrix @ u.conj().T, tol=rho.tol)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """(1/2) sum |eigenvalues(rho - sigma)|, in [0, 1] for states."""
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    w = np.linalg.eigvalsh(rho.matrix - sigma.matrix)
    return 0.5 * float(np.abs(w).sum())
