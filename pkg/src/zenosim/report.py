"""Figure rendering for the experiment runner: one PNG per experiment,
written next to the CSV/JSON outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")  # file output only; must precede pyplot import

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _finish(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def survival_figure(per_step_survival: np.ndarray, error: float, path: str) -> str:
    """Per-step and cumulative survival of a single freezing run."""
    steps = np.arange(1, len(per_step_survival) + 1)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(steps, per_step_survival, ".", ms=3, label="per-step")
    ax.plot(steps, np.cumprod(per_step_survival), "-", label="cumulative")
    ax.set_xlabel("step")
    ax.set_ylabel("survival probability")
    ax.set_title(f"final error to effective unitary: {error:.3e}")
    ax.legend()
    return _finish(fig, path)


def sweep_figure(dts, errors, leakages, error_slope, leakage_slope, path: str) -> str:
    """Log-log convergence of error and leakage vs step size."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(dts, np.maximum(errors, 1e-300), "o-",
              label=f"error (slope {error_slope:.2f})")
    ax.loglog(dts, np.maximum(leakages, 1e-300), "s--",
              label=f"1 - survival (slope {leakage_slope:.2f})")
    ax.set_xlabel("dt")
    ax.set_ylabel("deviation")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def compare_figure(dts, zeno_errors, channel_distances, cross, path: str) -> str:
    """Coherent vs incoherent convergence at fixed total time."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(dts, np.maximum(zeno_errors, 1e-300), "o-", label="freezing error")
    ax.loglog(dts, np.maximum(channel_distances, 1e-300), "s--",
              label="averaged-channel distance")
    ax.loglog(dts, np.maximum(cross, 1e-300), "^:", label="cross distance")
    ax.set_xlabel("dt")
    ax.set_ylabel("deviation")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def trajectory_figure(distances, stderr, path: str) -> str:
    """Spread of trajectory final states around the ensemble mean."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(distances, bins=40)
    ax.axvline(float(np.mean(distances)), color="k", ls="--",
               label=f"mean (stderr {stderr:.2e})")
    ax.set_xlabel("trace distance to ensemble mean")
    ax.set_ylabel("trajectories")
    ax.legend()
    return _finish(fig, path)


def spectrum_figure(energies, expected, path: str) -> str:
    """Computed vs expected retuned-coupling ladder."""
    n = np.arange(len(energies))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(n, energies, "o", label="effective spectrum")
    ax.plot(n, expected, "x", ms=10, label="retuned ladder")
    ax.set_xlabel("level index")
    ax.set_ylabel("energy")
    ax.legend()
    return _finish(fig, path)


def spin_kick_figure(p_norms, eig_low, eig_high, coupling, path: str) -> str:
    """Per-point block eigenvalues against the rotation-invariant cone."""
    fig, ax = plt.subplots(figsize=(6, 4))
    order = np.argsort(p_norms)
    p = np.asarray(p_norms)[order]
    ax.plot(p, np.asarray(eig_high)[order], "o", label="upper eigenvalue")
    ax.plot(p, np.asarray(eig_low)[order], "s", label="lower eigenvalue")
    line = np.linspace(0, p.max() if len(p) else 1.0, 50)
    ax.plot(line, coupling / 2 * line, "k--", lw=1, label="+-(g/2)|p|")
    ax.plot(line, -coupling / 2 * line, "k--", lw=1)
    ax.set_xlabel("|p|")
    ax.set_ylabel("block eigenvalues")
    ax.legend()
    return _finish(fig, path)


def well_figure(x, potential, spectrum, path: str) -> str:
    """Potential, bound energies, and bound wavefunctions."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(x, potential, "k-", lw=1.5, label="potential")
    for i in np.flatnonzero(spectrum.bound_flags):
        e = spectrum.energies[i]
        psi = spectrum.wavefunctions[:, i]
        scale = 0.25 * (spectrum.v_asym or 1.0) / max(np.abs(psi).max(), 1e-12)
        ax.axhline(e, color="C1", ls=":", lw=1)
        ax.plot(x, e + scale * psi, label=f"bound state, E = {e:.4f}")
    ax.set_xlabel("x")
    ax.set_ylabel("energy / shifted wavefunction")
    ax.legend(loc="upper right", fontsize=8)
    return _finish(fig, path)
