"""Batch experiment runner.

Reads a JSON experiment config, dispatches to the simulation engines, and
writes a CSV table, a JSON summary, and (unless disabled) a PNG figure per
experiment.  Outputs are deterministic: the same config bytes and seed
produce byte-identical CSV and JSON.  Wall-clock timing is reported on
stderr only, never in the files.

Exit codes: 0 success, 1 config error, 2 engine error, 3 output I/O error.
Failures print a machine-readable error JSON to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .cases import (
    SGSpec,
    ScattererSpec,
    bound_states,
    cavity_model,
    momentum_blocks,
    scatterer_device_model,
    scatterer_potential,
    sg_effective,
    sg_model,
    sg_rotation_covariance,
)
from .incoherent import (
    channel_distance,
    channel_from_unitary,
    channel_power,
    channel_probe_distance,
    exact_average_channel,
    monte_carlo_average,
)
from .model import (
    DeviceModel,
    JointModel,
    build_joint_hamiltonian,
    classical_weights,
    effective_hamiltonian,
)
from .qmath import DensityMatrix, HermitianOperator, Ket, propagator, trace_distance
from .zeno import (
    MEASUREMENT_MODES,
    STEPPERS,
    ProtocolConfig,
    convergence_sweep,
    run_zeno,
)

EXPERIMENTS = (
    "zeno",
    "incoherent",
    "sweep",
    "compare",
    "cavity",
    "sg_check",
    "scatter",
)

_DEFAULT_THETAS = (np.pi / 6, np.pi / 3, np.pi / 2, 1.0)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the bad path."""


# ----------------------------------------------------------------------------
# strict JSON -> canonical config
# ----------------------------------------------------------------------------


def _expect_object(value, path: str, required, optional=()) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    for key in required:
        if key not in value:
            raise ConfigError(f"{path}.{key}: missing required key")
    allowed = set(required) | set(optional)
    for key in value:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")
    return value


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    if not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite")
    return float(value)


def _as_int(value, path: str, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}")
    return value


def _as_string(value, path: str, choices=None) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string")
    if choices is not None and value not in choices:
        raise ConfigError(f"{path}: must be one of {sorted(choices)}")
    return value


def _as_pair(value, path: str) -> list[float]:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{path}: expected an [re, im] pair")
    return [_as_number(value[0], f"{path}[0]"), _as_number(value[1], f"{path}[1]")]


def _as_amplitudes(value, path: str) -> list[list[float]]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a nonempty list of [re, im] pairs")
    return [_as_pair(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _as_matrix(value, path: str) -> list[list[list[float]]]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a nonempty list of rows")
    rows = [_as_amplitudes(row, f"{path}[{i}]") for i, row in enumerate(value)]
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ConfigError(f"{path}: rows have unequal lengths")
    return rows


def _as_real_pairs(value, path: str) -> list[list[float]]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a nonempty list of [x, y] pairs")
    out = []
    for i, v in enumerate(value):
        if not isinstance(v, list) or len(v) != 2:
            raise ConfigError(f"{path}[{i}]: expected an [x, y] pair")
        out.append([_as_number(v[0], f"{path}[{i}][0]"),
                    _as_number(v[1], f"{path}[{i}][1]")])
    return out


def _parse_model(value, path: str, need_device_state: bool) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    if "builder" in value:
        builder = _as_string(value["builder"], f"{path}.builder",
                             {"cavity", "sg", "scatterer"})
        if builder == "cavity":
            _expect_object(value, path, ("builder", "coupling", "n_max"),
                           ("device_state",))
            out = {
                "builder": "cavity",
                "coupling": _as_number(value["coupling"], f"{path}.coupling"),
                "n_max": _as_int(value["n_max"], f"{path}.n_max", minimum=1),
            }
        elif builder == "sg":
            _expect_object(
                value, path,
                ("builder", "coupling", "momentum_grid", "directions"),
                ("device_state",),
            )
            out = {
                "builder": "sg",
                "coupling": _as_number(value["coupling"], f"{path}.coupling"),
                "momentum_grid": _as_real_pairs(
                    value["momentum_grid"], f"{path}.momentum_grid"
                ),
                "directions": _as_real_pairs(
                    value["directions"], f"{path}.directions"
                ),
            }
        else:
            _expect_object(
                value, path,
                ("builder", "step_height", "half_width", "box_half_length",
                 "grid_points"),
                ("mass", "arrangement", "device_state"),
            )
            out = {
                "builder": "scatterer",
                "step_height": _as_number(value["step_height"], f"{path}.step_height"),
                "half_width": _as_number(value["half_width"], f"{path}.half_width"),
                "box_half_length": _as_number(
                    value["box_half_length"], f"{path}.box_half_length"
                ),
                "grid_points": _as_int(
                    value["grid_points"], f"{path}.grid_points", minimum=1
                ),
                "mass": _as_number(value.get("mass", 1.0), f"{path}.mass"),
                "arrangement": _as_string(
                    value.get("arrangement", "mirrored_pair"),
                    f"{path}.arrangement",
                    {"single_step", "mirrored_pair"},
                ),
            }
        if "device_state" in value:
            out["device_state"] = _as_amplitudes(
                value["device_state"], f"{path}.device_state"
            )
        return out

    _expect_object(value, path, ("labels", "hamiltonians"), ("device_state",))
    labels = value["labels"]
    if not isinstance(labels, list) or not all(isinstance(s, str) for s in labels):
        raise ConfigError(f"{path}.labels: expected a list of strings")
    hams = value["hamiltonians"]
    if not isinstance(hams, list) or len(hams) != len(labels):
        raise ConfigError(
            f"{path}.hamiltonians: expected one matrix per label"
        )
    out = {
        "labels": list(labels),
        "hamiltonians": [
            _as_matrix(m, f"{path}.hamiltonians[{i}]") for i, m in enumerate(hams)
        ],
    }
    if "device_state" in value:
        out["device_state"] = _as_amplitudes(
            value["device_state"], f"{path}.device_state"
        )
    if need_device_state and "device_state" not in out:
        raise ConfigError(f"{path}.device_state: missing required key")
    return out


def _parse_protocol(value, path: str, need_n_steps: bool) -> dict:
    required = ["total_time"] + (["n_steps"] if need_n_steps else [])
    _expect_object(value, path, required, ("n_steps", "stepper", "measurement_mode"))
    total_time = _as_number(value["total_time"], f"{path}.total_time")
    if total_time <= 0:
        raise ConfigError(f"{path}.total_time: must be positive")
    out = {
        "total_time": total_time,
        "stepper": _as_string(
            value.get("stepper", "exact"), f"{path}.stepper", set(STEPPERS)
        ),
        "measurement_mode": _as_string(
            value.get("measurement_mode", "selective"),
            f"{path}.measurement_mode",
            set(MEASUREMENT_MODES),
        ),
    }
    if "n_steps" in value:
        out["n_steps"] = _as_int(value["n_steps"], f"{path}.n_steps", minimum=1)
    return out


def _parse_initial_state(value, path: str) -> dict:
    _expect_object(value, path, (), ("ket", "density"))
    if ("ket" in value) == ("density" in value):
        raise ConfigError(f"{path}: give exactly one of 'ket' or 'density'")
    if "ket" in value:
        return {"ket": _as_amplitudes(value["ket"], f"{path}.ket")}
    return {"density": _as_matrix(value["density"], f"{path}.density")}


_SECTIONS = {
    # experiment: (required top-level keys, optional top-level keys)
    "zeno": (("model", "protocol", "initial_state"), ()),
    "incoherent": (("model", "protocol", "initial_state", "monte_carlo"), ()),
    "sweep": (("model", "protocol", "initial_state", "sweep"), ()),
    "compare": (("model", "protocol", "initial_state", "sweep"), ()),
    "cavity": (("model",), ()),
    "sg_check": (("model",), ("thetas",)),
    "scatter": (("model",), ()),
}

_NEEDS_DEVICE_STATE = {"zeno", "incoherent", "sweep", "compare", "cavity", "sg_check"}


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment description in canonical form.

    ``data`` is plain JSON-serializable content; re-serializing and
    re-parsing it reproduces the same canonical form.
    """

    data: dict

    @property
    def experiment(self) -> str:
        return self.data["experiment"]

    @property
    def seed(self) -> int:
        return self.data["seed"]

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"


def parse_config(text: str, experiment_override: str | None = None) -> ExperimentConfig:
    """Parse and validate a JSON experiment config (strict: unknown keys are
    rejected with the offending path)."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root: expected an object")
    if experiment_override is not None:
        raw = {**raw, "experiment": experiment_override}
    if "experiment" not in raw:
        raise ConfigError("experiment: missing required key")
    experiment = _as_string(raw["experiment"], "experiment", set(EXPERIMENTS))

    required, extra_optional = _SECTIONS[experiment]
    _expect_object(
        raw, "config",
        ("experiment", *required),
        ("seed", "output", *extra_optional),
    )

    data: dict = {"experiment": experiment}
    data["seed"] = _as_int(raw.get("seed", 0), "seed", minimum=0)
    if data["seed"] >= 2**64:
        raise ConfigError("seed: must fit in 64 bits")

    data["model"] = _parse_model(
        raw["model"], "model", experiment in _NEEDS_DEVICE_STATE
    )
    if experiment in ("cavity", "sg_check", "scatter"):
        wanted = {"cavity": "cavity", "sg_check": "sg", "scatter": "scatterer"}
        if data["model"].get("builder") != wanted[experiment]:
            raise ConfigError(
                f"model.builder: experiment {experiment!r} requires the "
                f"{wanted[experiment]!r} builder"
            )
    if experiment in ("cavity", "sg_check") and "device_state" not in data["model"]:
        raise ConfigError("model.device_state: missing required key")

    if "protocol" in raw:
        data["protocol"] = _parse_protocol(
            raw["protocol"], "protocol",
            need_n_steps=experiment in ("zeno", "incoherent"),
        )
    if "initial_state" in raw:
        data["initial_state"] = _parse_initial_state(
            raw["initial_state"], "initial_state"
        )
    if "sweep" in raw:
        _expect_object(raw["sweep"], "sweep", ("n_list",))
        n_list = raw["sweep"]["n_list"]
        if not isinstance(n_list, list) or len(n_list) < 2:
            raise ConfigError("sweep.n_list: expected a list of at least two step counts")
        n_list = [
            _as_int(v, f"sweep.n_list[{i}]", minimum=1) for i, v in enumerate(n_list)
        ]
        if n_list != sorted(n_list):
            raise ConfigError("sweep.n_list: must be ascending")
        data["sweep"] = {"n_list": n_list}
    if "monte_carlo" in raw:
        _expect_object(raw["monte_carlo"], "monte_carlo", ("n_traj", "seed"))
        data["monte_carlo"] = {
            "n_traj": _as_int(raw["monte_carlo"]["n_traj"], "monte_carlo.n_traj",
                              minimum=2),
            "seed": _as_int(raw["monte_carlo"]["seed"], "monte_carlo.seed", minimum=0),
        }
    if "thetas" in raw:
        thetas = raw["thetas"]
        if not isinstance(thetas, list) or not thetas:
            raise ConfigError("thetas: expected a nonempty list of angles")
        data["thetas"] = [
            _as_number(v, f"thetas[{i}]") for i, v in enumerate(thetas)
        ]
    elif experiment == "sg_check":
        data["thetas"] = [float(t) for t in _DEFAULT_THETAS]
    if "output" in raw:
        _expect_object(raw["output"], "output", (), ("csv_path", "json_path"))
        data["output"] = {
            k: _as_string(raw["output"][k], f"output.{k}")
            for k in ("csv_path", "json_path")
            if k in raw["output"]
        }
    return ExperimentConfig(data=data)


# ----------------------------------------------------------------------------
# canonical config -> domain objects
# ----------------------------------------------------------------------------


def _complex_array(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs])


def _complex_matrix(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def _build_device(model: dict):
    """Returns (DeviceModel, device state Ket or None, extras)."""
    extras: dict = {}
    try:
        if model.get("builder") == "cavity":
            dev = cavity_model(model["coupling"], model["n_max"])
        elif model.get("builder") == "sg":
            phi = Ket(_complex_array(model["device_state"]))
            spec = SGSpec(
                coupling=model["coupling"],
                momentum_grid=tuple(tuple(p) for p in model["momentum_grid"]),
                directions=tuple(tuple(d) for d in model["directions"]),
                amplitudes=phi,
            )
            extras["sg_spec"] = spec
            dev, _ = sg_model(spec)
        elif model.get("builder") == "scatterer":
            spec = ScattererSpec(
                step_height=model["step_height"],
                half_width=model["half_width"],
                mass=model["mass"],
                box_half_length=model["box_half_length"],
                grid_points=model["grid_points"],
            )
            extras["scatterer_spec"] = spec
            extras["arrangement"] = model["arrangement"]
            dev = scatterer_device_model(spec)
        else:
            dev = DeviceModel(
                labels=tuple(model["labels"]),
                hamiltonians=tuple(
                    HermitianOperator(_complex_matrix(m))
                    for m in model["hamiltonians"]
                ),
            )
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc

    phi = None
    if "device_state" in model:
        phi = Ket(_complex_array(model["device_state"]))
        if phi.dim != dev.d_dev:
            raise ConfigError(
                f"model.device_state: dimension {phi.dim} != "
                f"{dev.d_dev} classical values"
            )
    return dev, phi, extras


def _build_initial_state(section: dict, d_sys: int) -> DensityMatrix:
    try:
        if "ket" in section:
            rho = DensityMatrix.from_ket(_complex_array(section["ket"]))
        else:
            rho = DensityMatrix(_complex_matrix(section["density"]))
    except ValueError as exc:
        raise ConfigError(f"initial_state: {exc}") from exc
    if rho.dim != d_sys:
        raise ConfigError(
            f"initial_state: dimension {rho.dim} != system dimension {d_sys}"
        )
    return rho


# ----------------------------------------------------------------------------
# engines
# ----------------------------------------------------------------------------


def _dynamics_inputs(cfg: ExperimentConfig):
    dev, phi, _ = _build_device(cfg.data["model"])
    if phi is None:
        raise ConfigError("model.device_state: missing required key")
    joint = build_joint_hamiltonian(dev)
    rho0 = _build_initial_state(cfg.data["initial_state"], dev.d_sys)
    return dev, joint, phi, rho0


def _engine_zeno(cfg, seed, fig_path):
    from . import report

    _, joint, phi, rho0 = _dynamics_inputs(cfg)
    p = cfg.data["protocol"]
    proto = ProtocolConfig(
        total_time=p["total_time"], n_steps=p["n_steps"],
        stepper=p["stepper"], measurement_mode=p["measurement_mode"],
    )
    res = run_zeno(rho0, phi, joint, proto)
    cumulative = np.cumprod(res.per_step_survival)
    rows = [
        (k + 1, float(res.per_step_survival[k]), float(cumulative[k]))
        for k in range(proto.n_steps)
    ]
    results = {
        "error": res.error,
        "survival_probability": res.survival_probability,
        "n_steps": proto.n_steps,
        "dt": proto.dt,
        "total_time": proto.total_time,
        "stepper": proto.stepper,
        "measurement_mode": proto.measurement_mode,
    }
    figures = []
    if fig_path:
        figures.append(
            report.survival_figure(res.per_step_survival, res.error, fig_path)
        )
    return results, (["step", "p_survive", "cumulative_survival"], rows), figures


def _engine_sweep(cfg, seed, fig_path):
    from . import report

    _, joint, phi, rho0 = _dynamics_inputs(cfg)
    p = cfg.data["protocol"]
    n_list = cfg.data["sweep"]["n_list"]
    sweep = convergence_sweep(
        rho0, phi, joint,
        total_time=p["total_time"], n_list=n_list,
        stepper=p["stepper"], measurement_mode=p["measurement_mode"],
    )
    rows = [
        (pt.n_steps, pt.dt, pt.error, pt.one_minus_survival) for pt in sweep.points
    ]
    results = {
        "error_slope": sweep.error_slope,
        "leakage_slope": sweep.leakage_slope,
        "total_time": p["total_time"],
        "stepper": p["stepper"],
        "measurement_mode": p["measurement_mode"],
    }
    figures = []
    if fig_path:
        figures.append(
            report.sweep_figure(
                [pt.dt for pt in sweep.points],
                [pt.error for pt in sweep.points],
                [pt.one_minus_survival for pt in sweep.points],
                sweep.error_slope, sweep.leakage_slope, fig_path,
            )
        )
    return (
        results,
        (["n_steps", "dt", "error", "one_minus_survival"], rows),
        figures,
    )


def _engine_incoherent(cfg, seed, fig_path):
    from . import report

    dev, joint, phi, rho0 = _dynamics_inputs(cfg)
    p = cfg.data["protocol"]
    n_steps = p["n_steps"]
    dt = p["total_time"] / n_steps
    weights = classical_weights(phi)
    unitaries = [propagator(h, dt) for h in dev.hamiltonians]
    n_traj = cfg.data["monte_carlo"]["n_traj"]
    mean, stderr, dists = monte_carlo_average(
        rho0, weights, unitaries, n_steps, n_traj, seed, keep_distances=True
    )
    step_channel = exact_average_channel(weights, unitaries)
    composed = channel_power(step_channel, n_steps)
    exact_out = composed.apply(rho0)
    h_eff = effective_hamiltonian(joint, phi)
    target = channel_from_unitary(propagator(h_eff, p["total_time"]))
    results = {
        "mc_vs_exact_distance": trace_distance(mean, exact_out),
        "mc_stderr": stderr,
        "channel_distance_to_effective": channel_distance(composed, target),
        "probe_distance_to_effective": channel_probe_distance(composed, target),
        "n_steps": n_steps,
        "dt": dt,
        "n_traj": n_traj,
        "total_time": p["total_time"],
    }
    rows = [(i, float(d)) for i, d in enumerate(dists)]
    figures = []
    if fig_path:
        figures.append(report.trajectory_figure(dists, stderr, fig_path))
    return results, (["trajectory", "distance_to_mean"], rows), figures


def _engine_compare(cfg, seed, fig_path):
    from . import report

    dev, joint, phi, rho0 = _dynamics_inputs(cfg)
    p = cfg.data["protocol"]
    t_total = p["total_time"]
    n_list = cfg.data["sweep"]["n_list"]
    weights = classical_weights(phi)
    h_eff = effective_hamiltonian(joint, phi)
    target = channel_from_unitary(propagator(h_eff, t_total))
    zeno_errors, chan_dists, cross, rows = [], [], [], []
    for n in n_list:
        dt = t_total / n
        proto = ProtocolConfig(
            total_time=t_total, n_steps=n,
            stepper=p["stepper"], measurement_mode=p["measurement_mode"],
        )
        res = run_zeno(rho0, phi, joint, proto)
        unitaries = [propagator(h, dt) for h in dev.hamiltonians]
        composed = channel_power(exact_average_channel(weights, unitaries), n)
        gap = trace_distance(res.final_system_state, composed.apply(rho0))
        dist = channel_distance(composed, target)
        zeno_errors.append(res.error)
        chan_dists.append(dist)
        cross.append(gap)
        rows.append((n, dt, res.error, dist, gap))
    results = {
        "zeno_error": zeno_errors,
        "incoherent_channel_distance": chan_dists,
        "cross_distance": cross,
        "n_list": list(n_list),
        "total_time": t_total,
    }
    figures = []
    if fig_path:
        figures.append(
            report.compare_figure(
                [t_total / n for n in n_list], zeno_errors, chan_dists, cross,
                fig_path,
            )
        )
    header = ["n_steps", "dt", "zeno_error", "incoherent_channel_distance",
              "cross_distance"]
    return results, (header, rows), figures


def _engine_cavity(cfg, seed, fig_path):
    from . import report

    dev, phi, _ = _build_device(cfg.data["model"])
    joint = build_joint_hamiltonian(dev)
    h_eff = effective_hamiltonian(joint, phi)
    energies = np.linalg.eigvalsh(h_eff.matrix)
    weights = classical_weights(phi).p
    coupling = cfg.data["model"]["coupling"]
    effective_coupling = coupling * (weights[0] - weights[1])
    n_max = cfg.data["model"]["n_max"]
    expected = np.sort(effective_coupling * np.arange(n_max + 1))
    rows = [
        (i, float(energies[i]), float(expected[i])) for i in range(n_max + 1)
    ]
    results = {
        "effective_coupling": effective_coupling,
        "max_spectrum_deviation": float(np.abs(energies - expected).max()),
        "n_max": n_max,
    }
    figures = []
    if fig_path:
        figures.append(report.spectrum_figure(energies, expected, fig_path))
    return results, (["index", "energy", "expected"], rows), figures


def _engine_sg_check(cfg, seed, fig_path):
    from . import report

    _, _, extras = _build_device(cfg.data["model"])
    spec = extras["sg_spec"]
    g = spec.coupling
    h_eff = sg_effective(spec)
    blocks = momentum_blocks(h_eff, len(spec.momentum_grid))
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    rows = []
    block_devs, spec_devs, p_norms, eig_low, eig_high = [], [], [], [], []
    for q, ((px, py), block) in enumerate(zip(spec.momentum_grid, blocks)):
        expected = (g / 2) * (px * sx + py * sy)
        dev_b = float(np.abs(block - expected).max())
        ev = np.linalg.eigvalsh(block)
        p_norm = float(np.hypot(px, py))
        dev_s = float(
            np.abs(ev - np.array([-1.0, 1.0]) * (g / 2) * p_norm).max()
        )
        block_devs.append(dev_b)
        spec_devs.append(dev_s)
        p_norms.append(p_norm)
        eig_low.append(float(ev[0]))
        eig_high.append(float(ev[1]))
        rows.append((q, px, py, dev_b, float(ev[0]), float(ev[1])))
    try:
        covariance = [
            [theta, sg_rotation_covariance(spec, theta)]
            for theta in cfg.data["thetas"]
        ]
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    results = {
        "max_block_deviation": max(block_devs),
        "max_spectrum_deviation": max(spec_devs),
        "covariance_deviations": covariance,
        "max_covariance_deviation": max(d for _, d in covariance),
    }
    figures = []
    if fig_path:
        figures.append(
            report.spin_kick_figure(p_norms, eig_low, eig_high, g, fig_path)
        )
    header = ["grid_index", "p_x", "p_y", "block_deviation", "eig_low", "eig_high"]
    return results, (header, rows), figures


def _engine_scatter(cfg, seed, fig_path):
    from . import report

    _, _, extras = _build_device(cfg.data["model"])
    spec = extras["scatterer_spec"]
    arrangement = extras["arrangement"]
    try:
        potential = scatterer_potential(spec, arrangement)
        result = bound_states(spec, potential)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    rows = [
        (i, float(result.energies[i]), int(result.bound_flags[i]),
         float(result.localization[i]))
        for i in range(result.energies.size)
    ]
    results = {
        "bound_count": result.bound_count,
        "bound_energies": [float(e) for e in result.bound_energies],
        "v_asym": result.v_asym,
        "arrangement": arrangement,
    }
    figures = []
    if fig_path:
        figures.append(
            report.well_figure(result.x, potential.values, result, fig_path)
        )
    return results, (["index", "energy", "bound", "localization"], rows), figures


_ENGINES = {
    "zeno": _engine_zeno,
    "incoherent": _engine_incoherent,
    "sweep": _engine_sweep,
    "compare": _engine_compare,
    "cavity": _engine_cavity,
    "sg_check": _engine_sg_check,
    "scatter": _engine_scatter,
}


# ----------------------------------------------------------------------------
# output emission
# ----------------------------------------------------------------------------


def _fmt_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        out = float(value)
        if not math.isfinite(out):
            raise RuntimeError("summary contains a non-finite scalar")
        return out
    if isinstance(value, str):
        return value
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    raise RuntimeError(f"summary value {value!r} is not serializable")


def emit_outputs(summary: dict, table, csv_path: Path, json_path: Path):
    """Write the CSV table (comma-delimited, LF endings, 17-significant-digit
    floats) and the pretty-printed, key-sorted JSON summary."""
    header, rows = table
    lines = [",".join(header)]
    lines.extend(",".join(_fmt_cell(v) for v in row) for row in rows)
    csv_path.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    blob = json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n"
    json_path.write_bytes(blob.encode("utf-8"))
    return csv_path, json_path


@dataclass(frozen=True)
class RunSummary:
    """In-memory record of one experiment run.  ``wall_clock_seconds`` is
    never written to the output files (they must be reproducible byte for
    byte); it is reported on stderr by the command-line entry point."""

    experiment: str
    seed: int
    tool_version: str
    results: dict
    wall_clock_seconds: float
    csv_path: Path
    json_path: Path
    figure_paths: tuple

    def to_summary_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "tool_version": self.tool_version,
            **self.results,
        }


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: str | Path = ".",
    seed_override: int | None = None,
    figures: bool = True,
) -> RunSummary:
    """Dispatch one experiment and write its outputs under ``out_dir``."""
    started = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    experiment = cfg.experiment
    seed = seed_override if seed_override is not None else cfg.seed
    if experiment == "incoherent" and seed_override is None:
        seed = cfg.data["monte_carlo"]["seed"]

    output = cfg.data.get("output", {})
    csv_path = out / output.get("csv_path", f"{experiment}.csv")
    json_path = out / output.get("json_path", f"{experiment}_summary.json")
    fig_path = str(out / f"{experiment}.png") if figures else None

    results, table, figure_paths = _ENGINES[experiment](cfg, seed, fig_path)
    summary = {
        "experiment": experiment,
        "seed": seed,
        "tool_version": __version__,
        **results,
    }
    emit_outputs(summary, table, csv_path, json_path)
    return RunSummary(
        experiment=experiment,
        seed=seed,
        tool_version=__version__,
        results=_jsonable(results),
        wall_clock_seconds=time.perf_counter() - started,
        csv_path=csv_path,
        json_path=json_path,
        figure_paths=tuple(figure_paths),
    )


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------


def _error_json(code: int, kind: str, message: str) -> str:
    return json.dumps(
        {"error": {"code": code, "kind": kind, "message": message}},
        sort_keys=True,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="zenosim",
        description="Run a measurement-frozen-device experiment from a JSON config.",
    )
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out-dir", default=".", help="directory for outputs")
    parser.add_argument("--seed", type=int, default=None,
                        help="64-bit seed overriding the config")
    parser.add_argument("--experiment", default=None, choices=EXPERIMENTS,
                        help="experiment name overriding the config")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(_error_json(1, "config", f"cannot read config: {exc}"),
              file=sys.stderr)
        return 1

    try:
        cfg = parse_config(text, experiment_override=args.experiment)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed: must fit in 64 bits")
        summary = run_experiment(
            cfg,
            out_dir=args.out_dir,
            seed_override=args.seed,
            figures=not args.no_figures,
        )
    except ConfigError as exc:
        print(_error_json(1, "config", str(exc)), file=sys.stderr)
        return 1
    except OSError as exc:
        print(_error_json(3, "io", str(exc)), file=sys.stderr)
        return 3
    except (ValueError, RuntimeError) as exc:
        print(_error_json(2, "engine", str(exc)), file=sys.stderr)
        return 2

    print(json.dumps(summary.to_summary_dict(), indent=2, sort_keys=True))
    written = [str(summary.csv_path), str(summary.json_path),
               *map(str, summary.figure_paths)]
    print(
        f"zenosim: {summary.experiment} finished in "
        f"{summary.wall_clock_seconds:.3f}s; wrote {', '.join(written)}",
        file=sys.stderr,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
