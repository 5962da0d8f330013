"""Scripted parameter scans: the gate fidelity curves, the robustness
panels, and the coupling optimization sweep.

Every run returns an ExperimentResult carrying the axis, one or more
named fidelity columns, the matching leakage columns, and a metadata
snapshot (device parameters, step size, truncation, wall time) that is
enough to reproduce the numbers bit for bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, replace
from functools import partial

import numpy as np

from .analysis import (
    average_gate_fidelity_report,
    computational_indices,
    gate_timing,
    max_superposition,
    max_superposition_target,
    operating_hamiltonian,
    state_fidelity_mixed,
    state_fidelity_pure,
)
from .dynamics import QuantumState, default_timestep, expectation, \
    propagate_lindblad, propagate_td
from .errors import InvariantViolation
from .hilbert import OperatorMatrix, boson_annihilation, embed
from .model import (
    DeviceParams,
    LINE_F,
    build_h2q,
    build_lindblad_channels,
    device_space,
)

FIDELITY_CEILING = 1.0 + 1e-9
FIDELITY_FLOOR = -1e-8  # the positivity tolerance of the integrator

DEFAULT_DELTAS = (5.0, 10.0, 25.0)
DEFAULT_GT_POINTS = 161
DEFAULT_GT_MAX = 0.8

# robustness-panel default axes bracket the operating point
PANEL_AXES = {
    "b": np.linspace(4e6, 12e6, 9),                            # g1_ge, Hz
    "c": np.linspace(360e6, 1080e6, 9),                        # anharmonicity, Hz
    "d": np.linspace(-24e6, 24e6, 13),                         # offset, Hz
    "e": np.array([1, 2, 5, 10, 20, 50, 100, 200]) * 1e-9,     # line decay, s
    "f": np.array([5, 10, 20, 50, 100]) * 1e-6,                # uniform decay, s
}

PANEL_AXIS_NAMES = {
    "b": ("g1_ge", "Hz"),
    "c": ("anharmonicity_2", "Hz"),
    "d": ("frequency_offset_2", "Hz"),
    "e": ("kappa_f_inv", "s"),
    "f": ("gamma_inv", "s"),
}

SWEEP_LINE_COUPLING_HZ = 200e6
SWEEP_LIFETIME_S = 50e-6


def _clean_fidelity(values: np.ndarray) -> np.ndarray:
    """Map sub-tolerance negative noise to exact zero; anything below the
    integrator's positivity tolerance is a real failure."""
    arr = np.asarray(values, dtype=float)
    if arr.size and float(np.min(arr)) < FIDELITY_FLOOR:
        raise InvariantViolation(
            f"fidelity {float(np.min(arr)):.3e} below the positivity tolerance")
    if arr.size and float(np.max(arr)) > FIDELITY_CEILING:
        raise InvariantViolation(
            f"fidelity {float(np.max(arr)):.3e} above 1")
    return np.maximum(arr, 0.0)


@dataclass
class ExperimentResult:
    name: str
    axis_name: str
    axis_units: str
    axis_values: np.ndarray
    fidelity: dict = field(default_factory=dict)
    leakage: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axis_values = np.asarray(self.axis_values, dtype=float)
        if self.axis_values.ndim != 1 or self.axis_values.size == 0:
            raise ValueError("axis_values must be a nonempty 1-D array")
        n = self.axis_values.size
        for group in (self.fidelity, self.leakage, self.diagnostics):
            for key, series in group.items():
                group[key] = np.asarray(series, dtype=float)
                if group[key].shape != (n,):
                    raise ValueError(
                        f"series {key!r} length does not match the axis")
        for key in self.fidelity:
            self.fidelity[key] = _clean_fidelity(self.fidelity[key])

    def columns(self):
        """(name, series) pairs in a stable order: fidelity, leakage,
        then diagnostics."""
        out = []
        for group in (self.fidelity, self.leakage, self.diagnostics):
            out.extend(group.items())
        return out


def _line_number_operator(space) -> OperatorMatrix:
    f = embed(boson_annihilation(space.modes[LINE_F].n_max), LINE_F, space)
    return OperatorMatrix(f.m.conj().T @ f.m)


def _uniform_from_zero(grid, what: str) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2:
        raise ValueError(f"{what} must hold at least two points")
    if g[0] != 0.0:
        raise ValueError(f"{what} must start at 0")
    steps = np.diff(g)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9):
        raise ValueError(f"{what} must be uniformly increasing")
    return g


def _fig3_column(params: DeviceParams, delta: float, t_final: float,
                 n_points: int, n_max: int, dt: float | None):
    p = replace(params,
                gf_a=delta * params.g1_ge,
                gf_b=delta * params.g1_ge)
    space = device_space(p, n_max)
    ham = build_h2q(p, space)
    psi0 = max_superposition(space)
    target = max_superposition_target(space)
    comp = computational_indices(space)
    step = dt if dt is not None else default_timestep(ham)
    traj = propagate_td(ham, psi0, t_final, step, n_samples=n_points - 1)
    nf_op = _line_number_operator(space)
    fids = np.empty(n_points)
    leaks = np.empty(n_points)
    nf = np.empty(n_points)
    for i, st in enumerate(traj.states):
        full = st.full_vector()
        fids[i] = state_fidelity_pure(target, full)
        leaks[i] = max(0.0, 1.0 - float(np.sum(np.abs(full[comp]) ** 2)))
        nf[i] = expectation(nf_op, st)
    return fids, leaks, nf, traj.metadata["dt"]


def run_fig3(params: DeviceParams, deltas=None, gt_grid=None,
             n_max: int = 2, dt: float | None = None,
             workers: int = 1) -> ExperimentResult:
    """Unitary gate fidelity against the dimensionless time
    gt = (g1_ge/2pi) * t, one column per line-coupling ratio.

    Each ratio value rescales both resonator-line couplings to
    delta * g1_ge while everything else stays at the incoming operating
    point; the propagation is the full interaction-picture model with
    the dispersive corrections oscillating at the anharmonicity.
    """
    t0 = time.perf_counter()
    deltas = tuple(DEFAULT_DELTAS if deltas is None else deltas)
    if not deltas:
        raise ValueError("at least one coupling ratio is required")
    for d in deltas:
        if d <= 1.0:
            raise ValueError(f"coupling ratio must exceed 1, got {d:g}")
    if gt_grid is None:
        gt_grid = np.linspace(0.0, DEFAULT_GT_MAX, DEFAULT_GT_POINTS)
    gt = _uniform_from_zero(gt_grid, "gt grid")
    t_final = float(gt[-1]) * 2.0 * math.pi / params.g1_ge
    job = partial(_fig3_column, params, t_final=t_final, n_points=gt.size,
                  n_max=n_max, dt=dt)
    outputs = _pmap(job, deltas, workers)
    fidelity, leakage, diagnostics, dts, peaks, nf_max = {}, {}, {}, {}, {}, {}
    for d, (fids, leaks, nf, used_dt) in zip(deltas, outputs):
        key = f"delta{d:g}"
        fidelity[f"F_{key}"] = fids
        leakage[f"leak_{key}"] = leaks
        diagnostics[f"nf_{key}"] = nf
        dts[key] = used_dt
        k = int(np.argmax(fids))
        peaks[key] = {"gt": float(gt[k]), "fidelity": float(fids[k])}
        nf_max[key] = float(np.max(nf))
    return ExperimentResult(
        name="fig3",
        axis_name="gt",
        axis_units="dimensionless",
        axis_values=gt,
        fidelity=fidelity,
        leakage=leakage,
        diagnostics=diagnostics,
        metadata={
            "params": asdict(params),
            "deltas": list(deltas),
            "n_max": n_max,
            "dt": dts,
            "peaks": peaks,
            "max_line_occupation": nf_max,
            "wall_time_s": time.perf_counter() - t0,
        },
    )


def run_fig7a(params: DeviceParams, t_grid=None, n_max: int = 2,
              dt: float | None = None) -> ExperimentResult:
    """Dissipative gate fidelity of the maximal superposition against
    time, under the resonant model with dispersive corrections and all
    loss channels."""
    t0 = time.perf_counter()
    if t_grid is None:
        t_grid = np.linspace(0.0, 100e-9, 201)
    times = _uniform_from_zero(t_grid, "time grid")
    ham = operating_hamiltonian(params, n_max)
    space = ham.space
    channels = build_lindblad_channels(params, space)
    psi0 = max_superposition(space)
    target = max_superposition_target(space)
    comp = computational_indices(space)
    step = dt if dt is not None else default_timestep(ham)
    traj = propagate_lindblad(ham, channels, QuantumState.pure_density(psi0),
                              float(times[-1]), step, n_samples=times.size - 1)
    nf_op = _line_number_operator(space)
    fids = np.empty(times.size)
    leaks = np.empty(times.size)
    nf = np.empty(times.size)
    for i, st in enumerate(traj.states):
        fids[i] = state_fidelity_mixed(target, st)
        block = st.full_matrix()[np.ix_(comp, comp)]
        leaks[i] = max(0.0, 1.0 - float(np.real(np.trace(block))))
        nf[i] = expectation(nf_op, st)
    k = int(np.argmax(fids))
    return ExperimentResult(
        name="fig7a",
        axis_name="t",
        axis_units="s",
        axis_values=times,
        fidelity={"F_cp": fids},
        leakage={"leak": leaks},
        diagnostics={"nf": nf},
        metadata={
            "params": asdict(params),
            "n_max": n_max,
            "dt": traj.metadata["dt"],
            "peak": {"t": float(times[k]), "fidelity": float(fids[k])},
            "max_line_occupation": float(np.max(nf)),
            "wall_time_s": time.perf_counter() - t0,
        },
    )


def peak_gate_fidelity(params: DeviceParams, n_max: int = 2,
                       dt: float | None = None, window: float | None = None,
                       n_samples: int = 200):
    """Best dissipative fidelity over a time window (default: 1.25 gate
    periods for the device's own g1). Returns (fidelity, leakage, t)."""
    ham = operating_hamiltonian(params, n_max)
    space = ham.space
    channels = build_lindblad_channels(params, space)
    psi0 = max_superposition(space)
    target = max_superposition_target(space)
    comp = computational_indices(space)
    if window is None:
        window = 1.25 * gate_timing(1, 1, params.g1_ge).t_gate
    step = dt if dt is not None else default_timestep(ham)
    traj = propagate_lindblad(ham, channels, QuantumState.pure_density(psi0),
                              window, step, n_samples=n_samples)
    fids = np.array([state_fidelity_mixed(target, st) for st in traj.states])
    k = int(np.argmax(fids))
    block = traj.states[k].full_matrix()[np.ix_(comp, comp)]
    leak = max(0.0, 1.0 - float(np.real(np.trace(block))))
    return float(fids[k]), leak, float(traj.times[k])


def _panel_point(base: DeviceParams, panel: str, value: float,
                 n_max: int, dt: float | None, grid_n: int):
    if panel == "b":
        p = replace(base, g1_ge=2.0 * math.pi * value)
    elif panel == "c":
        p = replace(base, omega2_ge=base.omega2_es + 2.0 * math.pi * value)
    elif panel == "d":
        shift = 2.0 * math.pi * value
        p = replace(base, omega2_es=base.omega2_es + shift,
                    omega2_ge=base.omega2_ge + shift)
    elif panel == "e":
        p = replace(base, kappa_f=1.0 / value)
    else:  # f
        rate = 1.0 / value
        p = replace(base, kappa_a=rate, kappa_b=rate, kappa_f=rate,
                    gamma1_ge=rate, gamma2_ge=rate)
        report = average_gate_fidelity_report(p, grid_n, n_max=n_max, dt=dt)
        return report.value, report.leakage, report.t_gate
    return peak_gate_fidelity(p, n_max=n_max, dt=dt)


def run_fig7_panels(params: DeviceParams, panel: str, axis_grid=None,
                    n_max: int = 2, dt: float | None = None,
                    workers: int = 1, grid_n: int = 8) -> ExperimentResult:
    """One-axis robustness scan around the operating point.

    Panels: b scans the q1 coupling g1_ge, c the q2 anharmonicity, d a
    rigid q2 frequency offset, e the line decay time with everything
    else fixed, f a uniform decay time scored by the angle-averaged
    fidelity instead of the single maximal-superposition state.
    """
    t0 = time.perf_counter()
    if panel not in PANEL_AXES:
        raise ValueError(f"unknown panel {panel!r}")
    axis = np.asarray(PANEL_AXES[panel] if axis_grid is None else axis_grid,
                      dtype=float)
    if axis.ndim != 1 or axis.size == 0:
        raise ValueError("axis grid must be a nonempty 1-D array")
    if panel in ("b", "c") and np.any(axis <= 0):
        raise ValueError("axis values must be positive")
    if panel in ("e", "f") and np.any(axis <= 0):
        raise ValueError("decay times must be positive")
    job = partial(_panel_point, params, panel, n_max=n_max, dt=dt,
                  grid_n=grid_n)
    outputs = _pmap(job, axis.tolist(), workers)
    fids = np.array([o[0] for o in outputs])
    leaks = np.array([o[1] for o in outputs])
    t_best = np.array([o[2] for o in outputs])
    axis_name, axis_units = PANEL_AXIS_NAMES[panel]
    fid_key = "F_avg" if panel == "f" else "F_peak"
    k = int(np.argmax(fids))
    return ExperimentResult(
        name=f"fig7{panel}",
        axis_name=axis_name,
        axis_units=axis_units,
        axis_values=axis,
        fidelity={fid_key: fids},
        leakage={"leak": leaks},
        diagnostics={"t_peak": t_best},
        metadata={
            "params": asdict(params),
            "panel": panel,
            "n_max": n_max,
            "dt": dt,
            "grid_n": grid_n if panel == "f" else None,
            "best": {"axis": float(axis[k]), "fidelity": float(fids[k])},
            "wall_time_s": time.perf_counter() - t0,
        },
    )


def _sweep_point(base: DeviceParams, g1_hz: float, n_max: int,
                 dt: float | None):
    g1 = 2.0 * math.pi * g1_hz
    timing = gate_timing(1, 1, g1)
    rate = 1.0 / SWEEP_LIFETIME_S
    gf = 2.0 * math.pi * SWEEP_LINE_COUPLING_HZ
    p = replace(base,
                g1_ge=g1,
                g2_ge=timing.g2_es_required / math.sqrt(2.0),
                gf_a=gf, gf_b=gf,
                kappa_a=rate, kappa_b=rate, kappa_f=rate,
                gamma1_ge=rate, gamma2_ge=rate)
    return peak_gate_fidelity(p, n_max=n_max, dt=dt)


def optimal_coupling_sweep(params: DeviceParams, low_hz: float,
                           high_hz: float, step_hz: float, n_max: int = 2,
                           dt: float | None = None, workers: int = 1):
    """Scan the qutrit-resonator coupling, slaving the second coupling
    to the revival condition at each point, with the line coupling
    pinned to 200 MHz and every lifetime pinned to 50 us.

    Returns (best g1_ge in Hz, ExperimentResult); ties go to the lowest
    coupling.
    """
    t0 = time.perf_counter()
    if step_hz <= 0:
        raise ValueError("step must be > 0")
    if low_hz <= 0 or high_hz < low_hz:
        raise ValueError("invalid sweep range")
    count = int(math.floor((high_hz - low_hz) / step_hz + 1e-9)) + 1
    grid_hz = low_hz + step_hz * np.arange(count)
    job = partial(_sweep_point, params, n_max=n_max, dt=dt)
    outputs = _pmap(job, grid_hz.tolist(), workers)
    fids = np.array([o[0] for o in outputs])
    leaks = np.array([o[1] for o in outputs])
    t_best = np.array([o[2] for o in outputs])
    k = int(np.argmax(fids))  # argmax takes the first occurrence on ties
    result = ExperimentResult(
        name="sweep",
        axis_name="g1_ge",
        axis_units="Hz",
        axis_values=grid_hz,
        fidelity={"F_peak": fids},
        leakage={"leak": leaks},
        diagnostics={"t_peak": t_best},
        metadata={
            "params": asdict(params),
            "n_max": n_max,
            "dt": dt,
            "line_coupling_hz": SWEEP_LINE_COUPLING_HZ,
            "lifetime_s": SWEEP_LIFETIME_S,
            "best": {"g1_ge_hz": float(grid_hz[k]), "fidelity": float(fids[k])},
            "wall_time_s": time.perf_counter() - t0,
        },
    )
    return float(grid_hz[k]), result


def _pmap(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
