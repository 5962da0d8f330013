"""Command-line front end.

Every data-producing subcommand writes RFC-4180-style CSV (CRLF rows,
17 significant digits) whose first line is a comment carrying the hash
of the run manifest, plus the manifest itself as JSON next to it. The
hash covers command, effective configuration, package versions, and
experiment inputs; wall time is recorded in the manifest but kept out
of the hash so identical configurations rerun to identical CSV bytes.

Exit codes: 0 success, 1 invariant failure, 2 configuration error,
3 I/O error. Partial outputs are removed when a run fails.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import tempfile
import time

import numpy as np
import scipy

from . import __version__
from .analysis import (
    analytic_evolution,
    computational_indices,
    cphase_tomography,
    gate_timing,
    max_superposition,
    phase_aligned_fidelity,
    state_fidelity_mixed,
)
from .config import RunConfig, resolve_config
from .dynamics import (
    QuantumState,
    default_timestep,
    expectation,
    propagate_lindblad,
    propagate_static,
    propagate_td,
)
from .errors import ConfigError, InvariantViolation
from .experiments import (
    ExperimentResult,
    _line_number_operator,
    optimal_coupling_sweep,
    run_fig3,
    run_fig7_panels,
    run_fig7a,
)
from .hilbert import basis_ket
from .kernels import get_backend
from .model import (
    DeviceParams,
    build_h2q,
    build_heff_prime,
    build_lindblad_channels,
    dark_mode_space,
    device_space,
)
from .normalmodes import single_photon_spectrum, verify_h_double_prime

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_IO = 3

BASIS_CHOICES = ("gg", "ge", "eg", "ee", "max")

ORACLE_SEED = 413


def _fmt(x) -> str:
    return format(float(x), ".17g")


class OutputWriter:
    """Atomic file emission with failure cleanup for one CLI run."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.written = []

    def write_text(self, name: str, text: str) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        final = os.path.join(self.out_dir, name)
        fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=f".{name}.")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, final)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
        self.written.append(final)
        return final

    def cleanup(self):
        for path in self.written:
            try:
                os.remove(path)
            except OSError:
                pass
        self.written = []


def _effective_config(cfg: RunConfig) -> dict:
    return {
        "device": dict(cfg.device),
        "n_max": cfg.n_max,
        "dt": cfg.dt,
        "n_samples": cfg.n_samples,
        "grid_n": cfg.grid_n,
        "workers": cfg.workers,
        "tomography_propagator": cfg.tomography_propagator,
        "cphase_window": cfg.cphase_window,
        "fig3_deltas": list(cfg.fig3_deltas),
        "fig3_gt_max": cfg.fig3_gt_max,
        "fig3_points": cfg.fig3_points,
        "fig7_axes": {k: list(v) for k, v in cfg.fig7_axes.items()},
    }


def _manifest_scope(command: str, cfg: RunConfig, run_info: dict) -> dict:
    return {
        "command": command,
        "config_source": cfg.source,
        "config": _effective_config(cfg),
        "versions": {
            "darklink": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "backend": get_backend(),
        },
        "run": run_info,
    }


def _manifest_hash(scope: dict) -> str:
    blob = json.dumps(scope, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _csv_text(manifest_hash: str, header, rows) -> str:
    sio = io.StringIO()
    sio.write(f"# manifest-hash: {manifest_hash}\r\n")
    w = csv.writer(sio, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return sio.getvalue()


def _write_manifest(writer: OutputWriter, name: str, scope: dict,
                    manifest_hash: str, wall_time: float, outputs):
    manifest = dict(scope)
    manifest["manifest_hash"] = manifest_hash
    manifest["wall_time_s"] = wall_time
    manifest["outputs"] = [os.path.basename(p) for p in outputs]
    writer.write_text(name, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _emit_experiment(result: ExperimentResult, command: str, cfg: RunConfig,
                     writer: OutputWriter, split_leakage: bool = False):
    """Write <name>.csv (+ optional <name>_leakage.csv) and the manifest."""
    meta = dict(result.metadata)
    wall_time = meta.pop("wall_time_s", 0.0)
    run_info = {
        "experiment": result.name,
        "axis": {
            "name": result.axis_name,
            "units": result.axis_units,
            "values": [float(v) for v in result.axis_values],
        },
        "metadata": meta,
    }
    scope = _manifest_scope(command, cfg, run_info)
    h = _manifest_hash(scope)

    axis_col = [(result.axis_name, result.axis_values)]
    if split_leakage:
        main_cols = axis_col + list(result.fidelity.items())
        side_cols = axis_col + list(result.leakage.items()) \
            + list(result.diagnostics.items())
    else:
        main_cols = axis_col + result.columns()
        side_cols = None

    def table(cols):
        header = [name for name, _ in cols]
        n = len(cols[0][1])
        rows = [[_fmt(series[i]) for _, series in cols] for i in range(n)]
        return header, rows

    outputs = []
    header, rows = table(main_cols)
    outputs.append(writer.write_text(f"{result.name}.csv",
                                     _csv_text(h, header, rows)))
    if side_cols:
        header, rows = table(side_cols)
        outputs.append(writer.write_text(f"{result.name}_leakage.csv",
                                         _csv_text(h, header, rows)))
    _write_manifest(writer, f"{result.name}_manifest.json", scope, h,
                    wall_time, outputs)
    return outputs


# ---------------------------------------------------------------- check

def _check_battery(cfg: RunConfig, params: DeviceParams):
    """The invariant self-test battery. Yields (name, ok, detail)."""

    # 1. timing algebra: both revival conditions and the axis identity
    timing = gate_timing(1, 1, params.g1_ge)
    r1 = abs(timing.g2_es_required / params.g1_ge - math.sqrt(3.0))
    r2 = abs(params.g1_ge / (2 * math.pi) * timing.t_gate - math.sqrt(2.0) / 2)
    c1 = abs(params.g1_ge / math.sqrt(2.0) * timing.t_gate - math.pi) / math.pi
    gp = params.g1_ge ** 2 + timing.g2_es_required ** 2
    c2 = abs(math.sqrt(gp / 2.0) * timing.t_gate - 2 * math.pi) / (2 * math.pi)
    worst = max(r1, r2, c1, c2)
    yield ("timing-algebra", worst < 1e-12, f"worst residual {worst:.2e}")

    # 2. closed forms against exact exponentiation of the dark-mode model
    rng = np.random.default_rng(ORACLE_SEED)
    space = dark_mode_space(params, cfg.n_max)
    ham = build_heff_prime(params, space)
    worst_pop = 0.0
    worst_fid = 0.0
    for t in rng.uniform(0.0, 2.0 * timing.t_gate, size=20):
        for basis, labels in (("gg", (0, 0, 0)), ("ge", (0, 1, 0)),
                              ("eg", (1, 0, 0)), ("ee", (1, 1, 0))):
            ref = analytic_evolution(basis, params, t, n_max=cfg.n_max)
            psi0 = basis_ket(labels, space)
            num = propagate_static(ham, psi0, t)
            pops = np.abs(ref.full_vector()) ** 2 - np.abs(num.full_vector()) ** 2
            worst_pop = max(worst_pop, float(np.max(np.abs(pops))))
            worst_fid = max(worst_fid, abs(1.0 - phase_aligned_fidelity(ref, num)))
    ok = worst_pop < 1e-10 and worst_fid < 1e-9
    yield ("closed-form-oracle",
           ok, f"max population diff {worst_pop:.2e}, infidelity {worst_fid:.2e}")

    # 3. collective-mode transform identity, checked at order-one scales
    # where float cancellation cannot mask it, then the relative residual
    # at the configured scales
    unit = DeviceParams(
        omega_a=1.0, omega_b=1.0, omega_f=1.0,
        omega1_ge=1.0, omega1_es=0.85, omega2_ge=1.15, omega2_es=1.0,
        g1_ge=0.01, g2_ge=0.01 * math.sqrt(1.5), gf_a=0.25, gf_b=0.25)
    chk = verify_h_double_prime(unit, n_max=cfg.n_max)
    ok3 = chk.residual_exc1 < 1e-10 and chk.residual_exc2 < 1e-8
    spec = single_photon_spectrum(unit)
    want = np.array([1.0 - math.sqrt(2.0) * 0.25, 1.0,
                     1.0 + math.sqrt(2.0) * 0.25])
    spec_err = float(np.max(np.abs(spec - want)))
    ok3 = ok3 and spec_err < 1e-10
    chk_cfg = verify_h_double_prime(params, n_max=cfg.n_max)
    rel = chk_cfg.residual_exc2 / max(params.omega_a, 1.0)
    ok3 = ok3 and rel < 1e-6
    yield ("normal-mode-identity", ok3,
           f"residuals {chk.residual_exc1:.2e}/{chk.residual_exc2:.2e}, "
           f"spectrum {spec_err:.2e}, relative at config {rel:.2e}")

    # 4. excitation conservation of the dark-mode gate Hamiltonian
    from .normalmodes import excitation_number
    nvec = excitation_number(space)
    hmat = ham.static_part()
    comm = hmat * (nvec[None, :] - nvec[:, None])
    scale = max(float(np.max(np.abs(hmat))), 1e-300)
    resid = float(np.max(np.abs(comm))) / scale
    yield ("excitation-conservation", resid < 1e-12,
           f"relative commutator {resid:.2e}")

    # 5. closed-system limit: the master equation with every rate set to
    # zero must reproduce pure-state evolution under the same Hamiltonian
    from dataclasses import replace
    lossless = replace(params, kappa_a=0.0, kappa_b=0.0, kappa_f=0.0,
                       gamma1_ge=0.0, gamma2_ge=0.0)
    full = device_space(lossless, cfg.n_max)
    ham_l = build_h2q(lossless, full)
    t_probe = timing.t_gate / 8.0
    psi0 = max_superposition(full)
    dt = default_timestep(ham_l)
    rho = propagate_lindblad(
        ham_l, build_lindblad_channels(lossless, full),
        QuantumState.pure_density(psi0), t_probe, dt, n_samples=1).final
    ref = propagate_td(ham_l, psi0, t_probe, dt, n_samples=1).final
    diff = abs(1.0 - state_fidelity_mixed(ref.full_vector(), rho))
    yield ("closed-system-limit", diff < 1e-8, f"infidelity {diff:.2e}")


def _cmd_check(args, cfg, params, writer):
    t0 = time.perf_counter()
    results = []
    failed = 0
    for name, ok, detail in _check_battery(cfg, params):
        results.append({"name": name, "ok": bool(ok), "detail": detail})
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if not ok:
            failed += 1
    scope = _manifest_scope("check", cfg, {"results": results})
    h = _manifest_hash(scope)
    _write_manifest(writer, "check_manifest.json", scope, h,
                    time.perf_counter() - t0, [])
    if failed:
        print(f"{failed} check(s) failed")
        return EXIT_INVARIANT
    print("all checks passed")
    return EXIT_OK


# ---------------------------------------------------------------- evolve

def _cmd_evolve(args, cfg, params, writer):
    t0 = time.perf_counter()
    if args.t <= 0:
        raise ConfigError("--t must be > 0")
    from .analysis import operating_hamiltonian
    ham = operating_hamiltonian(params, cfg.n_max)
    space = ham.space
    comp = computational_indices(space)
    if args.state == "max":
        psi0 = max_superposition(space)
    else:
        pos = {"gg": 0, "ge": 1, "eg": 2, "ee": 3}[args.state]
        psi0 = np.zeros(space.dim, dtype=complex)
        psi0[comp[pos]] = 1.0
    channels = build_lindblad_channels(params, space)
    step = cfg.dt if cfg.dt is not None else default_timestep(ham)
    traj = propagate_lindblad(ham, channels, QuantumState.pure_density(psi0),
                              args.t, step, n_samples=cfg.n_samples)
    nf_op = _line_number_operator(space)
    rows = []
    labels = ("p_gg", "p_ge", "p_eg", "p_ee")
    for t, st in zip(traj.times, traj.states):
        full = st.full_matrix()
        pops = [float(np.real(full[i, i])) for i in comp]
        leak = max(0.0, 1.0 - sum(pops))
        rows.append([_fmt(t)] + [_fmt(p) for p in pops]
                    + [_fmt(leak), _fmt(expectation(nf_op, st)),
                       _fmt(st.trace())])
    run_info = {
        "state": args.state,
        "t_final": args.t,
        "dt": traj.metadata["dt"],
        "n_max": cfg.n_max,
    }
    scope = _manifest_scope("evolve", cfg, run_info)
    h = _manifest_hash(scope)
    header = ["t"] + list(labels) + ["leakage", "n_line", "trace"]
    out = writer.write_text("evolve.csv", _csv_text(h, header, rows))
    _write_manifest(writer, "evolve_manifest.json", scope, h,
                    time.perf_counter() - t0, [out])
    final = rows[-1]
    print(f"evolved |{args.state}> for {args.t:g} s "
          f"({traj.metadata['nsteps']} steps, backend {get_backend()})")
    print("final populations gg/ge/eg/ee: "
          + " ".join(f"{float(x):.6f}" for x in final[1:5]))
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------- cphase

def _cmd_cphase(args, cfg, params, writer):
    window = cfg.cphase_window
    if window is None:
        if params.g1_ge <= 0:
            raise ConfigError("cphase needs g1_ge > 0 or an explicit window")
        window = 1.25 * gate_timing(1, 1, params.g1_ge).t_gate
    t_grid = np.linspace(0.0, window, cfg.n_samples + 1)
    result = run_fig7a(params, t_grid=t_grid, n_max=cfg.n_max, dt=cfg.dt)
    result.name = "cphase"
    _emit_experiment(result, "cphase", cfg, writer)
    peak = result.metadata["peak"]
    print(f"peak fidelity {peak['fidelity']:.6f} at t = {peak['t']:.4e} s")
    print(f"max line occupation {result.metadata['max_line_occupation']:.3e}")
    return EXIT_OK


# ------------------------------------------------------------ tomography

def _cmd_tomography(args, cfg, params, writer):
    t0 = time.perf_counter()
    res = cphase_tomography(params, cfg.tomography_propagator,
                            n_max=cfg.n_max, dt=cfg.dt)
    labels = ("gg", "ge", "eg", "ee")
    run_info = {
        "propagator": res.propagator,
        "t_gate": res.t_gate,
        "deviation": res.deviation,
        "leakage": res.leakage,
        "degraded": res.degraded,
        "n_max": cfg.n_max,
    }
    scope = _manifest_scope("tomography", cfg, run_info)
    h = _manifest_hash(scope)
    rows = []
    for i, ri in enumerate(labels):
        for j, cj in enumerate(labels):
            rows.append([ri, cj, _fmt(res.matrix[i, j].real),
                         _fmt(res.matrix[i, j].imag)])
    out = writer.write_text(
        "tomography.csv", _csv_text(h, ["row", "col", "re", "im"], rows))
    _write_manifest(writer, "tomography_manifest.json", scope, h,
                    time.perf_counter() - t0, [out])
    print(f"gate matrix ({res.propagator}, t = {res.t_gate:.4e} s):")
    for i in range(4):
        print("  " + "  ".join(
            f"{res.matrix[i, j].real:+.6f}{res.matrix[i, j].imag:+.6f}j"
            for j in range(4)))
    print(f"max deviation from diag(1,1,-1,1): {res.deviation:.3e}")
    if res.degraded:
        print("warning: leakage above 5% on at least one basis state; "
              "tomography is degraded")
    return EXIT_OK


# ------------------------------------------------------------------ figs

def _cmd_fig3(args, cfg, params, writer):
    deltas = tuple(args.deltas) if args.deltas else cfg.fig3_deltas
    gt_grid = np.linspace(0.0, cfg.fig3_gt_max, cfg.fig3_points)
    result = run_fig3(params, deltas=deltas, gt_grid=gt_grid,
                      n_max=cfg.n_max, dt=cfg.dt, workers=cfg.workers)
    _emit_experiment(result, "fig3", cfg, writer, split_leakage=True)
    for key, peak in result.metadata["peaks"].items():
        print(f"{key}: peak fidelity {peak['fidelity']:.6f} at gt = {peak['gt']:g}")
    return EXIT_OK


def _cmd_fig7(args, cfg, params, writer):
    if args.panel == "a":
        t_grid = np.linspace(0.0, 100e-9, cfg.n_samples + 1)
        result = run_fig7a(params, t_grid=t_grid, n_max=cfg.n_max, dt=cfg.dt)
        _emit_experiment(result, "fig7", cfg, writer)
        peak = result.metadata["peak"]
        print(f"peak fidelity {peak['fidelity']:.6f} at t = {peak['t']:.4e} s")
        return EXIT_OK
    result = run_fig7_panels(params, args.panel,
                             axis_grid=cfg.fig7_axes.get(args.panel),
                             n_max=cfg.n_max, dt=cfg.dt,
                             workers=cfg.workers, grid_n=cfg.grid_n)
    _emit_experiment(result, "fig7", cfg, writer)
    best = result.metadata["best"]
    print(f"best fidelity {best['fidelity']:.6f} at "
          f"{result.axis_name} = {best['axis']:g} {result.axis_units}")
    return EXIT_OK


def _cmd_sweep(args, cfg, params, writer):
    best, result = optimal_coupling_sweep(
        params, args.from_hz, args.to_hz, args.step_hz,
        n_max=cfg.n_max, dt=cfg.dt, workers=cfg.workers)
    _emit_experiment(result, "sweep", cfg, writer)
    info = result.metadata["best"]
    print(f"best g1_ge = {best:g} Hz (fidelity {info['fidelity']:.6f})")
    return EXIT_OK


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="darklink",
        description="Two-qutrit phase gate simulator on a dark collective "
                    "mode of coupled resonators.")
    p.add_argument("--config", default="paper_sec4",
                   help="config file path or preset name (default: paper_sec4)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--nmax", type=int, default=None,
                   help="override the bosonic truncation")
    p.add_argument("--dt", type=float, default=None,
                   help="override the integration step (s)")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", help="run the invariant self-test battery")
    e = sub.add_parser("evolve", help="propagate a named initial state")
    e.add_argument("--state", required=True, choices=BASIS_CHOICES)
    e.add_argument("--t", required=True, type=float, help="final time (s)")
    sub.add_parser("cphase", help="gate fidelity against time")
    sub.add_parser("tomography", help="gate matrix in the qubit basis")
    f3 = sub.add_parser("fig3", help="unitary fidelity vs gt per coupling ratio")
    f3.add_argument("--deltas", nargs="+", type=float, default=None)
    f7 = sub.add_parser("fig7", help="dissipative curves and robustness panels")
    f7.add_argument("--panel", required=True, choices=list("abcdef"))
    sw = sub.add_parser("sweep", help="optimize the qutrit-resonator coupling")
    sw.add_argument("--from", dest="from_hz", required=True, type=float,
                    help="lowest g1_ge (Hz)")
    sw.add_argument("--to", dest="to_hz", required=True, type=float,
                    help="highest g1_ge (Hz)")
    sw.add_argument("--step", dest="step_hz", required=True, type=float,
                    help="grid step (Hz)")
    return p


COMMANDS = {
    "check": _cmd_check,
    "evolve": _cmd_evolve,
    "cphase": _cmd_cphase,
    "tomography": _cmd_tomography,
    "fig3": _cmd_fig3,
    "fig7": _cmd_fig7,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.config)
        if args.nmax is not None:
            if args.nmax < 1:
                raise ConfigError("--nmax must be >= 1")
            cfg.n_max = args.nmax
        if args.dt is not None:
            if not math.isfinite(args.dt) or args.dt <= 0:
                raise ConfigError("--dt must be a finite time > 0")
            cfg.dt = args.dt
        params = cfg.device_params()
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    writer = OutputWriter(args.out)
    try:
        return COMMANDS[args.command](args, cfg, params, writer)
    except (ConfigError, ValueError) as exc:
        writer.cleanup()
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        writer.cleanup()
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        writer.cleanup()
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
