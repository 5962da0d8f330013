"""Acceptance battery for the shipped operating point.

Nine end-to-end criteria, each printing one PASS/FAIL line with the
measured numbers. Run with output visible:

    pytest tests/test_acceptance.py -v -s

The expensive propagations are shared through module-scoped fixtures,
so the whole battery costs a few minutes, dominated by the dissipative
angle-grid averages.
"""

import math
import subprocess
import sys
import time
from dataclasses import replace

import numpy as np
import pytest

from darklink.analysis import (
    analytic_evolution,
    average_gate_fidelity_report,
    gate_timing,
    max_superposition,
    max_superposition_target,
    operating_hamiltonian,
    phase_aligned_fidelity,
    state_fidelity_mixed,
)
from darklink.cli import _check_battery
from darklink.config import load_preset
from darklink.dynamics import (
    QuantumState,
    default_timestep,
    propagate_lindblad,
    propagate_static,
    propagate_td,
)
from darklink.experiments import run_fig3, run_fig7a
from darklink.hilbert import basis_ket
from darklink.model import (
    build_heff_prime,
    build_lindblad_channels,
    dark_mode_space,
)
from darklink.normalmodes import single_photon_spectrum, verify_h_double_prime

FIG3_BANDS = {"delta25": 0.998, "delta10": 0.996, "delta5": 0.988}


def _criterion(n: int, ok: bool, detail: str) -> None:
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"criterion {n} failed: {detail}"


@pytest.fixture(scope="module")
def sec4p():
    return load_preset("paper_sec4").device_params()


@pytest.fixture(scope="module")
def losslessp():
    return load_preset("paper_sec3_fig3").device_params()


@pytest.fixture(scope="module")
def fig3_runs(losslessp):
    """Lossless fidelity scans: reference, halved step, deeper truncation.

    One explicit step size, taken from the stiffest column (largest line
    coupling), keeps the halving comparison exact across all columns.
    """
    g1 = losslessp.g1_ge
    p25 = replace(losslessp, gf_a=25.0 * g1, gf_b=25.0 * g1)
    dt25 = default_timestep(operating_hamiltonian(p25, n_max=2))
    t0 = time.perf_counter()
    base = run_fig3(losslessp, dt=dt25)
    wall = time.perf_counter() - t0
    half = run_fig3(losslessp, dt=dt25 / 2.0)
    deeper = run_fig3(losslessp, n_max=3)
    return {"base": base, "half": half, "deeper": deeper, "wall": wall}


@pytest.fixture(scope="module")
def fig7a_runs(sec4p):
    t0 = time.perf_counter()
    base = run_fig7a(sec4p)
    wall = time.perf_counter() - t0
    half = run_fig7a(sec4p, dt=base.metadata["dt"] / 2.0)
    deeper = run_fig7a(sec4p, n_max=3)
    return {"base": base, "half": half, "deeper": deeper, "wall": wall}


@pytest.fixture(scope="module")
def shorter_lived_avg(sec4p):
    """Angle-averaged gate fidelity with every lifetime at 20 us and the
    line coupling ratio lowered to 5."""
    g1 = sec4p.g1_ge
    rate = 1.0 / 20e-6
    params = replace(sec4p, gf_a=5.0 * g1, gf_b=5.0 * g1,
                     kappa_a=rate, kappa_b=rate, kappa_f=rate,
                     gamma1_ge=rate, gamma2_ge=rate)
    dt0 = default_timestep(operating_hamiltonian(params, n_max=2))
    base = average_gate_fidelity_report(params, grid_n=8)
    half = average_gate_fidelity_report(params, grid_n=8, dt=dt0 / 2.0)
    deeper = average_gate_fidelity_report(params, grid_n=8, n_max=3)
    return {"base": base, "half": half, "deeper": deeper}


def test_criterion_1_lossless_peaks(fig3_runs):
    peaks = fig3_runs["base"].metadata["peaks"]
    ok = fig3_runs["wall"] < 120.0
    parts = []
    for key, center in FIG3_BANDS.items():
        p = peaks[key]
        ok = ok and abs(p["fidelity"] - center) <= 0.005
        ok = ok and abs(p["gt"] - 0.705) <= 0.0051
        parts.append(f"{key}: F={p['fidelity']:.5f} at gt={p['gt']:g}")
    _criterion(1, ok, "; ".join(parts)
               + f"; wall {fig3_runs['wall']:.1f} s")


def test_criterion_2_dissipative_peak(fig7a_runs):
    peak = fig7a_runs["base"].metadata["peak"]
    ok = (abs(peak["fidelity"] - 0.9928) <= 0.005
          and abs(peak["t"] - 88.1e-9) <= 1e-9
          and fig7a_runs["wall"] < 300.0)
    _criterion(2, ok, f"F_cp={peak['fidelity']:.5f} at "
                      f"t={peak['t'] * 1e9:.1f} ns; "
                      f"wall {fig7a_runs['wall']:.1f} s")


def test_criterion_3_angle_average(shorter_lived_avg):
    value = shorter_lived_avg["base"].value
    ok = abs(value - 0.98) <= 0.01
    _criterion(3, ok, f"average fidelity {value:.5f} "
                      f"(lifetimes 20 us, ratio 5, grid 8x8)")


def test_criterion_4_closed_form_oracle(losslessp):
    timing = gate_timing(1, 1, losslessp.g1_ge)
    space = dark_mode_space(losslessp)
    ham = build_heff_prime(losslessp, space)
    labels = {"gg": (0, 0, 0), "ge": (0, 1, 0),
              "eg": (1, 0, 0), "ee": (1, 1, 0)}
    rng = np.random.default_rng(413)
    worst_pop = 0.0
    worst_fid = 0.0
    for t in rng.uniform(0.0, 2.0 * timing.t_gate, 20):
        for basis, lab in labels.items():
            ref = analytic_evolution(basis, losslessp, float(t))
            num = propagate_static(ham, basis_ket(lab, space), float(t))
            dp = np.abs(np.abs(num.full_vector()) ** 2
                        - np.abs(ref.full_vector()) ** 2)
            worst_pop = max(worst_pop, float(np.max(dp)))
            worst_fid = max(worst_fid,
                            abs(1.0 - phase_aligned_fidelity(ref, num)))
    cfg = load_preset("paper_sec3_fig3")
    battery = {name: ok for name, ok, _ in
               _check_battery(cfg, cfg.device_params())}
    ok = (worst_pop < 1e-10 and worst_fid < 1e-9
          and battery.get("closed-form-oracle") is True)
    _criterion(4, ok, f"80 propagations: max population error "
                      f"{worst_pop:.1e}, max infidelity {worst_fid:.1e}; "
                      f"wired into the check battery")


def test_criterion_5_timing_algebra():
    g1 = 2.0 * math.pi * 8e6
    timing = gate_timing(1, 1, g1)
    r1 = abs(timing.g2_es_required / g1 - math.sqrt(3.0))
    r2 = abs(g1 / (2.0 * math.pi) * timing.t_gate - math.sqrt(2.0) / 2.0)
    ok = r1 <= 1e-12 and r2 <= 1e-12
    _criterion(5, ok, f"|g2_es/g1 - sqrt3| = {r1:.1e}, "
                      f"|(g1/2pi) t_gate - sqrt2/2| = {r2:.1e}")


def test_criterion_6_collective_basis_identity(unit_params, sec4p):
    chk = verify_h_double_prime(unit_params)
    spec = single_photon_spectrum(unit_params)
    omega, g = 1.0, 0.25
    expect = np.array([omega - math.sqrt(2.0) * g, omega,
                       omega + math.sqrt(2.0) * g])
    spec_err = float(np.max(np.abs(spec - expect)))
    chk4 = verify_h_double_prime(sec4p)
    rel4 = chk4.residual_exc2 / sec4p.omega_a
    ok = (chk.residual_exc1 < 1e-10 and chk.residual_exc2 < 1e-8
          and spec_err < 1e-10 and rel4 < 1e-6)
    _criterion(6, ok, f"residuals {chk.residual_exc1:.1e} (exc<=1) / "
                      f"{chk.residual_exc2:.1e} (exc<=2), spectrum error "
                      f"{spec_err:.1e}, operating-scale relative {rel4:.1e}")


def test_criterion_7_line_stays_dark(fig3_runs):
    occ = fig3_runs["base"].metadata["max_line_occupation"]
    ok = (occ["delta25"] < 0.01
          and occ["delta5"] > occ["delta10"] > occ["delta25"])
    _criterion(7, ok, "max <f+f> = "
               + ", ".join(f"{k}: {occ[k]:.2e}"
                           for k in ("delta5", "delta10", "delta25")))


def test_criterion_8_integrator_guarantees(sec4p, losslessp, fig3_runs,
                                           fig7a_runs, shorter_lived_avg):
    # trace and positivity along a dissipative run
    ham = operating_hamiltonian(sec4p, n_max=2)
    channels = build_lindblad_channels(sec4p, ham.space)
    rho0 = QuantumState.pure_density(max_superposition(ham.space))
    traj = propagate_lindblad(ham, channels, rho0, 20e-9,
                              default_timestep(ham), n_samples=10)
    tr_err = float(np.max(np.abs(traj.observables["trace"] - 1.0)))
    min_eig = float(np.min(traj.observables["min_eigenvalue"]))

    # all rates zero: the master equation must reproduce the unitary
    lham = operating_hamiltonian(losslessp, n_max=2)
    lchan = build_lindblad_channels(losslessp, lham.space)
    psi0 = max_superposition(lham.space)
    t_probe = gate_timing(1, 1, losslessp.g1_ge).t_gate / 8.0
    dt = default_timestep(lham)
    rho = propagate_lindblad(lham, lchan, QuantumState.pure_density(psi0),
                             t_probe, dt, n_samples=1).final
    ket = propagate_td(lham, psi0, t_probe, dt, n_samples=1).final
    lossless_gap = abs(1.0 - state_fidelity_mixed(ket.full_vector(), rho))

    # step halving must not move any reported fidelity
    shifts = [abs(fig3_runs["base"].metadata["peaks"][k]["fidelity"]
                  - fig3_runs["half"].metadata["peaks"][k]["fidelity"])
              for k in FIG3_BANDS]
    shifts.append(abs(fig7a_runs["base"].metadata["peak"]["fidelity"]
                      - fig7a_runs["half"].metadata["peak"]["fidelity"]))
    shifts.append(abs(shorter_lived_avg["base"].value
                      - shorter_lived_avg["half"].value))
    dt_shift = max(shifts)

    # neither may a deeper bosonic truncation
    moves = [abs(fig3_runs["base"].metadata["peaks"][k]["fidelity"]
                 - fig3_runs["deeper"].metadata["peaks"][k]["fidelity"])
             for k in FIG3_BANDS]
    moves.append(abs(fig7a_runs["base"].metadata["peak"]["fidelity"]
                     - fig7a_runs["deeper"].metadata["peak"]["fidelity"]))
    moves.append(abs(shorter_lived_avg["base"].value
                     - shorter_lived_avg["deeper"].value))
    nmax_shift = max(moves)

    ok = (tr_err < 1e-8 and min_eig > -1e-8 and lossless_gap < 1e-8
          and dt_shift < 1e-6 and nmax_shift < 0.002)
    _criterion(8, ok, f"trace error {tr_err:.1e}, min eigenvalue "
                      f"{min_eig:.1e}, zero-rate gap {lossless_gap:.1e}, "
                      f"dt-halving shift {dt_shift:.1e}, "
                      f"truncation shift {nmax_shift:.1e}")


def test_criterion_9_deterministic_output(tmp_path):
    runner = [sys.executable, "-c",
              "import sys; from darklink.cli import main; "
              "sys.exit(main(sys.argv[1:]))"]
    outputs = []
    for sub in ("one", "two"):
        out = tmp_path / sub
        res = subprocess.run(
            runner + ["--config", "paper_sec3_fig3", "--out", str(out),
                      "fig3"],
            capture_output=True, text=True, timeout=600)
        assert res.returncode == 0, res.stderr
        outputs.append(out)
    pairs = [( (outputs[0] / name).read_bytes(),
               (outputs[1] / name).read_bytes())
             for name in ("fig3.csv", "fig3_leakage.csv")]
    ok = all(a == b for a, b in pairs) and len(pairs[0][0]) > 0
    _criterion(9, ok, "two identically configured runs wrote "
                      "byte-identical fidelity and leakage tables "
                      f"({len(pairs[0][0])} bytes)")
