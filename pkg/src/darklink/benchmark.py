"""Timing comparison of the two stepper implementations.

Runs the dissipative gate workload (restricted block of the full
five-mode device) through the compiled extension and the numpy/scipy
fallback, and reports steps per second for each.

Usage: python -m darklink.benchmark [steps]
"""

from __future__ import annotations

import sys
import time

import numpy as np

from .analysis import max_superposition, operating_hamiltonian
from .config import load_preset
from .dynamics import _prepare_lindblad, default_timestep
from .kernels import BACKEND, get_impl
from .model import build_lindblad_channels


def _workload():
    params = load_preset("paper_sec4").device_params()
    ham = operating_hamiltonian(params, n_max=2)
    channels = build_lindblad_channels(params, ham.space)
    psi0 = max_superposition(ham.space)
    rho = np.outer(psi0, psi0.conj())
    sub, k0, terms, packed, rho_block = _prepare_lindblad(
        ham, channels, rho, restrict=True)
    return len(sub), k0, terms, packed, rho_block, default_timestep(ham)


def run(steps: int = 5000):
    n, k0, terms, packed, rho_block, dt = _workload()
    print(f"density-matrix workload: block {n}x{n}, "
          f"{len(terms)} oscillating terms, {len(packed)} channels, "
          f"dt = {dt:.3e} s")
    names = ["python"]
    try:
        get_impl("compiled")
        names.insert(0, "compiled")
    except Exception:
        print("compiled extension not available; timing the fallback only")
    rates = {}
    final = {}
    for name in names:
        impl = get_impl(name)
        impl.dm_rk4(n, k0, terms, packed, rho_block, dt, 50, 50)  # warm up
        t0 = time.perf_counter()
        out = impl.dm_rk4(n, k0, terms, packed, rho_block, dt, steps, steps)
        elapsed = time.perf_counter() - t0
        rates[name] = steps / elapsed
        final[name] = out[-1]
        print(f"  {name:>8}: {elapsed:.3f} s for {steps} steps "
              f"({rates[name]:.0f} steps/s)")
    if len(names) == 2:
        diff = float(np.max(np.abs(final["compiled"] - final["python"])))
        print(f"  speedup: {rates['compiled'] / rates['python']:.1f}x, "
              f"max final-state difference {diff:.2e}")
    print(f"selected backend: {BACKEND}")


if __name__ == "__main__":
    run(int(sys.argv[1]) if len(sys.argv) > 1 else 5000)
