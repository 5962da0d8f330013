"""Collective-mode transform (a, b, f) -> (C+, C-, C) and its checks.

C+ and C- are the bright combinations shifted by +-sqrt(2) g when both
resonator-line couplings equal g; C = (a - b)/sqrt(2) has no line
component at all, which is what keeps the line dark during the gate.
Collective operators are formed as linear combinations of the embedded
single-mode matrices, exact on states that stay below the Fock cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import CompositeSpace, OperatorMatrix, boson_annihilation, embed
from .model import (
    LINE_F,
    RES_A,
    RES_B,
    DeviceParams,
    Hamiltonian,
    HamiltonianTerm,
    build_lab_qubit_hamiltonian,
    device_space,
    _qutrit_ops,
)

SQRT2 = np.sqrt(2.0)

# rows map (a, b, f) -> (C+, C-, C)
TRANSFORM = np.array([
    [0.5, 0.5, SQRT2 / 2],
    [0.5, 0.5, -SQRT2 / 2],
    [SQRT2 / 2, -SQRT2 / 2, 0.0],
], dtype=complex)


@dataclass(frozen=True)
class ModeTransform:
    t: np.ndarray

    def __post_init__(self):
        u = self.t @ self.t.conj().T
        if np.max(np.abs(u - np.eye(3))) > 1e-14:
            raise ValueError("mode transform must be unitary")


MODE_TRANSFORM = ModeTransform(TRANSFORM)


def transform_operator(op_kind: str) -> np.ndarray:
    """Coefficients of a, b, or f over (C+, C-, C); the inverse map rows."""
    idx = {"a": 0, "b": 1, "f": 2}
    if op_kind not in idx:
        raise ValueError(f"unknown mode {op_kind!r}")
    return TRANSFORM.conj().T[idx[op_kind]].copy()


def collective_ops(space: CompositeSpace):
    """Embedded C+, C-, C matrices on the full five-mode space."""
    a = embed(boson_annihilation(space.modes[RES_A].n_max), RES_A, space).m
    b = embed(boson_annihilation(space.modes[RES_B].n_max), RES_B, space).m
    f = embed(boson_annihilation(space.modes[LINE_F].n_max), LINE_F, space).m
    c_plus = 0.5 * (a + b + SQRT2 * f)
    c_minus = 0.5 * (a + b - SQRT2 * f)
    c_dark = (a - b) / SQRT2
    return c_plus, c_minus, c_dark


def excitation_number(space: CompositeSpace) -> np.ndarray:
    """Total excitation per basis index; qutrit levels count 0, 1, 2."""
    dims = space.dims
    n = np.zeros(space.dim, dtype=int)
    for site in range(len(dims)):
        labels = np.arange(dims[site])
        block = int(np.prod(dims[site + 1:], initial=1))
        reps = space.dim // (dims[site] * block)
        n += np.tile(np.repeat(labels, block), reps)
    return n


def _build_h_double_prime(params: DeviceParams, space: CompositeSpace) -> Hamiltonian:
    """The transformed Hamiltonian assembled term by term in the
    collective basis, with every mode energy normally ordered."""
    if abs(params.gf_a - params.gf_b) > 0:
        raise ValueError("the collective transform assumes gf_a == gf_b")
    g = params.gf_a
    cp, cm, cd = collective_ops(space)
    q = _qutrit_ops(space)
    omega = params.omega_a
    terms = [
        HamiltonianTerm(omega + SQRT2 * g, OperatorMatrix(cp.conj().T @ cp)),
        HamiltonianTerm(omega - SQRT2 * g, OperatorMatrix(cm.conj().T @ cm)),
        HamiltonianTerm(omega, OperatorMatrix(cd.conj().T @ cd)),
    ]
    for l, (w_ge, w_es) in ((1, (params.omega1_ge, params.omega1_es)),
                            (2, (params.omega2_ge, params.omega2_es))):
        terms.append(HamiltonianTerm(w_ge, q[f"s{l}_ee"]))
        terms.append(HamiltonianTerm(w_ge + w_es, q[f"s{l}_ss"]))
    # qubit couplings through the decomposed a and b
    half = 0.5
    combo_a = cp + cm + SQRT2 * cd
    combo_b = cp + cm - SQRT2 * cd
    terms.append(HamiltonianTerm(
        params.g1_ge * half, OperatorMatrix(combo_a.conj().T @ q["s1_ge"].m),
        paired=True))
    terms.append(HamiltonianTerm(
        params.g2_ge * half, OperatorMatrix(combo_b.conj().T @ q["s2_ge"].m),
        paired=True))
    return Hamiltonian(space, terms)


@dataclass(frozen=True)
class TransformCheck:
    residual_exc1: float
    residual_exc2: float

    @property
    def residual(self) -> float:
        return self.residual_exc2


def verify_h_double_prime(params: DeviceParams, n_max: int = 2) -> TransformCheck:
    """Entrywise residual between the directly built collective-basis
    Hamiltonian and the lab-frame one, on the excitation <= 1 and <= 2
    blocks. The identity is parameter independent; run it with order-one
    frequencies to keep float cancellation below the reported residual.
    """
    space = device_space(params, n_max=n_max)
    h_lab = build_lab_qubit_hamiltonian(params, space).static_part()
    h_col = _build_h_double_prime(params, space).static_part()
    delta = np.abs(h_col - h_lab)
    n = excitation_number(space)
    res = []
    for k in (1, 2):
        keep = np.where(n <= k)[0]
        res.append(float(np.max(delta[np.ix_(keep, keep)], initial=0.0)))
    return TransformCheck(*res)


def single_photon_spectrum(params: DeviceParams, n_max: int = 2) -> np.ndarray:
    """Eigenvalues of the bare bosonic single-photon block of the lab
    Hamiltonian with the qutrits decoupled: {omega - sqrt(2) g, omega,
    omega + sqrt(2) g} at equal line couplings."""
    space = device_space(params, n_max=n_max)
    h = build_lab_qubit_hamiltonian(params, space).static_part()
    idx = [
        space.index([0, 0, 1, 0, 0]),
        space.index([0, 0, 0, 1, 0]),
        space.index([0, 0, 0, 0, 1]),
    ]
    block = h[np.ix_(idx, idx)]
    return np.linalg.eigvalsh(block)


def mode_populations(state, space: CompositeSpace):
    """(pop_C+, pop_C-, pop_C, pop_f) for a ket or density matrix."""
    cp, cm, cd = collective_ops(space)
    f = embed(boson_annihilation(space.modes[LINE_F].n_max), LINE_F, space).m
    out = []
    for x in (cp, cm, cd, f):
        num = x.conj().T @ x
        out.append(_expval(num, state))
    return tuple(out)


def _expval(op_m: np.ndarray, state) -> float:
    if hasattr(state, "expectation_matrix"):
        return state.expectation_matrix(op_m)
    arr = np.asarray(state)
    if arr.ndim == 1:
        val = np.vdot(arr, op_m @ arr)
    else:
        val = np.trace(op_m @ arr)
    return float(np.real(val))
