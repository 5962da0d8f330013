"""Device description and every Hamiltonian/dissipator builder.

The device: two transmon qutrits q1, q2 sitting in resonators r_a, r_b,
both resonators coupled to one transmission-line mode r_f. Dynamics is
simulated in the interaction picture, where couplings between a qutrit
transition and its resonator oscillate at the transition-resonator
detuning and the resonator-line exchange terms are static at the
all-resonance operating point.

Sites in the composite space: 0 = q1, 1 = q2, 2 = r_a, 3 = r_b, 4 = r_f.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import (
    CompositeSpace,
    ModeSpec,
    OperatorMatrix,
    boson_annihilation,
    embed,
    qutrit_lowering,
    qutrit_projector,
)

Q1, Q2, RES_A, RES_B, LINE_F = range(5)

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class DeviceParams:
    """All device frequencies, couplings, and loss rates, in angular units.

    Frequencies and couplings are rad/s, rates are 1/s. The es-transition
    couplings and rates are not free: g_es = sqrt(2) g_ge for each qutrit,
    the es relaxation rate is twice the ge rate, and both dephasing rates
    equal the ge relaxation rate.
    """

    omega_a: float
    omega_b: float
    omega_f: float
    omega1_ge: float
    omega1_es: float
    omega2_ge: float
    omega2_es: float
    g1_ge: float
    g2_ge: float
    gf_a: float
    gf_b: float
    kappa_a: float = 0.0
    kappa_b: float = 0.0
    kappa_f: float = 0.0
    gamma1_ge: float = 0.0
    gamma2_ge: float = 0.0

    def __post_init__(self):
        for name in (
            "omega_a", "omega_b", "omega_f",
            "omega1_ge", "omega1_es", "omega2_ge", "omega2_es",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        for name in (
            "g1_ge", "g2_ge", "gf_a", "gf_b",
            "kappa_a", "kappa_b", "kappa_f", "gamma1_ge", "gamma2_ge",
        ):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0")

    @property
    def g1_es(self) -> float:
        return SQRT2 * self.g1_ge

    @property
    def g2_es(self) -> float:
        return SQRT2 * self.g2_ge

    @property
    def gamma1_es(self) -> float:
        return 2.0 * self.gamma1_ge

    @property
    def gamma2_es(self) -> float:
        return 2.0 * self.gamma2_ge

    def dephasing(self, l: int) -> float:
        return self.gamma1_ge if l == 1 else self.gamma2_ge

    # interaction-picture detunings, transition minus resonator
    @property
    def delta1_ge(self) -> float:
        return self.omega1_ge - self.omega_a

    @property
    def delta1_es(self) -> float:
        return self.omega1_es - self.omega_a

    @property
    def delta2_ge(self) -> float:
        return self.omega2_ge - self.omega_b

    @property
    def delta2_es(self) -> float:
        return self.omega2_es - self.omega_b


@dataclass(frozen=True)
class HamiltonianTerm:
    """coefficient * op * exp(i detuning t), plus h.c. when paired."""

    coefficient: complex
    op: OperatorMatrix
    detuning: float = 0.0
    paired: bool = False


class Hamiltonian:
    """A sum of (possibly oscillating) terms on one composite space.

    Time independent exactly when every detuning is zero. evaluate(t)
    assembles the dense Hermitian matrix at time t.
    """

    def __init__(self, space: CompositeSpace, terms):
        self.space = space
        self.terms = tuple(terms)
        self._static_norm = None

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def is_static(self) -> bool:
        return all(t.detuning == 0.0 for t in self.terms)

    def static_part(self) -> np.ndarray:
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for t in self.terms:
            if t.detuning == 0.0:
                h += t.coefficient * t.op.m
                if t.paired:
                    h += np.conj(t.coefficient) * t.op.m.conj().T
        return h

    def detuned_terms(self):
        return [t for t in self.terms if t.detuning != 0.0]

    def evaluate(self, t: float) -> np.ndarray:
        h = self.static_part()
        for term in self.detuned_terms():
            phase = np.exp(1j * term.detuning * t)
            h += term.coefficient * phase * term.op.m
            if term.paired:
                h += np.conj(term.coefficient * phase) * term.op.m.conj().T
        return h

    def static_spectral_norm(self) -> float:
        if self._static_norm is None:
            w = np.linalg.eigvalsh(self.static_part())
            self._static_norm = float(np.max(np.abs(w), initial=0.0))
        return self._static_norm

    def fastest_scale(self) -> float:
        """max |detuning| plus the spectral norm of the static part."""
        dmax = max((abs(t.detuning) for t in self.terms), default=0.0)
        return dmax + self.static_spectral_norm()


@dataclass(frozen=True)
class LindbladChannel:
    rate: float
    op: OperatorMatrix

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("channel rate must be >= 0")


def device_space(params: DeviceParams, n_max: int = 2) -> CompositeSpace:
    """The full five-mode space [q1, q2, r_a, r_b, r_f]."""
    return CompositeSpace((
        ModeSpec("qutrit", omega_ge=params.omega1_ge, omega_es=params.omega1_es),
        ModeSpec("qutrit", omega_ge=params.omega2_ge, omega_es=params.omega2_es),
        ModeSpec("boson", omega=params.omega_a, n_max=n_max),
        ModeSpec("boson", omega=params.omega_b, n_max=n_max),
        ModeSpec("boson", omega=params.omega_f, n_max=n_max),
    ))


def dark_mode_space(params: DeviceParams, n_max: int = 2) -> CompositeSpace:
    """Reduced space [q1, q2, C] used by the dark-mode Hamiltonians."""
    return CompositeSpace((
        ModeSpec("qutrit", omega_ge=params.omega1_ge, omega_es=params.omega1_es),
        ModeSpec("qutrit", omega_ge=params.omega2_ge, omega_es=params.omega2_es),
        ModeSpec("boson", omega=params.omega_a, n_max=n_max),
    ))


def _mode_ops(space: CompositeSpace):
    """Embedded annihilation operators for the three bosonic sites."""
    a = embed(boson_annihilation(space.modes[RES_A].n_max), RES_A, space)
    b = embed(boson_annihilation(space.modes[RES_B].n_max), RES_B, space)
    f = embed(boson_annihilation(space.modes[LINE_F].n_max), LINE_F, space)
    return a, b, f


def _qutrit_ops(space: CompositeSpace):
    ops = {}
    for l, site in ((1, Q1), (2, Q2)):
        ops[f"s{l}_ge"] = embed(qutrit_lowering("ge"), site, space)
        ops[f"s{l}_es"] = embed(qutrit_lowering("es"), site, space)
        ops[f"s{l}_ee"] = embed(qutrit_projector("e"), site, space)
        ops[f"s{l}_ss"] = embed(qutrit_projector("s"), site, space)
    return ops


def build_lab_qubit_hamiltonian(params: DeviceParams, space: CompositeSpace) -> Hamiltonian:
    """Static lab-frame Hamiltonian with the qutrits used as two-level qubits.

    Bare energies for every mode plus ge-transition couplings only; the
    s levels keep their bare energy but nothing drives them.
    """
    a, b, f = _mode_ops(space)
    q = _qutrit_ops(space)
    terms = []
    for op, w in ((a, params.omega_a), (b, params.omega_b), (f, params.omega_f)):
        terms.append(HamiltonianTerm(w, OperatorMatrix(op.m.conj().T @ op.m)))
    for l, (w_ge, w_es) in ((1, (params.omega1_ge, params.omega1_es)),
                            (2, (params.omega2_ge, params.omega2_es))):
        terms.append(HamiltonianTerm(w_ge, q[f"s{l}_ee"]))
        terms.append(HamiltonianTerm(w_ge + w_es, q[f"s{l}_ss"]))
    terms.append(HamiltonianTerm(
        params.g1_ge, OperatorMatrix(a.m.conj().T @ q["s1_ge"].m), paired=True))
    terms.append(HamiltonianTerm(
        params.g2_ge, OperatorMatrix(b.m.conj().T @ q["s2_ge"].m), paired=True))
    terms.append(HamiltonianTerm(
        params.gf_a, OperatorMatrix(f.m.conj().T @ a.m), paired=True))
    terms.append(HamiltonianTerm(
        params.gf_b, OperatorMatrix(f.m.conj().T @ b.m), paired=True))
    return Hamiltonian(space, terms)


def build_h2q(params: DeviceParams, space: CompositeSpace) -> Hamiltonian:
    """Six-term interaction-picture Hamiltonian of the full device.

    Each qutrit couples both of its transitions to its own resonator,
    with the raising half a_dag sigma_minus carrying phase exp(-i delta t)
    where delta is the transition-resonator detuning; the two
    resonator-line exchange terms are static.
    """
    a, b, f = _mode_ops(space)
    q = _qutrit_ops(space)
    terms = [
        HamiltonianTerm(params.g1_ge, OperatorMatrix(a.m.conj().T @ q["s1_ge"].m),
                        detuning=-params.delta1_ge, paired=True),
        HamiltonianTerm(params.g1_es, OperatorMatrix(a.m.conj().T @ q["s1_es"].m),
                        detuning=-params.delta1_es, paired=True),
        HamiltonianTerm(params.g2_ge, OperatorMatrix(b.m.conj().T @ q["s2_ge"].m),
                        detuning=-params.delta2_ge, paired=True),
        HamiltonianTerm(params.g2_es, OperatorMatrix(b.m.conj().T @ q["s2_es"].m),
                        detuning=-params.delta2_es, paired=True),
        HamiltonianTerm(params.gf_a, OperatorMatrix(f.m.conj().T @ a.m), paired=True),
        HamiltonianTerm(params.gf_b, OperatorMatrix(f.m.conj().T @ b.m), paired=True),
    ]
    return Hamiltonian(space, terms)


def build_h2q_resonant(params: DeviceParams, space: CompositeSpace) -> Hamiltonian:
    """Static part kept at the operating point: g1_ge, g2_es, and both
    resonator-line exchanges. The two dispersive terms are dropped."""
    a, b, f = _mode_ops(space)
    q = _qutrit_ops(space)
    terms = [
        HamiltonianTerm(params.g1_ge,
                        OperatorMatrix(a.m.conj().T @ q["s1_ge"].m), paired=True),
        HamiltonianTerm(params.g2_es,
                        OperatorMatrix(b.m.conj().T @ q["s2_es"].m), paired=True),
        HamiltonianTerm(params.gf_a, OperatorMatrix(f.m.conj().T @ a.m), paired=True),
        HamiltonianTerm(params.gf_b, OperatorMatrix(f.m.conj().T @ b.m), paired=True),
    ]
    return Hamiltonian(space, terms)


def build_unresonant_corrections(params: DeviceParams, space: CompositeSpace) -> Hamiltonian:
    """The two dispersive terms alone: q1's es transition against r_a and
    q2's ge transition against r_b, oscillating at their detunings."""
    a, b, _ = _mode_ops(space)
    q = _qutrit_ops(space)
    terms = [
        HamiltonianTerm(params.g1_es, OperatorMatrix(a.m.conj().T @ q["s1_es"].m),
                        detuning=-params.delta1_es, paired=True),
        HamiltonianTerm(params.g2_ge, OperatorMatrix(b.m.conj().T @ q["s2_ge"].m),
                        detuning=-params.delta2_ge, paired=True),
    ]
    return Hamiltonian(space, terms)


def _dark_hamiltonian(space: CompositeSpace, g1: float, g2: float,
                      lower1: str, lower2: str) -> Hamiltonian:
    c = embed(boson_annihilation(space.modes[2].n_max), 2, space)
    s1 = embed(qutrit_lowering(lower1), 0, space)
    s2 = embed(qutrit_lowering(lower2), 1, space)
    coeff1 = g1 / SQRT2
    coeff2 = -g2 / SQRT2
    terms = [
        HamiltonianTerm(coeff1, OperatorMatrix(c.m @ s1.m.conj().T), paired=True),
        HamiltonianTerm(coeff2, OperatorMatrix(c.m @ s2.m.conj().T), paired=True),
    ]
    return Hamiltonian(space, terms)


def build_heff(params: DeviceParams, space_small: CompositeSpace) -> Hamiltonian:
    """Dark-mode Hamiltonian for the two-level device:
    (g1 C sigma1+ - g2 C sigma2+ + h.c.) / sqrt(2), both on ge."""
    return _dark_hamiltonian(space_small, params.g1_ge, params.g2_ge, "ge", "ge")


def build_heff_prime(params: DeviceParams, space_small: CompositeSpace) -> Hamiltonian:
    """Dark-mode Hamiltonian of the gate: q1 on ge, q2 on es,
    (g1_ge C sigma1;ge+ - g2_es C sigma2;es+ + h.c.) / sqrt(2)."""
    return _dark_hamiltonian(space_small, params.g1_ge, params.g2_es, "ge", "es")


def build_lindblad_channels(params: DeviceParams, space: CompositeSpace):
    """All eleven loss channels: photon decay of the three modes, both
    relaxation transitions of each qutrit, and both dephasing projectors."""
    a, b, f = _mode_ops(space)
    q = _qutrit_ops(space)
    channels = [
        LindbladChannel(params.kappa_a, a),
        LindbladChannel(params.kappa_b, b),
        LindbladChannel(params.kappa_f, f),
    ]
    for l in (1, 2):
        gamma_ge = params.gamma1_ge if l == 1 else params.gamma2_ge
        gamma_es = params.gamma1_es if l == 1 else params.gamma2_es
        channels.extend([
            LindbladChannel(gamma_ge, q[f"s{l}_ge"]),
            LindbladChannel(gamma_es, q[f"s{l}_es"]),
            LindbladChannel(params.dephasing(l), q[f"s{l}_ee"]),
            LindbladChannel(params.dephasing(l), q[f"s{l}_ss"]),
        ])
    return channels
