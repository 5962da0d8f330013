"""Propagators: exact exponentiation for static Hamiltonians, fixed-step
4th-order integration for time-dependent ones, and the master-equation
integrator.

Step-size rule: dt must not exceed 1/(50 * omega_fastest), where
omega_fastest is the largest term detuning plus the spectral norm of the
static part. The actual uniform step is then aligned so that an integer
number of steps lands on every sample time; halving dt therefore exactly
doubles the step count, which is what the convergence checks rely on.

Propagations run on the reachable block of the initial state by default
(see _support); pass restrict=False to force the full space. Either way
the sampled states report themselves in the full space through their
`support` metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._support import dm_generators, ket_generators, reachable_indices
from .errors import InvariantViolation
from .hilbert import OperatorMatrix
from .kernels import BACKEND, csr_triple, get_impl
from .model import Hamiltonian

KET_NORM_TOL = 1e-7
TRACE_TOL = 1e-8
POSITIVITY_TOL = -1e-8
STEP_SAFETY = 50.0
DEFAULT_SAMPLES = 200


class QuantumState:
    """A ket or density matrix, possibly stored on a support block.

    data lives on the `support` indices of a `dim`-dimensional space;
    amplitudes off the support are exactly zero. full_vector() and
    full_matrix() embed back when the whole array is wanted.
    """

    def __init__(self, kind: str, data: np.ndarray, dim: int | None = None,
                 support: np.ndarray | None = None):
        if kind not in ("ket", "dm"):
            raise ValueError(f"unknown state kind {kind!r}")
        self.kind = kind
        self.data = np.asarray(data, dtype=complex)
        self.support = None if support is None else np.asarray(support, dtype=int)
        self.dim = int(dim) if dim is not None else self.data.shape[0]
        block = self.data.shape[0]
        expected = block if self.support is None else len(self.support)
        if self.support is not None and block != len(self.support):
            raise ValueError("data size does not match support size")
        if self.support is None and block != self.dim:
            raise ValueError("data size does not match dim")
        del expected

    @classmethod
    def ket(cls, vec, dim=None, support=None) -> "QuantumState":
        return cls("ket", np.asarray(vec, dtype=complex), dim, support)

    @classmethod
    def density(cls, mat, dim=None, support=None) -> "QuantumState":
        return cls("dm", np.asarray(mat, dtype=complex), dim, support)

    @classmethod
    def pure_density(cls, vec) -> "QuantumState":
        v = np.asarray(vec, dtype=complex)
        return cls("dm", np.outer(v, v.conj()))

    def full_vector(self) -> np.ndarray:
        if self.kind != "ket":
            raise ValueError("not a ket")
        if self.support is None:
            return self.data.copy()
        v = np.zeros(self.dim, dtype=complex)
        v[self.support] = self.data
        return v

    def full_matrix(self) -> np.ndarray:
        if self.kind == "ket":
            v = self.full_vector()
            return np.outer(v, v.conj())
        if self.support is None:
            return self.data.copy()
        m = np.zeros((self.dim, self.dim), dtype=complex)
        m[np.ix_(self.support, self.support)] = self.data
        return m

    def norm(self) -> float:
        if self.kind != "ket":
            raise ValueError("not a ket")
        return float(np.linalg.norm(self.data))

    def trace(self) -> float:
        if self.kind != "dm":
            raise ValueError("not a density matrix")
        return float(np.real(np.trace(self.data)))

    def min_eigenvalue(self) -> float:
        if self.kind != "dm":
            raise ValueError("not a density matrix")
        return float(np.min(np.linalg.eigvalsh(self.data)))

    def _project(self, op_full: np.ndarray) -> np.ndarray:
        if self.support is None:
            return op_full
        return op_full[np.ix_(self.support, self.support)]

    def expectation_matrix(self, op_full: np.ndarray) -> float:
        """<A> against a full-space operator matrix; real part returned,
        imaginary residue asserted away by the caller when it matters."""
        a = self._project(np.asarray(op_full, dtype=complex))
        if self.kind == "ket":
            val = np.vdot(self.data, a @ self.data)
        else:
            val = np.trace(a @ self.data)
        return float(np.real(val))

    def overlap_with_ket(self, target_full: np.ndarray) -> complex:
        """<target|psi> for kets, <target|rho|target> for densities."""
        t = np.asarray(target_full, dtype=complex)
        t = t if self.support is None else t[self.support]
        if self.kind == "ket":
            return complex(np.vdot(t, self.data))
        return complex(t.conj() @ (self.data @ t))


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    observables: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.states) != len(self.times):
            raise ValueError("states and times must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def final(self):
        return self.states[-1]


def default_timestep(h: Hamiltonian, safety: float = STEP_SAFETY) -> float:
    """The largest admissible step, 1/(safety * omega_fastest)."""
    return 1.0 / (safety * h.fastest_scale())


def _check_step(h: Hamiltonian, dt: float):
    if dt <= 0:
        raise ValueError("dt must be positive")
    cap = default_timestep(h)
    if dt > cap * (1 + 1e-12):
        raise ValueError(
            f"step-size precondition violated: dt={dt:.3e} exceeds "
            f"1/(50*omega_fastest)={cap:.3e}"
        )


def _grid(t_final: float, dt: float, n_samples: int):
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    per = int(np.ceil(t_final / (n_samples * dt)))
    nsteps = n_samples * per
    return t_final / nsteps, nsteps, per


def _as_ket_array(psi0, dim: int) -> np.ndarray:
    v = psi0.full_vector() if isinstance(psi0, QuantumState) else np.asarray(
        psi0, dtype=complex)
    if v.shape != (dim,):
        raise ValueError("initial ket dimension mismatch")
    return v


def _pack_terms(h: Hamiltonian, sub: np.ndarray):
    ix = np.ix_(sub, sub)
    terms = []
    for t in h.detuned_terms():
        b = (t.coefficient * t.op.m)[ix]
        if not t.paired:
            # an unpaired oscillating term would make H non-Hermitian
            raise ValueError("detuned terms must be paired")
        terms.append((csr_triple(b), csr_triple(b.conj().T), t.detuning))
    return terms


def propagate_static(h: Hamiltonian, psi0, t: float) -> QuantumState:
    """exp(-iHt) applied through the Hermitian eigendecomposition."""
    if not h.is_static:
        raise ValueError("propagate_static requires a time-independent Hamiltonian")
    hm = h.static_part()
    if np.max(np.abs(hm - hm.conj().T)) > 1e-10:
        raise ValueError("Hamiltonian matrix is not Hermitian")
    w, u = np.linalg.eigh(hm)
    phases = np.exp(-1j * w * t)
    if isinstance(psi0, QuantumState) and psi0.kind == "dm":
        rho = psi0.full_matrix()
        ud = u.conj().T
        evolved = u @ ((phases[:, None] * (ud @ rho @ u)) * phases.conj()[None, :]) @ ud
        return QuantumState.density(evolved)
    v = _as_ket_array(psi0, h.dim)
    evolved = u @ (phases * (u.conj().T @ v))
    return QuantumState.ket(evolved)


def propagate_td(h: Hamiltonian, psi0, t_final: float, dt: float,
                 n_samples: int = DEFAULT_SAMPLES,
                 restrict: bool = True) -> Trajectory:
    """Fixed-step 4th-order integration of i dpsi/dt = H(t) psi.

    Norm drift is reported in the observables, never corrected; a final
    drift beyond 1e-7 raises.
    """
    _check_step(h, dt)
    step, nsteps, stride = _grid(t_final, dt, n_samples)
    v = _as_ket_array(psi0, h.dim)
    if restrict:
        sub = reachable_indices(ket_generators(h), np.nonzero(np.abs(v) > 0)[0], h.dim)
    else:
        sub = np.arange(h.dim)
    ix = np.ix_(sub, sub)
    k0 = csr_triple(h.static_part()[ix])
    terms = _pack_terms(h, sub)
    impl = get_impl()
    samples = impl.ket_rk4(len(sub), k0, terms, v[sub], step, nsteps, stride)
    times = np.linspace(0.0, t_final, n_samples + 1)
    states = [QuantumState.ket(s, dim=h.dim, support=sub) for s in samples]
    norms = np.array([st.norm() for st in states])
    drift = float(abs(norms[-1] - 1.0))
    if drift > KET_NORM_TOL:
        raise InvariantViolation(f"norm drift {drift:.2e} exceeds {KET_NORM_TOL}")
    return Trajectory(
        times, states,
        observables={"norm": norms, "norm_drift": np.abs(norms - 1.0)},
        metadata={"dt": step, "nsteps": nsteps, "backend": BACKEND,
                  "support_size": len(sub)},
    )


def _validate_rho0(rho0, dim: int) -> np.ndarray:
    if isinstance(rho0, QuantumState):
        r = rho0.full_matrix() if rho0.kind == "dm" else np.outer(
            rho0.full_vector(), rho0.full_vector().conj())
    else:
        arr = np.asarray(rho0, dtype=complex)
        r = np.outer(arr, arr.conj()) if arr.ndim == 1 else arr
    if r.shape != (dim, dim):
        raise ValueError("initial density matrix dimension mismatch")
    if np.max(np.abs(r - r.conj().T)) > 1e-10:
        raise ValueError("initial density matrix is not Hermitian")
    if abs(np.trace(r).real - 1.0) > TRACE_TOL:
        raise ValueError("initial density matrix trace differs from 1")
    if np.min(np.linalg.eigvalsh(r)) < POSITIVITY_TOL:
        raise ValueError("initial density matrix is not positive")
    return r


def _prepare_lindblad(h: Hamiltonian, channels, rho: np.ndarray,
                      restrict: bool):
    """Restrict to the reachable block and pack everything the stepper
    needs: (support, K0 triple, oscillating terms, channels, rho block).
    K0 is the static Hamiltonian block minus i/2 times the summed L+L."""
    active = [c for c in channels if c.rate > 0.0]
    if restrict:
        sub = reachable_indices(
            dm_generators(h, active),
            np.nonzero(np.abs(rho).sum(axis=1) > 0)[0],
            h.dim,
        )
    else:
        sub = np.arange(h.dim)
    ix = np.ix_(sub, sub)
    k0_dense = h.static_part()[ix].astype(complex)
    for c in active:
        l_block = c.op.m[ix]
        k0_dense -= 0.5j * c.rate * (l_block.conj().T @ l_block)
    packed = [(csr_triple(c.op.m[ix]), c.rate) for c in active]
    return sub, csr_triple(k0_dense), _pack_terms(h, sub), packed, rho[ix]


def propagate_lindblad(h: Hamiltonian, channels, rho0, t_final: float,
                       dt: float, n_samples: int = DEFAULT_SAMPLES,
                       restrict: bool = True) -> Trajectory:
    """Master-equation integration with the dissipator
    D[L] rho = (2 L rho L+ - L+L rho - rho L+L)/2 per channel.

    The density matrix is Hermitized every step; trace and positivity
    are enforced at the sampled times.
    """
    _check_step(h, dt)
    step, nsteps, stride = _grid(t_final, dt, n_samples)
    rho = _validate_rho0(rho0, h.dim)
    sub, k0, terms, packed_channels, rho_block = _prepare_lindblad(
        h, channels, rho, restrict)
    impl = get_impl()
    samples = impl.dm_rk4(len(sub), k0, terms, packed_channels, rho_block,
                          step, nsteps, stride)
    times = np.linspace(0.0, t_final, n_samples + 1)
    states = [QuantumState.density(s, dim=h.dim, support=sub) for s in samples]
    traces = np.array([st.trace() for st in states])
    min_eigs = np.array([st.min_eigenvalue() for st in states])
    worst_trace = float(np.max(np.abs(traces - 1.0)))
    worst_eig = float(np.min(min_eigs))
    if worst_trace > TRACE_TOL:
        raise InvariantViolation(
            f"trace drift {worst_trace:.2e} exceeds {TRACE_TOL}")
    if worst_eig < POSITIVITY_TOL:
        raise InvariantViolation(
            f"negative eigenvalue {worst_eig:.2e} below {POSITIVITY_TOL}")
    return Trajectory(
        times, states,
        observables={"trace": traces, "min_eigenvalue": min_eigs},
        metadata={"dt": step, "nsteps": nsteps, "backend": BACKEND,
                  "support_size": len(sub)},
    )


def expectation(op, state) -> float:
    """<A> for a Hermitian operator against a ket or density matrix."""
    m = op.m if isinstance(op, OperatorMatrix) else np.asarray(op, dtype=complex)
    if isinstance(op, OperatorMatrix):
        if not op.is_hermitian:
            raise ValueError("expectation requires a Hermitian operator")
    elif np.max(np.abs(m - m.conj().T)) > 1e-12:
        raise ValueError("expectation requires a Hermitian operator")
    if isinstance(state, QuantumState):
        if m.shape[0] != state.dim:
            raise ValueError("operator and state dimensions differ")
        a = state._project(m)
        if state.kind == "ket":
            val = complex(np.vdot(state.data, a @ state.data))
        else:
            val = complex(np.trace(a @ state.data))
    else:
        arr = np.asarray(state, dtype=complex)
        if arr.ndim == 1:
            if m.shape[0] != arr.shape[0]:
                raise ValueError("operator and state dimensions differ")
            val = complex(np.vdot(arr, m @ arr))
        else:
            if m.shape != arr.shape:
                raise ValueError("operator and state dimensions differ")
            val = complex(np.trace(m @ arr))
    if abs(val.imag) >= 1e-10:
        raise InvariantViolation(
            f"expectation of a Hermitian operator came out complex "
            f"(imag {val.imag:.2e})")
    return float(val.real)
