"""Propagator tests.

The independent oracles here are textbook closed forms the package does
not contain: the detuned Rabi transfer probability for one oscillating
exchange term, exponential relaxation and coherence decay for a single
lossy qutrit, and scipy's expm for static evolution.
"""

import math

import numpy as np
import pytest
import scipy.linalg

from darklink.dynamics import (
    QuantumState,
    Trajectory,
    default_timestep,
    expectation,
    propagate_lindblad,
    propagate_static,
    propagate_td,
)
from darklink.errors import InvariantViolation
from darklink.hilbert import (
    CompositeSpace,
    ModeSpec,
    OperatorMatrix,
    boson_annihilation,
    embed,
    qutrit_lowering,
    qutrit_projector,
)
from darklink.model import (
    Hamiltonian,
    HamiltonianTerm,
    LindbladChannel,
    build_heff_prime,
    build_lindblad_channels,
    dark_mode_space,
    device_space,
)
from darklink.analysis import max_superposition


def two_mode_space():
    return CompositeSpace((
        ModeSpec("qutrit", omega_ge=1.0, omega_es=0.9),
        ModeSpec("boson", omega=1.0, n_max=1),
    ))


def exchange_hamiltonian(g, detuning):
    """One paired term g * a_dag sigma_ge- * exp(i detuning t) + h.c."""
    space = two_mode_space()
    a = embed(boson_annihilation(1), 1, space)
    s = embed(qutrit_lowering("ge"), 0, space)
    term = HamiltonianTerm(g, OperatorMatrix(a.m.conj().T @ s.m),
                           detuning=detuning, paired=True)
    return space, Hamiltonian(space, [term])


def qutrit_only_space():
    return CompositeSpace((ModeSpec("qutrit", omega_ge=1.0, omega_es=0.9),))


class TestQuantumState:
    def test_ket_roundtrip_with_support(self):
        st = QuantumState.ket([1.0, 2.0j], dim=5, support=[1, 3])
        v = st.full_vector()
        assert v.shape == (5,)
        assert v[1] == 1.0 and v[3] == 2.0j
        assert v[0] == v[2] == v[4] == 0.0
        assert st.norm() == pytest.approx(math.sqrt(5.0))

    def test_dm_roundtrip_with_support(self):
        block = np.array([[0.5, 0.1], [0.1, 0.5]], dtype=complex)
        st = QuantumState.density(block, dim=4, support=[0, 2])
        m = st.full_matrix()
        assert m[0, 0] == 0.5 and m[0, 2] == 0.1 and m[1, 1] == 0.0
        assert st.trace() == pytest.approx(1.0)
        assert st.min_eigenvalue() == pytest.approx(0.4)

    def test_pure_density(self):
        v = np.array([1.0, 1.0]) / math.sqrt(2.0)
        st = QuantumState.pure_density(v)
        assert st.kind == "dm"
        assert np.allclose(st.data, 0.5 * np.ones((2, 2)))

    def test_kind_mismatch_errors(self):
        ket = QuantumState.ket([1.0, 0.0])
        with pytest.raises(ValueError):
            ket.trace()
        with pytest.raises(ValueError):
            ket.min_eigenvalue()
        dm = QuantumState.pure_density([1.0, 0.0])
        with pytest.raises(ValueError):
            dm.norm()
        with pytest.raises(ValueError):
            dm.full_vector()

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            QuantumState.ket([1.0, 0.0], dim=4, support=[0])
        with pytest.raises(ValueError):
            QuantumState.ket([1.0, 0.0], dim=3)
        with pytest.raises(ValueError):
            QuantumState("wavefunction", np.array([1.0]))

    def test_overlap_with_ket(self):
        target = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
        ket = QuantumState.ket([0.6, 0.8], dim=4, support=[0, 1])
        assert ket.overlap_with_ket(target) == pytest.approx(0.6)
        dm = QuantumState.density(np.diag([0.7, 0.3]), dim=4, support=[0, 3])
        assert dm.overlap_with_ket(target) == pytest.approx(0.7)

    def test_expectation_matrix_on_support(self):
        op = np.diag([1.0, 2.0, 3.0, 4.0]).astype(complex)
        ket = QuantumState.ket([1.0, 0.0], dim=4, support=[2, 3])
        assert ket.expectation_matrix(op) == pytest.approx(3.0)


class TestTrajectory:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Trajectory(np.array([0.0, 1.0]), [QuantumState.ket([1.0])])

    def test_times_must_increase(self):
        s = QuantumState.ket([1.0])
        with pytest.raises(ValueError):
            Trajectory(np.array([0.0, 0.0]), [s, s])

    def test_final(self):
        s0, s1 = QuantumState.ket([1.0]), QuantumState.ket([1.0j])
        traj = Trajectory(np.array([0.0, 1.0]), [s0, s1])
        assert traj.final is s1


class TestStepRule:
    def test_default_timestep(self, cheap_params):
        h = build_heff_prime(cheap_params, dark_mode_space(cheap_params))
        assert default_timestep(h) == pytest.approx(
            1.0 / (50.0 * h.fastest_scale()))

    def test_oversized_step_rejected(self, cheap_params):
        h = build_heff_prime(cheap_params, dark_mode_space(cheap_params))
        psi0 = np.zeros(h.dim, dtype=complex)
        psi0[0] = 1.0
        with pytest.raises(ValueError, match="step-size"):
            propagate_td(h, psi0, 1.0, 10.0 * default_timestep(h))
        with pytest.raises(ValueError):
            propagate_td(h, psi0, 1.0, -1.0)

    def test_halving_dt_doubles_steps(self, cheap_params):
        h = build_heff_prime(cheap_params, dark_mode_space(cheap_params))
        psi0 = np.zeros(h.dim, dtype=complex)
        psi0[0] = 1.0
        dt = default_timestep(h)
        t = 123.0 * dt
        n1 = propagate_td(h, psi0, t, dt, n_samples=4).metadata["nsteps"]
        n2 = propagate_td(h, psi0, t, dt / 2, n_samples=4).metadata["nsteps"]
        assert n2 == 2 * n1
        assert n1 % 4 == 0


class TestStaticPropagation:
    def test_matches_expm(self, unit_params):
        space = dark_mode_space(unit_params)
        h = build_heff_prime(unit_params, space)
        rng = np.random.default_rng(3)
        v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
        v /= np.linalg.norm(v)
        t = 37.0
        want = scipy.linalg.expm(-1j * h.static_part() * t) @ v
        got = propagate_static(h, v, t).full_vector()
        assert np.max(np.abs(got - want)) < 1e-12

    def test_density_matrix_path(self, unit_params):
        space = dark_mode_space(unit_params)
        h = build_heff_prime(unit_params, space)
        rng = np.random.default_rng(4)
        v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
        v /= np.linalg.norm(v)
        t = 11.0
        u = scipy.linalg.expm(-1j * h.static_part() * t)
        want = np.outer(u @ v, (u @ v).conj())
        got = propagate_static(h, QuantumState.pure_density(v), t)
        assert got.kind == "dm"
        assert np.max(np.abs(got.full_matrix() - want)) < 1e-12

    def test_rejects_time_dependent(self):
        _, h = exchange_hamiltonian(1.0, detuning=3.0)
        with pytest.raises(ValueError):
            propagate_static(h, np.eye(h.dim, dtype=complex)[0], 1.0)


class TestDetunedRabiOracle:
    """One oscillating exchange term in the single-excitation block obeys
    |c(t)|^2 = g^2/Omega^2 sin^2(Omega t), Omega = sqrt(g^2 + delta^2/4).
    Pure textbook algebra, independent of everything in the package."""

    @pytest.mark.parametrize("g,detuning", [
        (1.0, 0.0), (1.0, 3.0), (0.4, -2.0), (2.0, 0.7),
    ])
    def test_transfer_probability(self, g, detuning):
        space, h = exchange_hamiltonian(g, detuning)
        psi0 = np.zeros(space.dim, dtype=complex)
        psi0[space.index((1, 0))] = 1.0  # |e, 0>
        omega = math.sqrt(g * g + 0.25 * detuning * detuning)
        t_final = 2.5 / omega
        traj = propagate_td(h, psi0, t_final, default_timestep(h) / 4.0,
                            n_samples=16)
        target = space.index((0, 1))  # |g, 1>
        for t, st in zip(traj.times, traj.states):
            got = abs(st.full_vector()[target]) ** 2
            want = (g / omega) ** 2 * math.sin(omega * t) ** 2
            assert got == pytest.approx(want, abs=1e-8)

    def test_norm_is_tracked(self):
        space, h = exchange_hamiltonian(1.0, 2.0)
        psi0 = np.zeros(space.dim, dtype=complex)
        psi0[space.index((1, 0))] = 1.0
        traj = propagate_td(h, psi0, 3.0, default_timestep(h), n_samples=8)
        assert np.max(traj.observables["norm_drift"]) < 1e-10

    def test_restricted_equals_full(self):
        space, h = exchange_hamiltonian(0.8, 1.5)
        psi0 = np.zeros(space.dim, dtype=complex)
        psi0[space.index((1, 0))] = 1.0
        dt = default_timestep(h)
        a = propagate_td(h, psi0, 2.0, dt, n_samples=1).final
        b = propagate_td(h, psi0, 2.0, dt, n_samples=1,
                         restrict=False).final
        assert np.max(np.abs(a.full_vector() - b.full_vector())) < 1e-14

    def test_support_is_the_invariant_block(self):
        space, h = exchange_hamiltonian(0.8, 1.5)
        psi0 = np.zeros(space.dim, dtype=complex)
        psi0[space.index((1, 0))] = 1.0
        traj = propagate_td(h, psi0, 1.0, default_timestep(h), n_samples=1)
        # {|e,0>, |g,1>} closes on itself
        assert traj.metadata["support_size"] == 2


class TestLindbladOracles:
    def test_relaxation_and_coherence_decay(self):
        """Single qutrit, H = omega |e><e|, one ge relaxation channel:
        p_e decays at gamma, the ge coherence at gamma/2 while rotating
        at omega."""
        space = qutrit_only_space()
        omega, gamma = 2.0, 0.37
        h = Hamiltonian(space, [
            HamiltonianTerm(omega, embed(qutrit_projector("e"), 0, space))])
        chan = [LindbladChannel(gamma, embed(qutrit_lowering("ge"), 0, space))]
        psi0 = np.array([1.0, 1.0, 0.0], dtype=complex) / math.sqrt(2.0)
        traj = propagate_lindblad(h, chan, QuantumState.pure_density(psi0),
                                  4.0, default_timestep(h), n_samples=12)
        for t, st in zip(traj.times, traj.states):
            rho = st.full_matrix()
            assert rho[1, 1].real == pytest.approx(0.5 * math.exp(-gamma * t),
                                                   abs=1e-7)
            want = 0.5 * math.exp(-gamma * t / 2.0) * np.exp(1j * omega * t)
            assert rho[0, 1] == pytest.approx(want, abs=1e-7)

    def test_dephasing_channel_rate(self):
        """A projector channel D[|e><e|] at rate r damps the ge coherence
        at r/2 and moves no population."""
        space = qutrit_only_space()
        r = 0.8
        h = Hamiltonian(space, [
            HamiltonianTerm(1.0, embed(qutrit_projector("e"), 0, space))])
        chan = [LindbladChannel(r, embed(qutrit_projector("e"), 0, space))]
        psi0 = np.array([1.0, 1.0, 0.0], dtype=complex) / math.sqrt(2.0)
        traj = propagate_lindblad(h, chan, QuantumState.pure_density(psi0),
                                  3.0, default_timestep(h), n_samples=6)
        rho_t = traj.final.full_matrix()
        assert rho_t[1, 1].real == pytest.approx(0.5, abs=1e-10)
        assert abs(rho_t[0, 1]) == pytest.approx(
            0.5 * math.exp(-r * 3.0 / 2.0), abs=1e-9)

    def test_trace_and_positivity_observables(self, cheap_lossy_params):
        p = cheap_lossy_params
        space = dark_mode_space(p)
        h = build_heff_prime(p, space)
        chans = [
            LindbladChannel(p.gamma1_ge,
                            embed(qutrit_lowering("ge"), 0, space)),
            LindbladChannel(p.kappa_a,
                            embed(boson_annihilation(2), 2, space)),
        ]
        psi0 = max_superposition(space)
        traj = propagate_lindblad(h, chans, QuantumState.pure_density(psi0),
                                  0.02, default_timestep(h), n_samples=20)
        assert np.max(np.abs(traj.observables["trace"] - 1.0)) < 1e-8
        assert np.min(traj.observables["min_eigenvalue"]) > -1e-8

    def test_zero_rate_channels_are_inert(self, cheap_params):
        space = device_space(cheap_params)
        from darklink.model import build_h2q
        h = build_h2q(cheap_params, space)
        chans = build_lindblad_channels(cheap_params, space)  # all rates 0
        psi0 = max_superposition(space)
        dt = default_timestep(h)
        t = 200.0 * dt
        rho = propagate_lindblad(h, chans, QuantumState.pure_density(psi0),
                                 t, dt, n_samples=1).final.full_matrix()
        ket = propagate_td(h, psi0, t, dt, n_samples=1).final.full_vector()
        assert np.max(np.abs(rho - np.outer(ket, ket.conj()))) < 1e-12

    def test_initial_state_validation(self, cheap_params):
        space = dark_mode_space(cheap_params)
        h = build_heff_prime(cheap_params, space)
        dt = default_timestep(h)
        bad_trace = np.eye(space.dim, dtype=complex)
        with pytest.raises(ValueError, match="trace"):
            propagate_lindblad(h, [], bad_trace, 1.0, dt)
        non_herm = np.zeros((space.dim, space.dim), dtype=complex)
        non_herm[0, 0] = 1.0
        non_herm[0, 1] = 0.5
        with pytest.raises(ValueError, match="Hermitian"):
            propagate_lindblad(h, [], non_herm, 1.0, dt)
        negative = np.zeros((space.dim, space.dim), dtype=complex)
        negative[0, 0] = 1.5
        negative[1, 1] = -0.5
        with pytest.raises(ValueError, match="positive"):
            propagate_lindblad(h, [], negative, 1.0, dt)


class TestExpectation:
    def test_requires_hermitian(self):
        ket = QuantumState.ket([1.0, 0.0])
        with pytest.raises(ValueError):
            expectation(np.array([[0.0, 1.0], [0.0, 0.0]]), ket)

    def test_ket_and_dm_agree(self):
        op = np.array([[1.0, 0.5], [0.5, -1.0]], dtype=complex)
        v = np.array([0.6, 0.8], dtype=complex)
        a = expectation(op, QuantumState.ket(v))
        b = expectation(op, QuantumState.pure_density(v))
        c = expectation(op, v)
        assert a == pytest.approx(b)
        assert a == pytest.approx(c)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            expectation(np.eye(2), QuantumState.ket([1.0, 0.0, 0.0]))
