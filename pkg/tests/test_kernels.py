"""Backend selection and compiled-vs-fallback agreement.

The two steppers must be interchangeable to float precision; the
agreement test feeds both the same randomly packed operators rather
than a physical device so it covers the raw stepping contract.
"""

import numpy as np
import pytest
import scipy.sparse as sp

import darklink.dynamics as dyn
from darklink import _fallback
from darklink.kernels import csr_triple, get_backend, get_impl
from darklink.model import build_h2q, build_lindblad_channels, device_space
from darklink.dynamics import (
    QuantumState,
    default_timestep,
    propagate_lindblad,
    propagate_td,
)


def test_backend_name():
    assert get_backend() in ("compiled", "python")


def test_get_impl_selection():
    assert get_impl("python") is _fallback
    assert get_impl() is not None
    with pytest.raises(ValueError, match="unknown backend"):
        get_impl("fortran")
    if get_backend() == "compiled":
        assert get_impl("compiled").__name__.endswith("_stepper")


def test_csr_triple_round_trip():
    rng = np.random.default_rng(7)
    dense = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    dense[np.abs(dense) < 1.2] = 0.0
    data, indices, indptr = csr_triple(dense)
    assert data.dtype == np.complex128
    assert indices.dtype == np.int32
    assert indptr.dtype == np.int32
    back = sp.csr_matrix((data, indices, indptr), shape=(9, 9)).toarray()
    assert np.array_equal(back, dense)


def _random_packed(rng, n, n_terms, n_channels):
    """Random operators in the packed layout both steppers accept."""

    def sparse(scale=1.0):
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        m[rng.random((n, n)) < 0.6] = 0.0
        return scale * m

    k0 = csr_triple(sparse())
    terms = []
    for _ in range(n_terms):
        b = sparse(0.5)
        terms.append((csr_triple(b), csr_triple(b.conj().T),
                      float(rng.uniform(-3.0, 3.0))))
    channels = [(csr_triple(sparse(0.3)), float(rng.uniform(0.0, 0.2)))
                for _ in range(n_channels)]
    return k0, terms, channels


@pytest.mark.skipif(get_backend() != "compiled",
                    reason="only one stepper is available")
class TestBackendAgreement:
    def test_ket_stepper(self):
        rng = np.random.default_rng(21)
        n = 17
        k0, terms, _ = _random_packed(rng, n, 3, 0)
        psi0 = rng.normal(size=n) + 1j * rng.normal(size=n)
        psi0 /= np.linalg.norm(psi0)
        args = (n, k0, terms, psi0, 1e-3, 120, 40)
        a = get_impl("compiled").ket_rk4(*args)
        b = get_impl("python").ket_rk4(*args)
        assert a.shape == b.shape == (4, n)
        assert np.max(np.abs(a - b)) < 1e-12

    def test_dm_stepper(self):
        rng = np.random.default_rng(22)
        n = 11
        k0, terms, channels = _random_packed(rng, n, 2, 3)
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        rho0 = m @ m.conj().T
        rho0 /= np.trace(rho0).real
        args = (n, k0, terms, channels, rho0, 1e-3, 90, 30)
        a = get_impl("compiled").dm_rk4(*args)
        b = get_impl("python").dm_rk4(*args)
        assert a.shape == b.shape == (4, n, n)
        assert np.max(np.abs(a - b)) < 1e-12

    def test_full_propagation_through_the_fallback(self, cheap_params,
                                                   cheap_lossy_params,
                                                   monkeypatch):
        """Force the high-level propagators onto the fallback and compare
        whole trajectories against the compiled default."""
        space = device_space(cheap_params, n_max=2)
        ham = build_h2q(cheap_params, space)
        psi0 = np.zeros(space.dim, dtype=complex)
        psi0[space.index((1, 0, 0, 0, 0))] = 1.0
        dt = default_timestep(ham)
        t = 400.0 * dt

        ref = propagate_td(ham, psi0, t, dt, n_samples=4)
        monkeypatch.setattr(dyn, "get_impl", lambda name=None: _fallback)
        alt = propagate_td(ham, psi0, t, dt, n_samples=4)
        assert np.max(np.abs(ref.final.full_vector()
                             - alt.final.full_vector())) < 1e-12

        lspace = device_space(cheap_lossy_params, n_max=2)
        lham = build_h2q(cheap_lossy_params, lspace)
        channels = build_lindblad_channels(cheap_lossy_params, lspace)
        rho0 = QuantumState.pure_density(psi0)
        monkeypatch.undo()
        ref_l = propagate_lindblad(lham, channels, rho0, t, dt, n_samples=2)
        monkeypatch.setattr(dyn, "get_impl", lambda name=None: _fallback)
        alt_l = propagate_lindblad(lham, channels, rho0, t, dt, n_samples=2)
        assert np.max(np.abs(ref_l.final.full_matrix()
                             - alt_l.final.full_matrix())) < 1e-12


def test_benchmark_smoke(capsys):
    from darklink import benchmark

    benchmark.run(steps=60)
    out = capsys.readouterr().out
    assert "density-matrix workload" in out
    assert f"selected backend: {get_backend()}" in out
    if get_backend() == "compiled":
        assert "speedup" in out
        assert "python" in out and "compiled" in out
