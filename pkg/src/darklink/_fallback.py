"""Pure numpy/scipy twin of the compiled stepper.

Same call signatures and the same mathematics as the extension module;
only the inner loops differ (vectorized scipy sparse products instead
of C loops). Selected automatically when the extension is missing.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def _csr(triple, n):
    data, indices, indptr = triple
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def ket_rk4(n, k0, terms, psi0, h, nsteps, stride):
    k_mat = _csr(k0, n)
    bs = [(_csr(b, n), _csr(bd, n), nu) for b, bd, nu in terms]
    psi = np.array(psi0, dtype=complex)
    n_out = nsteps // stride + 1
    out = np.zeros((n_out, n), dtype=complex)
    out[0] = psi

    def rhs(p, t):
        y = k_mat @ p
        for b, bd, nu in bs:
            ph = np.exp(1j * nu * t)
            y = y + ph * (b @ p) + np.conj(ph) * (bd @ p)
        return -1j * y

    for k in range(nsteps):
        t = k * h
        y1 = rhs(psi, t)
        y2 = rhs(psi + 0.5 * h * y1, t + 0.5 * h)
        y3 = rhs(psi + 0.5 * h * y2, t + 0.5 * h)
        y4 = rhs(psi + h * y3, t + h)
        psi = psi + (h / 6.0) * (y1 + 2.0 * y2 + 2.0 * y3 + y4)
        if (k + 1) % stride == 0:
            out[(k + 1) // stride] = psi
    return out


def dm_rk4(n, k0, terms, channels, rho0, h, nsteps, stride):
    k_mat = _csr(k0, n)
    bs = [(_csr(b, n), _csr(bd, n), nu) for b, bd, nu in terms]
    ls = [(_csr(l, n), rate) for l, rate in channels]
    rho = np.array(rho0, dtype=complex)
    n_out = nsteps // stride + 1
    out = np.zeros((n_out, n, n), dtype=complex)
    out[0] = rho

    def rhs(r, t):
        m = k_mat @ r
        for b, bd, nu in bs:
            ph = np.exp(1j * nu * t)
            m = m + ph * (b @ r) + np.conj(ph) * (bd @ r)
        y = -1j * (m - m.conj().T)
        for l, rate in ls:
            # r is Hermitian at every stage, so (L r)+ = r L+
            y = y + rate * (l @ (l @ r).conj().T)
        return y

    for k in range(nsteps):
        t = k * h
        y1 = rhs(rho, t)
        y2 = rhs(rho + 0.5 * h * y1, t + 0.5 * h)
        y3 = rhs(rho + 0.5 * h * y2, t + 0.5 * h)
        y4 = rhs(rho + h * y3, t + h)
        rho = rho + (h / 6.0) * (y1 + 2.0 * y2 + 2.0 * y3 + y4)
        rho = 0.5 * (rho + rho.conj().T)
        if (k + 1) % stride == 0:
            out[(k + 1) // stride] = rho
    return out
