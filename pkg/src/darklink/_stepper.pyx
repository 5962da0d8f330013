# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fixed-step integrator core.

Classical 4th-order stepping for a ket under H(t) and for a density
matrix under the full master equation. Operators arrive as CSR triples;
states are dense. H(t) = K0 + sum_j (B_j e^{i nu_j t} + B_j+ e^{-i nu_j t}),
where for the density-matrix path K0 already carries the -i/2 L+L
anticommutator part and the jump terms L rho L+ are applied explicitly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

ctypedef double complex cplx


cdef inline void spmm(const cplx[::1] data, const int[::1] indices,
                      const int[::1] indptr, const cplx[:, ::1] x,
                      cplx coeff, cplx[:, ::1] out, int n,
                      bint accumulate) noexcept nogil:
    """out (+)= coeff * A @ x for CSR A."""
    cdef int i, j, p
    cdef cplx v
    if not accumulate:
        for i in range(n):
            for j in range(n):
                out[i, j] = 0
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            v = coeff * data[p]
            for j in range(n):
                out[i, j] = out[i, j] + v * x[indices[p], j]


cdef inline void spmv(const cplx[::1] data, const int[::1] indices,
                      const int[::1] indptr, const cplx[::1] x,
                      cplx coeff, cplx[::1] out, int n,
                      bint accumulate) noexcept nogil:
    cdef int i, p
    cdef cplx acc
    for i in range(n):
        acc = 0
        for p in range(indptr[i], indptr[i + 1]):
            acc = acc + data[p] * x[indices[p]]
        if accumulate:
            out[i] = out[i] + coeff * acc
        else:
            out[i] = coeff * acc


cdef inline void conj_transpose(const cplx[:, ::1] x, cplx[:, ::1] out,
                                int n) noexcept nogil:
    cdef int i, j
    for i in range(n):
        for j in range(n):
            out[i, j] = x[j, i].conjugate()


cdef class _Csr:
    cdef cplx[::1] data
    cdef int[::1] indices
    cdef int[::1] indptr

    def __init__(self, data, indices, indptr):
        self.data = np.ascontiguousarray(data, dtype=np.complex128)
        self.indices = np.ascontiguousarray(indices, dtype=np.int32)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int32)


def _pack(mats):
    return [_Csr(d, i, p) for (d, i, p) in mats]


def ket_rk4(int n, k0, terms, cnp.ndarray psi0, double h, long nsteps,
            long stride):
    """Integrate i d psi/dt = H(t) psi; returns (n_out, n) samples."""
    cdef _Csr K = _Csr(*k0)
    cdef list bs = _pack([term[0] for term in terms])
    cdef list bds = _pack([term[1] for term in terms])
    cdef double[::1] nus = np.ascontiguousarray(
        [term[2] for term in terms], dtype=np.float64) if terms else \
        np.empty(0, dtype=np.float64)
    cdef int nterms = len(terms)
    cdef long n_out = nsteps // stride + 1
    out_arr = np.zeros((n_out, n), dtype=np.complex128)
    cdef cplx[:, ::1] out = out_arr
    cdef cplx[::1] psi = np.ascontiguousarray(psi0, dtype=np.complex128).copy()
    cdef cplx[::1] y = np.zeros(n, dtype=np.complex128)
    cdef cplx[::1] work = np.zeros(n, dtype=np.complex128)
    cdef cplx[::1] acc = np.zeros(n, dtype=np.complex128)
    cdef long k
    cdef int i, s, j
    cdef double t, ts
    cdef double[4] t_off
    cdef double[4] weight
    cdef cplx ph, mi = -1j
    cdef _Csr b, bd

    t_off[0] = 0.0; t_off[1] = 0.5 * h; t_off[2] = 0.5 * h; t_off[3] = h
    weight[0] = h / 6.0; weight[1] = h / 3.0; weight[2] = h / 3.0; weight[3] = h / 6.0

    for i in range(n):
        out[0, i] = psi[i]

    for k in range(nsteps):
        t = k * h
        for i in range(n):
            acc[i] = psi[i]
            work[i] = psi[i]
        for s in range(4):
            ts = t + t_off[s]
            # y = -i H(ts) work
            spmv(K.data, K.indices, K.indptr, work, mi, y, n, False)
            for j in range(nterms):
                b = <_Csr> bs[j]
                bd = <_Csr> bds[j]
                ph = cos(nus[j] * ts) + 1j * sin(nus[j] * ts)
                spmv(b.data, b.indices, b.indptr, work, mi * ph, y, n, True)
                spmv(bd.data, bd.indices, bd.indptr, work, mi * ph.conjugate(),
                     y, n, True)
            for i in range(n):
                acc[i] = acc[i] + weight[s] * y[i]
            if s < 3:
                for i in range(n):
                    work[i] = psi[i] + t_off[s + 1] * y[i]
        for i in range(n):
            psi[i] = acc[i]
        if (k + 1) % stride == 0:
            for i in range(n):
                out[(k + 1) // stride, i] = psi[i]
    return out_arr


def dm_rk4(int n, k0, terms, channels, cnp.ndarray rho0, double h,
           long nsteps, long stride):
    """Integrate the master equation on the dense block; returns
    (n_out, n, n) samples, Hermitized every step."""
    cdef _Csr K = _Csr(*k0)
    cdef list bs = _pack([term[0] for term in terms])
    cdef list bds = _pack([term[1] for term in terms])
    cdef double[::1] nus = np.ascontiguousarray(
        [term[2] for term in terms], dtype=np.float64) if terms else \
        np.empty(0, dtype=np.float64)
    cdef list ls = _pack([chan[0] for chan in channels])
    cdef double[::1] rates = np.ascontiguousarray(
        [chan[1] for chan in channels], dtype=np.float64) if channels else \
        np.empty(0, dtype=np.float64)
    cdef int nterms = len(terms)
    cdef int nchan = len(channels)
    cdef long n_out = nsteps // stride + 1
    out_arr = np.zeros((n_out, n, n), dtype=np.complex128)
    cdef cplx[:, :, ::1] out = out_arr
    cdef cplx[:, ::1] rho = np.ascontiguousarray(rho0, dtype=np.complex128).copy()
    cdef cplx[:, ::1] work = np.zeros((n, n), dtype=np.complex128)
    cdef cplx[:, ::1] acc = np.zeros((n, n), dtype=np.complex128)
    cdef cplx[:, ::1] m = np.zeros((n, n), dtype=np.complex128)
    cdef cplx[:, ::1] y = np.zeros((n, n), dtype=np.complex128)
    cdef cplx[:, ::1] w2 = np.zeros((n, n), dtype=np.complex128)
    cdef long k
    cdef int i, j, s, c
    cdef double t, ts, half
    cdef double[4] t_off
    cdef double[4] weight
    cdef cplx ph, mi = -1j, zij
    cdef _Csr b, bd, l

    t_off[0] = 0.0; t_off[1] = 0.5 * h; t_off[2] = 0.5 * h; t_off[3] = h
    weight[0] = h / 6.0; weight[1] = h / 3.0; weight[2] = h / 3.0; weight[3] = h / 6.0

    for i in range(n):
        for j in range(n):
            out[0, i, j] = rho[i, j]

    for k in range(nsteps):
        t = k * h
        for i in range(n):
            for j in range(n):
                acc[i, j] = rho[i, j]
                work[i, j] = rho[i, j]
        for s in range(4):
            ts = t + t_off[s]
            # m = K(ts) work
            spmm(K.data, K.indices, K.indptr, work, 1.0 + 0j, m, n, False)
            for j in range(nterms):
                b = <_Csr> bs[j]
                bd = <_Csr> bds[j]
                ph = cos(nus[j] * ts) + 1j * sin(nus[j] * ts)
                spmm(b.data, b.indices, b.indptr, work, ph, m, n, True)
                spmm(bd.data, bd.indices, bd.indptr, work, ph.conjugate(),
                     m, n, True)
            # y = -i (m - m+): work is Hermitian at every stage, so
            # K rho - rho K+ equals m minus its conjugate transpose
            for i in range(n):
                for j in range(n):
                    y[i, j] = mi * (m[i, j] - m[j, i].conjugate())
            # jump terms: y += rate * L work L+
            for c in range(nchan):
                l = <_Csr> ls[c]
                spmm(l.data, l.indices, l.indptr, work, 1.0 + 0j, m, n, False)
                conj_transpose(m, w2, n)
                spmm(l.data, l.indices, l.indptr, w2, 1.0 + 0j, m, n, False)
                # m now holds L (L work)+ = L work+ L+ = L work L+
                for i in range(n):
                    for j in range(n):
                        y[i, j] = y[i, j] + rates[c] * m[i, j]
            for i in range(n):
                for j in range(n):
                    acc[i, j] = acc[i, j] + weight[s] * y[i, j]
            if s < 3:
                half = t_off[s + 1]
                for i in range(n):
                    for j in range(n):
                        work[i, j] = rho[i, j] + half * y[i, j]
        # advance and Hermitize
        for i in range(n):
            rho[i, i] = 0.5 * (acc[i, i] + acc[i, i].conjugate())
            for j in range(i + 1, n):
                zij = 0.5 * (acc[i, j] + acc[j, i].conjugate())
                rho[i, j] = zij
                rho[j, i] = zij.conjugate()
        if (k + 1) % stride == 0:
            for i in range(n):
                for j in range(n):
                    out[(k + 1) // stride, i, j] = rho[i, j]
    return out_arr
