"""Reachable-support detection for propagations.

The gate Hamiltonians conserve total excitation and every collapse
operator only lowers or preserves it, so a state started in the two
excitation sector can never leave it. Instead of hardcoding that fact,
we compute the set of basis indices reachable from the initial support
through the directed sparsity pattern of the generators: an entry
M[i, k] != 0 lets amplitude flow k -> i. For the density matrix the
relevant generators are the Hamiltonian terms, each collapse operator L
itself, and L+L; never a bare L+, which is only ever applied two sided
as L rho L+ and therefore moves both indices through L.

Propagating on the reachable block is exact, not an approximation: in
exact arithmetic every amplitude outside it stays identically zero, and
in floating point those entries are produced by multiplying stored
zeros, which again gives exact zeros.
"""

from __future__ import annotations

import numpy as np

CUTOFF = 1e-14


def reachable_indices(generators, support, dim: int) -> np.ndarray:
    """Directed closure of `support` under the patterns of `generators`.

    generators: iterable of dense complex matrices.
    support: iterable of basis indices with nonzero initial amplitude.
    Returns the sorted index array of the invariant block.
    """
    seen = np.zeros(dim, dtype=bool)
    seen[np.fromiter(support, dtype=int)] = True
    # adjacency: for each source column k, the rows i it feeds
    feeds = [[] for _ in range(dim)]
    for g in generators:
        rows, cols = np.nonzero(np.abs(g) > CUTOFF)
        for i, k in zip(rows.tolist(), cols.tolist()):
            feeds[k].append(i)
    frontier = list(np.where(seen)[0])
    while frontier:
        nxt = []
        for k in frontier:
            for i in feeds[k]:
                if not seen[i]:
                    seen[i] = True
                    nxt.append(i)
        frontier = nxt
    return np.where(seen)[0]


def dm_generators(hamiltonian, channels):
    """Generator matrices whose patterns bound density-matrix support."""
    gens = [hamiltonian.static_part()]
    for term in hamiltonian.detuned_terms():
        gens.append(term.op.m)
        if term.paired:
            gens.append(term.op.m.conj().T)
    for ch in channels:
        if ch.rate > 0:
            l = ch.op.m
            gens.append(l)
            gens.append(l.conj().T @ l)
    return gens


def ket_generators(hamiltonian):
    gens = [hamiltonian.static_part()]
    for term in hamiltonian.detuned_terms():
        gens.append(term.op.m)
        if term.paired:
            gens.append(term.op.m.conj().T)
    return gens
