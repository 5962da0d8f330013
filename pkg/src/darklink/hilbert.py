"""Tensor-product Hilbert space for qutrits and truncated bosonic modes.

Everything downstream works on one composite space with the fixed mode
ordering [qutrit 1, qutrit 2, resonator a, resonator b, line mode f],
indexed row-major. Operators are dense complex matrices wrapped with a
cached Hermiticity flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERM_TOL = 1e-12

QUTRIT_LEVELS = ("g", "e", "s")


@dataclass(frozen=True)
class ModeSpec:
    """One degree of freedom: a three-level qutrit or a truncated boson.

    Qutrits carry two transition frequencies (g-e and e-s, rad/s);
    bosons carry one frequency and a Fock cutoff n_max (dimension
    n_max + 1).
    """

    kind: str  # "qutrit" | "boson"
    omega_ge: float = 0.0
    omega_es: float = 0.0
    omega: float = 0.0
    n_max: int = 0

    def __post_init__(self):
        if self.kind == "qutrit":
            if self.omega_ge <= 0 or self.omega_es <= 0:
                raise ValueError("qutrit transition frequencies must be > 0")
        elif self.kind == "boson":
            if self.n_max < 1:
                raise ValueError("boson n_max must be >= 1")
            if self.omega <= 0:
                raise ValueError("boson frequency must be > 0")
        else:
            raise ValueError(f"unknown mode kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return 3 if self.kind == "qutrit" else self.n_max + 1


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor product of modes; dim is the product of mode dims."""

    modes: tuple[ModeSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(m.dim for m in self.modes)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, labels) -> int:
        """Flat row-major index of a product basis state."""
        if len(labels) != len(self.modes):
            raise ValueError("one label per mode required")
        idx = 0
        for lab, d in zip(labels, self.dims):
            if not 0 <= lab < d:
                raise ValueError(f"label {lab} out of range for dimension {d}")
            idx = idx * d + lab
        return idx


@dataclass
class OperatorMatrix:
    """Dense complex matrix with an eagerly computed Hermiticity flag."""

    m: np.ndarray
    is_hermitian: bool = field(init=False)

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=complex)
        if self.m.ndim != 2 or self.m.shape[0] != self.m.shape[1]:
            raise ValueError("operator must be a square matrix")
        self.is_hermitian = bool(
            np.max(np.abs(self.m - self.m.conj().T), initial=0.0) < HERM_TOL
        )

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.m.conj().T)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.m @ other.m)
        return self.m @ other


def boson_annihilation(n_max: int) -> OperatorMatrix:
    """Truncated annihilation operator, A[n-1, n] = sqrt(n)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    a = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    for n in range(1, n_max + 1):
        a[n - 1, n] = np.sqrt(n)
    return OperatorMatrix(a)


def qutrit_lowering(transition: str) -> OperatorMatrix:
    """Lowering operator on one qutrit: |g><e| for "ge", |e><s| for "es"."""
    m = np.zeros((3, 3), dtype=complex)
    if transition == "ge":
        m[0, 1] = 1.0
    elif transition == "es":
        m[1, 2] = 1.0
    else:
        raise ValueError(f"unknown transition {transition!r}")
    return OperatorMatrix(m)


def qutrit_projector(level: str) -> OperatorMatrix:
    """Projector |l><l| on one qutrit level, l in {g, e, s}."""
    try:
        k = QUTRIT_LEVELS.index(level)
    except ValueError:
        raise ValueError(f"unknown qutrit level {level!r}") from None
    m = np.zeros((3, 3), dtype=complex)
    m[k, k] = 1.0
    return OperatorMatrix(m)


def embed(op: OperatorMatrix, site: int, space: CompositeSpace) -> OperatorMatrix:
    """Kronecker lift of a single-mode operator to the composite space."""
    dims = space.dims
    if not 0 <= site < len(dims):
        raise ValueError(f"site {site} out of range")
    if op.dim != dims[site]:
        raise ValueError(
            f"operator dimension {op.dim} does not match mode dimension {dims[site]}"
        )
    m = np.eye(1, dtype=complex)
    for k, d in enumerate(dims):
        m = np.kron(m, op.m if k == site else np.eye(d, dtype=complex))
    return OperatorMatrix(m)


def basis_ket(labels, space: CompositeSpace) -> np.ndarray:
    """Unit product ket with a single amplitude 1 at the row-major index."""
    v = np.zeros(space.dim, dtype=complex)
    v[space.index(labels)] = 1.0
    return v
