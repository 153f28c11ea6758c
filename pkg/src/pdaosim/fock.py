"""Truncated Fock-space representation of a single oscillator mode.

Everything is dense complex128; the bases used here stay below ~100 levels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

GUARD_BAND = 5


@dataclass(frozen=True)
class FockBasis:
    n_max: int
    tail_tolerance: float = 1e-6

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise InvalidArgument(f"n_max must be an integer >= 1, got {self.n_max!r}")
        if not 0.0 < self.tail_tolerance < 1.0:
            raise InvalidArgument(f"tail_tolerance must lie in (0, 1), got {self.tail_tolerance!r}")

    @property
    def dimension(self) -> int:
        return self.n_max + 1


def _check_square(elements, basis, what):
    elements = np.asarray(elements, dtype=complex)
    d = basis.dimension
    if elements.shape != (d, d):
        raise InvalidArgument(f"{what} has shape {elements.shape}, basis needs {(d, d)}")
    return elements


@dataclass(frozen=True, eq=False)
class Operator:
    elements: np.ndarray
    basis: FockBasis

    def __post_init__(self):
        object.__setattr__(self, "elements", _check_square(self.elements, self.basis, "operator"))

    @property
    def dag(self) -> "Operator":
        return Operator(self.elements.conj().T, self.basis)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _same_basis(self.basis, other.basis)
            return Operator(self.elements @ other.elements, self.basis)
        if isinstance(other, PureState):
            _same_basis(self.basis, other.basis)
            return self.elements @ other.amplitudes
        return NotImplemented


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    basis: FockBasis

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dimension,):
            raise InvalidArgument(
                f"state has shape {amps.shape}, basis needs ({self.basis.dimension},)")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "PureState":
        nrm = self.norm
        if nrm == 0.0:
            raise InvalidArgument("cannot normalize the zero vector")
        return PureState(self.amplitudes / nrm, self.basis)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    elements: np.ndarray
    basis: FockBasis

    def __post_init__(self):
        object.__setattr__(self, "elements", _check_square(self.elements, self.basis, "density matrix"))

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.elements))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.elements + self.elements.conj().T))[0])

    def hermitized(self) -> "DensityMatrix":
        return DensityMatrix(0.5 * (self.elements + self.elements.conj().T), self.basis)


def _same_basis(b1: FockBasis, b2: FockBasis):
    if b1.dimension != b2.dimension:
        raise InvalidArgument(f"basis mismatch: dimension {b1.dimension} vs {b2.dimension}")


def make_basis(n_max: int, tail_tolerance: float = 1e-6) -> FockBasis:
    return FockBasis(n_max, tail_tolerance)


def annihilation(basis: FockBasis) -> Operator:
    """Lowering operator with ``<n-1|a|n> = sqrt(n)``."""
    return Operator(np.diag(np.sqrt(np.arange(1, basis.dimension, dtype=float)), 1), basis)


def creation(basis: FockBasis) -> Operator:
    # exact adjoint of the lowering operator; a+|n_max> is truncated to zero
    return annihilation(basis).dag


def number_op(basis: FockBasis) -> Operator:
    return Operator(np.diag(np.arange(basis.dimension, dtype=float)), basis)


def identity(basis: FockBasis) -> Operator:
    return Operator(np.eye(basis.dimension), basis)


def fock_state(basis: FockBasis, n: int) -> PureState:
    if not 0 <= n <= basis.n_max:
        raise InvalidArgument(f"Fock index {n} outside 0..{basis.n_max}")
    amps = np.zeros(basis.dimension, dtype=complex)
    amps[n] = 1.0
    return PureState(amps, basis)


def superposition(basis: FockBasis, coefficients: dict) -> PureState:
    """Normalized state from a ``{n: amplitude}`` mapping."""
    amps = np.zeros(basis.dimension, dtype=complex)
    for n, c in coefficients.items():
        if not 0 <= n <= basis.n_max:
            raise InvalidArgument(f"Fock index {n} outside 0..{basis.n_max}")
        amps[n] = c
    return PureState(amps, basis).normalized()


def vacuum_dm(basis: FockBasis) -> DensityMatrix:
    return dm_from_pure(fock_state(basis, 0))


def expectation(op: Operator, rho: DensityMatrix) -> complex:
    """``Tr(rho op)``."""
    _same_basis(op.basis, rho.basis)
    # Tr(AB) = sum_ij A_ij B_ji without forming the product
    return complex(np.sum(rho.elements * op.elements.T))


def dm_from_pure(psi: PureState) -> DensityMatrix:
    if abs(psi.norm - 1.0) > 1e-8:
        raise InvalidArgument(f"state is not normalized (norm {psi.norm!r})")
    c = psi.amplitudes
    r = np.outer(c, c.conj())
    # symmetrize so the result is Hermitian bit for bit
    return DensityMatrix(0.5 * (r + r.conj().T), psi.basis)


def tail_mass(rho: DensityMatrix, band: int = GUARD_BAND) -> float:
    """Population of the top `band` Fock levels."""
    n_max = rho.basis.n_max
    if not 1 <= band <= n_max:
        raise InvalidArgument(f"band must lie in 1..{n_max}, got {band}")
    diag = np.real(np.diagonal(rho.elements))
    return float(np.sum(diag[n_max - band + 1:]))
