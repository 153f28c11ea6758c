"""Physical model of the pulsed parametric Kerr oscillator.

All rates are measured in units of the damping rate, so ``gamma = 1`` fixes
the time unit. The rotating-frame Hamiltonian is

    H(t) = delta n + chi n^2 + drive f(t) (e^{i phi} a+^2 + e^{-i phi} a^2)

with ``drive`` the product of the peak pump amplitude and the parametric
coupling, and ``f`` a train of Gaussian pulses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgument
from .fock import FockBasis, Operator, annihilation, creation

# each Gaussian term is dropped beyond this many widths (e^-64 ~ 1.6e-28)
PULSE_WINDOW = 8.0


@dataclass(frozen=True)
class ModelParams:
    delta: float
    chi: float
    drive: float
    phi: float = 0.0
    gamma: float = 1.0
    nbath: float = 0.0

    def __post_init__(self):
        problems = []
        if not self.gamma > 0:
            problems.append(f"gamma must be > 0 (got {self.gamma})")
        if not self.chi >= 0:
            problems.append(f"chi must be >= 0 (got {self.chi})")
        if not self.drive >= 0:
            problems.append(f"drive must be >= 0 (got {self.drive})")
        if not self.nbath >= 0:
            problems.append(f"nbath must be >= 0 (got {self.nbath})")
        if problems:
            raise InvalidArgument("; ".join(problems))


@dataclass(frozen=True)
class PulseTrain:
    """Gaussian pulse train; ``count=None`` means an unbounded train."""

    t0: float = 0.0
    width: float = 1.0
    period: float = 1.0
    count: Optional[int] = None
    monochromatic: bool = False

    def __post_init__(self):
        if self.monochromatic:
            return
        problems = []
        if self.t0 < 0:
            problems.append(f"t0 must be >= 0 (got {self.t0})")
        if not self.width > 0:
            problems.append(f"width must be > 0 (got {self.width})")
        if self.count is not None and self.count < 1:
            problems.append(f"count must be >= 1 (got {self.count})")
        if (self.count is None or self.count > 1) and not self.period > 0:
            problems.append(f"period must be > 0 for a multi-pulse train (got {self.period})")
        if problems:
            raise InvalidArgument("; ".join(problems))

    @classmethod
    def continuous(cls) -> "PulseTrain":
        return cls(monochromatic=True)

    def peak(self) -> float:
        """Upper bound on the envelope, used for step-size estimates."""
        if self.monochromatic:
            return 1.0
        if self.count == 1:
            return 1.0
        # overlap of neighbouring pulses; geometric tail bound for the rest
        q = math.exp(-((self.period / self.width) ** 2))
        return 1.0 + 2.0 * q / (1.0 - q) if q < 1.0 else float("inf")


@dataclass(frozen=True)
class SemiclassicalSolution:
    n: Optional[float]
    phases: Optional[tuple]
    above_threshold: bool
    pump_parameter: float


def _envelope_scalar(t: float, train: PulseTrain) -> float:
    if train.monochromatic:
        return 1.0
    T, tau = train.width, train.period
    if train.count == 1:
        x = t - train.t0
        return math.exp(-((x / T) ** 2)) if abs(x) <= PULSE_WINDOW * T else 0.0
    window = PULSE_WINDOW * T * max(1.0, tau / T)
    k_lo = max(0, math.ceil((t - train.t0 - window) / tau))
    k_hi = math.floor((t - train.t0 + window) / tau)
    if train.count is not None:
        k_hi = min(k_hi, train.count - 1)
    total = 0.0
    for k in range(k_lo, k_hi + 1):
        x = t - train.t0 - k * tau
        if abs(x) <= window:
            total += math.exp(-((x / T) ** 2))
    return total


def pulse_envelope(t, train: PulseTrain):
    """Envelope ``f(t) = sum_k exp(-(t - t0 - k period)^2 / width^2)``.

    Accepts a scalar or an array of times.
    """
    if np.ndim(t) == 0:
        return _envelope_scalar(float(t), train)
    t = np.asarray(t, dtype=float)
    return np.array([_envelope_scalar(ti, train) for ti in t.ravel()]).reshape(t.shape)


def hamiltonian_parts(params: ModelParams, basis: FockBasis):
    """Split the Hamiltonian into its diagonal and pump pieces.

    Returns ``(diag, pump)`` with ``H(t) = diag(diag) + drive f(t) pump``,
    ``diag`` a real vector and ``pump`` the Hermitian matrix
    ``e^{i phi} a+^2 + e^{-i phi} a^2``.
    """
    n = np.arange(basis.dimension, dtype=float)
    diag = params.delta * n + params.chi * n**2
    a = annihilation(basis).elements
    a2 = a @ a
    pump = np.exp(-1j * params.phi) * a2
    pump = pump + pump.conj().T
    return diag, pump


def hamiltonian_at(t: float, params: ModelParams, train: PulseTrain, basis: FockBasis) -> Operator:
    diag, pump = hamiltonian_parts(params, basis)
    return Operator(np.diag(diag) + params.drive * pulse_envelope(t, train) * pump, basis)


def lindblad_ops(params: ModelParams, basis: FockBasis) -> list:
    """Loss ``sqrt((N+1) gamma) a`` and, for a warm bath, gain ``sqrt(N gamma) a+``."""
    ops = [Operator(math.sqrt((params.nbath + 1) * params.gamma) * annihilation(basis).elements, basis)]
    if params.nbath > 0:
        ops.append(Operator(math.sqrt(params.nbath * params.gamma) * creation(basis).elements, basis))
    return ops


def two_quanta_detuning(n: int, params: ModelParams) -> float:
    """Pump detuning of the |n> -> |n+2> transition, ``2 delta + chi (4n + 4)``."""
    if n < 0:
        raise InvalidArgument(f"level index must be >= 0, got {n}")
    return 2.0 * params.delta + params.chi * (4 * n + 4)


def threshold_intensity(params: ModelParams, coupling: float = 1.0) -> float:
    if not coupling > 0:
        raise InvalidArgument(f"parametric coupling must be > 0, got {coupling}")
    g = params.gamma
    return (g**2 / coupling**2) * (1.0 + (params.delta / g) ** 2)


def semiclassical_steady_state(params: ModelParams, intensity: float,
                               coupling: float = 1.0) -> SemiclassicalSolution:
    """Mean-field intensity and the two locked phases of the continuously driven mode.

    ``intensity`` is the pump intensity ``|E0|^2`` and ``coupling`` the
    parametric coupling; the pump phase is ``params.phi``. A negative
    mean-field intensity is reported as no solution.
    """
    if params.chi <= 0:
        raise InvalidArgument("semiclassical intensity is singular for chi = 0")
    g = params.gamma
    J = coupling**2 * intensity / g**2
    above = intensity > threshold_intensity(params, coupling)
    if J < 1.0:
        return SemiclassicalSolution(None, None, False, J)
    n = (g / (2.0 * params.chi)) * (params.delta / g + math.sqrt(J - 1.0))
    # rounding at the threshold boundary itself
    if -1e-12 * (g / params.chi) * (1.0 + abs(params.delta) / g) < n < 0:
        n = 0.0
    if n < 0:
        return SemiclassicalSolution(None, None, False, J)
    phase = 0.5 * (params.phi - math.asin(J**-0.5))
    return SemiclassicalSolution(n, (phase, phase + math.pi), above and n > 0, J)
