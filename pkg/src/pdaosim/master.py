"""Deterministic Lindblad master-equation integration.

Classic fixed-step RK4 on the density matrix. The superoperator is applied
through matrix products and shifted slices and is never assembled. The step is the requested
``initial_dt`` halved until it sits inside the RK4 stability disk of the
Liouvillian (the Kerr ladder makes level splittings of order
``chi * n_max^2``), and optionally halved further until the mean excitation
at ``t_end`` stops moving.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import IntegrationFailure, InvalidArgument, NonStationary, TruncationOverflow
from .fock import GUARD_BAND, DensityMatrix, FockBasis, tail_mass, vacuum_dm
from .model import ModelParams, PulseTrain, hamiltonian_parts, lindblad_ops, pulse_envelope

log = logging.getLogger(__name__)

# RK4 is stable on the closed left half-disk of radius ~2.6
RK4_STABLE_RADIUS = 2.5
TRACE_TOLERANCE = 1e-8
NEGATIVITY_ALARM = -1e-6


@dataclass(frozen=True)
class StepControl:
    initial_dt: float = 1e-3
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    converge: bool = False
    max_halvings: int = 8


@dataclass(frozen=True)
class EvolutionConfig:
    t_start: float
    t_end: float
    sample_times: Sequence[float]
    basis: FockBasis
    step_control: StepControl = field(default_factory=StepControl)

    def __post_init__(self):
        times = np.asarray(self.sample_times, dtype=float)
        problems = []
        if not self.t_start < self.t_end:
            problems.append(f"t_start ({self.t_start}) must be < t_end ({self.t_end})")
        if times.ndim != 1 or times.size == 0:
            problems.append("sample_times must be a non-empty list")
        else:
            if np.any(np.diff(times) <= 0):
                problems.append("sample_times must be strictly increasing")
            if times[0] < self.t_start or times[-1] > self.t_end:
                problems.append("sample_times must lie inside [t_start, t_end]")
        if not self.step_control.initial_dt > 0:
            problems.append("initial_dt must be > 0")
        if problems:
            raise InvalidArgument("; ".join(problems))
        object.__setattr__(self, "sample_times", tuple(float(t) for t in times))


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    trace_error: np.ndarray
    hermiticity_error: np.ndarray
    min_eigenvalue: np.ndarray
    tail_mass: np.ndarray
    dt: float = float("nan")

    def mean_excitation(self) -> np.ndarray:
        n = np.arange(self.states[0].basis.dimension)
        return np.array([np.real(np.diagonal(r.elements)) @ n for r in self.states])

    def populations(self) -> np.ndarray:
        return np.array([np.real(np.diagonal(r.elements)) for r in self.states])


class Liouvillian:
    """Right-hand side of the master equation for a fixed model.

    The jump operators are multiples of ``a`` and ``a+``, so the dissipator
    is evaluated with shifted slices instead of matrix products.
    """

    def __init__(self, params: ModelParams, train: PulseTrain, basis: FockBasis):
        self.params, self.train, self.basis = params, train, basis
        self.diag, self.pump = hamiltonian_parts(params, basis)
        self.jumps = [L.elements for L in lindblad_ops(params, basis)]
        d = basis.dimension
        root = np.sqrt(np.arange(1, d, dtype=float))
        self.loss = (params.nbath + 1.0) * params.gamma * np.outer(root, root)
        self.gain = params.nbath * params.gamma * np.outer(root, root)
        # 1/2 sum_i L_i+ L_i is diagonal: (N+1) gamma n + N gamma (n+1), truncated at the top
        n = np.arange(d, dtype=float)
        gain_diag = params.nbath * params.gamma * (n + 1.0)
        gain_diag[-1] = 0.0
        self.half_rate = 0.5 * ((params.nbath + 1.0) * params.gamma * n + gain_diag)
        self.drive = params.drive
        self._const_envelope = 1.0 if train.monochromatic else None

    def envelope(self, t: float) -> float:
        if self._const_envelope is not None:
            return self._const_envelope
        return pulse_envelope(t, self.train)

    def __call__(self, r: np.ndarray, t: float) -> np.ndarray:
        # uses r = r^dagger: [H, r] = X - X^dagger with X = H r
        x = (self.diag - 1j * self.half_rate)[:, None] * r
        if self.drive:
            x = x + (self.drive * self.envelope(t)) * (self.pump @ r)
        out = -1j * x
        out += out.conj().T
        out[:-1, :-1] += self.loss * r[1:, 1:]
        if self.params.nbath > 0:
            out[1:, 1:] += self.gain * r[:-1, :-1]
        return out

    def spectral_bound(self) -> float:
        """Upper bound on the magnitude of the Liouvillian's eigenvalues."""
        spread = float(np.ptp(self.diag))
        if self.drive:
            spread += 2.0 * self.drive * self.train.peak() * float(np.linalg.norm(self.pump, 2))
        dissipation = sum(float(np.linalg.norm(L, 2)) ** 2 for L in self.jumps)
        return spread + dissipation

    def stable_dt(self, dt: float) -> float:
        limit = RK4_STABLE_RADIUS / max(self.spectral_bound(), 1e-300)
        while dt > limit:
            dt *= 0.5
        return dt


def _check_basis(rho: DensityMatrix, basis: FockBasis):
    if rho.basis.dimension != basis.dimension:
        raise InvalidArgument(
            f"basis mismatch: state dimension {rho.basis.dimension} vs {basis.dimension}")


def liouvillian_apply(rho: DensityMatrix, t: float, params: ModelParams, train: PulseTrain,
                      basis: FockBasis) -> np.ndarray:
    """``d rho / dt`` at time `t`."""
    _check_basis(rho, basis)
    r = 0.5 * (rho.elements + rho.elements.conj().T)
    return Liouvillian(params, train, basis)(r, t)


def _rk4_step(rhs, r, t, h):
    k1 = rhs(r, t)
    k2 = rhs(r + (0.5 * h) * k1, t + 0.5 * h)
    k3 = rhs(r + (0.5 * h) * k2, t + 0.5 * h)
    k4 = rhs(r + h * k3, t + h)
    r = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (r + r.conj().T)


def _march(r0, rhs, t_start, sample_times, dt, basis, on_sample):
    r, t = r0, t_start
    last_good = t_start
    for ts in sample_times:
        span = ts - t
        if span > 0:
            nsub = max(1, math.ceil(span / dt - 1e-9))
            h = span / nsub
            for i in range(nsub):
                r = _rk4_step(rhs, r, t + i * h, h)
            t = ts
            if not np.all(np.isfinite(r)):
                raise IntegrationFailure(f"non-finite density matrix before t={ts}", last_good)
        on_sample(ts, r)
        last_good = ts
    return r


def _record(basis):
    rec = {"times": [], "states": [], "trace": [], "herm": [], "mineig": [], "tail": []}

    def on_sample(t, r):
        rho = DensityMatrix(r.copy(), basis)
        tail = tail_mass(rho, min(GUARD_BAND, basis.n_max))
        if tail > basis.tail_tolerance:
            raise TruncationOverflow(
                f"tail mass {tail:.3e} exceeds {basis.tail_tolerance:.1e} at t={t}; raise n_max",
                time=t, tail=tail)
        trace_err = abs(rho.trace - 1.0)
        if trace_err > TRACE_TOLERANCE:
            raise IntegrationFailure(f"trace drifted by {trace_err:.3e} at t={t}",
                                     rec["times"][-1] if rec["times"] else None)
        mineig = rho.min_eigenvalue()
        if mineig < NEGATIVITY_ALARM:
            log.warning("density matrix eigenvalue %.3e at t=%g", mineig, t)
        rec["times"].append(t)
        rec["states"].append(rho)
        rec["trace"].append(trace_err)
        rec["herm"].append(rho.hermiticity_error())
        rec["mineig"].append(mineig)
        rec["tail"].append(tail)

    return rec, on_sample


def _integrate_fixed(rho0, config, rhs, dt):
    rec, on_sample = _record(config.basis)
    _march(rho0.elements.copy(), rhs, config.t_start, config.sample_times, dt, config.basis, on_sample)
    return Trajectory(
        times=np.array(rec["times"]),
        states=rec["states"],
        trace_error=np.array(rec["trace"]),
        hermiticity_error=np.array(rec["herm"]),
        min_eigenvalue=np.array(rec["mineig"]),
        tail_mass=np.array(rec["tail"]),
        dt=dt,
    )


def integrate_master(rho0: Optional[DensityMatrix], config: EvolutionConfig, params: ModelParams,
                     train: PulseTrain) -> Trajectory:
    """Integrate from `rho0` (vacuum if None) and return snapshots at the sample times.

    Raises TruncationOverflow when the guard band of the basis picks up more
    than ``basis.tail_tolerance`` population at any sample, and
    IntegrationFailure if the state blows up or refinement does not settle.
    """
    basis = config.basis
    if rho0 is None:
        rho0 = vacuum_dm(basis)
    _check_basis(rho0, basis)
    tail0 = tail_mass(rho0, min(GUARD_BAND, basis.n_max))
    if tail0 > basis.tail_tolerance:
        raise TruncationOverflow(f"initial state has tail mass {tail0:.3e}", time=config.t_start,
                                 tail=tail0)
    rhs = Liouvillian(params, train, basis)
    sc = config.step_control
    dt = rhs.stable_dt(sc.initial_dt)
    traj = _integrate_fixed(rho0, config, rhs, dt)
    if not sc.converge:
        return traj
    for _ in range(sc.max_halvings):
        dt *= 0.5
        finer = _integrate_fixed(rho0, config, rhs, dt)
        n_coarse = traj.mean_excitation()[-1]
        n_fine = finer.mean_excitation()[-1]
        traj = finer
        if abs(n_coarse - n_fine) <= sc.rel_tol * abs(n_fine) + sc.abs_tol:
            return traj
    raise IntegrationFailure(f"no step-size convergence after {sc.max_halvings} halvings (dt={dt:g})",
                             config.t_start)


def steady_state(params: ModelParams, basis: FockBasis, tol: float = 1e-8, t_max: float = 500.0,
                 check_interval: float = 1.0, initial_dt: float = 1e-3,
                 rho0: Optional[DensityMatrix] = None) -> DensityMatrix:
    """Integrate the continuously driven model from vacuum until ``max|d rho/dt| < tol``."""
    train = PulseTrain.continuous()
    rhs = Liouvillian(params, train, basis)
    dt = rhs.stable_dt(initial_dt)
    r = (rho0 or vacuum_dm(basis)).elements.copy()
    t = 0.0
    while True:
        rate = float(np.max(np.abs(rhs(r, t))))
        if rate < tol:
            rho = DensityMatrix(r, basis)
            tail = tail_mass(rho, min(GUARD_BAND, basis.n_max))
            if tail > basis.tail_tolerance:
                raise TruncationOverflow(f"steady state has tail mass {tail:.3e}", time=t, tail=tail)
            return rho
        if t >= t_max:
            raise NonStationary(f"max|d rho/dt| = {rate:.3e} > {tol:g} after t = {t:g}")
        r = _march(r, rhs, t, [t + check_interval], dt, basis, lambda *_: None)
        t += check_interval
        if not np.all(np.isfinite(r)):
            raise IntegrationFailure("non-finite density matrix", t - check_interval)
