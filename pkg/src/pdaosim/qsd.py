"""Quantum-state-diffusion trajectories and their ensemble average.

Each step first applies the exact propagator ``exp(-i H dt)`` of the
Hamiltonian at the step midpoint, then an Euler-Maruyama increment of the
dissipative drift and the diffusion terms

    d psi = -1/2 sum_i (L_i+ L_i - 2 <L_i+> L_i + <L_i+><L_i>) psi dt
            + sum_i (L_i - <L_i>) psi d xi_i

followed by renormalization. The exact Hamiltonian factor keeps the scheme
stable for the stiff Kerr ladder (splittings ~ chi n_max^2) at dt = 1e-3.

Trajectory ``k`` of an ensemble draws its noise from
``SeedSequence(base_seed, spawn_key=(k,))``, so every trajectory is a pure
function of ``(base_seed, k)`` whatever the batching.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgument, TruncationOverflow
from .fock import GUARD_BAND, DensityMatrix, FockBasis, PureState, fock_state
from .model import ModelParams, PulseTrain, hamiltonian_parts, lindblad_ops, pulse_envelope

NOISE_CHUNK = 2048
DEFAULT_BATCH = 512


@dataclass(frozen=True)
class QsdConfig:
    n_trajectories: int
    sample_times: Sequence[float]
    basis: FockBasis
    dt: float = 1e-3
    base_seed: int = 0
    t_start: float = 0.0

    def __post_init__(self):
        times = np.asarray(self.sample_times, dtype=float)
        problems = []
        if self.n_trajectories < 1:
            problems.append("n_trajectories must be >= 1")
        if not self.dt > 0:
            problems.append("dt must be > 0")
        if self.base_seed < 0:
            problems.append("base_seed must be unsigned")
        if times.ndim != 1 or times.size == 0:
            problems.append("sample_times must be a non-empty list")
        elif np.any(np.diff(times) <= 0) or times[0] < self.t_start:
            problems.append("sample_times must be strictly increasing and >= t_start")
        if problems:
            raise InvalidArgument("; ".join(problems))
        object.__setattr__(self, "sample_times", tuple(float(t) for t in times))

    def step_indices(self) -> np.ndarray:
        # nearest step to each requested sample time
        return np.rint((np.asarray(self.sample_times) - self.t_start) / self.dt).astype(np.int64)


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean_density: list
    mean_excitation: np.ndarray
    stderr_excitation: np.ndarray
    n_trajectories: int

    def populations(self) -> np.ndarray:
        return np.array([np.real(np.diagonal(r.elements)) for r in self.mean_density])


class _Engine:
    """Advances a batch of state vectors (columns) by one step."""

    def __init__(self, params: ModelParams, train: PulseTrain, basis: FockBasis, dt: float):
        self.params, self.train, self.basis, self.dt = params, train, basis, dt
        self.diag, self.pump = hamiltonian_parts(params, basis)
        self.jumps = [L.elements for L in lindblad_ops(params, basis)]
        self.rates = [L.conj().T @ L for L in self.jumps]
        self.phase = np.exp(-1j * self.diag * dt)
        self._cached = None

    def propagator(self, t_mid: float):
        """``exp(-i H(t_mid) dt)``; a vector when H is diagonal, else a matrix."""
        g = self.params.drive * pulse_envelope(t_mid, self.train)
        if g * self.dt < 1e-18:
            return self.phase
        if self.train.monochromatic and self._cached is not None:
            return self._cached
        w, v = np.linalg.eigh(np.diag(self.diag) + g * self.pump)
        U = (v * np.exp(-1j * w * self.dt)) @ v.conj().T
        if self.train.monochromatic:
            self._cached = U
        return U

    def step(self, psi: np.ndarray, t: float, dxi: Optional[np.ndarray]) -> np.ndarray:
        """`psi` has shape (d, K); `dxi` has shape (K, n_jumps)."""
        U = self.propagator(t + 0.5 * self.dt)
        psi = U[:, None] * psi if U.ndim == 1 else U @ psi
        new = psi.copy()
        for i, (L, LdL) in enumerate(zip(self.jumps, self.rates)):
            Lpsi = L @ psi
            ell = np.einsum("ij,ij->j", psi.conj(), Lpsi)
            new -= (0.5 * self.dt) * (LdL @ psi - 2.0 * ell.conj() * Lpsi + (np.abs(ell) ** 2) * psi)
            if dxi is not None:
                new += (Lpsi - ell * psi) * dxi[:, i]
        return new / np.linalg.norm(new, axis=0)


def trajectory_rng(base_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(base_seed, spawn_key=(index,))))


class _BatchNoise:
    """Complex Wiener increments ``(g1 + i g2) sqrt(dt/2)``, one stream per trajectory."""

    def __init__(self, rngs, n_jumps: int, dt: float):
        self.rngs, self.n_jumps, self.scale = rngs, n_jumps, math.sqrt(0.5 * dt)
        self._buf, self._pos = None, NOISE_CHUNK

    def next(self) -> np.ndarray:
        if self._pos == NOISE_CHUNK:
            g = np.stack([rng.standard_normal((NOISE_CHUNK, self.n_jumps, 2)) for rng in self.rngs],
                         axis=1)
            self._buf = (g[..., 0] + 1j * g[..., 1]) * self.scale
            self._pos = 0
        out = self._buf[self._pos]
        self._pos += 1
        return out


def qsd_step(psi: PureState, t: float, dt: float, params: ModelParams, train: PulseTrain,
             noise: Optional[np.ndarray] = None, rng: Optional[np.random.Generator] = None) -> PureState:
    """Advance one state by one step.

    `noise` supplies the complex increments (one per Lindblad operator);
    otherwise they are drawn from `rng`.
    """
    if abs(psi.norm - 1.0) > 1e-8:
        raise InvalidArgument(f"state is not normalized (norm {psi.norm!r})")
    engine = _Engine(params, train, psi.basis, dt)
    n_jumps = len(engine.jumps)
    if noise is None:
        rng = rng if rng is not None else np.random.default_rng()
        g = rng.standard_normal((n_jumps, 2))
        noise = (g[:, 0] + 1j * g[:, 1]) * math.sqrt(0.5 * dt)
    noise = np.asarray(noise, dtype=complex).reshape(1, n_jumps)
    out = engine.step(psi.amplitudes[:, None], t, noise)[:, 0]
    return PureState(out, psi.basis)


def _run_batch(indices, config: QsdConfig, params, train, psi0: np.ndarray, on_sample):
    basis = config.basis
    engine = _Engine(params, train, basis, config.dt)
    noise = _BatchNoise([trajectory_rng(config.base_seed, k) for k in indices],
                        len(engine.jumps), config.dt)
    psi = np.repeat(psi0[:, None], len(indices), axis=1)
    targets = config.step_indices()
    top = basis.n_max - min(GUARD_BAND, basis.n_max) + 1
    step = 0
    for j, target in enumerate(targets):
        while step < target:
            psi = engine.step(psi, config.t_start + step * config.dt, noise.next())
            step += 1
        tail = np.sum(np.abs(psi[top:]) ** 2, axis=0)
        worst = int(np.argmax(tail))
        if tail[worst] > basis.tail_tolerance:
            raise TruncationOverflow(
                f"trajectory {indices[worst]} has tail mass {tail[worst]:.3e} at "
                f"t={config.sample_times[j]}; raise n_max",
                time=config.sample_times[j], tail=float(tail[worst]))
        on_sample(j, psi)


def _initial(config, psi0):
    if psi0 is None:
        return fock_state(config.basis, 0).amplitudes
    if psi0.basis.dimension != config.basis.dimension:
        raise InvalidArgument("initial state does not match the configured basis")
    if abs(psi0.norm - 1.0) > 1e-8:
        raise InvalidArgument(f"initial state is not normalized (norm {psi0.norm!r})")
    return psi0.amplitudes


def run_trajectory(seed: int, config: QsdConfig, params: ModelParams, train: PulseTrain,
                   psi0: Optional[PureState] = None, index: int = 0) -> list:
    """Single trajectory; states at the configured sample times.

    Identical to trajectory `index` of an ensemble with ``base_seed=seed``.
    """
    cfg = QsdConfig(1, config.sample_times, config.basis, config.dt, seed, config.t_start)
    out = []
    _run_batch([index], cfg, params, train, _initial(cfg, psi0),
               lambda j, psi: out.append(PureState(psi[:, 0].copy(), cfg.basis)))
    return out


def ensemble_average(config: QsdConfig, params: ModelParams, train: PulseTrain,
                     rho0_pure: Optional[PureState] = None, batch_size: int = DEFAULT_BATCH) -> EnsembleResult:
    """Average ``|psi_k><psi_k|`` over ``config.n_trajectories`` trajectories.

    Batches are reduced in trajectory order, so the result does not depend on
    how the work is split.
    """
    psi0 = _initial(config, rho0_pure)
    K = config.n_trajectories
    n_samples = len(config.sample_times)
    d = config.basis.dimension
    dens = np.zeros((n_samples, d, d), dtype=complex)
    n_per_traj = np.zeros((n_samples, K))
    levels = np.arange(d)

    for start in range(0, K, batch_size):
        idx = list(range(start, min(K, start + batch_size)))

        def on_sample(j, psi, idx=idx):
            dens[j] += psi @ psi.conj().T
            n_per_traj[j, idx[0]:idx[-1] + 1] = levels @ (np.abs(psi) ** 2)

        _run_batch(idx, config, params, train, psi0, on_sample)

    dens /= K
    mean_density = []
    for j in range(n_samples):
        r = 0.5 * (dens[j] + dens[j].conj().T)
        mean_density.append(DensityMatrix(r, config.basis))
    mean_n = n_per_traj.mean(axis=1)
    if K > 1:
        stderr = n_per_traj.std(axis=1, ddof=1) / math.sqrt(K)
    else:
        stderr = np.zeros(n_samples)
    return EnsembleResult(np.array(config.sample_times), mean_density, mean_n, stderr, K)
