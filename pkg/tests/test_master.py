import math

import numpy as np
import pytest

from pdaosim.errors import IntegrationFailure, InvalidArgument, NonStationary, TruncationOverflow
from pdaosim.fock import DensityMatrix, dm_from_pure, fock_state, make_basis, superposition, vacuum_dm
from pdaosim.master import (
    EvolutionConfig, Liouvillian, StepControl, integrate_master, liouvillian_apply, steady_state,
)
from pdaosim.model import ModelParams, PulseTrain, hamiltonian_at, lindblad_ops

PULSED = PulseTrain(t0=1.0, width=0.5, period=4.0)


def _dense_rhs(rho, t, params, train, basis):
    """Textbook Lindblad right-hand side built from explicit operator products."""
    h = hamiltonian_at(t, params, train, basis).elements
    out = -1j * (h @ rho - rho @ h)
    for op in lindblad_ops(params, basis):
        L = op.elements
        LdL = L.conj().T @ L
        out += L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def _random_dm(rng, basis):
    x = rng.normal(size=(basis.dimension,) * 2) + 1j * rng.normal(size=(basis.dimension,) * 2)
    r = x @ x.conj().T
    return DensityMatrix(r / np.trace(r), basis)


def test_vacuum_is_fixed_point():
    b = make_basis(6)
    d = liouvillian_apply(vacuum_dm(b), 0.0, ModelParams(0, 0, 0), PulseTrain.continuous(), b)
    assert np.max(np.abs(d)) == 0


def test_single_quantum_decay_rate():
    b = make_basis(4)
    d = liouvillian_apply(dm_from_pure(fock_state(b, 1)), 0.0, ModelParams(0, 0, 0), PulseTrain.continuous(), b)
    assert d[1, 1].real == pytest.approx(-1)
    assert d[0, 0].real == pytest.approx(1)


@pytest.mark.parametrize("nbath", [0.0, 0.3, 1.0])
def test_matches_dense_formula_and_preserves_trace(nbath):
    rng = np.random.default_rng(7)
    b = make_basis(9)
    params = ModelParams(-2.0, 5.0, 10.0, phi=0.7, gamma=1.3, nbath=nbath)
    for t in (0.0, 1.1, 2.9):
        rho = _random_dm(rng, b)
        fast = liouvillian_apply(rho, t, params, PULSED, b)
        np.testing.assert_allclose(fast, _dense_rhs(rho.elements, t, params, PULSED, b), atol=1e-11)
        assert abs(np.trace(fast)) < 1e-12


def test_stable_step_is_a_halving_of_initial_dt():
    b = make_basis(30)
    lv = Liouvillian(ModelParams(-2.0, 5.0, 10.0), PULSED, b)
    dt = lv.stable_dt(1e-3)
    assert dt * lv.spectral_bound() <= 2.5
    assert math.log2(1e-3 / dt) == int(math.log2(1e-3 / dt))


@pytest.fixture(scope="module")
def decay_traj():
    b = make_basis(20)
    cfg = EvolutionConfig(0.0, 5.0, np.linspace(0, 5, 51), b)
    rho0 = dm_from_pure(superposition(b, {1: 1.0, 3: 0.5j, 4: 0.2}))
    return integrate_master(rho0, cfg, ModelParams(0.0, 0.0, 0.0), PulseTrain.continuous())


def test_undriven_mean_excitation_decays_exponentially(decay_traj):
    n = decay_traj.mean_excitation()
    np.testing.assert_allclose(n, n[0] * np.exp(-decay_traj.times), rtol=1e-6)


def test_diagnostics(decay_traj):
    assert np.max(decay_traj.trace_error) <= 1e-8
    assert np.max(decay_traj.hermiticity_error) <= 1e-12
    assert np.min(decay_traj.min_eigenvalue) >= -1e-6
    assert decay_traj.populations().shape == (51, 21)


def test_samples_land_on_requested_times():
    b = make_basis(8)
    times = [0.0, 0.013, 0.5, 1.0]
    traj = integrate_master(None, EvolutionConfig(0.0, 1.0, times, b), ModelParams(0, 0, 0), PulseTrain.continuous())
    assert list(traj.times) == times


def test_step_halving_changes_little():
    b = make_basis(20)
    params = ModelParams(-2.0, 5.0, 10.0)
    train = PulseTrain(t0=1.0, width=0.5, period=4.0)
    dt = Liouvillian(params, train, b).stable_dt(1e-3)
    coarse = integrate_master(None, EvolutionConfig(0.0, 2.0, [2.0], b, StepControl(dt)), params, train)
    fine = integrate_master(None, EvolutionConfig(0.0, 2.0, [2.0], b, StepControl(dt / 2)), params, train)
    assert fine.dt == pytest.approx(coarse.dt / 2)
    n_c, n_f = coarse.mean_excitation()[-1], fine.mean_excitation()[-1]
    assert abs(n_c - n_f) <= 1e-6 * n_f


def test_converge_loop_returns_refined_run():
    b = make_basis(16)
    cfg = EvolutionConfig(0.0, 1.0, [0.5, 1.0], b, StepControl(1e-2, converge=True))
    params = ModelParams(-2.0, 5.0, 1.0)
    traj = integrate_master(None, cfg, params, PulseTrain.continuous())
    assert traj.dt < Liouvillian(params, PulseTrain.continuous(), b).stable_dt(1e-2)


def test_truncation_overflow():
    b = make_basis(6)
    cfg = EvolutionConfig(0.0, 3.0, [1.0, 2.0, 3.0], b)
    with pytest.raises(TruncationOverflow) as err:
        integrate_master(None, cfg, ModelParams(0.0, 0.0, 2.0), PulseTrain.continuous())
    assert err.value.time is not None


def test_basis_mismatch():
    with pytest.raises(InvalidArgument):
        integrate_master(vacuum_dm(make_basis(4)), EvolutionConfig(0.0, 1.0, [1.0], make_basis(5)),
                         ModelParams(0, 0, 0), PulseTrain.continuous())


def test_bad_evolution_config():
    b = make_basis(4)
    with pytest.raises(InvalidArgument):
        EvolutionConfig(1.0, 0.0, [0.5], b)
    with pytest.raises(InvalidArgument):
        EvolutionConfig(0.0, 1.0, [0.5, 0.2], b)
    with pytest.raises(InvalidArgument):
        EvolutionConfig(0.0, 1.0, [2.0], b)


def test_integration_failure_carries_last_good_time():
    err = IntegrationFailure("boom", last_good_time=1.5)
    assert err.last_good_time == 1.5


def test_steady_state_undriven_is_vacuum():
    b = make_basis(6)
    rho = steady_state(ModelParams(0, 0, 0), b, rho0=dm_from_pure(fock_state(b, 1)), t_max=60)
    assert rho.elements[0, 0].real == pytest.approx(1, abs=1e-8)


def test_steady_state_non_stationary():
    b = make_basis(6)
    with pytest.raises(NonStationary):
        steady_state(ModelParams(0, 0, 0), b, rho0=dm_from_pure(fock_state(b, 2)), t_max=1.0)


def test_thermal_fixed_point():
    b = make_basis(20)
    rho = steady_state(ModelParams(0.0, 0.0, 0.0, nbath=0.5), b, tol=1e-10)
    pops = np.real(np.diagonal(rho.elements))
    assert pops @ np.arange(21) == pytest.approx(0.5, abs=1e-4)
    # detailed balance gives a geometric ladder with ratio N / (N + 1)
    np.testing.assert_allclose(pops[1:6] / pops[:5], 1 / 3, rtol=1e-6)


def test_fig3_guard_band_at_fifty_levels():
    b = make_basis(50)
    params = ModelParams(-2.0, 5.0, 10.0, phi=math.pi)
    train = PulseTrain(t0=4.0, width=0.5, period=4.0)
    traj = integrate_master(None, EvolutionConfig(0.0, 5.0, np.linspace(3.0, 5.0, 11), b), params, train)
    assert np.max(traj.tail_mass) < 1e-6
