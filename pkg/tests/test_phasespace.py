import math

import numpy as np
import pytest
from scipy.special import eval_genlaguerre, factorial

from pdaosim.errors import InvalidArgument
from pdaosim.fock import DensityMatrix, PureState, dm_from_pure, fock_state, make_basis, superposition, vacuum_dm
from pdaosim.phasespace import (
    WignerGrid, fidelity_pure, local_maxima, mean_excitation, negativity_volume, populations, symmetry_defect,
    wigner, wigner_fock_coeff,
)

B = make_basis(12)
POLAR = WignerGrid.polar()


def _coherent(beta, basis):
    n = np.arange(basis.dimension)
    amps = np.exp(-abs(beta) ** 2 / 2) * beta**n / np.sqrt(factorial(n))
    return PureState(amps, basis).normalized()


def test_populations_and_mean():
    rho = dm_from_pure(superposition(B, {0: 1, 2: 1}))
    np.testing.assert_allclose(populations(rho)[:3], [0.5, 0, 0.5])
    assert populations(vacuum_dm(B))[0] == 1
    assert mean_excitation(dm_from_pure(fock_state(B, 2))) == pytest.approx(2)
    assert mean_excitation(vacuum_dm(B)) == 0
    mix = DensityMatrix(np.diag([0.5, 0, 0.5] + [0] * 10), B)
    assert mean_excitation(mix) == pytest.approx(1)


def test_fidelity():
    psi = superposition(B, {0: 1, 2: 1})
    assert fidelity_pure(dm_from_pure(psi), psi) == pytest.approx(1)
    assert fidelity_pure(vacuum_dm(B), fock_state(B, 2)) == 0
    mix = DensityMatrix(np.diag([0.5, 0, 0.5] + [0] * 10), B)
    assert fidelity_pure(mix, psi) == pytest.approx(0.5)


def test_coefficient_examples():
    assert wigner_fock_coeff(0, 0, 0.0, 0.0) == pytest.approx(2 / np.pi, abs=1e-15)
    assert wigner_fock_coeff(1, 1, 0.0, 0.0) == pytest.approx(-2 / np.pi, abs=1e-15)
    assert wigner_fock_coeff(2, 0, 0.0, 1.3) == 0
    with pytest.raises(InvalidArgument):
        wigner_fock_coeff(5, 0, 0.1, 0.0, n_max=4)


@pytest.mark.parametrize("m, n", [(0, 0), (3, 1), (1, 3), (7, 2), (6, 6)])
def test_coefficient_closed_form(m, n):
    r, th = np.linspace(0, 3, 7), 0.37
    hi, lo = max(m, n), min(m, n)
    k = hi - lo
    ref = ((2 / np.pi) * (-1) ** lo * math.sqrt(math.factorial(lo) / math.factorial(hi)) * np.exp(1j * k * th)
           * (2 * r) ** k * np.exp(-2 * r**2) * eval_genlaguerre(lo, k, 4 * r**2))
    if m < n:
        ref = ref.conj()
    np.testing.assert_allclose(wigner_fock_coeff(m, n, r, th), ref, atol=1e-14)


def test_vacuum_field():
    f = wigner(vacuum_dm(B))
    assert f.values[100, 100] == pytest.approx(2 / np.pi, abs=1e-10)
    assert f.min_value >= 0
    assert negativity_volume(f) == 0


@pytest.mark.parametrize("n", [0, 1, 2])
def test_normalization(n):
    assert wigner(dm_from_pure(fock_state(B, n))).integral == pytest.approx(1, abs=1e-3)


def test_two_quantum_ring():
    f = wigner(dm_from_pure(fock_state(B, 2)), POLAR)
    assert f.values[0, 0] == pytest.approx(2 / np.pi, abs=1e-12)
    ring = f.values[:, 0]
    # W_22(r) = (2/pi) L_2(4r^2) e^{-2r^2} is negative between the two Laguerre roots
    assert ring.min() < -0.1
    assert negativity_volume(wigner(dm_from_pure(fock_state(B, 1)))) > 0


def test_full_double_sum_matches():
    rng = np.random.default_rng(1)
    b = make_basis(6)
    x = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
    r = x @ x.conj().T
    rho = DensityMatrix(r / np.trace(r), b)
    grid = WignerGrid.polar(r_max=2.5, n_r=11, n_theta=8)
    rr, tt = np.meshgrid(grid.rs, grid.thetas, indexing="ij")
    direct = sum(rho.elements[n, m] * wigner_fock_coeff(m, n, rr, tt) for m in range(7) for n in range(7))
    assert np.max(np.abs(direct.imag)) < 1e-12
    np.testing.assert_allclose(wigner(rho, grid).values, direct.real, atol=1e-12)


def test_parity_identity():
    p = np.random.default_rng(2).dirichlet(np.ones(13))
    f = wigner(DensityMatrix(np.diag(p), B), POLAR)
    assert f.values[0, 0] == pytest.approx((2 / np.pi) * np.sum((-1) ** np.arange(13) * p), abs=1e-12)


def test_symmetry_defect():
    p = np.random.default_rng(4).dirichlet(np.ones(13))
    assert symmetry_defect(wigner(DensityMatrix(np.diag(p), B), POLAR)) <= 1e-12
    even = dm_from_pure(superposition(B, {0: 1, 2: 0.5j, 4: -0.3}))
    assert symmetry_defect(wigner(even, POLAR)) <= 1e-12
    assert symmetry_defect(wigner(dm_from_pure(_coherent(1.0, B)), POLAR)) > 0.1
    with pytest.raises(InvalidArgument):
        symmetry_defect(wigner(vacuum_dm(B), WignerGrid.polar(n_theta=7)))
    with pytest.raises(InvalidArgument):
        symmetry_defect(wigner(vacuum_dm(B), WignerGrid.cartesian(x_min=-4, x_max=5)))


def test_coherent_peak_position():
    f = wigner(dm_from_pure(_coherent(1.0 + 0.5j, make_basis(20))))
    (x, y, w), = local_maxima(f)
    assert (x, y) == (pytest.approx(1.0), pytest.approx(0.5))
    assert w == pytest.approx(2 / np.pi, abs=1e-6)


def test_rejects_non_hermitian():
    r = np.zeros((13, 13), complex)
    r[0, 0], r[0, 1] = 1, 0.5
    with pytest.raises(InvalidArgument):
        wigner(DensityMatrix(r, B))


@pytest.mark.parametrize("kwargs", [dict(kind="cartesian", n_x=1), dict(kind="polar", r_max=-1.0),
                                    dict(kind="hex")])
def test_grid_validation(kwargs):
    kind = kwargs.pop("kind")
    with pytest.raises(InvalidArgument):
        WignerGrid(kind, **kwargs)
