"""Observables and Wigner functions of a single-mode state.

Phase-space convention: ``alpha = x + i y``, the vacuum Wigner function is
``(2/pi) exp(-2|alpha|^2)`` and ``integral W dx dy = 1``. The field is
assembled from the Fock matrix elements, ``W = sum_nm rho_nm W_mn``, with

    W_mn(alpha) = (2/pi) (-1)^n sqrt(n!/m!) (2 alpha)^(m-n) e^{-2|alpha|^2}
                  L_n^(m-n)(4|alpha|^2),      m >= n,

and ``W_nm = conj(W_mn)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from .errors import InvalidArgument
from .fock import DensityMatrix, PureState

IMAG_TOLERANCE = 1e-10


@dataclass(frozen=True)
class WignerGrid:
    kind: str
    x_min: float = 0.0
    x_max: float = 0.0
    y_min: float = 0.0
    y_max: float = 0.0
    n_x: int = 0
    n_y: int = 0
    r_max: float = 0.0
    n_r: int = 0
    n_theta: int = 0

    def __post_init__(self):
        if self.kind == "cartesian":
            if self.n_x < 2 or self.n_y < 2:
                raise InvalidArgument("cartesian grid needs at least 2 points per axis")
            if not (self.x_max > self.x_min and self.y_max > self.y_min):
                raise InvalidArgument("cartesian grid extents must be positive")
        elif self.kind == "polar":
            if self.n_r < 2 or self.n_theta < 2:
                raise InvalidArgument("polar grid needs at least 2 points per axis")
            if not self.r_max > 0:
                raise InvalidArgument("polar grid needs r_max > 0")
        else:
            raise InvalidArgument(f"unknown grid kind {self.kind!r}")

    @classmethod
    def cartesian(cls, x_min=-5.0, x_max=5.0, y_min=-5.0, y_max=5.0, n_x=201, n_y=201):
        return cls("cartesian", x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max, n_x=n_x, n_y=n_y)

    @classmethod
    def polar(cls, r_max=5.0, n_r=101, n_theta=128):
        return cls("polar", r_max=r_max, n_r=n_r, n_theta=n_theta)

    @property
    def xs(self):
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def ys(self):
        return np.linspace(self.y_min, self.y_max, self.n_y)

    @property
    def rs(self):
        return np.linspace(0.0, self.r_max, self.n_r)

    @property
    def thetas(self):
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    def points(self) -> np.ndarray:
        """Complex phase-space points; rows are y (cartesian) or r (polar)."""
        if self.kind == "cartesian":
            return self.xs[None, :] + 1j * self.ys[:, None]
        return self.rs[:, None] * np.exp(1j * self.thetas[None, :])

    def integrate(self, values: np.ndarray) -> float:
        if self.kind == "cartesian":
            return float(np.trapezoid(np.trapezoid(values, self.xs, axis=1), self.ys))
        # periodic in theta: plain rectangle rule is spectrally accurate
        ring = values.sum(axis=1) * (2.0 * np.pi / self.n_theta)
        return float(np.trapezoid(ring * self.rs, self.rs))

    def metadata(self) -> dict:
        if self.kind == "cartesian":
            return {"kind": "cartesian", "x_min": self.x_min, "x_max": self.x_max, "y_min": self.y_min,
                    "y_max": self.y_max, "n_x": self.n_x, "n_y": self.n_y}
        return {"kind": "polar", "r_max": self.r_max, "n_r": self.n_r, "n_theta": self.n_theta}


@dataclass
class WignerField:
    grid: WignerGrid
    values: np.ndarray
    min_value: float
    integral: float
    imag_residue: float = 0.0


def populations(rho: DensityMatrix) -> np.ndarray:
    return np.real(np.diagonal(rho.elements)).copy()


def mean_excitation(rho: DensityMatrix) -> float:
    n = np.arange(rho.basis.dimension)
    value = complex(np.diagonal(rho.elements) @ n)
    if abs(value.imag) > 1e-10:
        raise InvalidArgument(f"<n> has imaginary part {value.imag:.3e}; rho is not Hermitian")
    return value.real


def fidelity_pure(rho: DensityMatrix, psi: PureState) -> float:
    """``<psi|rho|psi>``."""
    if abs(psi.norm - 1.0) > 1e-8:
        raise InvalidArgument(f"target state is not normalized (norm {psi.norm!r})")
    c = psi.amplitudes
    return float(np.real(c.conj() @ rho.elements @ c))


def _laguerre_step(j, k, x, l_prev, l_cur):
    # L_{j+1}^(k) from L_j^(k) and L_{j-1}^(k)
    return ((2 * j + 1 + k - x) * l_cur - (j + k) * l_prev) / (j + 1)


def wigner_fock_coeff(m: int, n: int, r, theta, n_max: Optional[int] = None):
    """Coefficient ``W_mn`` at polar point(s) ``(r, theta)``."""
    if m < 0 or n < 0 or (n_max is not None and (m > n_max or n > n_max)):
        raise InvalidArgument(f"Fock indices ({m}, {n}) out of range")
    if m < n:
        return np.conj(wigner_fock_coeff(n, m, r, theta))
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    k = m - n
    x = 4.0 * r**2
    l_prev, l_cur = np.zeros_like(x), np.ones_like(x)
    for j in range(n):
        l_prev, l_cur = l_cur, _laguerre_step(j, k, x, l_prev, l_cur)
    # sqrt(n!/m!) as a product, no factorials
    ratio = 1.0
    for j in range(n + 1, m + 1):
        ratio /= math.sqrt(j)
    sign = -1.0 if n % 2 else 1.0
    return ((2.0 / np.pi) * sign * ratio * np.exp(1j * k * theta) * (2.0 * r) ** k
            * np.exp(-2.0 * r**2) * l_cur)


def wigner(rho: DensityMatrix, grid: Optional[WignerGrid] = None) -> WignerField:
    """Wigner function of `rho` sampled on `grid` (default: [-5, 5]^2, 201 x 201)."""
    grid = grid or WignerGrid.cartesian()
    alpha = grid.points()
    x = 4.0 * np.abs(alpha) ** 2
    gauss = (2.0 / np.pi) * np.exp(-0.5 * x)
    r = rho.elements
    d = rho.basis.dimension
    total = np.zeros(alpha.shape, dtype=complex)
    # (2 alpha)^k / sqrt(k!) carried along the diagonal offset k
    power = np.ones_like(alpha)
    for k in range(d):
        if k > 0:
            power = power * (2.0 * alpha) / math.sqrt(k)
        upper = np.diagonal(r, k)      # rho_{n, n+k}
        lower = np.diagonal(r, -k)     # rho_{n+k, n}
        if not (np.any(upper) or np.any(lower)):
            continue
        acc = np.zeros(alpha.shape, dtype=complex)
        acc_conj = np.zeros(alpha.shape, dtype=complex)
        l_prev, l_cur = np.zeros_like(x), np.ones_like(x)
        scale = 1.0  # (-1)^n sqrt(n! k! / (n+k)!)
        for n in range(d - k):
            if n > 0:
                l_prev, l_cur = l_cur, _laguerre_step(n - 1, k, x, l_prev, l_cur)
                scale *= -math.sqrt(n / (n + k))
            if upper[n] != 0 or lower[n] != 0:
                acc += upper[n] * scale * l_cur
                if k > 0:
                    acc_conj += lower[n] * scale * l_cur
        term = gauss * power * acc
        total += term
        if k > 0:
            total += np.conj(gauss * power) * acc_conj
    residue = float(np.max(np.abs(total.imag)))
    if residue > IMAG_TOLERANCE:
        raise InvalidArgument(f"Wigner function has imaginary residue {residue:.3e}; rho is not Hermitian")
    values = total.real
    return WignerField(grid, values, float(values.min()), grid.integrate(values), residue)


def symmetry_defect(field: WignerField) -> float:
    """``max |W(r, theta + pi) - W(r, theta)|`` over the grid."""
    g = field.grid
    if g.kind == "polar":
        if g.n_theta % 2:
            raise InvalidArgument("polar symmetry check needs an even number of angles")
        return float(np.max(np.abs(np.roll(field.values, -g.n_theta // 2, axis=1) - field.values)))
    if not (np.isclose(g.x_min, -g.x_max) and np.isclose(g.y_min, -g.y_max)):
        raise InvalidArgument("cartesian grid is not point-symmetric about the origin")
    return float(np.max(np.abs(field.values[::-1, ::-1] - field.values)))


def negativity_volume(field: WignerField) -> float:
    """Quadrature of ``max(0, -W)``."""
    return field.grid.integrate(np.maximum(0.0, -field.values))


def local_maxima(field: WignerField, rel_height: float = 0.1) -> list:
    """Interior local maxima above ``rel_height * max W`` as ``(x, y, W)`` tuples."""
    g = field.grid
    if g.kind != "cartesian":
        raise InvalidArgument("local maxima are located on cartesian grids")
    v = field.values
    peak = ndimage.maximum_filter(v, size=3, mode="constant", cval=-np.inf)
    mask = (v == peak) & (v > rel_height * v.max())
    mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = False
    iy, ix = np.nonzero(mask)
    found = [(float(g.xs[i]), float(g.ys[j]), float(v[j, i])) for j, i in zip(iy, ix)]
    return sorted(found, key=lambda p: -p[2])
