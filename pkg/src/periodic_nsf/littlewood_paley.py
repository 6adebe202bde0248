"""Dyadic frequency decomposition and homogeneous Besov / Sobolev norms.

The bump is the classical one: ``phi(xi) = g(|xi|/2) - g(|xi|)`` where ``g`` is
a smooth monotone step equal to 1 on ``[0, 3/4]`` and 0 on ``[4/3, inf)``.  Then
``supp phi`` lies in the annulus ``3/4 <= |xi| <= 8/3`` and the block weights
``phi(2**-j xi)`` telescope, so a finite ladder ``j_min..j_max`` sums to
``g(2**-(j_max+1)|xi|) - g(2**-j_min |xi|)``, which is exactly one on the covered
band ``[(4/3) 2**j_min, (3/4) 2**(j_max+1)]``.

Norms follow the grid's quadrature convention (see :mod:`periodic_nsf.grid`), so
``||u||_{L2}^2 = L**-3 sum |F|^2``; the zero mode never enters a homogeneous norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid

__all__ = [
    "smooth_step",
    "bump",
    "DyadicLadder",
    "build_ladder",
    "covering_ladder",
    "dyadic_block",
    "low_cutoff",
    "block_norms",
    "besov_norm",
    "sobolev_norm",
    "commutator_block",
    "commutator_block_norms",
]

INNER, OUTER = 0.75, 4.0 / 3.0


def _h(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(r):
    """C-infinity step: 1 for ``r <= 3/4``, 0 for ``r >= 4/3``."""
    r = np.asarray(r, dtype=float)
    up = _h(OUTER - r)
    down = _h(r - INNER)
    den = up + down
    out = np.where(r <= INNER, 1.0, 0.0)
    mid = (r > INNER) & (r < OUTER)
    out = np.where(mid, up / np.where(mid, den, 1.0), out)
    return out


def bump(r):
    """Radial profile of phi, supported in ``[3/4, 8/3]``."""
    return smooth_step(np.asarray(r) / 2.0) - smooth_step(r)


@dataclass
class DyadicLadder:
    grid: Grid
    j_min: int
    j_max: int
    weights: dict = field(repr=False)

    @property
    def indices(self) -> range:
        return range(self.j_min, self.j_max + 1)

    @property
    def covered_band(self) -> tuple[float, float]:
        return OUTER * 2.0**self.j_min, INNER * 2.0 ** (self.j_max + 1)

    def partition_sum(self) -> np.ndarray:
        total = np.zeros(self.grid.spectral_shape)
        for j in self.indices:
            total += self.weights[j]
        return total

    def check_index(self, j: int) -> None:
        if not self.j_min <= j <= self.j_max:
            raise IndexError(f"block index {j} outside ladder range [{self.j_min}, {self.j_max}]")

    def uncovered_fraction(self, F: np.ndarray) -> float:
        """Fraction of the non-mean L2 energy lying outside the covered band."""
        g = self.grid
        lo, hi = self.covered_band
        nonzero = g.xi_abs > 0
        outside = nonzero & ((g.xi_abs < lo) | (g.xi_abs > hi))
        dens = np.sum(np.abs(np.reshape(F, (-1, *g.spectral_shape))) ** 2, axis=0)
        total = float(g.spectral_sum(dens * nonzero))
        if total == 0.0:
            return 0.0
        return float(g.spectral_sum(dens * outside)) / total


def _default_range(grid: Grid) -> tuple[int, int]:
    xi_min = grid.k0
    j_min = math.floor(math.log2(xi_min * 3.0 / 8.0)) - 1
    while (8.0 / 3.0) * 2.0**j_min < xi_min:
        j_min += 1
    limit = (2.0 / 3.0) * grid.k0 * grid.N / 2
    j_max = math.ceil(math.log2(limit / INNER)) + 1
    while INNER * 2.0**j_max > limit:
        j_max -= 1
    return j_min, j_max


def build_ladder(grid: Grid, j_min: int | None = None, j_max: int | None = None) -> DyadicLadder:
    """Dyadic weights on ``grid``.

    By default ``j_min`` is the first block reaching the smallest nonzero
    wavenumber and ``j_max`` the last block whose inner edge stays below two
    thirds of the Nyquist wavenumber.
    """
    d_min, d_max = _default_range(grid)
    j_min = d_min if j_min is None else int(j_min)
    j_max = d_max if j_max is None else int(j_max)
    if j_max - j_min + 1 < 2:
        raise ValueError(
            f"grid (L={grid.L}, N={grid.N}) too small to host two dyadic shells "
            f"(j range [{j_min}, {j_max}])"
        )
    r = grid.xi_abs
    weights = {j: smooth_step(r * 2.0 ** (-j - 1)) - smooth_step(r * 2.0**-j) for j in range(j_min, j_max + 1)}
    return DyadicLadder(grid=grid, j_min=j_min, j_max=j_max, weights=weights)


def covering_ladder(grid: Grid) -> DyadicLadder:
    """Ladder whose covered band contains every nonzero lattice wavenumber."""
    j_min, j_max = _default_range(grid)
    top = float(grid.xi_abs.max())
    while INNER * 2.0 ** (j_max + 1) < top:
        j_max += 1
    return build_ladder(grid, j_min, j_max)


def dyadic_block(F: np.ndarray, ladder: DyadicLadder, j: int) -> np.ndarray:
    ladder.check_index(j)
    return F * ladder.weights[j]


def low_cutoff(F: np.ndarray, ladder: DyadicLadder, j0: int) -> np.ndarray:
    """Sum of the blocks strictly below ``j0`` (``j_min <= j0 <= j_max + 1``)."""
    if not ladder.j_min <= j0 <= ladder.j_max + 1:
        raise IndexError(f"cutoff index {j0} outside [{ladder.j_min}, {ladder.j_max + 1}]")
    w = np.zeros(ladder.grid.spectral_shape)
    for j in range(ladder.j_min, j0):
        w += ladder.weights[j]
    return F * w


def block_norms(F: np.ndarray, ladder: DyadicLadder) -> np.ndarray:
    """L2 norms of every block; all leading axes of ``F`` are treated as components."""
    g = ladder.grid
    dens = np.sum(np.abs(np.reshape(F, (-1, *g.spectral_shape))) ** 2, axis=0)
    out = np.empty(len(ladder.indices))
    for n, j in enumerate(ladder.indices):
        out[n] = g.spectral_sum(dens * ladder.weights[j] ** 2) / g.volume
    return np.sqrt(out)


def _lr(values: np.ndarray, r: float) -> float:
    if math.isinf(r):
        return float(np.max(values)) if values.size else 0.0
    return float(np.sum(values**r) ** (1.0 / r))


def besov_norm(F: np.ndarray, ladder: DyadicLadder, s: float, r: float = 2.0, per_block: bool = False):
    """Homogeneous ``B^s_{2,r}`` norm: l^r over j of ``2**(j s) ||Delta_j F||_{L2}``."""
    if not np.isfinite(s):
        raise ValueError("regularity index must be finite")
    if not (r >= 1):
        raise ValueError("summability exponent must lie in [1, inf]")
    scaled = np.array([2.0 ** (j * s) for j in ladder.indices]) * block_norms(F, ladder)
    norm = _lr(scaled, r)
    return (norm, scaled) if per_block else norm


def sobolev_norm(grid: Grid, F: np.ndarray, k: float) -> float:
    """Homogeneous ``H^k`` norm (the mean mode is excluded)."""
    nz = grid.xi_sq > 0
    w = np.zeros(grid.spectral_shape)
    w[nz] = grid.xi_sq[nz] ** k
    dens = np.sum(np.abs(np.reshape(F, (-1, *grid.spectral_shape))) ** 2, axis=0)
    return float(np.sqrt(grid.spectral_sum(dens * w) / grid.volume))


def gradient(grid: Grid, F: np.ndarray) -> np.ndarray:
    """Spectral gradient; a new leading axis of length 3 is prepended."""
    return grid.ik * F[None]


def _commutator_parts(grid, v, u, k_axis):
    U = grid.forward(u)
    du = grid.inverse(grid.ik[k_axis] * U)
    prod = grid.forward(v * du) * grid.dealias_mask
    return U, prod


def commutator_block(grid: Grid, v: np.ndarray, u: np.ndarray, ladder: DyadicLadder, j: int, k_axis: int) -> np.ndarray:
    """``[Delta_j, v d_k] u`` in physical space, products dealiased."""
    ladder.check_index(j)
    U, prod = _commutator_parts(grid, v, u, k_axis)
    inner = grid.inverse(grid.ik[k_axis] * ladder.weights[j] * U)
    second = grid.forward(v * inner) * grid.dealias_mask
    return grid.inverse(ladder.weights[j] * prod - second)


def commutator_block_norms(grid: Grid, v: np.ndarray, u: np.ndarray, ladder: DyadicLadder, k_axis: int) -> np.ndarray:
    """L2 norms of ``[Delta_j, v d_k] u`` for every ladder index."""
    U, prod = _commutator_parts(grid, v, u, k_axis)
    out = np.empty(len(ladder.indices))
    for n, j in enumerate(ladder.indices):
        inner = grid.inverse(grid.ik[k_axis] * ladder.weights[j] * U)
        C = ladder.weights[j] * prod - grid.forward(v * inner) * grid.dealias_mask
        out[n] = math.sqrt(grid.l2_norm_sq(C))
    return out
