"""Periodic box discretisation with continuum-normalised Fourier transforms.

Spectral coefficients carry the quadrature weight of the continuum transform,

    F(xi) = dx**3 * sum_x exp(-i x.xi) u(x)  ~  int exp(-i x.xi) u(x) dx,

so that ``||u||_{L2}^2 = L**-3 * sum_xi |F(xi)|**2`` over the full lattice.  Fields
are stored on the real-to-complex half lattice (last axis ``0..N/2``); the
``weights`` array restores the full-lattice multiplicity of every stored mode.

Physical fields have shape ``(..., N, N, N)``; spectral fields ``(..., N, N, N//2+1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = ["Grid", "make_grid", "forward_transform", "inverse_transform", "dealias"]

_AXES = (-3, -2, -1)


@dataclass(frozen=True)
class Grid:
    """Uniform ``N**3`` grid on the torus ``[0, L)**3``."""

    L: float
    N: int

    def __post_init__(self):
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"box length must be positive, got L={self.L}")
        if int(self.N) != self.N or self.N % 2 or self.N < 8:
            raise ValueError(f"N must be an even integer >= 8, got N={self.N}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    # -- lattice bookkeeping -------------------------------------------------
    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def volume(self) -> float:
        return self.L**3

    @property
    def k0(self) -> float:
        """Lattice spacing ``2*pi/L`` (smallest nonzero |xi| along an axis)."""
        return 2.0 * np.pi / self.L

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.N, self.N, self.N // 2 + 1)

    @property
    def physical_shape(self) -> tuple[int, int, int]:
        return (self.N, self.N, self.N)

    @cached_property
    def integer_modes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable integer wavenumbers, components in ``(-N/2, N/2]``."""
        N = self.N
        k = np.fft.fftfreq(N, d=1.0 / N).astype(np.int64)
        k[N // 2] = N // 2
        kz = np.arange(N // 2 + 1, dtype=np.int64)
        return k[:, None, None], k[None, :, None], kz[None, None, :]

    @cached_property
    def xi(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical wavenumber components ``2*pi*k/L`` (broadcastable)."""
        return tuple(self.k0 * k.astype(float) for k in self.integer_modes)

    @cached_property
    def k_int_sq(self) -> np.ndarray:
        kx, ky, kz = self.integer_modes
        return kx**2 + ky**2 + kz**2

    @cached_property
    def xi_sq(self) -> np.ndarray:
        return self.k0**2 * self.k_int_sq.astype(float)

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(self.xi_sq)

    @cached_property
    def xi_hat(self) -> np.ndarray:
        """Unit wavevectors, shape ``(3, *spectral_shape)``; zero at xi = 0."""
        k = np.where(self.xi_abs > 0, self.xi_abs, 1.0)
        return np.stack([np.broadcast_to(c, self.spectral_shape) / k for c in self.xi])

    @cached_property
    def ik(self) -> np.ndarray:
        """Derivative multipliers ``i*xi`` with the Nyquist components removed."""
        N = self.N
        out = []
        for c, k in zip(self.xi, self.integer_modes):
            d = 1j * np.where(np.abs(k) == N // 2, 0.0, c)
            out.append(np.broadcast_to(d, self.spectral_shape))
        return np.stack(out)

    @cached_property
    def weights(self) -> np.ndarray:
        """Full-lattice multiplicity of each stored half-lattice mode (1 or 2)."""
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        w[..., -1] = 1.0
        return w

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep modes with every ``|k_i| <= N/3``."""
        cut = self.N / 3.0
        kx, ky, kz = self.integer_modes
        return (np.abs(kx) <= cut) & (np.abs(ky) <= cut) & (np.abs(kz) <= cut)

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.arange(self.N) * self.dx
        return x[:, None, None], x[None, :, None], x[None, None, :]

    @cached_property
    def negation_index(self) -> tuple[np.ndarray, np.ndarray]:
        idx = (-np.arange(self.N)) % self.N
        return idx, idx

    # -- transforms ----------------------------------------------------------
    def forward(self, f: np.ndarray) -> np.ndarray:
        return sfft.rfftn(f, axes=_AXES, workers=_workers()) * self.dx**3

    def inverse(self, F: np.ndarray) -> np.ndarray:
        return sfft.irfftn(F, s=self.physical_shape, axes=_AXES, workers=_workers()) / self.dx**3

    # -- spectral reductions -------------------------------------------------
    def spectral_sum(self, density: np.ndarray) -> np.ndarray:
        """Full-lattice sum of a real mode density given on the half lattice."""
        return np.sum(density * self.weights, axis=_AXES)

    def l2_norm_sq(self, F: np.ndarray) -> np.ndarray:
        """Squared L2 norm of the physical field with coefficients ``F``."""
        return self.spectral_sum(np.abs(F) ** 2) / self.volume

    def zeros(self, components: int | None = None, spectral: bool = True) -> np.ndarray:
        shape = self.spectral_shape if spectral else self.physical_shape
        if components is not None:
            shape = (components, *shape)
        return np.zeros(shape, dtype=complex if spectral else float)


_WORKERS = 1


def _workers() -> int:
    return _WORKERS


def set_threads(n: int) -> None:
    """Set the FFT worker count used by every transform in the package."""
    global _WORKERS
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _WORKERS = int(n)


def make_grid(L: float, N: int) -> Grid:
    return Grid(L=L, N=N)


def forward_transform(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Continuum-normalised forward transform of a real field."""
    f = np.asarray(f, dtype=float)
    if f.shape[-3:] != grid.physical_shape:
        raise ValueError(f"field shape {f.shape} does not match grid {grid.physical_shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("physical field contains non-finite samples")
    return grid.forward(f)


def hermitian_defect(grid: Grid, F: np.ndarray) -> float:
    """Relative violation of ``F(-k) = conj(F(k))`` on the self-conjugate planes."""
    ix, iy = grid.negation_index
    scale = float(np.max(np.abs(F))) if F.size else 0.0
    if scale == 0.0:
        return 0.0
    worst = 0.0
    for plane in (0, -1):
        P = F[..., plane]
        Pneg = P[..., ix, :][..., :, iy]
        worst = max(worst, float(np.max(np.abs(P - np.conj(Pneg)))))
    return worst / scale


def inverse_transform(grid: Grid, F: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Inverse transform; refuses coefficient sets that are not Hermitian."""
    F = np.asarray(F, dtype=complex)
    if F.shape[-3:] != grid.spectral_shape:
        raise ValueError(f"spectral shape {F.shape} does not match grid {grid.spectral_shape}")
    defect = hermitian_defect(grid, F)
    if defect > tol:
        raise ValueError(f"coefficients violate Hermitian symmetry (relative defect {defect:.3e})")
    return grid.inverse(F)


def dealias(grid: Grid, F: np.ndarray) -> np.ndarray:
    return F * grid.dealias_mask
