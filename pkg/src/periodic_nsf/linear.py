"""Linearisation about the rest state ``(rho_inf, 0, theta_inf)``.

The symbol acting on ``U = (sqrt(p1) sigma, m, alpha E)`` is

    A(xi) = [[0,               -i c xi^T,                          0        ],
             [-i c xi,  -nu |xi|^2 I - lam xi xi^T,          -i a xi    ],
             [0,               -i a xi^T,                    -b |xi|^2  ]]

with ``c = sqrt(p1)``, ``nu = mu/rho_inf``, ``lam = (mu + mu')/rho_inf``,
``a = p2/rho_inf sqrt(theta_inf/c_V)`` and ``b = kappa/(c_V rho_inf)``.  Writing
``A = -i S - D`` with ``S`` real symmetric and ``D`` positive semidefinite shows
``Re <A u, u> <= 0``.

Velocity components orthogonal to ``xi`` decouple (eigenvalue ``-nu |xi|^2``,
multiplicity two); the rest is a 3x3 block in ``(U_1, xi_hat.m, U_5)`` that
depends on ``|xi|`` only.  All lattice-wide operators exploit that split and
evaluate the 3x3 block once per distinct radius.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numpy.polynomial import legendre

from .grid import Grid
from .littlewood_paley import DyadicLadder, low_cutoff
from .model import PhysicalParams

__all__ = [
    "symbol_matrix",
    "longitudinal_blocks",
    "longitudinal_cubic",
    "ModeSystem",
    "eigendecompose",
    "LatticePropagator",
    "semigroup_apply",
    "SpectralBounds",
    "dispersion_relation",
    "spectral_bounds_scan",
    "small_wavenumber_limits",
    "RadialProfile",
    "continuum_decay_probe",
    "high_freq_decay_probe",
]


def symbol_matrix(xi, params: PhysicalParams) -> np.ndarray:
    xi = np.asarray(xi, dtype=float).reshape(3)
    k2 = float(xi @ xi)
    c = math.sqrt(params.p1)
    a = params.coupling
    A = np.zeros((5, 5), dtype=complex)
    A[0, 1:4] = -1j * c * xi
    A[1:4, 0] = -1j * c * xi
    A[1:4, 1:4] = -(params.mu / params.rho_inf) * k2 * np.eye(3) - (
        (params.mu + params.mu_prime) / params.rho_inf
    ) * np.outer(xi, xi)
    A[1:4, 4] = -1j * a * xi
    A[4, 1:4] = -1j * a * xi
    A[4, 4] = -params.thermal_diffusivity * k2
    return A


def longitudinal_blocks(k, params: PhysicalParams) -> np.ndarray:
    """3x3 blocks on ``(U_1, xi_hat.m, U_5)`` for radii ``k`` (any shape)."""
    k = np.asarray(k, dtype=float)
    c = math.sqrt(params.p1)
    a = params.coupling
    B = np.zeros((*k.shape, 3, 3), dtype=complex)
    B[..., 0, 1] = B[..., 1, 0] = -1j * c * k
    B[..., 1, 1] = -params.longitudinal_viscosity * k**2
    B[..., 1, 2] = B[..., 2, 1] = -1j * a * k
    B[..., 2, 2] = -params.thermal_diffusivity * k**2
    return B


def shear_rate(k, params: PhysicalParams):
    return -(params.mu / params.rho_inf) * np.asarray(k, dtype=float) ** 2


def longitudinal_cubic(k: float, params: PhysicalParams) -> np.ndarray:
    """Monic characteristic polynomial of the 3x3 block, highest power first."""
    nu = params.longitudinal_viscosity
    b = params.thermal_diffusivity
    c2 = params.p1
    a2 = params.coupling**2
    k2 = k * k
    return np.array([1.0, (nu + b) * k2, nu * b * k2 * k2 + (a2 + c2) * k2, c2 * b * k2 * k2])


def _sort_key(lams):
    return np.lexsort((np.imag(lams), np.real(lams)))


# ---------------------------------------------------------------------------
# single-mode eigen-structure
# ---------------------------------------------------------------------------
@dataclass
class ModeSystem:
    xi: np.ndarray
    A_hat: np.ndarray
    lambdas: np.ndarray
    multiplicities: np.ndarray
    projections: list | None
    degenerate: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    def propagator(self, t: float) -> np.ndarray:
        """``exp(t A_hat)``; spectral resolution when available."""
        if t not in self._cache:
            if t == 0:
                P = np.eye(5, dtype=complex)
            elif self.projections is not None:
                P = sum(np.exp(t * lam) * Pn for lam, Pn in zip(self.lambdas, self.projections))
            else:
                P = scipy.linalg.expm(t * self.A_hat)
            self._cache[t] = P
        return self._cache[t]


def _adapted_basis(xi_hat):
    B = np.zeros((5, 3))
    B[0, 0] = 1.0
    B[1:4, 1] = xi_hat
    B[4, 2] = 1.0
    return B


def eigendecompose(xi, params: PhysicalParams, collision_tol: float = 1e-12) -> ModeSystem:
    xi = np.asarray(xi, dtype=float).reshape(3)
    k = float(np.linalg.norm(xi))
    if k == 0:
        raise ValueError("eigen-structure undefined at xi = 0 (the symbol vanishes)")
    xh = xi / k
    A = symbol_matrix(xi, params)
    L = longitudinal_blocks(k, params)
    w, vl, vr = scipy.linalg.eig(L, left=True, right=True)
    scale = max(1.0, float(np.max(np.abs(w))))
    gaps = [abs(w[i] - w[j]) for i in range(3) for j in range(i + 1, 3)]
    shear = complex(shear_rate(k, params))
    P_shear = np.zeros((5, 5), dtype=complex)
    P_shear[1:4, 1:4] = np.eye(3) - np.outer(xh, xh)
    lams = np.concatenate([w, [shear]])
    mult = np.array([1, 1, 1, 2])
    if min(gaps) <= collision_tol * scale:
        order = _sort_key(lams)
        return ModeSystem(xi, A, lams[order], mult[order], None, degenerate=True)
    B = _adapted_basis(xh)
    projs = []
    for n in range(3):
        r = vr[:, n]
        l_ = vl[:, n]
        P3 = np.outer(r, l_.conj()) / (l_.conj() @ r)
        projs.append(B @ P3 @ B.T)
    projs.append(P_shear)
    order = _sort_key(lams)
    return ModeSystem(xi, A, lams[order], mult[order], [projs[i] for i in order])


# ---------------------------------------------------------------------------
# lattice operators
# ---------------------------------------------------------------------------
def _phi_scalar(z: np.ndarray):
    """``exp(z), phi1(z), phi2(z)`` with a Taylor branch for ``|z| < 1e-3``."""
    z = np.asarray(z, dtype=complex)
    e = np.exp(z)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    phi1 = np.where(small, 0, (e - 1) / zs)
    phi2 = np.where(small, 0, (e - 1 - zs) / zs**2)
    if np.any(small):
        zz = z[small]
        t1 = np.zeros_like(zz)
        t2 = np.zeros_like(zz)
        term1 = np.ones_like(zz)  # z^n / (n+1)!
        term2 = 0.5 * np.ones_like(zz)  # z^n / (n+2)!
        for n in range(6):
            t1 += term1
            t2 += term2
            term1 = term1 * zz / (n + 2)
            term2 = term2 * zz / (n + 3)
        phi1 = phi1.astype(complex)
        phi2 = phi2.astype(complex)
        phi1[small] = t1
        phi2[small] = t2
    return e, phi1, phi2


def _block_phi(hL: np.ndarray, order: int):
    """``[exp(X), phi1(X), phi2(X)][:order+1]`` for a stack of 3x3 blocks via one augmented exponential."""
    n = hL.shape[0]
    size = 3 * (order + 1)
    M = np.zeros((n, size, size), dtype=complex)
    M[:, :3, :3] = hL
    for q in range(order):
        M[:, 3 * q : 3 * q + 3, 3 * q + 3 : 3 * q + 6] = np.eye(3)
    X = scipy.linalg.expm(M)
    return [X[:, :3, 3 * q : 3 * q + 3] for q in range(order + 1)]


class LatticePropagator:
    """Per-mode functions of ``h A(xi)`` on a grid.

    ``order=0`` builds ``exp(hA)`` only; ``order=2`` also ``phi1(hA)`` and ``phi2(hA)``.
    """

    def __init__(self, grid: Grid, params: PhysicalParams, h: float, order: int = 0):
        self.grid, self.params, self.h, self.order = grid, params, float(h), order
        uniq, inv = np.unique(grid.k_int_sq, return_inverse=True)
        inv = inv.reshape(grid.spectral_shape)
        radii = grid.k0 * np.sqrt(uniq.astype(float))
        blocks = _block_phi(self.h * longitudinal_blocks(radii, params), order)
        self._long = [np.moveaxis(b[inv], (-2, -1), (0, 1)) for b in blocks]
        e, p1, p2 = _phi_scalar(self.h * shear_rate(grid.xi_abs, params))
        self._shear = [e, p1, p2][: order + 1]
        self._xh = grid.xi_hat

    def _apply(self, U: np.ndarray, q: int) -> np.ndarray:
        xh = self._xh
        m = U[1:4]
        mL = np.sum(xh * m, axis=0)
        mT = m - xh * mL
        w = (U[0], mL, U[4])
        M = self._long[q]
        out = np.empty_like(U, dtype=complex)
        new = [M[i, 0] * w[0] + M[i, 1] * w[1] + M[i, 2] * w[2] for i in range(3)]
        out[0] = new[0]
        out[4] = new[2]
        out[1:4] = xh * new[1] + self._shear[q] * mT
        return out

    def exp(self, U):
        return self._apply(U, 0)

    def phi1(self, U):
        return self._apply(U, 1)

    def phi2(self, U):
        return self._apply(U, 2)


def semigroup_apply(grid: Grid, U: np.ndarray, t: float, params: PhysicalParams) -> np.ndarray:
    """``exp(tA) U`` mode by mode (scaling-and-squaring Pade on each distinct radius)."""
    if t < 0:
        raise ValueError("semigroup only defined for t >= 0")
    if t == 0:
        return np.array(U, dtype=complex, copy=True)
    return LatticePropagator(grid, params, t).exp(U)


# ---------------------------------------------------------------------------
# spectral bounds
# ---------------------------------------------------------------------------
@dataclass
class SpectralBounds:
    r0: float
    beta: float
    c_low: float
    c_high: float
    band_factor: float = 10.0

    def as_dict(self) -> dict:
        return {"r0": self.r0, "beta": self.beta, "c_low": self.c_low, "c_high": self.c_high, "band_factor": self.band_factor}


def dispersion_relation(params: PhysicalParams, radii) -> np.ndarray:
    """Eigenvalues ``(len(radii), 4)``: three longitudinal and the shear root, sorted by (Re, Im)."""
    radii = np.asarray(radii, dtype=float)
    lam = np.concatenate(
        [np.linalg.eigvals(longitudinal_blocks(radii, params)), shear_rate(radii, params)[:, None].astype(complex)],
        axis=1,
    )
    for row in lam:
        row[:] = row[_sort_key(row)]
    return lam


def spectral_bounds_scan(params: PhysicalParams, radii, band_factor: float = 10.0, table: bool = False):
    radii = np.sort(np.asarray(radii, dtype=float))
    if radii.size < 2 or radii[0] <= 0:
        raise ValueError("radii must be positive and contain at least two points")
    lam = dispersion_relation(params, radii)
    worst = int(np.argmax(lam.real.max(axis=1)))
    if lam.real.max() > 1e-10:
        raise ValueError(f"dissipativity violated: Re lambda = {lam.real.max():.3e} at |xi| = {radii[worst]:.6g}")
    ratios = -lam.real / radii[:, None] ** 2
    i0 = -1
    lo, hi = np.inf, 0.0
    for i in range(radii.size):
        lo = min(lo, ratios[i].min())
        hi = max(hi, ratios[i].max())
        if lo <= 0 or hi / lo > band_factor:
            break
        i0 = i
    if i0 < 0:
        raise ValueError("no scan radius satisfies the low-frequency band condition")
    r0 = float(radii[i0])
    above = radii > r0
    rows = lam[above] if np.any(above) else lam[i0 : i0 + 1]
    beta = float(-rows.real.max())
    c_low = float(ratios[: i0 + 1].min())
    c_high = float(ratios[: i0 + 1].max())
    if not (beta > 0 and c_low > 0):
        raise ValueError(f"spectral bounds degenerate: beta={beta}, c_low={c_low}")
    bounds = SpectralBounds(r0, beta, c_low, c_high, band_factor)
    return (bounds, lam, ratios) if table else bounds


def small_wavenumber_limits(params: PhysicalParams) -> np.ndarray:
    """Limits of ``-Re lambda/|xi|^2`` as ``|xi| -> 0`` by first-order perturbation theory.

    With ``A_L = -i k S - k^2 D`` the limits are ``r^T D r`` over the orthonormal
    eigenvectors ``r`` of ``S``; the shear branch contributes ``mu/rho_inf``.
    """
    c = math.sqrt(params.p1)
    a = params.coupling
    S = np.array([[0, c, 0], [c, 0, a], [0, a, 0]], dtype=float)
    D = np.diag([0.0, params.longitudinal_viscosity, params.thermal_diffusivity])
    _, vecs = np.linalg.eigh(S)
    vals = [float(v @ D @ v) for v in vecs.T] + [params.mu / params.rho_inf]
    return np.sort(np.array(vals))


# ---------------------------------------------------------------------------
# continuum probe
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RadialProfile:
    """Radially symmetric datum ``V(xi) = k**exponent exp(-k^2/(2 cutoff^2)) w(xi_hat)``.

    ``components`` gives the amplitudes along ``(U_1, xi_hat.m, transverse m, U_5)``.
    """

    exponent: float
    cutoff: float = 1.0
    components: tuple = (1.0, 1.0, 1.0, 1.0)

    @classmethod
    def power_law(cls, s0: float, margin: float = 0.01, cutoff: float = 1.0, components=(1.0, 1.0, 1.0, 1.0)):
        """Datum in the ``B^{s0}_{2,inf}`` class: ``||Delta_j V|| ~ 2**(-j (s0 - margin))`` at low frequency.

        ``margin > 0`` keeps ``||V||_{H^{s0}}`` finite.
        """
        return cls(exponent=-s0 - 1.5 + margin, cutoff=cutoff, components=tuple(components))

    @classmethod
    def gaussian(cls, cutoff: float = 1.0, components=(0.0, 0.0, 1.0, 0.0)):
        return cls(exponent=0.0, cutoff=cutoff, components=tuple(components))


def _gauss_panels(u_lo, u_hi, panels, order=16):
    x, w = legendre.leggauss(order)
    edges = np.linspace(u_lo, u_hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _probe_integrals(s, profile, times, params, panels, k_lo, k_hi):
    u, wq = _gauss_panels(math.log(k_lo), math.log(k_hi), panels)
    k = np.exp(u)
    w_sig, w_L, w_T, w_E = profile.components
    wl = np.array([w_sig, w_L, w_E], dtype=complex)
    amp2 = k ** (2 * profile.exponent) * np.exp(-((k / profile.cutoff) ** 2))
    base = 4 * math.pi * k ** (3 + 2 * s) * amp2 * wq / (2 * math.pi) ** 3  # includes dk = k du
    blocks = longitudinal_blocks(k, params)
    lam, V = np.linalg.eig(blocks)
    coef = np.linalg.solve(V, np.broadcast_to(wl, (k.size, 3))[..., None])[..., 0]
    bad = np.linalg.cond(V) > 1e10
    shear = shear_rate(k, params)
    power = 3 + 2 * s + 2 * profile.exponent
    tail = 4 * math.pi * (abs(w_sig) ** 2 + abs(w_L) ** 2 + abs(w_T) ** 2 + abs(w_E) ** 2) * k_lo**power / power
    tail /= (2 * math.pi) ** 3
    out = np.empty(len(times))
    for n, t in enumerate(times):
        vec = np.einsum("kij,kj->ki", V, np.exp(t * lam) * coef)
        if np.any(bad):
            vec[bad] = (scipy.linalg.expm(t * blocks[bad]) @ wl[:, None])[..., 0]
        val = np.sum(np.abs(vec) ** 2, axis=1) + np.exp(2 * t * shear) * abs(w_T) ** 2
        out[n] = float(np.sum(base * val)) + tail
    return out


def continuum_decay_probe(
    s: float,
    profile: RadialProfile,
    times,
    params: PhysicalParams,
    tol: float = 1e-6,
    k_lo: float = 1e-8,
    max_panels: int = 8192,
) -> np.ndarray:
    """Whole-space ``||exp(tA) V||_{H^s}`` at each time by radial Gauss quadrature.

    The integral runs over ``log k``; below ``k_lo`` the propagator is replaced by
    the identity and the power-law tail is integrated in closed form.  Node
    counts double until consecutive results agree to ``tol`` (relative).
    """
    times = np.asarray(times, dtype=float)
    power = 3 + 2 * s + 2 * profile.exponent
    if power <= 0:
        raise ValueError(f"norm diverges at low frequency for s={s} and exponent={profile.exponent}")
    k_hi = profile.cutoff * math.sqrt(80.0)
    panels = max(32, int(math.ceil((math.log(k_hi) - math.log(k_lo)) / 0.25)))
    prev = _probe_integrals(s, profile, times, params, panels, k_lo, k_hi)
    while True:
        panels *= 2
        cur = _probe_integrals(s, profile, times, params, panels, k_lo, k_hi)
        change = np.max(np.abs(cur - prev) / np.maximum(np.abs(cur), 1e-300))
        if change <= tol:
            return np.sqrt(cur)
        if panels >= max_panels:
            raise RuntimeError(f"radial quadrature did not converge (relative change {change:.2e})")
        prev = cur


def high_freq_decay_probe(
    grid: Grid, V0: np.ndarray, j0: int, times, params: PhysicalParams, ladder: DyadicLadder
) -> np.ndarray:
    """``||(1 - S_{j0}) exp(tA) V0||_{L2}`` on the lattice."""
    out = []
    for t in times:
        W = semigroup_apply(grid, V0, float(t), params)
        hi = W - low_cutoff(W, ladder, j0)
        hi[:, 0, 0, 0] = 0.0
        out.append(math.sqrt(grid.l2_norm_sq(hi).sum()))
    return np.array(out)
