"""Compressible Navier-Stokes-Fourier model in modified-energy variables.

With ``sigma = rho - rho_inf``, ``m = rho v`` and ``eta = theta - theta_inf`` the
modified energy is

    E = K/2 m.v + c_V rho eta + S sigma**2,
    K = 1 + theta_inf q2/p2,   S = p1/(2 rho_inf) (1 + theta_inf (q2/p2 - q1/p1)),

and the state vector is ``U = (sqrt(p1) sigma, m, alpha E)`` with
``alpha = 1/sqrt(c_V theta_inf)``.  That scaling makes the linear symbol
skew-Hermitian plus negative semidefinite (see :mod:`periodic_nsf.linear`).

Exact evolution (derived from the primitive system; ``nonlinear_terms_reference``
evaluates the same right-hand side pointwise from rho, v, theta):

    d_t sigma + div m = 0
    d_t m - A m / rho_inf + p1 grad sigma + p2/(c_V rho_inf) grad E = G + rho f
    d_t E - kappa/(c_V rho_inf) lap E + theta_inf p2/rho_inf div m = H + K f.m

where ``A = mu lap + (mu + mu') grad div`` and ``H = H1 + H2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .grid import Grid

__all__ = [
    "IdealGas",
    "PolynomialPressure",
    "CallablePressure",
    "PhysicalParams",
    "pressure_constants",
    "PrimitiveState",
    "energy_functional",
    "recover_primitive",
    "to_energy_state",
    "from_energy_state",
    "dissipation",
    "nonlinear_terms",
    "nonlinear_terms_reference",
    "ForceSpec",
    "force_eval",
    "VacuumError",
]


class VacuumError(ValueError):
    """Density reached zero or below."""


# ---------------------------------------------------------------------------
# pressure laws
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class IdealGas:
    """``P = R rho theta``."""

    R: float = 1.0

    def __call__(self, rho, theta):
        return self.R * rho * theta

    def d_theta(self, rho, theta):
        return self.R * rho * np.ones_like(theta)

    def reference_derivatives(self, rho, theta):
        return self.R * theta, self.R * rho, 0.0, self.R


@dataclass(frozen=True)
class PolynomialPressure:
    """``P = sum_ab c[a][b] rho**a theta**b`` from a coefficient table."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(tuple(float(c) for c in row) for row in self.coeffs))

    def _terms(self):
        for a, row in enumerate(self.coeffs):
            for b, c in enumerate(row):
                if c != 0.0:
                    yield a, b, c

    def __call__(self, rho, theta):
        return sum(c * rho**a * theta**b for a, b, c in self._terms()) + 0.0 * rho * theta

    def d_theta(self, rho, theta):
        return sum(b * c * rho**a * theta ** (b - 1) for a, b, c in self._terms() if b > 0) + 0.0 * rho * theta

    def reference_derivatives(self, rho, theta):
        p1 = sum(a * c * rho ** (a - 1) * theta**b for a, b, c in self._terms() if a > 0)
        p2 = sum(b * c * rho**a * theta ** (b - 1) for a, b, c in self._terms() if b > 0)
        q1 = sum(a * (a - 1) * c * rho ** (a - 2) * theta**b for a, b, c in self._terms() if a > 1)
        q2 = sum(a * b * c * rho ** (a - 1) * theta ** (b - 1) for a, b, c in self._terms() if a > 0 and b > 0)
        return float(p1), float(p2), float(q1), float(q2)


@dataclass(frozen=True)
class CallablePressure:
    """User pressure law; derivatives by Richardson-extrapolated central differences."""

    func: Callable
    rel_step: float = 1e-5

    def __call__(self, rho, theta):
        return self.func(rho, theta)

    def d_theta(self, rho, theta):
        h = self.rel_step * np.maximum(np.abs(theta), 1.0)
        return _richardson(lambda d: self.func(rho, theta + d), h)

    def reference_derivatives(self, rho, theta):
        hr = self.rel_step * max(abs(rho), 1.0)
        ht = self.rel_step * max(abs(theta), 1.0)
        p1 = _richardson(lambda d: self.func(rho + d, theta), hr)
        p2 = _richardson(lambda d: self.func(rho, theta + d), ht)
        # second derivatives want a larger step to control cancellation
        Hr, Ht = 1e3 * hr, 1e3 * ht
        q1 = _richardson(lambda d: _richardson(lambda e: self.func(rho + d + e, theta), hr), Hr)
        q2 = _richardson(lambda d: _richardson(lambda e: self.func(rho + e, theta + d), hr), Ht)
        return float(p1), float(p2), float(q1), float(q2)


def _richardson(f, h):
    d1 = (f(h) - f(-h)) / (2 * h)
    d2 = (f(h / 2) - f(-h / 2)) / h
    return (4 * d2 - d1) / 3


def pressure_constants(law, rho_inf: float, theta_inf: float) -> tuple[float, float, float, float]:
    """``(p1, p2, q1, q2)``: ``dP/drho, dP/dtheta, d2P/drho2, d2P/drho dtheta`` at the reference."""
    p1, p2, q1, q2 = law.reference_derivatives(rho_inf, theta_inf)
    if not (p1 > 0 and p2 > 0):
        raise ValueError(f"stability conditions violated: need dP/drho > 0 and dP/dtheta > 0, got p1={p1}, p2={p2}")
    return p1, p2, q1, q2


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PhysicalParams:
    mu: float = 1.0
    mu_prime: float = 0.0
    kappa: float = 1.0
    c_v: float = 1.5
    rho_inf: float = 1.0
    theta_inf: float = 1.0
    pressure: object = field(default_factory=IdealGas)

    def __post_init__(self):
        if not (self.mu > 0 and 2.0 * self.mu / 3.0 + self.mu_prime >= 0):
            raise ValueError(
                f"thermodynamic restrictions violated: need mu > 0 and 2 mu/3 + mu' >= 0 "
                f"(mu={self.mu}, mu'={self.mu_prime})"
            )
        if not (self.kappa > 0 and self.c_v > 0):
            raise ValueError(f"need kappa > 0 and c_V > 0 (kappa={self.kappa}, c_V={self.c_v})")
        if not (self.rho_inf > 0 and self.theta_inf > 0):
            raise ValueError("reference density and temperature must be positive")
        pressure_constants(self.pressure, self.rho_inf, self.theta_inf)

    @cached_property
    def constants(self) -> tuple[float, float, float, float]:
        return pressure_constants(self.pressure, self.rho_inf, self.theta_inf)

    p1 = property(lambda self: self.constants[0])
    p2 = property(lambda self: self.constants[1])
    q1 = property(lambda self: self.constants[2])
    q2 = property(lambda self: self.constants[3])

    @property
    def kinetic_factor(self) -> float:
        """``K = 1 + theta_inf q2 / p2``."""
        return 1.0 + self.theta_inf * self.q2 / self.p2

    @property
    def density_factor(self) -> float:
        """``S = p1/(2 rho_inf) (1 + theta_inf (q2/p2 - q1/p1))``."""
        return self.p1 / (2 * self.rho_inf) * (1.0 + self.theta_inf * (self.q2 / self.p2 - self.q1 / self.p1))

    @property
    def energy_scale(self) -> float:
        """Factor ``alpha`` in ``U_5 = alpha E``."""
        return 1.0 / math.sqrt(self.c_v * self.theta_inf)

    @property
    def longitudinal_viscosity(self) -> float:
        return (2 * self.mu + self.mu_prime) / self.rho_inf

    @property
    def thermal_diffusivity(self) -> float:
        return self.kappa / (self.c_v * self.rho_inf)

    @property
    def coupling(self) -> float:
        """Momentum/energy coupling ``p2/rho_inf sqrt(theta_inf/c_V)``."""
        return self.p2 / self.rho_inf * math.sqrt(self.theta_inf / self.c_v)

    @property
    def reference_pressure(self) -> float:
        return float(self.pressure(self.rho_inf, self.theta_inf))


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------
@dataclass
class PrimitiveState:
    """Perturbation variables in physical space: ``sigma``, ``v`` (3, ...) and ``eta``."""

    sigma: np.ndarray
    v: np.ndarray
    eta: np.ndarray

    def rho(self, params: PhysicalParams) -> np.ndarray:
        return params.rho_inf + self.sigma

    def momentum(self, params: PhysicalParams) -> np.ndarray:
        return self.rho(params) * self.v


def energy_functional(state: PrimitiveState, params: PhysicalParams) -> np.ndarray:
    rho = params.rho_inf + state.sigma
    m = rho * state.v
    return (
        0.5 * params.kinetic_factor * np.sum(m * state.v, axis=0)
        + params.c_v * rho * state.eta
        + params.density_factor * state.sigma**2
    )


def _check_density(rho):
    if np.any(rho <= 0):
        raise VacuumError("vacuum state: density is non-positive somewhere")


def recover_primitive(U: np.ndarray, params: PhysicalParams) -> PrimitiveState:
    """Invert ``U = (sqrt(p1) sigma, m, alpha E)`` given in physical space."""
    sigma = U[0] / math.sqrt(params.p1)
    rho = params.rho_inf + sigma
    _check_density(rho)
    m = U[1:4]
    v = m / rho
    E = U[4] / params.energy_scale
    eta = (E - 0.5 * params.kinetic_factor * np.sum(m * v, axis=0) - params.density_factor * sigma**2) / (params.c_v * rho)
    return PrimitiveState(sigma=sigma, v=v, eta=eta)


def to_energy_state(state: PrimitiveState, params: PhysicalParams) -> np.ndarray:
    """Physical-space ``U`` from primitive perturbations."""
    rho = params.rho_inf + state.sigma
    _check_density(rho)
    E = energy_functional(state, params)
    return np.concatenate(
        [(math.sqrt(params.p1) * state.sigma)[None], rho * state.v, (params.energy_scale * E)[None]]
    )


def from_energy_state(U: np.ndarray, params: PhysicalParams) -> PrimitiveState:
    return recover_primitive(U, params)


# ---------------------------------------------------------------------------
# dissipation
# ---------------------------------------------------------------------------
def _velocity_gradient(grid: Grid, v_hat: np.ndarray) -> np.ndarray:
    """``D[i, j] = d_i v_j`` in physical space."""
    return grid.inverse(grid.ik[:, None] * v_hat[None, :])


def _psi_from_gradient(D: np.ndarray, params: PhysicalParams) -> np.ndarray:
    sym = D + np.swapaxes(D, 0, 1)
    div = np.trace(D, axis1=0, axis2=1)
    return 0.5 * params.mu * np.sum(sym**2, axis=(0, 1)) + params.mu_prime * div**2


def dissipation(grid: Grid, v: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """``Psi = mu/2 (d_i v^j + d_j v^i)^2 + mu' (div v)^2`` (summed over i, j)."""
    v_hat = grid.forward(v) * grid.dealias_mask
    return _psi_from_gradient(_velocity_gradient(grid, v_hat), params)


# ---------------------------------------------------------------------------
# nonlinear terms
# ---------------------------------------------------------------------------
def _pressure_remainders(sigma, eta, params: PhysicalParams):
    rho = params.rho_inf + sigma
    theta = params.theta_inf + eta
    P = params.pressure(rho, theta)
    Q1 = P - params.reference_pressure - params.p1 * sigma - params.p2 * eta
    Q2 = (
        theta * params.pressure.d_theta(rho, theta)
        - params.theta_inf * params.p2
        - params.theta_inf * params.q1 * sigma
        - (params.p2 + params.theta_inf * params.q2) * eta
    )
    return Q1, Q2


def _div(grid, flux_hat):
    return np.sum(grid.ik * flux_hat, axis=0)


def _A_hat(grid, w_hat, params):
    """Spectral ``mu lap w + (mu + mu') grad div w``."""
    return -params.mu * grid.xi_sq * w_hat + (params.mu + params.mu_prime) * grid.ik * _div(grid, w_hat)[None]


def nonlinear_terms(grid: Grid, state: PrimitiveState, params: PhysicalParams, f: np.ndarray | None = None):
    """Spectral ``(G_hat, H_hat)`` for a dealiased primitive state.

    Divergence-form pieces share one flux transform and Laplacian pieces one
    scalar transform; the pointwise remainder of ``H2`` is transformed once.
    Every transformed product is truncated by the two-thirds rule.
    ``f`` (physical, 3 components) adds ``sigma f`` to ``G`` and ``K f.m`` to ``H``;
    the linear part ``rho_inf f`` of the forcing is left to the caller.
    """
    mask = grid.dealias_mask
    fw = lambda a: grid.forward(a) * mask  # noqa: E731
    p = params
    K, S = p.kinetic_factor, p.density_factor
    sigma, v, eta = state.sigma, state.v, state.eta
    rho = p.rho_inf + sigma
    _check_density(rho)
    m = rho * v
    E = energy_functional(state, p)
    R = eta - E / (p.c_v * p.rho_inf)
    Q1, Q2 = _pressure_remainders(sigma, eta, p)
    dinv = 1.0 / rho - 1.0 / p.rho_inf

    v_hat = fw(v)
    D = _velocity_gradient(grid, v_hat)
    div_v = np.trace(D, axis1=0, axis2=1)
    grad_sq = np.sum(D**2, axis=(0, 1))
    psi = _psi_from_gradient(D, p)
    v_sq = np.sum(v * v, axis=0)
    m_dot_v = np.sum(m * v, axis=0)

    # G = -div(m m / rho) - grad(p2 R + Q1) + A(dinv m)
    G = np.empty((3, *grid.spectral_shape), dtype=complex)
    tensor = {}
    for i in range(3):
        for j in range(i, 3):
            tensor[i, j] = tensor[j, i] = fw(m[i] * m[j] / rho)
    for i in range(3):
        G[i] = -sum(grid.ik[j] * tensor[i, j] for j in range(3))
    G += -grid.ik * fw(p.p2 * R + Q1)[None] + _A_hat(grid, fw(dinv * m), p)

    # divergence-form part of H
    flux = (
        p.c_v * eta * m
        + K * (p.p1 * sigma * v + p.p2 * eta * v)
        + 0.5 * K * m_dot_v * v
        + p.theta_inf * p.p2 * dinv * m
        + K * Q1 * v
        + S * sigma**2 * v
        - K * (p.mu + p.mu_prime) * v * div_v
    )
    H = -_div(grid, fw(flux))
    # Laplacian part: kappa lap R + K mu lap(|v|^2 / 2)
    H += -grid.xi_sq * fw(p.kappa * R + 0.5 * K * p.mu * v_sq)
    # pointwise part of H2
    pointwise = (
        K * Q1 * div_v
        - Q2 * div_v
        - S * sigma**2 * div_v
        - K * (p.mu * grad_sq + (p.mu + p.mu_prime) * div_v**2)
        + psi
    )
    if f is not None:
        G += fw(sigma * f)
        pointwise = pointwise + K * np.sum(f * m, axis=0)
    H += fw(pointwise)
    return G, H


def nonlinear_terms_reference(grid: Grid, state: PrimitiveState, params: PhysicalParams, f: np.ndarray | None = None):
    """Term-by-term transcription of ``G`` and ``H = H1 + H2``.

    Slower than :func:`nonlinear_terms`; kept as an independent route for tests.
    """
    mask = grid.dealias_mask
    fw = lambda a: grid.forward(a) * mask  # noqa: E731
    inv = grid.inverse
    p = params
    K, S2 = p.kinetic_factor, 2 * p.density_factor
    sigma, v, eta = state.sigma, state.v, state.eta
    rho = p.rho_inf + sigma
    m = rho * v
    E = energy_functional(state, p)
    R = eta - E / (p.c_v * p.rho_inf)
    Q1, Q2 = _pressure_remainders(sigma, eta, p)

    def div(w):
        return _div(grid, fw(w))

    def grad(a):
        return grid.ik * fw(a)[None]

    tens = np.array([[fw(m[i] * m[j] / rho) for j in range(3)] for i in range(3)])
    G = -np.stack([sum(grid.ik[j] * tens[i, j] for j in range(3)) for i in range(3)])
    G = G - p.p2 * grad(R) - grad(Q1) + _A_hat(grid, fw((1 / rho - 1 / p.rho_inf) * m), p)

    sigma_v = sigma * v
    H1 = (
        -p.c_v * div(eta * m)
        - K * (p.p1 * div(sigma_v) + p.p2 * div(eta * v))
        - 0.5 * K * div(np.sum(m * v, axis=0) * v)
        - p.kappa * grid.xi_sq * fw(R)
        - p.theta_inf * p.p2 * div((1 / rho - 1 / p.rho_inf) * m)
    )
    v_hat = fw(v)
    grad_Q1 = inv(grad(Q1))
    div_v = inv(_div(grid, v_hat))
    A_v = inv(_A_hat(grid, v_hat, p))
    H2 = (
        -K * np.sum(v * grad_Q1, axis=0)
        - Q2 * div_v
        - S2 * sigma * inv(div(sigma_v))
        + K * np.sum(A_v * v, axis=0)
        + dissipation(grid, v, p)
    )
    if f is not None:
        G = G + fw(sigma * f)
        H2 = H2 + K * np.sum(f * m, axis=0)
    return G, H1 + fw(H2)


# ---------------------------------------------------------------------------
# forcing
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ForceMode:
    """Spatial term ``a cos(xi.x) + b sin(xi.x)`` in one velocity component."""

    k: tuple
    component: int
    a: float = 1.0
    b: float = 0.0


@dataclass(frozen=True)
class ForceSpec:
    """``f(t, x) = eps * w(t) * profile(x)`` with ``w`` a finite Fourier series of period ``T``.

    ``cos[n-1]``/``sin[n-1]`` multiply the n-th harmonic; ``mean`` is the zeroth.
    """

    T: float
    eps: float
    modes: tuple = ()
    cos: tuple = (1.0,)
    sin: tuple = ()
    mean: float = 0.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("forcing period must be positive")
        object.__setattr__(self, "modes", tuple(m if isinstance(m, ForceMode) else ForceMode(**m) for m in self.modes))
        object.__setattr__(self, "cos", tuple(float(c) for c in self.cos))
        object.__setattr__(self, "sin", tuple(float(c) for c in self.sin))
        for mode in self.modes:
            if mode.component not in (0, 1, 2):
                raise ValueError("force component must be 0, 1 or 2")

    @property
    def omega(self) -> float:
        return 2 * math.pi / self.T

    @property
    def n_harmonics(self) -> int:
        return max(len(self.cos), len(self.sin))

    def harmonic_coefficients(self) -> dict:
        """``w(t) = sum_n c_n exp(i n omega t)``, returned as ``{n: c_n}``, n may be negative."""
        out = {0: complex(self.mean)}
        for n in range(1, self.n_harmonics + 1):
            a = self.cos[n - 1] if n <= len(self.cos) else 0.0
            b = self.sin[n - 1] if n <= len(self.sin) else 0.0
            out[n] = 0.5 * (a - 1j * b)
            out[-n] = 0.5 * (a + 1j * b)
        return out

    def waveform(self, t: float) -> float:
        # reduce the phase first so that w(t) == w(t + T) bit for bit whenever t + T is exact
        phase = math.fmod(t, self.T)
        if phase < 0:
            phase += self.T
        x = self.omega * phase
        w = self.mean
        for n, c in enumerate(self.cos, start=1):
            w += c * math.cos(n * x)
        for n, c in enumerate(self.sin, start=1):
            w += c * math.sin(n * x)
        return w

    def profile(self, grid: Grid) -> np.ndarray:
        """Physical-space spatial profile, shape ``(3, N, N, N)``."""
        out = np.zeros((3, *grid.physical_shape))
        X = grid.coordinates
        for mode in self.modes:
            phase = sum(grid.k0 * k * x for k, x in zip(mode.k, X))
            out[mode.component] += mode.a * np.cos(phase) + mode.b * np.sin(phase)
        return out

    def profile_hat(self, grid: Grid) -> np.ndarray:
        return grid.forward(self.profile(grid)) * grid.dealias_mask

    def max_wavenumber(self) -> int:
        return max((max(abs(k) for k in m.k) for m in self.modes), default=0)


def force_eval(spec: ForceSpec, grid: Grid, t: float) -> np.ndarray:
    return spec.eps * spec.waveform(t) * spec.profile(grid)


def default_force(T: float = 1.0, eps: float = 1e-3) -> ForceSpec:
    """Shear plus compressive mode along one axis, single cosine harmonic."""
    return ForceSpec(
        T=T,
        eps=eps,
        modes=(ForceMode(k=(1, 0, 0), component=1, a=1.0), ForceMode(k=(1, 0, 0), component=0, a=0.0, b=1.0)),
        cos=(1.0,),
    )
