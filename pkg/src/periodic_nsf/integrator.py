"""Time stepping for the energy-variable system and an independent primitive-variable oracle.

The production scheme is second-order exponential time differencing
(Cox-Matthews ETDRK2)::

    a      = exp(hA) U + F_h(t) + h phi1(hA) N(U, t)
    U_next = a + h phi2(hA) (N(a, t + h) - N(U, t))

where ``N = (0, G + sigma f, alpha (H + K f.m))``.  The linear part of the
forcing, ``(0, rho_inf f, 0)``, is integrated exactly mode by mode: the force
is a finite Fourier series in time, so ``F_h(t)`` is a sum over harmonics of
``exp(i n omega t)`` times a fixed vector obtained from one augmented matrix
exponential per forced mode.  With ``N`` switched off the stepper is therefore
exact for any ``dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .grid import Grid
from .linear import LatticePropagator, symbol_matrix
from .littlewood_paley import besov_norm, covering_ladder, sobolev_norm
from .model import (
    ForceSpec,
    PhysicalParams,
    PrimitiveState,
    VacuumError,
    _pressure_remainders,
    dissipation,
    nonlinear_terms,
    recover_primitive,
    to_energy_state,
)

__all__ = [
    "IntegrationAborted",
    "ExactForcing",
    "EtdStepper",
    "etd_step",
    "apply_symbol",
    "u_form_rhs",
    "oracle_rhs_primitive",
    "oracle_step_primitive",
    "NormSpec",
    "Trajectory",
    "evolve",
    "energy_state_from_primitive",
    "primitive_from_energy_state",
    "energy_identity_terms",
    "energy_identity_residual",
    "advective_dt_limit",
    "random_small_state",
]


class IntegrationAborted(RuntimeError):
    """Raised when a step fails; carries the last good state and its time."""

    def __init__(self, message, last_state, time):
        super().__init__(message)
        self.last_state = last_state
        self.time = time


# ---------------------------------------------------------------------------
# forcing
# ---------------------------------------------------------------------------
def _support(profile_hat, rel=1e-13):
    amp = np.max(np.abs(profile_hat), axis=0)
    top = float(amp.max()) if amp.size else 0.0
    if top == 0.0:
        return tuple(np.empty(0, dtype=int) for _ in range(3))
    return np.nonzero(amp > rel * top)


class ExactForcing:
    """``int_0^h exp((h - s)A) (0, rho_inf f(t + s), 0) ds`` on the forced modes."""

    def __init__(self, grid: Grid, params: PhysicalParams, h: float, force: ForceSpec):
        self.grid, self.force, self.h = grid, force, float(h)
        fhat = force.profile_hat(grid)
        self.index = _support(fhat)
        xis = np.stack([np.broadcast_to(c, grid.spectral_shape)[self.index] for c in grid.xi], axis=-1)
        src = np.zeros((len(xis), 5), dtype=complex)
        src[:, 1:4] = force.eps * params.rho_inf * fhat[(slice(None), *self.index)].T
        self.coeffs = {n: c for n, c in force.harmonic_coefficients().items() if c != 0}
        self.vectors = {}
        I5 = np.eye(5)
        for n in self.coeffs:
            vecs = np.empty((len(xis), 5), dtype=complex)
            for q, xi in enumerate(xis):
                M = np.zeros((10, 10), dtype=complex)
                M[:5, :5] = self.h * symbol_matrix(xi, params)
                M[:5, 5:] = self.h * I5
                M[5:, 5:] = 1j * n * force.omega * self.h * I5
                vecs[q] = scipy.linalg.expm(M)[:5, 5:] @ src[q]
            self.vectors[n] = vecs

    def __call__(self, t: float) -> np.ndarray:
        out = self.grid.zeros(5)
        if not self.coeffs or len(self.index[0]) == 0:
            return out
        tau = math.fmod(t, self.force.T)
        if tau < 0:
            tau += self.force.T
        total = sum(c * np.exp(1j * n * self.force.omega * tau) * self.vectors[n] for n, c in self.coeffs.items())
        out[(slice(None), *self.index)] = total.T
        return out


# ---------------------------------------------------------------------------
# ETDRK2
# ---------------------------------------------------------------------------
class EtdStepper:
    """Reusable ETDRK2 stepper for a fixed grid, step size and force.

    ``linear_only`` drops ``N`` entirely.  ``pin_mean`` zeroes the mean of the
    nonlinear momentum and energy sources, which otherwise accumulate on a
    torus (viscous heating has positive mean).
    """

    def __init__(
        self,
        grid: Grid,
        params: PhysicalParams,
        dt: float,
        force: ForceSpec | None = None,
        linear_only: bool = False,
        pin_mean: bool = False,
    ):
        if not dt > 0:
            raise ValueError("time step must be positive")
        self.grid, self.params, self.dt = grid, params, float(dt)
        self.force, self.linear_only, self.pin_mean = force, linear_only, pin_mean
        self.prop = LatticePropagator(grid, params, dt, order=0 if linear_only else 2)
        active = force is not None and force.eps != 0 and len(force.modes) > 0
        self.forcing = ExactForcing(grid, params, dt, force) if active else None
        self._profile = force.profile(grid) if active else None

    def force_field(self, t: float):
        if self._profile is None:
            return None
        return self.force.eps * self.force.waveform(t) * self._profile

    def nonlinear(self, U: np.ndarray, t: float) -> np.ndarray:
        g, p = self.grid, self.params
        state = recover_primitive(g.inverse(U), p)
        G, H = nonlinear_terms(g, state, p, self.force_field(t))
        out = g.zeros(5)
        out[1:4] = G
        out[4] = p.energy_scale * H
        if self.pin_mean:
            out[:, 0, 0, 0] = 0.0
        return out

    def step(self, U: np.ndarray, t: float) -> np.ndarray:
        h = self.dt
        try:
            a = self.prop.exp(U)
            if self.forcing is not None:
                a += self.forcing(t)
            if self.linear_only:
                return a
            NU = self.nonlinear(U, t)
            a += h * self.prop.phi1(NU)
            Na = self.nonlinear(a, t + h)
            return a + h * self.prop.phi2(Na - NU)
        except VacuumError as exc:
            raise IntegrationAborted(f"step at t={t:.6g} failed: {exc}", U, t) from exc


def etd_step(grid, U, t, dt, force, params, linear_only=False, pin_mean=False):
    """One ETDRK2 step (builds a throwaway :class:`EtdStepper`)."""
    return EtdStepper(grid, params, dt, force, linear_only, pin_mean).step(U, t)


def apply_symbol(grid: Grid, U: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """``A U`` on the lattice."""
    xi = np.stack([np.broadcast_to(c, grid.spectral_shape) for c in grid.xi])
    c = math.sqrt(params.p1)
    a = params.coupling
    m = U[1:4]
    xm = np.sum(xi * m, axis=0)
    out = np.empty_like(U, dtype=complex)
    out[0] = -1j * c * xm
    out[1:4] = (
        -1j * c * xi * U[0]
        - (params.mu / params.rho_inf) * grid.xi_sq * m
        - ((params.mu + params.mu_prime) / params.rho_inf) * xi * xm
        - 1j * a * xi * U[4]
    )
    out[4] = -1j * a * xm - params.thermal_diffusivity * grid.xi_sq * U[4]
    return out


def u_form_rhs(grid: Grid, U: np.ndarray, t: float, params: PhysicalParams, force: ForceSpec | None = None):
    """Full time derivative ``A U + (0, G + rho f, alpha (H + K f.m))`` of a spectral state."""
    out = apply_symbol(grid, U, params)
    state = recover_primitive(grid.inverse(U), params)
    f = None
    if force is not None and force.modes:
        f = force.eps * force.waveform(t) * force.profile(grid)
    G, H = nonlinear_terms(grid, state, params, f)
    out[1:4] += G
    out[4] += params.energy_scale * H
    if f is not None:
        out[1:4] += params.rho_inf * grid.forward(f) * grid.dealias_mask
    return out


# ---------------------------------------------------------------------------
# primitive-variable oracle
# ---------------------------------------------------------------------------
def oracle_rhs_primitive(grid: Grid, state_hat: np.ndarray, t: float, params: PhysicalParams, force=None):
    """Pseudo-spectral right-hand side of the primitive system in ``(sigma, v, eta)``.

    ``state_hat`` has five components ``(sigma, v1, v2, v3, eta)`` in spectral form.
    """
    p = params
    mask = grid.dealias_mask
    ik = grid.ik
    phys = grid.inverse(state_hat)
    sigma, v, eta = phys[0], phys[1:4], phys[4]
    rho = p.rho_inf + sigma
    if np.any(rho <= 0):
        raise VacuumError("vacuum state: density is non-positive somewhere")
    theta = p.theta_inf + eta
    v_hat = state_hat[1:4]
    grad_v = grid.inverse(ik[:, None] * v_hat[None, :])  # [i, j] = d_i v_j
    div_v = np.trace(grad_v, axis1=0, axis2=1)
    grad_eta = grid.inverse(ik * state_hat[4][None])
    lap_v = grid.inverse(-grid.xi_sq * v_hat)
    grad_div_v = grid.inverse(ik * np.sum(ik * v_hat, axis=0)[None])
    lap_eta = grid.inverse(-grid.xi_sq * state_hat[4])
    P_hat = grid.forward(p.pressure(rho, theta)) * mask
    grad_P = grid.inverse(ik * P_hat[None])
    sym = grad_v + np.swapaxes(grad_v, 0, 1)
    psi = 0.5 * p.mu * np.sum(sym**2, axis=(0, 1)) + p.mu_prime * div_v**2

    d_sigma = -np.sum(ik * grid.forward(rho * v), axis=0)
    adv_v = np.einsum("i...,ij...->j...", v, grad_v)
    rhs_v = -adv_v + (p.mu * lap_v + (p.mu + p.mu_prime) * grad_div_v - grad_P) / rho
    if force is not None and force.modes:
        rhs_v = rhs_v + force.eps * force.waveform(t) * force.profile(grid)
    rhs_eta = (
        -np.sum(v * grad_eta, axis=0)
        - theta * p.pressure.d_theta(rho, theta) * div_v / (p.c_v * rho)
        + (p.kappa * lap_eta + psi) / (p.c_v * rho)
    )
    out = np.empty_like(state_hat)
    out[0] = d_sigma * mask
    out[1:4] = grid.forward(rhs_v) * mask
    out[4] = grid.forward(rhs_eta) * mask
    return out


def oracle_step_primitive(grid: Grid, state_hat: np.ndarray, t: float, dt: float, force, params: PhysicalParams):
    """Classical RK4 step of the primitive system (explicit; keep ``dt`` small)."""
    f = lambda s, y: oracle_rhs_primitive(grid, y, s, params, force)  # noqa: E731
    try:
        k1 = f(t, state_hat)
        k2 = f(t + dt / 2, state_hat + dt / 2 * k1)
        k3 = f(t + dt / 2, state_hat + dt / 2 * k2)
        k4 = f(t + dt, state_hat + dt * k3)
    except VacuumError as exc:
        raise IntegrationAborted(f"oracle step at t={t:.6g} failed: {exc}", state_hat, t) from exc
    return state_hat + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def primitive_from_energy_state(grid: Grid, U: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """Spectral ``(sigma, v, eta)`` (dealiased) from a spectral ``U``."""
    st = recover_primitive(grid.inverse(U), params)
    phys = np.concatenate([st.sigma[None], st.v, st.eta[None]])
    return grid.forward(phys) * grid.dealias_mask


def energy_state_from_primitive(grid: Grid, prim_hat: np.ndarray, params: PhysicalParams) -> np.ndarray:
    phys = grid.inverse(prim_hat)
    st = PrimitiveState(sigma=phys[0], v=phys[1:4], eta=phys[4])
    return grid.forward(to_energy_state(st, params))


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class NormSpec:
    """Recorded norm: ``kind`` is ``"besov"`` (uses ``s`` and ``r``) or ``"sobolev"`` (uses ``s``)."""

    kind: str
    s: float
    r: float = 2.0

    @property
    def label(self) -> str:
        if self.kind == "sobolev":
            return f"H{self.s:g}"
        return f"B{self.s:g},{self.r:g}"

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        """``"s=1"`` gives a Sobolev norm, ``"s=0.5,r=1"`` a Besov norm (``r=inf`` allowed)."""
        parts = dict(item.split("=", 1) for item in text.split(","))
        unknown = set(parts) - {"s", "r"}
        if unknown or "s" not in parts:
            raise ValueError(f"bad norm spec {text!r}; expected s=<value>[,r=<value>]")
        s = float(parts["s"])
        if "r" in parts:
            return cls("besov", s, float(parts["r"]))
        return cls("sobolev", s)


def evaluate_norm(grid: Grid, U: np.ndarray, spec: NormSpec, ladder=None) -> float:
    if spec.kind == "sobolev":
        return sobolev_norm(grid, U, spec.s)
    if spec.kind == "besov":
        return besov_norm(U, ladder or covering_ladder(grid), spec.s, spec.r)
    raise ValueError(f"unknown norm kind {spec.kind!r}")


@dataclass
class Trajectory:
    grid: Grid
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def append(self, t, U, norms: dict | None = None):
        if self.times and not t > self.times[-1]:
            raise ValueError("trajectory times must increase strictly")
        self.times.append(float(t))
        self.states.append(U)
        for key, val in (norms or {}).items():
            self.diagnostics.setdefault(key, []).append(val)

    def records(self) -> list[dict]:
        keys = list(self.diagnostics)
        return [{"t": t, **{k: self.diagnostics[k][i] for k in keys}} for i, t in enumerate(self.times)]


def evolve(
    grid: Grid,
    U0: np.ndarray,
    t_end: float,
    dt: float,
    params: PhysicalParams,
    force: ForceSpec | None = None,
    cadence: int = 1,
    record=(),
    linear_only: bool = False,
    pin_mean: bool = False,
    t0: float = 0.0,
    keep_states: bool = True,
    stepper: EtdStepper | None = None,
) -> Trajectory:
    """Repeated ETDRK2 steps; ``cadence`` counts steps between stored snapshots."""
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    n_steps = int(round(t_end / dt)) if t_end > 0 else 0
    if n_steps and abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError(f"t_end={t_end} is not a whole number of steps of dt={dt}")
    specs = [s if isinstance(s, NormSpec) else NormSpec.parse(s) for s in record]
    ladder = covering_ladder(grid) if any(s.kind == "besov" for s in specs) else None
    traj = Trajectory(grid)

    def snap(t, U):
        traj.append(t, U if keep_states else None, {s.label: evaluate_norm(grid, U, s, ladder) for s in specs})

    U = np.asarray(U0, dtype=complex)
    snap(t0, U)
    if n_steps == 0:
        return traj
    stepper = stepper or EtdStepper(grid, params, dt, force, linear_only, pin_mean)
    for n in range(n_steps):
        t = t0 + n * dt
        U = stepper.step(U, t)
        if (n + 1) % cadence == 0 or n + 1 == n_steps:
            snap(t0 + (n + 1) * dt, U)
    return traj


# ---------------------------------------------------------------------------
# energy identity at level ell
# ---------------------------------------------------------------------------
def _inner(grid, ell, A, B):
    """``<grad^ell a, grad^ell b>`` summed over leading components."""
    w = grid.xi_sq**ell
    return float(grid.spectral_sum(np.sum(np.real(A * np.conj(B)), axis=0) * w) / grid.volume)


def energy_identity_terms(grid: Grid, U: np.ndarray, ell: int, params: PhysicalParams, force_field=None) -> dict:
    """Energy, dissipation and right-hand side of the level-``ell`` energy identity at one state."""
    p = params
    mask = grid.dealias_mask
    fw = lambda a: grid.forward(a) * mask  # noqa: E731
    ik = grid.ik
    st = recover_primitive(grid.inverse(U), p)
    sig_h, v_h, eta_h = fw(st.sigma), fw(st.v), fw(st.eta)
    sigma, v, eta = grid.inverse(sig_h), grid.inverse(v_h), grid.inverse(eta_h)
    rho = p.rho_inf + sigma
    theta = p.theta_inf + eta
    dinv = 1.0 / rho - 1.0 / p.rho_inf
    grad_v = grid.inverse(ik[:, None] * v_h[None, :])
    div_v_h = np.sum(ik * v_h, axis=0)
    div_v = grid.inverse(div_v_h)
    A_v = grid.inverse(-p.mu * grid.xi_sq * v_h + (p.mu + p.mu_prime) * ik * div_v_h[None])
    grad_sig = grid.inverse(ik * sig_h[None])
    grad_eta = grid.inverse(ik * eta_h[None])
    lap_eta = grid.inverse(-grid.xi_sq * eta_h)
    Q1, _ = _pressure_remainders(sigma, eta, p)
    grad_Q1 = grid.inverse(ik * fw(Q1)[None])

    R1 = (
        -np.einsum("i...,ij...->j...", v, grad_v)
        + dinv * A_v
        - dinv * (p.p1 * grad_sig + p.p2 * grad_eta)
        - grad_Q1 / rho
    )
    if force_field is not None:
        R1 = R1 + force_field
    R2 = (
        -p.c_v * np.sum(v * grad_eta, axis=0)
        - (theta * p.pressure.d_theta(rho, theta) / rho - p.theta_inf * p.p2 / p.rho_inf) * div_v
        + p.kappa * dinv * lap_eta
        + dissipation(grid, v, p) / rho
    )
    div_sv = np.sum(ik * fw(sigma * v), axis=0)

    energy = 0.5 * (
        p.p1 / p.rho_inf**2 * _inner(grid, ell, sig_h[None], sig_h[None])
        + _inner(grid, ell, v_h, v_h)
        + p.c_v / p.theta_inf * _inner(grid, ell, eta_h[None], eta_h[None])
    )
    diss = (
        p.mu / p.rho_inf * _inner(grid, ell + 1, v_h, v_h)
        + (p.mu + p.mu_prime) / p.rho_inf * _inner(grid, ell, div_v_h[None], div_v_h[None])
        + p.kappa / (p.rho_inf * p.theta_inf) * _inner(grid, ell + 1, eta_h[None], eta_h[None])
    )
    rhs = (
        -p.p1 / p.rho_inf**2 * _inner(grid, ell, div_sv[None], sig_h[None])
        + _inner(grid, ell, fw(R1), v_h)
        + _inner(grid, ell, fw(R2)[None], eta_h[None]) / p.theta_inf
    )
    return {"energy": energy, "dissipation": diss, "rhs": rhs}


def energy_identity_residual(
    traj: Trajectory,
    ell: int,
    params: PhysicalParams,
    force: ForceSpec | None = None,
    max_spacing: float = 0.05,
) -> np.ndarray:
    """``|dE/dt + D - RHS|`` at every interior snapshot (centred differences in time)."""
    if not 0 <= ell <= 4:
        raise ValueError("energy level must lie in [0, 4]")
    t = np.asarray(traj.times)
    if len(t) < 3:
        raise ValueError("need at least three snapshots for centred differencing")
    steps = np.diff(t)
    if steps.max() > max_spacing or steps.max() - steps.min() > 1e-9 * steps.max():
        raise ValueError(f"cadence too coarse or uneven for centred differencing (spacing {steps.max():.3g})")
    if any(s is None for s in traj.states):
        raise ValueError("trajectory was recorded without states")
    g = traj.grid
    terms = []
    for ti, U in zip(t, traj.states):
        f = None
        if force is not None and force.modes:
            f = force.eps * force.waveform(ti) * force.profile(g)
        terms.append(energy_identity_terms(g, U, ell, params, f))
    energy = np.array([d["energy"] for d in terms])
    out = []
    for n in range(1, len(t) - 1):
        dEdt = (energy[n + 1] - energy[n - 1]) / (t[n + 1] - t[n - 1])
        out.append(abs(dEdt + terms[n]["dissipation"] - terms[n]["rhs"]))
    return np.array(out)


def advective_dt_limit(grid: Grid, U: np.ndarray, params: PhysicalParams, period: float | None = None, factor: float = 0.25) -> float:
    """``factor dx / max|v|``, floored at ``1e-4 T`` when a period is given."""
    st = recover_primitive(grid.inverse(U), params)
    vmax = float(np.sqrt(np.sum(st.v**2, axis=0)).max())
    limit = math.inf if vmax == 0 else factor * grid.dx / vmax
    if period is not None:
        limit = max(limit, 1e-4 * period)
    return limit


def random_small_state(grid: Grid, params: PhysicalParams, amplitude: float, band: float, seed: int) -> np.ndarray:
    """Energy state built from random primitive perturbations with ``|xi| <= band`` and peak ``amplitude``."""
    rng = np.random.default_rng(seed)
    F = grid.forward(rng.standard_normal((5, *grid.physical_shape)))
    F *= (grid.xi_abs <= band) & (grid.xi_abs > 0)
    peak = float(np.max(np.abs(grid.inverse(F))))
    if peak > 0:
        F *= amplitude / peak
    return energy_state_from_primitive(grid, F, params)
