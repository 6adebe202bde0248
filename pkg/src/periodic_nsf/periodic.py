"""Time-periodic solutions by iterating the period map from rest.

Starting from zero perturbation the forced flow is sampled at ``t = nT``; the
samples form a Cauchy sequence in ``B^1_{2,inf} cap H^4`` and their limit is the
initial point of the periodic orbit.  A closed-form oracle covers the linear
dynamics: per forced mode and temporal harmonic the periodic response is a
resolvent applied to the forcing vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .grid import Grid
from .integrator import EtdStepper, Trajectory, _support, evolve
from .linear import symbol_matrix
from .littlewood_paley import besov_norm, covering_ladder, sobolev_norm
from .model import ForceSpec, PhysicalParams

__all__ = [
    "acceptance_norm",
    "smallness_norm",
    "PeriodicSolution",
    "CauchyReport",
    "NoContractionError",
    "linear_periodic_solution",
    "poincare_iterate",
    "cauchy_rate_report",
]


class NoContractionError(RuntimeError):
    pass


def acceptance_norm(grid: Grid, U: np.ndarray, ladder=None) -> float:
    """``||U||_{B^1_{2,inf}} + ||U||_{H^4}``."""
    ladder = ladder or covering_ladder(grid)
    return besov_norm(U, ladder, 1.0, math.inf) + sobolev_norm(grid, U, 4.0)


def smallness_norm(grid: Grid, U: np.ndarray, ladder=None) -> float:
    """``||U||_{B^{1/2}_{2,1}} + ||U||_{H^4}``, the size that must stay under the cap."""
    ladder = ladder or covering_ladder(grid)
    return besov_norm(U, ladder, 0.5, 1.0) + sobolev_norm(grid, U, 4.0)


@dataclass
class PeriodicSolution:
    grid: Grid
    T: float
    U_T0: np.ndarray
    residual: float
    history: list = field(default_factory=list)
    n_periods: int = 0
    trajectory: Trajectory | None = None
    sample_norms: list = field(default_factory=list)
    distances: np.ndarray | None = None
    converged: bool = True


def linear_periodic_solution(
    grid: Grid,
    force: ForceSpec,
    params: PhysicalParams,
    steps_per_period: int = 10,
    cond_limit: float = 1e12,
) -> PeriodicSolution:
    """Closed-form periodic orbit of the linear forced system.

    Per forced mode ``U_T0 = (I - e^{TA})^{-1} sum_n c_n (i n omega - A)^{-1} (I - e^{TA}) b``
    with ``b = eps (0, rho_inf f_hat, 0)``.
    """
    U = grid.zeros(5)
    T = force.T
    if force.eps != 0 and force.modes:
        fhat = force.profile_hat(grid)
        index = _support(fhat)
        coeffs = {n: c for n, c in force.harmonic_coefficients().items() if c != 0}
        for q, idx in enumerate(zip(*index)):
            xi = np.array([np.broadcast_to(c, grid.spectral_shape)[idx] for c in grid.xi])
            b = np.zeros(5, dtype=complex)
            b[1:4] = force.eps * params.rho_inf * fhat[(slice(None), *idx)]
            A = symbol_matrix(xi, params)
            M = np.eye(5) - scipy.linalg.expm(T * A)
            cond = np.linalg.cond(M)
            if not cond < cond_limit:
                raise np.linalg.LinAlgError(
                    f"period map nearly singular at lattice mode {tuple(int(i) for i in idx)} (xi={xi}, cond={cond:.2e})"
                )
            integral = np.zeros(5, dtype=complex)
            for n, c in coeffs.items():
                res = 1j * n * force.omega * np.eye(5) - A
                integral += c * np.linalg.solve(res, M @ b)
            U[(slice(None), *idx)] = np.linalg.solve(M, integral)
    traj = evolve(grid, U, T, T / steps_per_period, params, force, linear_only=True)
    residual = acceptance_norm(grid, traj.states[-1] - U)
    return PeriodicSolution(grid, T, U, residual, trajectory=traj)


def poincare_iterate(
    grid: Grid,
    force: ForceSpec,
    params: PhysicalParams,
    tol: float = 1e-8,
    max_periods: int = 50,
    steps_per_period: int = 20,
    linear_only: bool = False,
    pin_mean: bool = True,
    delta_cap: float = 0.5,
    initial: np.ndarray | None = None,
    stall_periods: int = 5,
    keep_distances: bool = True,
) -> PeriodicSolution:
    """Iterate the period map from ``initial`` (zero by default) until the decrement drops below ``tol``.

    Decrements and distances are measured in :func:`acceptance_norm`.  The
    returned residual comes from one more period evolved from the limit point.
    """
    dt = force.T / steps_per_period
    stepper = EtdStepper(grid, params, dt, force, linear_only, pin_mean)
    ladder = covering_ladder(grid)
    norm = lambda X: acceptance_norm(grid, X, ladder)  # noqa: E731
    U = grid.zeros(5) if initial is None else np.array(initial, dtype=complex)
    samples = [U]
    history, sample_norms = [], [norm(U)]
    D = np.zeros((max_periods + 1, max_periods + 1))
    rises = 0
    converged = False
    n = 0
    while n < max_periods:
        traj = evolve(grid, U, force.T, dt, params, force, cadence=steps_per_period, stepper=stepper)
        U_new = traj.states[-1]
        n += 1
        size = smallness_norm(grid, U_new, ladder)
        if size >= delta_cap:
            raise ValueError(f"smallness cap breached: norm {size:.3e} >= {delta_cap} after {n} periods")
        d = norm(U_new - U)
        rises = rises + 1 if history and d >= history[-1] and d > 0 else 0
        history.append(d)
        sample_norms.append(norm(U_new))
        if keep_distances:
            for m, S in enumerate(samples):
                D[m, n] = D[n, m] = norm(U_new - S)
            samples.append(U_new)
        U = U_new
        if d < tol:
            converged = True
            break
        if rises >= stall_periods:
            raise NoContractionError(f"no contraction: force too large (decrements rose {rises} periods in a row)")
    final = evolve(grid, U, force.T, dt, params, force, cadence=1, stepper=stepper)
    residual = norm(final.states[-1] - U)
    sol = PeriodicSolution(
        grid,
        force.T,
        U,
        residual,
        history=history,
        n_periods=n,
        trajectory=final,
        sample_norms=sample_norms,
        distances=D[: n + 1, : n + 1] if keep_distances else None,
        converged=converged,
    )
    return sol


@dataclass
class CauchyReport:
    C: float
    exponent: float
    delta_est: float
    n_samples: int
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "C_fit": self.C,
            "exponent_fit": self.exponent,
            "delta_est": self.delta_est,
            "n_samples": self.n_samples,
            "degenerate": self.degenerate,
        }


def cauchy_rate_report(solution: PeriodicSolution, min_samples: int = 10) -> CauchyReport:
    """Smallest ``C`` with ``||U*(nT) - U*(mT)|| <= C (1 + min(m, n-m) T)^{-1/4} delta_est`` over all pairs.

    ``delta_est`` is the largest sample norm.  The exponent is the log-log slope
    of the worst distance at each ``g = min(m, n-m)`` against ``1 + g T``.
    """
    D = solution.distances
    if D is None:
        raise ValueError("solution was computed without the distance matrix")
    n_samples = D.shape[0]
    if n_samples < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {n_samples}")
    delta = max(solution.sample_norms)
    T = solution.T
    if delta == 0 or not np.any(D > 0):
        return CauchyReport(0.0, float("nan"), delta, n_samples, degenerate=True)
    worst = {}
    C = 0.0
    for n in range(n_samples):
        for m in range(n):
            gap = min(m, n - m)
            weight = (1.0 + gap * T) ** -0.25 * delta
            C = max(C, D[m, n] / weight)
            worst[gap] = max(worst.get(gap, 0.0), D[m, n])
    gaps = np.array(sorted(g for g, v in worst.items() if v > 0))
    if len(gaps) >= 2:
        y = np.log([worst[g] for g in gaps])
        exponent = float(np.polyfit(np.log1p(gaps * T), y, 1)[0])
    else:
        exponent = float("nan")
    return CauchyReport(float(C), exponent, float(delta), n_samples)
