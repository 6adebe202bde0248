"""Decay of perturbations around a periodic orbit.

A perturbation whose dyadic blocks scale like ``2**(-j s0)`` with
``s0 = -3 (1/p - 1/2)`` sits in the Besov class that ``L^p`` embeds into; its
``H^s`` difference norm is predicted to decay like
``(1 + t)^{-(s/2 + 3/2 (1/p - 1/2))}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .integrator import EtdStepper
from .linear import semigroup_apply
from .littlewood_paley import sobolev_norm
from .model import ForceSpec, PhysicalParams
from .periodic import PeriodicSolution

__all__ = [
    "predicted_exponent",
    "embedding_index",
    "make_perturbation",
    "FitResult",
    "fit_decay_exponent",
    "default_window",
    "DecayExperiment",
    "DecayResult",
    "decay_experiment",
    "StabilityError",
]


class StabilityError(RuntimeError):
    pass


def predicted_exponent(s: float, p: float) -> float:
    if not 1.0 <= p <= 2.0:
        raise ValueError(f"p must lie in [1, 2], got {p}")
    value = s / 2.0 + 1.5 * (1.0 / p - 0.5)
    if value <= 0:
        raise ValueError(f"decay exponent {value} is outside theorem's range (must be positive)")
    return value


def embedding_index(p: float) -> float:
    """``s0 = -3 (1/p - 1/2)``: ``L^p`` embeds into ``B^{s0}_{2,inf}``."""
    if not 1.0 <= p <= 2.0:
        raise ValueError(f"p must lie in [1, 2], got {p}")
    return -3.0 * (1.0 / p - 0.5)


def make_perturbation(
    grid: Grid,
    p_target: float,
    amplitude: float,
    seed: int,
    cutoff: float = 1.0,
    components=(0, 1, 2, 3, 4),
) -> np.ndarray:
    """Random-phase spectral state with ``|F(xi)|^2 ~ |xi|^(-2 s0 - 3) exp(-|xi|^2/cutoff^2)``.

    Magnitudes are deterministic, phases come from white noise drawn with
    ``seed``.  The field is dealiased, mean-free and scaled so that its largest
    physical sample equals ``amplitude``.
    """
    s0 = embedding_index(p_target)
    out = grid.zeros(5)
    if amplitude == 0:
        return out
    rng = np.random.default_rng(seed)
    noise = grid.forward(rng.standard_normal((len(components), *grid.physical_shape)))
    mag = np.abs(noise)
    phase = np.divide(noise, mag, out=np.zeros_like(noise), where=mag > 0)
    k = grid.xi_abs
    profile = np.zeros(grid.spectral_shape)
    nz = k > 0
    profile[nz] = k[nz] ** (-s0 - 1.5) * np.exp(-0.5 * (k[nz] / cutoff) ** 2)
    for n, c in enumerate(components):
        out[c] = phase[n] * profile * grid.dealias_mask
    peak = float(np.max(np.abs(grid.inverse(out))))
    return out * (amplitude / peak)


@dataclass
class FitResult:
    exponent: float
    stderr: float
    curved: bool
    curvature: float
    n: int


def fit_decay_exponent(times, values, window=None, curvature_threshold: float = 0.05) -> FitResult:
    """OLS slope of ``log values`` against ``log(1 + t)`` on ``window``.

    ``curvature`` is the midpoint gap between a quadratic fit and its chord,
    in log units; above ``curvature_threshold`` the series is flagged as not a
    power law.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, y = t[sel], y[sel]
    if t.size < 10:
        raise ValueError(f"need at least 10 samples in the fit window, got {t.size}")
    if np.any(y <= 0):
        raise ValueError("decay series has nonpositive values in the fit window")
    x = np.log1p(t)
    ly = np.log(y)
    X = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(X, ly, rcond=None)
    resid = ly - X @ coef
    dof = max(t.size - 2, 1)
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if sxx > 0 else float("inf")
    c2 = np.polyfit(x, ly, 2)[0]
    curvature = abs(c2) * (x.max() - x.min()) ** 2 / 4.0
    return FitResult(float(coef[1]), stderr, bool(curvature > curvature_threshold), float(curvature), int(t.size))


def default_window(grid: Grid) -> tuple[float, float]:
    return 5.0, min(0.5 * (grid.L / (2 * math.pi)) ** 2, 200.0)


@dataclass
class DecayExperiment:
    grid: Grid
    params: PhysicalParams
    p: float = 2.0
    amplitude: float = 1e-3
    seed: int = 0
    s_list: tuple = (1.0,)
    window: tuple | None = None
    cutoff: float = 1.0
    linear_only: bool = False
    base: PeriodicSolution | None = None
    force: ForceSpec | None = None
    dt: float = 0.25
    samples: int = 80
    pin_mean: bool = True
    s_margin: float = 0.1
    tolerance: float = 0.2

    def __post_init__(self):
        lo, hi = -1.5 + self.s_margin, 1.5 - self.s_margin
        for s in self.s_list:
            if not lo <= s <= hi:
                raise ValueError(f"norm index s={s} outside [{lo}, {hi}]")
        if self.window is None:
            self.window = default_window(self.grid)
        guard = 0.5 * (self.grid.L / (2 * math.pi)) ** 2
        if self.window[1] > guard * (1 + 1e-12):
            raise ValueError(f"fit window end {self.window[1]} exceeds the box guard {guard}")


@dataclass
class DecayResult:
    times: np.ndarray
    norms: dict
    fits: dict = field(default_factory=dict)
    predicted: dict = field(default_factory=dict)
    passed: dict = field(default_factory=dict)

    def verdicts(self) -> list[dict]:
        out = []
        for s in self.norms:
            fit = self.fits.get(s)
            out.append(
                {
                    "s": s,
                    "fitted": None if fit is None else -fit.exponent,
                    "stderr": None if fit is None else fit.stderr,
                    "curved": None if fit is None else fit.curved,
                    "predicted": self.predicted.get(s),
                    "pass": self.passed.get(s),
                }
            )
        return out


def _sample_times(window, count):
    t_end = window[1]
    grid = np.unique(np.concatenate([[0.0], np.geomspace(1.0, t_end, count)]))
    return grid


def decay_experiment(exp: DecayExperiment) -> DecayResult:
    """Co-evolve the base orbit and the perturbed state; fit the ``H^s`` decay of their difference."""
    g = exp.grid
    V0 = make_perturbation(g, exp.p, exp.amplitude, exp.seed, exp.cutoff)
    if exp.amplitude == 0:
        t = np.array([0.0])
        return DecayResult(t, {s: np.zeros(1) for s in exp.s_list})
    if exp.linear_only:
        times = _sample_times(exp.window, exp.samples)
        diffs = [semigroup_apply(g, V0, float(t), exp.params) for t in times]
    else:
        times, diffs = _nonlinear_differences(exp, V0)
    norms = {s: np.array([sobolev_norm(g, D, s) for D in diffs]) for s in exp.s_list}
    res = DecayResult(np.asarray(times), norms)
    for s in exp.s_list:
        fit = fit_decay_exponent(res.times, norms[s], exp.window)
        res.fits[s] = fit
        try:
            pred = predicted_exponent(s, exp.p)
        except ValueError:
            pred = None
        res.predicted[s] = pred
        if pred is not None:
            res.passed[s] = bool(abs(-fit.exponent - pred) <= exp.tolerance * pred)
    return res


def _nonlinear_differences(exp: DecayExperiment, V0):
    g = exp.grid
    T = exp.force.T if exp.force is not None else None
    if exp.base is not None:
        if exp.force is None:
            raise ValueError("a base orbit needs its force")
        states = exp.base.trajectory.states
        per = len(states) - 1
        if abs(per * exp.dt - T) > 1e-9 * T:
            raise ValueError("experiment dt must match the base orbit's step")
        base_at = lambda n: states[n % per]  # noqa: E731
        U = exp.base.U_T0 + V0
    else:
        base_at = lambda n: 0.0  # noqa: E731
        U = V0.copy()
    stepper = EtdStepper(g, exp.params, exp.dt, exp.force, False, exp.pin_mean)
    n_end = int(round(exp.window[1] / exp.dt))
    wanted = set(np.unique(np.round(_sample_times(exp.window, exp.samples) / exp.dt).astype(int)))
    initial = math.sqrt(float(g.l2_norm_sq(V0).sum()))
    times, diffs = [0.0], [V0]
    for n in range(n_end):
        U = stepper.step(U, n * exp.dt)
        if n + 1 in wanted:
            D = U - base_at(n + 1)
            size = math.sqrt(float(g.l2_norm_sq(D).sum()))
            if size > 2 * initial:
                raise StabilityError(f"difference left stability regime at t={(n + 1) * exp.dt:.4g}")
            times.append((n + 1) * exp.dt)
            diffs.append(D)
    return np.array(times), diffs
