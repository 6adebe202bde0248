"""Empirical constants for the Besov-space inequalities used in the energy estimates.

Each check draws random band-limited fields and records the ratio of the left
side to the right side.  Fields are limited to ``|k_i| <= N/6`` so that every
product fits inside the two-thirds band and is computed without aliasing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, make_grid
from .littlewood_paley import (
    besov_norm,
    block_norms,
    commutator_block_norms,
    covering_ladder,
    gradient,
)

__all__ = ["random_field", "inequality_ratios", "InequalityReport", "check_inequalities", "single_mode_interpolation_ratio"]

COMMUTATOR_INDICES = (0.0, 0.5, 1.0)


def random_field(grid: Grid, rng: np.random.Generator, slope: float, band: int | None = None) -> np.ndarray:
    """Spectral coefficients of a real random field with ``|F| ~ |xi|^-slope`` and no mean."""
    band = grid.N // 6 if band is None else band
    F = grid.forward(rng.standard_normal(grid.physical_shape))
    kx, ky, kz = grid.integer_modes
    keep = (np.abs(kx) <= band) & (np.abs(ky) <= band) & (np.abs(kz) <= band) & (grid.xi_abs > 0)
    weight = np.zeros(grid.spectral_shape)
    weight[keep] = grid.xi_abs[keep] ** -slope
    return F * weight


def _interp(F, ladder):
    return besov_norm(F, ladder, 0.5, 1.0) / math.sqrt(besov_norm(F, ladder, 0.0, math.inf) * besov_norm(F, ladder, 1.0, math.inf))


def inequality_ratios(grid: Grid, ladder, U: np.ndarray, V: np.ndarray, k_axis: int = 0) -> dict:
    """Left/right ratios for one pair of spectral scalar fields."""
    u, v = grid.inverse(U), grid.inverse(V)
    out = {"interpolation": _interp(U, ladder)}
    UV = grid.forward(u * v)
    out["bilinear"] = besov_norm(UV, ladder, 0.5, 1.0) / (besov_norm(U, ladder, 1.0, 2.0) * besov_norm(V, ladder, 1.0, 2.0))
    out["embedding"] = float(np.max(np.abs(u))) / besov_norm(U, ladder, 1.5, 1.0)
    grad_v = besov_norm(gradient(grid, V), ladder, 1.5, 1.0)
    blocks = commutator_block_norms(grid, v, u, ladder, k_axis)
    weights = np.array([2.0**j for j in ladder.indices])
    for s in COMMUTATOR_INDICES:
        lhs = float(np.sqrt(np.sum((weights**s * blocks) ** 2)))
        out[f"commutator_s{s:g}"] = lhs / (grad_v * besov_norm(U, ladder, s, 2.0))
    return out


def single_mode_interpolation_ratio(grid: Grid, ladder=None, k=(2, 0, 0)) -> float:
    """Interpolation ratio for ``cos(xi.x)``; order one by construction."""
    ladder = ladder or covering_ladder(grid)
    X = grid.coordinates
    u = np.cos(sum(grid.k0 * ki * x for ki, x in zip(k, X)))
    return _interp(grid.forward(u), ladder)


@dataclass
class InequalityReport:
    n_fields: int
    maxima: dict
    maxima_doubled: dict = field(default_factory=dict)
    single_mode_interpolation: float | None = None

    @property
    def relative_change(self) -> dict:
        return {k: (self.maxima_doubled[k] - v) / v for k, v in self.maxima.items() if k in self.maxima_doubled}

    def stable(self, threshold: float = 0.1) -> bool:
        ch = self.relative_change
        return bool(ch) and all(np.isfinite(self.maxima_doubled[k]) and abs(c) < threshold for k, c in ch.items())

    def as_dict(self) -> dict:
        return {
            "n_fields": self.n_fields,
            "maxima": self.maxima,
            "maxima_doubled": self.maxima_doubled,
            "relative_change": self.relative_change,
            "single_mode_interpolation": self.single_mode_interpolation,
        }


def check_inequalities(
    grid: Grid | None = None,
    n_fields: int = 100,
    seed: int = 0,
    slopes=(0.0, 1.0, 2.0, 3.0),
    doubling: bool = True,
    band: int | None = None,
) -> InequalityReport:
    """Maximum ratio of every inequality over a seeded corpus, optionally also over twice as many fields.

    The doubled corpus extends the first one (same seed), so any change comes
    from the added fields only.
    """
    grid = grid or make_grid(2 * math.pi, 32)
    ladder = covering_ladder(grid)
    rng = np.random.default_rng(seed)
    total = 2 * n_fields if doubling else n_fields
    rows = []
    for n in range(total):
        slope = slopes[n % len(slopes)]
        U = random_field(grid, rng, slope, band)
        V = random_field(grid, rng, slopes[(n + 1) % len(slopes)], band)
        rows.append(inequality_ratios(grid, ladder, U, V, k_axis=n % 3))
    keys = list(rows[0])
    first = {k: max(r[k] for r in rows[:n_fields]) for k in keys}
    report = InequalityReport(n_fields, first, single_mode_interpolation=single_mode_interpolation_ratio(grid, ladder))
    if doubling:
        report.maxima_doubled = {k: max(r[k] for r in rows) for k in keys}
    return report
