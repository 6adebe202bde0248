import math

import numpy as np
import pytest
import scipy.linalg
from scipy.special import gamma

from periodic_nsf.grid import make_grid
from periodic_nsf.linear import (
    LatticePropagator,
    RadialProfile,
    continuum_decay_probe,
    dispersion_relation,
    eigendecompose,
    high_freq_decay_probe,
    longitudinal_cubic,
    semigroup_apply,
    small_wavenumber_limits,
    spectral_bounds_scan,
    symbol_matrix,
)
from periodic_nsf.littlewood_paley import build_ladder
from periodic_nsf.model import PhysicalParams

RADII = np.geomspace(1e-3, 16, 200)


def mode_xi(grid, idx):
    return np.array([np.broadcast_to(grid.xi[a], grid.spectral_shape)[idx] for a in range(3)])


def random_state(grid, seed, band=None):
    rng = np.random.default_rng(seed)
    F = grid.forward(rng.standard_normal((5, *grid.physical_shape)))
    if band is not None:
        F = F * (grid.xi_abs <= band)
    return F


class TestSymbol:
    def test_dissipative_hermitian_part(self, params):
        for xi in ([1, 0, 0], [0.3, -2, 1.1], [5, 5, 5]):
            A = symbol_matrix(xi, params)
            herm = 0.5 * (A + A.conj().T)
            assert np.linalg.eigvalsh(herm).max() <= 1e-12

    def test_cubic_roots_match_eigenvalues(self, params):
        for k in (0.01, 0.7, 3.0, 12.0):
            roots = np.sort_complex(np.roots(longitudinal_cubic(k, params)))
            lam = eigendecompose([0, k, 0], params).lambdas
            lam_long = [l for l in lam if abs(l - (-(params.mu / params.rho_inf) * k * k)) > 1e-9 * k * k]
            assert len(lam_long) == 3
            for l in lam_long:
                assert np.min(np.abs(roots - l)) < 1e-9 * max(1.0, abs(l))

    def test_eigendecompose_rejects_zero(self, params):
        with pytest.raises(ValueError, match="xi = 0"):
            eigendecompose([0, 0, 0], params)

    @pytest.mark.parametrize("xi", [[1, 0, 0], [0.2, 0.1, -0.3], [3, -4, 2]])
    def test_projections_reproduce_expm(self, params, xi):
        ms = eigendecompose(xi, params)
        assert np.abs(sum(ms.projections) - np.eye(5)).max() < 1e-12
        assert ms.multiplicities.sum() == 5
        for t in (0.1, 1.0, 10.0):
            ref = scipy.linalg.expm(t * symbol_matrix(xi, params))
            assert np.abs(ms.propagator(t) - ref).max() < 1e-12

    def test_shear_eigenvalue_is_double(self, params):
        ms = eigendecompose([0, 0, 2.0], params)
        idx = np.argmin(np.abs(ms.lambdas + 4.0))
        assert ms.lambdas[idx] == pytest.approx(-4.0) and ms.multiplicities[idx] == 2


class TestSpectralBounds:
    def test_small_wavenumber_limits(self, params):
        assert np.allclose(small_wavenumber_limits(params), [0.4, 1.0, 17 / 15, 17 / 15], rtol=1e-12)

    def test_scan_against_root_oracle(self, params):
        b = spectral_bounds_scan(params, RADII)
        # independent: roots of the monic cubic plus the shear line
        roots = np.array([np.roots(longitudinal_cubic(k, params)) for k in RADII])
        re = np.concatenate([roots.real, -(params.mu / params.rho_inf) * RADII[:, None] ** 2], axis=1)
        assert b.beta == pytest.approx(-re[RADII > b.r0].max(), rel=1e-9)
        ratios = -re / RADII[:, None] ** 2
        inside = RADII <= b.r0
        assert b.c_low == pytest.approx(ratios[inside].min(), rel=1e-9)
        assert b.c_high == pytest.approx(ratios[inside].max(), rel=1e-9)

    def test_frozen_default_bounds(self, params):
        b = spectral_bounds_scan(params, RADII)
        assert b.r0 == pytest.approx(1.7073, rel=1e-4)
        assert b.beta == pytest.approx(0.44356, rel=1e-4)
        assert b.c_low == pytest.approx(0.1496, rel=1e-3)
        assert b.c_high == pytest.approx(1.4939, rel=1e-4)

    def test_low_radius_ratios_approach_limits(self, params):
        lam = dispersion_relation(params, [1e-4])[0]
        assert np.allclose(np.sort(-lam.real / 1e-8), [0.4, 1, 17 / 15, 17 / 15], rtol=1e-6)

    def test_rejects_bad_radii(self, params):
        with pytest.raises(ValueError):
            spectral_bounds_scan(params, [1.0])
        with pytest.raises(ValueError):
            spectral_bounds_scan(params, [0.0, 1.0])


class TestSemigroup:
    def test_semigroup_law(self, params, grid16):
        U = random_state(grid16, 0)
        a = semigroup_apply(grid16, semigroup_apply(grid16, U, 0.3, params), 0.7, params)
        b = semigroup_apply(grid16, U, 1.0, params)
        assert np.abs(a - b).max() / np.abs(b).max() < 1e-12

    def test_matches_per_mode_expm(self, params, grid16):
        U = random_state(grid16, 1)
        W = semigroup_apply(grid16, U, 0.5, params)
        for idx in [(1, 0, 0), (3, 5, 2), (15, 2, 7)]:
            xi = mode_xi(grid16, idx)
            ref = scipy.linalg.expm(0.5 * symbol_matrix(xi, params)) @ U[(slice(None), *idx)]
            assert np.abs(W[(slice(None), *idx)] - ref).max() < 1e-12 * max(1, np.abs(ref).max())

    def test_contraction(self, params, grid16):
        U = random_state(grid16, 2)
        norms = [grid16.l2_norm_sq(semigroup_apply(grid16, U, t, params)).sum() for t in (0, 0.1, 1, 5)]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))

    def test_mean_mode_is_fixed(self, params, grid16):
        U = random_state(grid16, 3)
        W = semigroup_apply(grid16, U, 2.0, params)
        assert np.array_equal(W[:, 0, 0, 0], U[:, 0, 0, 0])

    def test_negative_time(self, params, grid16):
        with pytest.raises(ValueError):
            semigroup_apply(grid16, grid16.zeros(5), -1.0, params)

    def test_phi_functions_against_augmented_expm(self, params, grid16):
        h = 0.3
        prop = LatticePropagator(grid16, params, h, order=2)
        U = random_state(grid16, 4)
        P1, P2 = prop.phi1(U), prop.phi2(U)
        idx = (2, 3, 1)
        A = h * symbol_matrix(mode_xi(grid16, idx), params)
        M = np.zeros((15, 15), dtype=complex)
        M[:5, :5] = A
        M[:5, 5:10] = np.eye(5)
        M[5:10, 10:] = np.eye(5)
        E = scipy.linalg.expm(M)
        u = U[(slice(None), *idx)]
        assert np.allclose(P1[(slice(None), *idx)], E[:5, 5:10] @ u, rtol=1e-12, atol=1e-12)
        assert np.allclose(P2[(slice(None), *idx)], E[:5, 10:] @ u, rtol=1e-12, atol=1e-12)


class TestProbes:
    @pytest.mark.parametrize("s", [0.0, 1.0])
    def test_gaussian_shear_closed_form(self, params, s):
        times = np.array([0.0, 1.0, 10.0])
        got = continuum_decay_probe(s, RadialProfile.gaussian(), times, params)
        a = 1.0 + 2 * (params.mu / params.rho_inf) * times
        expect = np.sqrt(4 * math.pi * gamma(1.5 + s) / (2 * a ** (1.5 + s)) / (2 * math.pi) ** 3)
        assert np.allclose(got, expect, rtol=1e-6)

    def test_divergent_datum(self, params):
        with pytest.raises(ValueError, match="diverges"):
            continuum_decay_probe(0.0, RadialProfile(exponent=-2.0), [1.0], params)

    def test_high_frequency_mode_decays_at_slowest_branch(self, params):
        g = make_grid(2 * math.pi, 32)
        lad = build_ladder(g)
        V0 = g.zeros(5)
        rng = np.random.default_rng(0)
        V0[:, 8, 0, 0] = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        V0[:, -8, 0, 0] = V0[:, 8, 0, 0].conj()
        times = np.linspace(3, 8, 11)
        norms = high_freq_decay_probe(g, V0, 2, times, params, lad)
        slope = np.polyfit(times, np.log(norms), 1)[0]
        rate = dispersion_relation(params, [8.0])[0].real.max()
        assert slope == pytest.approx(rate, rel=1e-2)
