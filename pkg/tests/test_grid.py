import math

import numpy as np
import pytest

from periodic_nsf.grid import dealias, forward_transform, inverse_transform, make_grid


class TestMakeGrid:
    def test_wavenumbers_unit_spacing(self):
        g = make_grid(2 * math.pi, 8)
        kx = np.unique(g.integer_modes[0])
        assert list(kx) == [-3, -2, -1, 0, 1, 2, 3, 4]
        assert g.k0 == pytest.approx(1.0)

    def test_smallest_wavenumber(self):
        g = make_grid(4 * math.pi, 16)
        assert np.min(g.xi_abs[g.xi_abs > 0]) == pytest.approx(0.5)

    @pytest.mark.parametrize("L,N", [(2 * math.pi, 7), (2 * math.pi, 6), (0.0, 8), (-1.0, 8)])
    def test_rejects_bad_input(self, L, N):
        with pytest.raises(ValueError):
            make_grid(L, N)


class TestTransforms:
    def test_constant_maps_to_mean_mode(self):
        g = make_grid(2 * math.pi, 8)
        F = forward_transform(g, np.ones(g.physical_shape))
        assert F[0, 0, 0] == pytest.approx((2 * math.pi) ** 3)
        F[0, 0, 0] = 0
        assert np.abs(F).max() < 1e-12

    def test_cosine_single_pair(self):
        g = make_grid(2 * math.pi, 8)
        x = g.coordinates[0]
        F = forward_transform(g, np.broadcast_to(np.cos(x), g.physical_shape))
        assert F[1, 0, 0] == pytest.approx((2 * math.pi) ** 3 / 2)
        assert F[-1, 0, 0] == pytest.approx((2 * math.pi) ** 3 / 2)
        F[1, 0, 0] = F[-1, 0, 0] = 0
        assert np.abs(F).max() < 1e-10

    def test_round_trip_and_parseval(self, rng):
        g = make_grid(3.0, 16)
        f = rng.standard_normal(g.physical_shape)
        F = forward_transform(g, f)
        back = inverse_transform(g, F)
        assert np.abs(back - f).max() / np.abs(f).max() < 1e-12
        direct = np.sum(f**2) * g.dx**3
        assert abs(g.l2_norm_sq(F) - direct) / direct < 1e-12

    def test_derivative_commutes(self):
        g = make_grid(2 * math.pi, 16)
        x, y, z = g.coordinates
        f = np.sin(2 * x) * np.cos(y) + np.cos(3 * z + x)
        dfdx = 2 * np.cos(2 * x) * np.cos(y) - np.sin(3 * z + x)
        F = g.forward(f)
        assert np.abs(g.ik[0] * F - g.forward(np.broadcast_to(dfdx, g.physical_shape))).max() < 1e-10

    def test_rejects_non_hermitian(self):
        g = make_grid(2 * math.pi, 8)
        F = g.zeros()
        F[1, 0, 0] = 1.0
        with pytest.raises(ValueError, match="Hermitian"):
            inverse_transform(g, F)

    def test_rejects_non_finite(self):
        g = make_grid(2 * math.pi, 8)
        f = np.zeros(g.physical_shape)
        f[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            forward_transform(g, f)

    def test_zero_round_trip(self):
        g = make_grid(2 * math.pi, 8)
        assert np.all(inverse_transform(g, g.zeros()) == 0)


class TestDealias:
    def test_low_band_unchanged_and_idempotent(self, rng):
        g = make_grid(2 * math.pi, 12)
        F = g.forward(rng.standard_normal(g.physical_shape))
        low = F * (g.xi_abs <= 3)
        assert np.array_equal(dealias(g, low), low)
        once = dealias(g, F)
        assert np.array_equal(dealias(g, once), once)

    def test_nyquist_zeroed(self):
        g = make_grid(2 * math.pi, 12)
        F = np.ones(g.spectral_shape, dtype=complex)
        D = dealias(g, F)
        assert np.all(D[6] == 0) and np.all(D[:, 6] == 0) and np.all(D[..., 6] == 0)
