import math

import numpy as np
import pytest

from periodic_nsf.grid import make_grid
from periodic_nsf.littlewood_paley import (
    besov_norm,
    block_norms,
    build_ladder,
    bump,
    commutator_block,
    commutator_block_norms,
    covering_ladder,
    dyadic_block,
    low_cutoff,
    smooth_step,
    sobolev_norm,
)

# sqrt of min / max over r in [1, 2] of sum_j 2^{2js} phi(2^-j r)^2 / r^{2s},
# computed once by an independent radial evaluation of the same bump
EQUIVALENCE = {
    0.0: (0.7071067813222555, 1.0),
    0.5: (0.5732578290364576, 0.908577490838328),
    1.0: (0.45214662084845, 0.8352264634378357),
}


@pytest.fixture(scope="module")
def g64():
    return make_grid(2 * math.pi, 64)


def band_limited_field(grid, ladder, rng, components=1):
    lo, hi = ladder.covered_band
    F = grid.forward(rng.standard_normal((components, *grid.physical_shape)))
    return F * ((grid.xi_abs >= lo) & (grid.xi_abs <= hi))


class TestBump:
    def test_step_plateaus(self):
        r = np.array([0.0, 0.5, 0.75, 4 / 3, 2.0])
        assert np.array_equal(smooth_step(r), [1, 1, 1, 0, 0])

    def test_step_monotone_and_smooth_range(self):
        r = np.linspace(0.75, 4 / 3, 501)
        s = smooth_step(r)
        assert np.all(np.diff(s) <= 0) and 0 <= s.min() and s.max() <= 1

    def test_support(self):
        r = np.linspace(0, 4, 4001)
        b = bump(r)
        assert np.all(b[(r <= 0.75) | (r >= 8 / 3)] == 0)
        assert np.all(b[(r > 0.8) & (r < 2.5)] > 0)

    def test_telescoping_on_line(self):
        r = np.geomspace(0.01, 100, 2000)
        total = sum(bump(r * 2.0**-j) for j in range(-10, 10))
        assert np.abs(total - 1).max() < 1e-14


class TestLadder:
    def test_default_range(self, g64):
        lad = build_ladder(g64)
        assert (lad.j_min, lad.j_max) == (-1, 4)

    def test_partition_of_unity_on_covered_band(self, g64):
        lad = build_ladder(g64)
        lo, hi = lad.covered_band
        band = (g64.xi_abs >= lo) & (g64.xi_abs <= hi)
        assert np.abs(lad.partition_sum()[band] - 1).max() < 1e-12

    def test_partition_sum_is_telescoped_step(self, g64):
        lad = build_ladder(g64)
        r = g64.xi_abs
        expect = smooth_step(r * 2.0 ** -(lad.j_max + 1)) - smooth_step(r * 2.0**-lad.j_min)
        assert np.abs(lad.partition_sum() - expect).max() < 1e-14

    def test_covering_ladder_reaches_corner(self, g64):
        lad = covering_ladder(g64)
        assert lad.covered_band[1] >= g64.xi_abs.max()
        F = g64.forward(np.random.default_rng(0).standard_normal(g64.physical_shape))
        assert lad.uncovered_fraction(F) == 0.0

    def test_too_small_grid(self):
        with pytest.raises(ValueError, match="too small"):
            build_ladder(make_grid(2 * math.pi, 8), 1, 1)

    def test_index_out_of_range(self, g64):
        lad = build_ladder(g64)
        with pytest.raises(IndexError):
            dyadic_block(g64.zeros(), lad, 7)
        with pytest.raises(IndexError):
            low_cutoff(g64.zeros(), lad, lad.j_max + 2)

    def test_blocks_sum_to_field(self, g64):
        lad = build_ladder(g64)
        F = band_limited_field(g64, lad, np.random.default_rng(1))[0]
        total = sum(dyadic_block(F, lad, j) for j in lad.indices)
        assert np.abs(total - F).max() <= 1e-12 * np.abs(F).max()
        assert np.allclose(low_cutoff(F, lad, lad.j_max + 1), total)

    def test_uncovered_fraction_of_high_mode(self, g64):
        lad = build_ladder(g64)
        x = g64.coordinates[0]
        F = g64.forward(np.broadcast_to(np.cos(30 * x), g64.physical_shape))
        assert lad.uncovered_fraction(F) == pytest.approx(1.0)


class TestNorms:
    @pytest.mark.parametrize("s", [0.0, 0.5, 1.0, -0.5])
    def test_single_mode(self, g64, s):
        a = 0.3
        x = g64.coordinates[0]
        F = g64.forward(np.broadcast_to(a * np.cos(6 * x), g64.physical_shape))
        expect = 2.0 ** (2 * s) * a * math.sqrt(g64.volume / 2)
        for r in (1.0, 2.0, np.inf):
            assert besov_norm(F, build_ladder(g64), s, r) == pytest.approx(expect, rel=1e-12)

    def test_sobolev_single_mode(self, g64):
        x = g64.coordinates[0]
        F = g64.forward(np.broadcast_to(np.cos(6 * x), g64.physical_shape))
        assert sobolev_norm(g64, F, 1.0) == pytest.approx(6 * math.sqrt(g64.volume / 2), rel=1e-12)

    def test_zero_field(self, g64):
        assert besov_norm(g64.zeros(), build_ladder(g64), 0.5, 1.0) == 0.0

    @pytest.mark.parametrize("s", sorted(EQUIVALENCE))
    def test_sobolev_equivalence_constants(self, g64, s):
        lad = build_ladder(g64)
        lo_c, hi_c = EQUIVALENCE[s]
        rng = np.random.default_rng(7)
        for _ in range(5):
            F = band_limited_field(g64, lad, rng)[0]
            ratio = besov_norm(F, lad, s, 2.0) / sobolev_norm(g64, F, s)
            assert lo_c * (1 - 1e-9) <= ratio <= hi_c * (1 + 1e-9)

    def test_equivalence_bounds_are_attained_radially(self, g64):
        # single shells realise the extremal ratio to within a few percent
        lad = build_ladder(g64)
        ratios = []
        for k in range(2, 20):
            x = g64.coordinates[0]
            F = g64.forward(np.broadcast_to(np.cos(k * x), g64.physical_shape))
            ratios.append(besov_norm(F, lad, 0.0, 2.0) / sobolev_norm(g64, F, 0.0))
        assert max(ratios) == pytest.approx(1.0, abs=1e-12)
        assert min(ratios) < 0.8

    def test_monotone_in_r(self, g64):
        lad = build_ladder(g64)
        F = band_limited_field(g64, lad, np.random.default_rng(3))[0]
        n1, n2, ninf = (besov_norm(F, lad, 0.5, r) for r in (1.0, 2.0, np.inf))
        assert n1 >= n2 >= ninf

    def test_rejects_bad_indices(self, g64):
        lad = build_ladder(g64)
        with pytest.raises(ValueError):
            besov_norm(g64.zeros(), lad, np.nan)
        with pytest.raises(ValueError):
            besov_norm(g64.zeros(), lad, 0.0, 0.5)

    def test_vector_field_blocks(self, g64):
        lad = build_ladder(g64)
        F = band_limited_field(g64, lad, np.random.default_rng(4), components=3)
        per = np.sqrt(sum(block_norms(F[i], lad) ** 2 for i in range(3)))
        assert np.allclose(block_norms(F, lad), per, rtol=1e-13)


class TestCommutator:
    def test_constant_coefficient_commutes(self):
        g = make_grid(2 * math.pi, 32)
        lad = build_ladder(g)
        u = np.random.default_rng(5).standard_normal(g.physical_shape)
        v = np.full(g.physical_shape, 2.5)
        assert commutator_block_norms(g, v, u, lad, 0).max() < 1e-10

    def test_block_matches_norms(self):
        g = make_grid(2 * math.pi, 32)
        lad = build_ladder(g)
        x, y, _ = g.coordinates
        v = np.broadcast_to(np.sin(x) * np.cos(2 * y), g.physical_shape)
        u = np.broadcast_to(np.cos(5 * x + y), g.physical_shape)
        norms = commutator_block_norms(g, v, u, lad, 1)
        for n, j in enumerate(lad.indices):
            C = g.forward(commutator_block(g, v, u, lad, j, 1))
            assert math.sqrt(g.l2_norm_sq(C)) == pytest.approx(norms[n], abs=1e-12)
        assert norms.max() > 1e-3
