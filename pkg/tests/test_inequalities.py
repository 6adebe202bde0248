import math

import numpy as np
import pytest

from periodic_nsf.grid import make_grid
from periodic_nsf.inequalities import (
    check_inequalities,
    inequality_ratios,
    random_field,
    single_mode_interpolation_ratio,
)
from periodic_nsf.littlewood_paley import covering_ladder


def _step(r):
    # smooth step rebuilt from its definition
    lo, hi = 0.75, 4 / 3
    if r <= lo:
        return 1.0
    if r >= hi:
        return 0.0
    a, b = math.exp(-1 / (hi - r)), math.exp(-1 / (r - lo))
    return a / (a + b)


def test_single_mode_interpolation_oracle():
    g = make_grid(2 * math.pi, 32)
    # k = 2 lies in blocks j = 0 and j = 1 only
    w0 = _step(1.0) - _step(2.0)
    w1 = _step(0.5) - _step(1.0)
    expect = (w0 + math.sqrt(2) * w1) / math.sqrt(max(w0, w1) * max(w0, 2 * w1))
    assert single_mode_interpolation_ratio(g) == pytest.approx(expect, rel=1e-12)


def test_random_field_band_and_mean():
    g = make_grid(2 * math.pi, 24)
    F = random_field(g, np.random.default_rng(0), 1.0)
    kx, ky, kz = g.integer_modes
    outside = (np.abs(kx) > 4) | (np.abs(ky) > 4) | (np.abs(kz) > 4)
    assert np.all(F[outside] == 0) and F[0, 0, 0] == 0


def test_bilinear_product_is_unaliased():
    g = make_grid(2 * math.pi, 24)
    rng = np.random.default_rng(1)
    U, V = random_field(g, rng, 0.0), random_field(g, rng, 0.0)
    prod = g.forward(g.inverse(U) * g.inverse(V))
    assert np.all(np.abs(prod[~g.dealias_mask]) < 1e-9 * np.abs(prod).max())


def test_ratios_are_scale_invariant():
    g = make_grid(2 * math.pi, 24)
    lad = covering_ladder(g)
    rng = np.random.default_rng(2)
    U, V = random_field(g, rng, 1.0), random_field(g, rng, 2.0)
    a = inequality_ratios(g, lad, U, V)
    b = inequality_ratios(g, lad, 3.0 * U, 0.5 * V)
    for k in a:
        assert a[k] == pytest.approx(b[k], rel=1e-10)
    assert set(a) == {"interpolation", "bilinear", "embedding", "commutator_s0", "commutator_s0.5", "commutator_s1"}


def test_small_corpus_report():
    rep = check_inequalities(make_grid(2 * math.pi, 24), n_fields=8, seed=0)
    assert rep.n_fields == 8
    assert all(np.isfinite(v) and v > 0 for v in rep.maxima.values())
    assert all(rep.maxima_doubled[k] >= rep.maxima[k] for k in rep.maxima)
    assert set(rep.as_dict()["relative_change"]) == set(rep.maxima)


def test_no_doubling_means_not_stable():
    rep = check_inequalities(make_grid(2 * math.pi, 24), n_fields=4, doubling=False)
    assert rep.maxima_doubled == {} and not rep.stable()
