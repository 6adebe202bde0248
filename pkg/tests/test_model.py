import math

import numpy as np
import pytest

from periodic_nsf.grid import make_grid
from periodic_nsf.model import (
    CallablePressure,
    ForceMode,
    ForceSpec,
    IdealGas,
    PhysicalParams,
    PolynomialPressure,
    PrimitiveState,
    VacuumError,
    default_force,
    dissipation,
    energy_functional,
    force_eval,
    from_energy_state,
    nonlinear_terms,
    nonlinear_terms_reference,
    pressure_constants,
    to_energy_state,
)


def smooth_state(grid, amp, seed=0):
    rng = np.random.default_rng(seed)
    band = (grid.xi_abs > 0) & (grid.xi_abs <= 3)

    def field(n):
        return grid.inverse(grid.forward(rng.standard_normal((n, *grid.physical_shape))) * band)

    raw = field(5)
    raw *= amp / np.abs(raw).max()
    return PrimitiveState(sigma=raw[0], v=raw[1:4], eta=raw[4])


class TestPressure:
    def test_ideal_gas_constants(self):
        assert pressure_constants(IdealGas(), 1.0, 1.0) == (1.0, 1.0, 0.0, 1.0)

    def test_polynomial_matches_ideal(self):
        poly = PolynomialPressure(((0, 0), (0, 1.0)))
        assert pressure_constants(poly, 1.3, 0.7) == pytest.approx(pressure_constants(IdealGas(), 1.3, 0.7))

    def test_polynomial_second_derivatives(self):
        # P = rho^2 theta + 2 rho theta^2 at (2, 3)
        poly = PolynomialPressure(((0, 0, 0), (0, 0, 2.0), (0, 1.0)))
        p1, p2, q1, q2 = pressure_constants(poly, 2.0, 3.0)
        assert (p1, p2, q1, q2) == pytest.approx((2 * 2 * 3 + 2 * 9, 4 + 4 * 2 * 3, 2 * 3, 2 * 2 + 4 * 3))

    def test_callable_matches_closed_form(self):
        law = CallablePressure(lambda r, t: r**1.4 * t)
        p1, p2, q1, q2 = pressure_constants(law, 1.2, 0.9)
        assert p1 == pytest.approx(1.4 * 1.2**0.4 * 0.9, rel=1e-8)
        assert p2 == pytest.approx(1.2**1.4, rel=1e-8)
        assert q1 == pytest.approx(1.4 * 0.4 * 1.2**-0.6 * 0.9, rel=1e-5)
        assert q2 == pytest.approx(1.4 * 1.2**0.4, rel=1e-5)

    def test_unstable_law_rejected(self):
        with pytest.raises(ValueError, match="stability conditions violated"):
            PhysicalParams(pressure=CallablePressure(lambda r, t: -r * t))


class TestParams:
    def test_derived_factors(self, params):
        assert params.kinetic_factor == 2.0
        assert params.density_factor == 1.0
        assert params.energy_scale == pytest.approx(1 / math.sqrt(1.5))
        assert params.longitudinal_viscosity == 2.0
        assert params.thermal_diffusivity == pytest.approx(1 / 1.5)

    @pytest.mark.parametrize("kw", [{"mu": 0.0}, {"mu": 1.0, "mu_prime": -1.0}])
    def test_viscosity_restrictions(self, kw):
        with pytest.raises(ValueError, match="thermodynamic restrictions violated"):
            PhysicalParams(**kw)

    @pytest.mark.parametrize("kw", [{"kappa": 0.0}, {"c_v": -1.0}, {"rho_inf": 0.0}])
    def test_other_restrictions(self, kw):
        with pytest.raises(ValueError):
            PhysicalParams(**kw)


class TestEnergy:
    def test_pure_temperature(self, params):
        h = np.array([0.01, -0.02])
        st = PrimitiveState(sigma=np.zeros(2), v=np.zeros((3, 2)), eta=h)
        assert np.allclose(energy_functional(st, params), 1.5 * h)

    def test_pure_velocity(self, params):
        st = PrimitiveState(sigma=np.zeros(1), v=np.array([[1.0], [1.0], [0.0]]), eta=np.zeros(1))
        assert energy_functional(st, params)[0] == pytest.approx(2.0)

    def test_round_trip(self, params, grid16):
        st = smooth_state(grid16, 0.2)
        back = from_energy_state(to_energy_state(st, params), params)
        for a, b in ((st.sigma, back.sigma), (st.v, back.v), (st.eta, back.eta)):
            assert np.abs(a - b).max() < 1e-14

    def test_vacuum(self, params):
        U = np.zeros((5, 2))
        U[0] = [-2.0, 0.0]
        with pytest.raises(VacuumError, match="vacuum"):
            from_energy_state(U, params)


class TestNonlinear:
    def test_fast_matches_reference(self, params, grid16):
        # low trigonometric state: every product the two routes form stays unaliased,
        # so they may differ only by rounding
        x, y, z = grid16.coordinates
        one = np.ones(grid16.physical_shape)
        v = 0.1 * np.stack([np.cos(y) * one, np.sin(z + x) * one, np.cos(2 * x) * one])
        st = PrimitiveState(0.1 * np.sin(x) * np.cos(y) * one, v, 0.1 * np.cos(x + y + z) * one)
        f = 0.3 * default_force().profile(grid16)
        G1, H1 = nonlinear_terms(grid16, st, params, f)
        G2, H2 = nonlinear_terms_reference(grid16, st, params, f)
        scale = max(np.abs(G2).max(), np.abs(H2).max())
        assert np.abs(G1 - G2).max() / scale < 1e-12
        assert np.abs(H1 - H2).max() / scale < 1e-12

    def test_vanish_at_rest(self, params, grid16):
        z = np.zeros(grid16.physical_shape)
        G, H = nonlinear_terms(grid16, PrimitiveState(z, np.zeros((3, *z.shape)), z), params)
        assert np.abs(G).max() == 0 and np.abs(H).max() < 1e-14

    def test_quadratic_scaling(self, params, grid16):
        norms = []
        for amp in (1e-3, 2e-3):
            G, H = nonlinear_terms(grid16, smooth_state(grid16, amp, seed=3), params)
            norms.append(math.sqrt(grid16.l2_norm_sq(G).sum() + grid16.l2_norm_sq(H)))
        assert norms[1] / norms[0] == pytest.approx(4.0, rel=1e-2)

    def test_dissipation_of_shear(self, params, grid16):
        x = grid16.coordinates[0]
        v = np.zeros((3, *grid16.physical_shape))
        v[1] = np.sin(x)
        # only d_x v_y = cos x is nonzero: Psi = mu/2 * 2 cos^2 x
        assert np.allclose(dissipation(grid16, v, params), np.cos(x) ** 2 * np.ones(grid16.physical_shape), atol=1e-12)


class TestForce:
    def test_waveform_is_exactly_periodic(self):
        f = ForceSpec(T=0.7, eps=1.0, cos=(1.0, 0.3), sin=(0.2,), mean=0.1)
        for t in (0.13, 1.9, 5.55):
            assert f.waveform(t) == pytest.approx(f.waveform(t + 0.7 * 3), abs=1e-14)
        g = ForceSpec(T=0.5, eps=1.0, cos=(1.0, 0.3), sin=(0.2,))
        for t in (0.125, 0.3125, 3.0):
            assert g.waveform(t) == g.waveform(t + 0.5) == g.waveform(t + 8 * 0.5)

    def test_harmonics_reconstruct_waveform(self):
        f = ForceSpec(T=2.0, eps=1.0, cos=(1.0, 0.3), sin=(0.2,), mean=0.1)
        for t in np.linspace(0, 2, 7):
            w = sum(c * np.exp(1j * n * f.omega * t) for n, c in f.harmonic_coefficients().items())
            assert w.real == pytest.approx(f.waveform(t)) and abs(w.imag) < 1e-14

    def test_profile_and_eval(self, grid16):
        f = default_force(T=1.0, eps=0.5)
        x = grid16.coordinates[0]
        prof = f.profile(grid16)
        assert np.allclose(prof[1], np.cos(x) * np.ones(grid16.physical_shape))
        assert np.allclose(prof[0], np.sin(x) * np.ones(grid16.physical_shape))
        assert np.all(prof[2] == 0)
        assert np.allclose(force_eval(f, grid16, 0.5), -0.5 * prof)
        assert f.max_wavenumber() == 1

    def test_bad_component(self):
        with pytest.raises(ValueError):
            ForceSpec(T=1.0, eps=1.0, modes=(ForceMode((1, 0, 0), 3),))

    def test_bad_period(self):
        with pytest.raises(ValueError):
            ForceSpec(T=0.0, eps=1.0)
