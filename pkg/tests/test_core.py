import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linpot import (
    NATURAL,
    Free,
    GaussianSpec,
    Linear,
    PiecewiseLinear,
    Sampled,
    SpatialGrid,
    UnitSystem,
    gaussian_width_at,
    l2_distance,
    mean_momentum,
    mean_position,
    sample_gaussian,
    si_units,
    spatial_width,
    to_momentum_rep,
    to_position_rep,
)
from linpot.errors import CoverageError, NormalizationError
from linpot.tunneling import animation_scenario

from conftest import direct_dft


class TestGrid:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            SpatialGrid(-1.0, 1.0, 1000)

    def test_rejects_tiny(self):
        with pytest.raises(ValueError):
            SpatialGrid(-1.0, 1.0, 8)

    def test_spacings(self):
        g = SpatialGrid(-16.0, 16.0, 1024)
        assert g.dx == 32.0 / 1024
        assert g.dk == pytest.approx(2 * np.pi / 32.0, rel=1e-15)
        assert len(g.x) == 1024
        assert g.x[0] == -16.0
        # right endpoint excluded (periodic grid)
        assert g.x[-1] == pytest.approx(16.0 - g.dx)

    def test_sorted_momenta_are_sorted_wraparound(self):
        g = SpatialGrid(-16.0, 16.0, 64)
        assert np.all(np.diff(g.k_sorted) > 0)
        assert set(g.k_sorted) == set(g.k_wrap)

    def test_immutability(self):
        g = SpatialGrid(-16.0, 16.0, 64)
        with pytest.raises(AttributeError):
            g.x_min = 0.0


class TestGaussianSampling:
    def test_peak_amplitude_real(self):
        g = SpatialGrid(-16.0, 16.0, 1024)
        psi = sample_gaussian(GaussianSpec(0.0, 0.0, 1.0), g)
        i0 = np.argmin(np.abs(g.x))
        assert g.x[i0] == 0.0
        assert psi.amps[i0] == pytest.approx(np.pi ** -0.25, rel=1e-14)
        assert np.max(np.abs(psi.amps.imag)) == 0.0
        assert abs(psi.norm2() - 1.0) < 1e-10

    def test_momentum_boost_is_pure_phase(self):
        g = SpatialGrid(-16.0, 16.0, 1024)
        rest = sample_gaussian(GaussianSpec(0.0, 0.0, 1.0), g)
        boosted = sample_gaussian(GaussianSpec(0.0, 5.0, 1.0), g)
        np.testing.assert_allclose(np.abs(boosted.amps), np.abs(rest.amps), atol=1e-15)
        # unwrapped phase gradient equals p0/hbar in the packet's core
        core = np.abs(g.x) < 3.0
        phase = np.unwrap(np.angle(boosted.amps[core]))
        grad = np.gradient(phase, g.dx)
        np.testing.assert_allclose(grad, 5.0, atol=1e-8)

    def test_si_animation_initial_state(self):
        sc = animation_scenario()
        units = si_units(sc.mass)
        g = SpatialGrid(-8 * sc.sigma, 8 * sc.sigma, 8192)
        psi = sample_gaussian(GaussianSpec(0.0, sc.p0, sc.sigma), g, units)
        assert abs(psi.norm2() - 1.0) < 1e-10
        assert mean_momentum(psi, units) == pytest.approx(sc.mass * 1.0, rel=1e-8)
        assert spatial_width(psi) == pytest.approx(0.002, rel=1e-8)

    def test_coverage_error_names_deficit(self):
        g = SpatialGrid(-4.0, 4.0, 64)
        with pytest.raises(CoverageError, match="sigma"):
            sample_gaussian(GaussianSpec(0.0, 0.0, 1.0), g)

    def test_marginal_coverage_warns(self):
        g = SpatialGrid(-7.0, 7.0, 256)
        with pytest.warns(UserWarning, match="norm error"):
            sample_gaussian(GaussianSpec(0.0, 0.0, 1.0), g)


class TestObservables:
    def test_gaussian_means(self, grid):
        psi = sample_gaussian(GaussianSpec(3.0, 2.0, 1.0), grid)
        assert mean_position(psi) == pytest.approx(3.0, abs=1e-12)
        assert mean_momentum(psi) == pytest.approx(2.0, abs=1e-12)

    def test_width_conventions(self, grid):
        psi = sample_gaussian(GaussianSpec(0.0, 0.0, 1.0), grid)
        assert spatial_width(psi) == pytest.approx(1.0, rel=1e-12)
        assert spatial_width(psi, "rms") == pytest.approx(1.0 / np.sqrt(2), rel=1e-12)

    def test_free_width_law_reference_point(self, grid):
        # hbar*dt/(m sigma^2) = 1 doubles the variance: width sqrt(2)
        assert gaussian_width_at(1.0, 1.0) == pytest.approx(np.sqrt(2.0), rel=1e-15)

    def test_requires_normalized(self, grid):
        psi = sample_gaussian(GaussianSpec(0.0, 0.0, 1.0), grid)
        bad = psi.with_amps(psi.amps * 2.0)
        with pytest.raises(NormalizationError):
            mean_position(bad)

    @given(
        x0=st.floats(-4, 4),
        p0=st.floats(-8, 8),
        sigma=st.floats(0.3, 2.0),
    )
    @settings(max_examples=25, deadline=None)
    def test_sample_measure_round_trip(self, x0, p0, sigma):
        g = SpatialGrid(-32.0, 32.0, 2048)
        psi = sample_gaussian(GaussianSpec(x0, p0, sigma), g)
        assert mean_position(psi) == pytest.approx(x0, rel=1e-8, abs=1e-8)
        assert mean_momentum(psi) == pytest.approx(p0, rel=1e-8, abs=1e-8)
        assert spatial_width(psi) == pytest.approx(sigma, rel=1e-8)


class TestFourierPair:
    def test_round_trip(self, packet):
        back = to_position_rep(to_momentum_rep(packet))
        assert l2_distance(packet, back) < 1e-13

    def test_matches_direct_dft(self):
        g = SpatialGrid(-8.0, 8.0, 64)
        psi = sample_gaussian(GaussianSpec(0.5, 1.0, 0.9), g)
        p_ref, amps_ref = direct_dft(psi)
        tilde = to_momentum_rep(psi)
        np.testing.assert_allclose(tilde.p_axis, p_ref, atol=1e-12)
        np.testing.assert_allclose(tilde.amps, amps_ref, atol=1e-12)

    def test_parseval(self, packet):
        tilde = to_momentum_rep(packet)
        assert abs(packet.norm2() - tilde.norm2()) < 1e-12

    def test_momentum_gaussian_width(self):
        g = SpatialGrid(-32.0, 32.0, 2048)
        for sigma in (0.5, 1.0, 2.0):
            psi = sample_gaussian(GaussianSpec(0.0, 0.0, sigma), g)
            tilde = to_momentum_rep(psi)
            rho = tilde.density()
            mean = np.sum(tilde.p_axis * rho) * tilde.dstep
            var = np.sum((tilde.p_axis - mean) ** 2 * rho) * tilde.dstep
            width = np.sqrt(2.0 * var)
            assert width == pytest.approx(1.0 / sigma, rel=1e-10)

    def test_shift_theorem(self):
        g = SpatialGrid(-32.0, 32.0, 2048)
        psi = sample_gaussian(GaussianSpec(0.0, 5.0, 1.0), g)
        tilde = to_momentum_rep(psi)
        peak_p = tilde.p_axis[np.argmax(tilde.density())]
        assert peak_p == pytest.approx(5.0, abs=tilde.dstep)

    def test_si_units_parseval(self):
        units = si_units(9.1e-31)
        g = SpatialGrid(-1e-9, 1e-9, 512)
        psi = sample_gaussian(GaussianSpec(0.0, 0.0, 1e-10), g, units)
        tilde = to_momentum_rep(psi, units)
        assert abs(psi.norm2() - tilde.norm2()) < 1e-12 * psi.norm2()
        back = to_position_rep(tilde, units)
        assert l2_distance(psi, back) / np.sqrt(psi.norm2()) < 1e-13

    @given(
        x0a=st.floats(-4, 4),
        x0b=st.floats(-4, 4),
        p0a=st.floats(-6, 6),
        p0b=st.floats(-6, 6),
        w=st.floats(0.1, 0.9),
        phase=st.floats(0, 2 * np.pi),
    )
    @settings(max_examples=25, deadline=None)
    def test_parseval_on_superpositions(self, x0a, x0b, p0a, p0b, w, phase):
        g = SpatialGrid(-32.0, 32.0, 1024)
        a = sample_gaussian(GaussianSpec(x0a, p0a, 1.0), g)
        b = sample_gaussian(GaussianSpec(x0b, p0b, 0.7), g)
        amps = np.sqrt(w) * a.amps + np.sqrt(1 - w) * np.exp(1j * phase) * b.amps
        psi = a.with_amps(amps)
        tilde = to_momentum_rep(psi)
        assert abs(psi.norm2() - tilde.norm2()) < 1e-12
        assert l2_distance(psi, to_position_rep(tilde)) < 1e-13


class TestPotentials:
    def test_linear_exact(self):
        v = Linear(2.5)
        x = np.array([-3.0, 0.0, 1.7])
        np.testing.assert_array_equal(v.evaluate(x), 2.5 * x)

    def test_linear_equals_collinear_piecewise(self):
        v0 = 1.37
        lin = Linear(v0)
        pw = PiecewiseLinear(((-10.0, -10.0 * v0), (10.0, 10.0 * v0)))
        x = np.linspace(-10, 10, 1001)
        np.testing.assert_allclose(pw.evaluate(x), lin.evaluate(x), rtol=1e-14, atol=1e-14)

    def test_breakpoints_must_increase(self):
        with pytest.raises(ValueError):
            PiecewiseLinear(((0.0, 0.0), (0.0, 1.0)))

    def test_piecewise_continuous_and_clamped(self):
        pw = PiecewiseLinear(((0.0, 0.0), (1.0, 2.0), (2.0, 0.0)))
        assert pw(np.array([0.5]))[0] == pytest.approx(1.0)
        assert pw(np.array([-5.0]))[0] == 0.0
        assert pw(np.array([5.0]))[0] == 0.0

    def test_free_is_zero(self):
        assert np.all(Free().evaluate(np.linspace(-5, 5, 11)) == 0.0)

    def test_sampled_matches_grid(self):
        g = SpatialGrid(-4.0, 4.0, 64)
        vals = np.sin(g.x)
        v = Sampled(g, vals)
        np.testing.assert_array_equal(v.evaluate(g.x), vals)

    def test_units_validation(self):
        with pytest.raises(ValueError):
            UnitSystem(hbar=-1.0, mass=1.0)
        assert NATURAL.hbar == 1.0 and NATURAL.mass == 1.0
