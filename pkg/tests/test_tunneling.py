import math

import numpy as np
import pytest

from linpot import (
    Absorber,
    BarrierSpec,
    GaussianSpec,
    Linear,
    PiecewiseLinear,
    SolverConfig,
    SpatialGrid,
    gaussian_width_at,
    l2_distance,
    linear_evolve,
    run_tunneling,
    sample_gaussian,
    split_step_evolve,
    turning_points,
    width_scan,
    wkb_sigma_R,
    wkb_transmission,
)
from linpot.errors import (
    DegenerateEnergyError,
    NoTurningPointsError,
    PreconditionError,
    StationarityTimeout,
)
from linpot.tunneling import (
    ScanResult,
    ScanRow,
    animation_scenario,
    animation_surrogate,
    wkb_transmission_from_action,
)


def sigma_r_closed_form(barrier: BarrierSpec, energy: float) -> float:
    """Independent closed form for the triangle-barrier action integral:
    integrating sqrt(2m s (x_t - x)) over each flank gives
    (2/3) sqrt(2m) (V_peak - E)^{3/2} (1/s_up + 1/s_down) / hbar."""
    dv = barrier.peak_height - energy
    return (
        (2.0 / 3.0)
        * math.sqrt(2.0)
        * dv**1.5
        * (1.0 / barrier.slope + 1.0 / barrier.down_slope)
    )


class TestBarrierSpec:
    def test_geometry(self):
        b = BarrierSpec(x_start=0.0, slope=2.0, peak_height=5.0)
        assert b.x_peak == 2.5
        assert b.x_end == 5.0
        assert b.turning_point_a(3.0) == pytest.approx(1.5)
        assert b.d_prime(3.0) == pytest.approx(1.0)

    def test_potential_profile(self):
        b = BarrierSpec(x_start=0.0, slope=2.0, peak_height=5.0, descent_slope=10.0)
        v = b.potential()
        assert v(np.array([2.5]))[0] == pytest.approx(5.0)
        assert v(np.array([3.0]))[0] == pytest.approx(0.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            BarrierSpec(0.0, -1.0, 5.0)
        with pytest.raises(ValueError):
            BarrierSpec(0.0, 1.0, 0.0)


class TestTurningPoints:
    def test_symmetric_triangle(self):
        b = BarrierSpec(x_start=-2.5, slope=2.0, peak_height=5.0)
        a, bb = turning_points(b, 2.5)
        assert a + bb == pytest.approx(2.0 * b.x_peak, abs=1e-10)

    def test_linear_ramp(self):
        a, b = turning_points(Linear(2.0), 3.0)
        assert a == pytest.approx(1.5, rel=1e-12)
        assert math.isinf(b)

    def test_matches_analytic_inversion(self):
        b = BarrierSpec(x_start=1.0, slope=3.0, peak_height=7.0, descent_slope=5.0)
        for energy in (1.0, 3.5, 6.3):
            a, bb = turning_points(b, energy)
            a_exact = b.x_start + energy / b.slope
            b_exact = b.x_peak + (b.peak_height - energy) / b.down_slope
            assert a == pytest.approx(a_exact, rel=1e-12)
            assert bb == pytest.approx(b_exact, rel=1e-12)
            assert abs(b.potential()(np.array([a]))[0] - energy) <= 1e-12 * energy

    def test_energy_above_peak(self):
        b = BarrierSpec(0.0, 2.0, 5.0)
        with pytest.raises(NoTurningPointsError):
            turning_points(b, 6.0)

    def test_sampled_potential(self):
        from linpot import Sampled

        b = BarrierSpec(x_start=1.0, slope=3.0, peak_height=7.0)
        g = SpatialGrid(-8.0, 8.0, 2048)
        sampled = Sampled(g, b.potential()(g.x))
        a, bb = turning_points(sampled, 3.5)
        a_ref, b_ref = turning_points(b, 3.5)
        # the sampled profile is exact wherever the breakpoints land between
        # grid nodes is irrelevant (piecewise-linear through linear samples)
        assert a == pytest.approx(a_ref, abs=2 * g.dx)
        assert bb == pytest.approx(b_ref, abs=2 * g.dx)

    def test_energy_below_base(self):
        b = BarrierSpec(0.0, 2.0, 5.0)
        with pytest.raises(DegenerateEnergyError):
            turning_points(b, -1.0)


class TestWkb:
    def test_anchor_at_peak(self):
        assert wkb_transmission_from_action(0.0) == 0.64
        b = BarrierSpec(0.0, 2.0, 5.0)
        assert wkb_transmission(b, 5.0) == 0.64

    def test_large_action_asymptote(self):
        for s in (5.0, 10.0, 20.0):
            t = wkb_transmission_from_action(s)
            assert t == pytest.approx(math.exp(-2 * s), rel=1e-3)

    def test_quadrature_matches_closed_form(self):
        cases = [
            (BarrierSpec(0.0, 2.0, 5.0), 3.0),
            (BarrierSpec(-1.0, 1.5, 8.0, descent_slope=4.0), 2.5),
            (BarrierSpec(2.0, 0.7, 3.0, descent_slope=2.1), 2.9),
        ]
        for barrier, energy in cases:
            quad_val = wkb_sigma_R(barrier, energy)
            closed = sigma_r_closed_form(barrier, energy)
            assert quad_val == pytest.approx(closed, rel=1e-8)

    def test_action_vanishes_continuously_at_peak(self):
        b = BarrierSpec(0.0, 2.0, 5.0)
        actions = [wkb_sigma_R(b, e) for e in (4.0, 4.9, 4.99, 4.9999)]
        assert all(x > y for x, y in zip(actions, actions[1:]))
        assert actions[-1] < 1e-5

    def test_ramp_never_transmits(self):
        assert wkb_transmission(Linear(1.0), 2.0) == 0.0


def _blocked_setup():
    grid = SpatialGrid(-80.0, 80.0, 2048)
    cfg = SolverConfig(
        dt=1e-3,
        n_steps=30000,
        absorber=Absorber(width_fraction=0.15, strength=12.0),
        record_every=250,
    )
    packet = GaussianSpec(x0=0.0, p0=10.0, sigma=1.0)
    barrier = BarrierSpec(x_start=10.0, slope=10.0, peak_height=280.0, descent_slope=100.0)
    return grid, cfg, packet, barrier


class TestRunTunneling:
    def test_requires_absorber(self, grid):
        cfg = SolverConfig(dt=1e-3, n_steps=100)
        with pytest.raises(PreconditionError, match="absorb"):
            run_tunneling(GaussianSpec(0, 4.0, 1.0), BarrierSpec(10.0, 8.0, 11.2), cfg, grid)

    def test_barrier_must_clear_absorber(self):
        g = SpatialGrid(-32.0, 32.0, 1024)
        cfg = SolverConfig(dt=1e-3, n_steps=100, absorber=Absorber(0.25, 5.0))
        with pytest.raises(PreconditionError, match="widen"):
            run_tunneling(GaussianSpec(0, 4.0, 1.0), BarrierSpec(14.0, 8.0, 80.0), cfg, g)

    def test_timeout_carries_partial_result(self):
        grid, cfg, packet, barrier = _blocked_setup()
        short = SolverConfig(
            dt=cfg.dt, n_steps=3000, absorber=cfg.absorber, record_every=cfg.record_every
        )
        with pytest.raises(StationarityTimeout) as exc_info:
            run_tunneling(packet, barrier, short, grid)
        partial = exc_info.value.partial_result
        assert partial is not None and not partial.converged
        assert partial.t_measure == pytest.approx(3.0, rel=1e-12)

    def test_blocked_regime(self):
        # D' >> sigma(t_a): classically forbidden, everything reflects
        grid, cfg, packet, barrier = _blocked_setup()
        res = run_tunneling(packet, barrier, cfg, grid)
        energy = packet.p0**2 / 2
        assert barrier.d_prime(energy) >= 10 * res.sigma_at_turning
        assert res.T < 1e-4
        assert res.R == pytest.approx(1.0, abs=1e-6)
        assert res.norm_defect() < 1e-6
        # the linear-front arrival-time prediction holds to 2 percent
        assert res.t_a_measured == pytest.approx(res.t_a_linear, rel=0.02)

    def test_over_barrier(self):
        grid, cfg, packet, _ = _blocked_setup()
        low = BarrierSpec(x_start=10.0, slope=25.0, peak_height=25.0)
        res = run_tunneling(packet, low, cfg, grid)
        assert res.T > 0.99
        assert res.norm_defect() < 1e-6

    def test_classical_limit_on_the_front(self):
        # launched on the linear front, the packet cannot tell the barrier
        # from a pure linear potential until it nears the peak region
        grid = SpatialGrid(-32.0, 32.0, 2048)
        slope = 10.0
        front = PiecewiseLinear(((-12.0, 0.0), (14.0, 260.0), (40.0, 0.0)))
        psi = sample_gaussian(GaussianSpec(0.0, 10.0, 1.0), grid)
        t_final = 0.9  # 0.9 * t_a with t_a = p0/slope = 1
        n_steps = 9000
        cfg = SolverConfig(dt=t_final / n_steps, n_steps=n_steps, record_every=n_steps)
        numeric = split_step_evolve(psi, front, cfg).final_state
        exact = linear_evolve(psi, slope, t_final, offset=slope * 12.0).psi
        assert l2_distance(numeric, exact) < 1e-6


class TestWidthScan:
    def _setup(self):
        grid = SpatialGrid(-128.0, 128.0, 2048)
        cfg = SolverConfig(
            dt=2e-3,
            n_steps=40000,
            absorber=Absorber(width_fraction=0.2, strength=12.0),
            record_every=250,
        )
        barrier = BarrierSpec(x_start=36.0, slope=8.0, peak_height=11.2)
        return grid, cfg, barrier

    def test_zero_delay_equals_direct_run(self):
        grid, cfg, barrier = self._setup()
        base = GaussianSpec(x0=0.0, p0=4.0, sigma=1.0)
        direct = run_tunneling(base, barrier, cfg, grid)
        scan = width_scan(
            4.0, barrier, grid, cfg, base_packet=base, delay_list=(0.0,)
        )
        assert scan.rows[0].T == direct.T
        assert scan.rows[0].sigma_at_arrival == direct.sigma_at_turning

    def test_requires_exactly_one_list(self):
        grid, cfg, barrier = self._setup()
        with pytest.raises(ValueError):
            width_scan(4.0, barrier, grid, cfg)
        with pytest.raises(ValueError):
            width_scan(4.0, barrier, grid, cfg, sigma_list=(1,), delay_list=(0,))

    def test_violations_reported_not_suppressed(self):
        rows = (
            ScanRow(1.0, 0.10, 0.9, 0.0, 1.0),
            ScanRow(2.0, 0.05, 0.95, 0.0, 1.0),
            ScanRow(3.0, 0.20, 0.8, 0.0, 1.0),
        )
        scan = ScanResult(rows)
        violations = scan.monotonicity_violations()
        assert len(violations) == 1
        assert violations[0][0].sigma_at_arrival == 1.0
        assert scan.monotonicity_violations(slack=0.1) == []

    def test_csv_schema(self, tmp_path):
        scan = ScanResult((ScanRow(1.0, 0.1, 0.9, 1e-9, 12.5),))
        path = tmp_path / "scan.csv"
        scan.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "# schema: width-scan-v1"
        assert lines[1] == "sigma_at_arrival,T,R,residual,t_measure"
        assert len(lines) == 3

    def test_concurrent_entries_match_sequential(self):
        grid = SpatialGrid(-80.0, 80.0, 1024)
        cfg = SolverConfig(
            dt=1e-3,
            n_steps=20000,
            absorber=Absorber(width_fraction=0.15, strength=12.0),
            record_every=250,
        )
        barrier = BarrierSpec(x_start=10.0, slope=25.0, peak_height=25.0)
        base = GaussianSpec(x0=0.0, p0=10.0, sigma=1.0)
        kwargs = dict(base_packet=base, sigma_list=(1.0, 1.4))
        seq = width_scan(10.0, barrier, grid, cfg, workers=1, **kwargs)
        par = width_scan(10.0, barrier, grid, cfg, workers=2, **kwargs)
        for a, b in zip(seq.rows, par.rows):
            assert a == b

    def test_trajectory_carries_transmitted_fraction(self):
        grid, cfg, packet, _ = _blocked_setup()
        low = BarrierSpec(x_start=10.0, slope=25.0, peak_height=25.0)
        res = run_tunneling(packet, low, cfg, grid)
        frac = res.trajectory.extras["transmitted_fraction"]
        assert len(frac) == len(res.trajectory.times)
        assert frac[0] == pytest.approx(0.0, abs=1e-12)
        assert frac[-1] == pytest.approx(res.T, rel=1e-12)


class TestAnimationScenario:
    def test_back_solved_mass(self):
        sc = animation_scenario()
        assert sc.mass == pytest.approx(3.45e-29, rel=2e-3)
        assert sc.t_a == pytest.approx(0.6, rel=1e-12)
        assert sc.v0 == pytest.approx(sc.p0 / 0.6, rel=1e-12)

    def test_width_growth_is_ten_percent(self):
        sc = animation_scenario()
        assert sc.predicted_width_ratio == pytest.approx(1.10, rel=1e-6)
        # same number through the generic width law
        from linpot import si_units

        units = si_units(sc.mass)
        assert gaussian_width_at(sc.sigma, sc.t_a, units) / sc.sigma == pytest.approx(
            1.10, rel=1e-6
        )

    def test_semiclassical_ratio(self):
        sc = animation_scenario()
        assert sc.semiclassical_ratio == pytest.approx(654.65, rel=1e-3)

    def test_surrogate_measures_the_claims(self):
        res = animation_surrogate(n=4096, semiclassical_ratio=120.0)
        assert res.crossing_time_relative_error < 0.02
        assert res.width_ratio_measured == pytest.approx(1.10, rel=5e-3)
        assert res.t_a_si == pytest.approx(0.6, rel=1e-12)
        assert res.t_a_measured_si == pytest.approx(0.6, rel=0.02)
