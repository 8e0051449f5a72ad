"""Barrier experiments: turning points, semiclassical transmission, and
measured transmission/reflection of Gaussian packets.

The canonical barrier rises linearly with slope ``slope`` from its base at
``x_start`` to ``peak_height``, then descends (mirror-linear by default) back
to zero.  For an incident energy E below the peak the classical turning
points a < b satisfy V(a) = V(b) = E; the stretch D' between the far edge of
the linear front and ``a`` controls whether the incident packet ever samples
anything but the linear front.  When D' is much larger than half the packet
width at arrival, the packet is wholly pushed backwards; this module
operationalizes "tunneling suppressed" as T < 1e-4.

Transmission is *measured*, not derived: T is the probability found beyond b
plus whatever the right absorbing band removed, R the same on the left, and
the run ends when both are stationary.  The semiclassical reference

    T(E) = exp(-2 sigma_R) / (1 + exp(-2 sigma_R)/4)^2,
    sigma_R = integral_a^b sqrt(2 m (V(x) - E)) / hbar dx

is provided for comparison; the width dependence of the measured T has no
closed form here and the width scan reports what it finds, including any
monotonicity violations.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .analytic import free_evolve, spectral_shift
from .core import (
    NATURAL,
    GaussianSpec,
    Linear,
    PiecewiseLinear,
    Potential,
    Sampled,
    SpatialGrid,
    UnitSystem,
    WaveFunction,
    sample_gaussian,
    spatial_width,
)
from .errors import (
    DegenerateEnergyError,
    NoTurningPointsError,
    PreconditionError,
    QuadratureError,
    StationarityTimeout,
)
from .oracle import SolverConfig, Trajectory, split_step_evolve

__all__ = [
    "BarrierSpec",
    "TunnelingResult",
    "ScanRow",
    "ScanResult",
    "turning_points",
    "wkb_sigma_R",
    "wkb_transmission",
    "wkb_transmission_from_action",
    "run_tunneling",
    "width_scan",
    "AnimationScenario",
    "animation_scenario",
    "SurrogateResult",
    "animation_surrogate",
]

STATIONARY_TOL = 1e-8
STATIONARY_SNAPSHOTS = 10


@dataclass(frozen=True)
class BarrierSpec:
    """Triangle barrier with a linear front.

    The front has slope ``slope`` over D = [x_start, x_peak] where
    x_peak = x_start + peak_height/slope; the descent beyond the peak has
    slope ``descent_slope`` (mirror of the front by default).  D'(E), the
    distance from the far edge of the front to the first turning point, is
    derived from the incident energy, never set directly.
    """

    x_start: float
    slope: float
    peak_height: float
    descent_slope: float | None = None

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError("front slope must be positive")
        if not self.peak_height > 0:
            raise ValueError("peak height must be positive")
        if self.descent_slope is not None and not self.descent_slope > 0:
            raise ValueError("descent slope must be positive")

    @property
    def down_slope(self) -> float:
        return self.slope if self.descent_slope is None else self.descent_slope

    @property
    def x_peak(self) -> float:
        return self.x_start + self.peak_height / self.slope

    @property
    def x_end(self) -> float:
        return self.x_peak + self.peak_height / self.down_slope

    def potential(self) -> PiecewiseLinear:
        return PiecewiseLinear(
            (
                (self.x_start, 0.0),
                (self.x_peak, self.peak_height),
                (self.x_end, 0.0),
            )
        )

    def turning_point_a(self, energy: float) -> float:
        """Front-flank solution of V(a) = E (closed form)."""
        if not 0.0 < energy <= self.peak_height:
            raise NoTurningPointsError(
                f"energy {energy!r} outside (0, {self.peak_height!r}]"
            )
        return self.x_start + energy / self.slope

    def d_prime(self, energy: float) -> float:
        """x_peak - a: how much linear front lies beyond the turning point."""
        return self.x_peak - self.turning_point_a(energy)


def _bisect_flank(f, lo, hi, target, tol):
    """Bisection for f(x) = target on a flank where f is monotone.

    The bracket may arrive in either order; iterates until the residual is
    inside ``tol`` and the interval has collapsed to roundoff.
    """
    f_lo = f(lo) - target
    f_hi = f(hi) - target
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise ValueError("bisection bracket does not straddle the target")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid) - target
        width_done = abs(hi - lo) <= 4e-16 * max(abs(lo), abs(hi), 1.0)
        if f_mid == 0.0 or (abs(f_mid) <= tol and width_done):
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return 0.5 * (lo + hi)


def _barrier_profile(v: Potential):
    """(peak position, peak value, left base x, right base x) for root brackets."""
    if isinstance(v, PiecewiseLinear):
        xs, vs = v.xs, v.vs
    elif isinstance(v, Sampled):
        xs, vs = v.grid.x, np.asarray(v.values, dtype=float)
    else:
        raise TypeError(
            "turning_points needs a Linear, PiecewiseLinear or Sampled "
            f"potential (or a BarrierSpec), got {type(v).__name__}"
        )
    i = int(np.argmax(vs))
    return float(xs[i]), float(vs[i]), float(xs[0]), float(xs[-1])


def turning_points(v, energy: float, units: UnitSystem = NATURAL):
    """Classical turning points (a, b) with V(a) = V(b) = E.

    Bisection on each monotone flank, to |V - E| <= 1e-12 * E.  For a pure
    Linear ramp the potential never comes back down, so b is +inf.  Energy
    exactly at the peak degenerates to a = b.  Raises
    :class:`NoTurningPointsError` above the peak and
    :class:`DegenerateEnergyError` at or below the base line.
    """
    if isinstance(v, BarrierSpec):
        v = v.potential()
    if isinstance(v, Linear):
        if energy <= v.offset:
            raise DegenerateEnergyError(f"energy {energy!r} at or below the ramp base")
        return (energy - v.offset) / v.v0, math.inf

    x_peak, v_peak, x_lo, x_hi = _barrier_profile(v)
    base = min(float(v(x_lo)), float(v(x_hi)))
    if energy > v_peak:
        raise NoTurningPointsError(
            f"energy {energy!r} exceeds the barrier peak {v_peak!r}"
        )
    if energy <= base:
        raise DegenerateEnergyError(
            f"energy {energy!r} is not above the barrier base {base!r}"
        )
    tol = 1e-12 * abs(energy)
    f = lambda x: float(v(x))
    a = _bisect_flank(f, x_lo, x_peak, energy, tol)
    b = _bisect_flank(f, x_hi, x_peak, energy, tol)
    return a, b


def wkb_sigma_R(v: Potential, energy: float, units: UnitSystem = NATURAL) -> float:
    """Dimensionless action integral sigma_R = int_a^b sqrt(2m(V-E))/hbar dx.

    The integrand vanishes like sqrt at both turning points; substituting
    x = a + u^2 (and x = b - u^2) makes each half smooth, after which adaptive
    quadrature reaches ~1e-10 relative easily.  Returns +inf when b is +inf
    (a ramp with no far side) and exactly 0 when the energy sits at the peak.
    """
    if isinstance(v, BarrierSpec):
        v = v.potential()
    a, b = turning_points(v, energy, units)
    if math.isinf(b):
        return math.inf
    if b <= a:
        return 0.0
    x_peak, _, _, _ = _barrier_profile(v)
    if not a < x_peak < b:
        x_peak = 0.5 * (a + b)
    pref = math.sqrt(2.0 * units.mass) / units.hbar

    def over(x):
        return np.maximum(v.evaluate(np.asarray(x)) - energy, 0.0)

    def left(u):
        return 2.0 * u * np.sqrt(over(a + u * u))

    def right(u):
        return 2.0 * u * np.sqrt(over(b - u * u))

    total = 0.0
    for fn, upper in (
        (left, math.sqrt(max(x_peak - a, 0.0))),
        (right, math.sqrt(max(b - x_peak, 0.0))),
    ):
        if upper == 0.0:
            continue
        val, err = quad(fn, 0.0, upper, epsabs=1e-13, epsrel=1e-11, limit=200)
        if err > max(1e-10, 1e-8 * abs(val)):
            raise QuadratureError(
                f"action quadrature achieved only {err!r} absolute error"
            )
        total += val
    return pref * total


def wkb_transmission_from_action(sigma_r: float) -> float:
    """T = e^{-2 sigma_R} / (1 + e^{-2 sigma_R}/4)^2; exactly 0.64 at 0."""
    if math.isinf(sigma_r):
        return 0.0
    damp = math.exp(-2.0 * sigma_r)
    return damp / (1.0 + damp / 4.0) ** 2


def wkb_transmission(v: Potential, energy: float, units: UnitSystem = NATURAL) -> float:
    """Semiclassical transmission of the barrier at the given energy."""
    return wkb_transmission_from_action(wkb_sigma_R(v, energy, units))


@dataclass(frozen=True)
class TunnelingResult:
    """Measured outcome of one barrier run.

    T and R include the probability removed by the right/left absorbing band;
    ``residual`` is what remains between the measurement boundaries at
    ``t_measure``, so T + R + residual equals the initial norm up to solver
    roundoff.  ``t_a_measured`` is the time the mean position reaches (or
    comes closest to) the first turning point; ``t_a_linear`` is the
    linear-front prediction: free flight to the barrier base plus p0/slope.
    """

    T: float
    R: float
    residual: float
    absorbed_left: float
    absorbed_right: float
    t_measure: float
    sigma_at_turning: float
    t_a_measured: float
    t_a_linear: float
    converged: bool
    trajectory: Trajectory

    def norm_defect(self) -> float:
        """|T + R + residual - 1|; the accounting invariant."""
        return abs(self.T + self.R + self.residual - 1.0)


def _crossing_time(times, values, target):
    """First time ``values`` reaches ``target``, linearly interpolated; falls
    back to the (quadratically interpolated) time of closest approach when the
    mean value only touches the turning point."""
    v = np.asarray(values)
    above = v >= target
    if above.any():
        i = int(np.argmax(above))
        if i == 0:
            return float(times[0])
        t0, t1 = times[i - 1], times[i]
        v0, v1 = v[i - 1], v[i]
        return float(t0 + (target - v0) / (v1 - v0) * (t1 - t0))
    i = int(np.argmax(v))
    if 0 < i < len(v) - 1:
        # vertex of the parabola through the three samples around the max
        y0, y1, y2 = v[i - 1], v[i], v[i + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom != 0.0:
            shift = 0.5 * (y0 - y2) / denom
            return float(times[i] + shift * (times[i] - times[i - 1]))
    return float(times[i])


def run_tunneling(
    packet: GaussianSpec,
    barrier: BarrierSpec,
    cfg: SolverConfig,
    grid: SpatialGrid,
    units: UnitSystem = NATURAL,
    initial_state: WaveFunction | None = None,
) -> TunnelingResult:
    """Launch a packet at a barrier and measure where its probability ends up.

    Requires an absorber (transmitted and reflected flux must not wrap) and a
    grid that holds the packet and the barrier clear of the absorbing bands.
    The run stops once T and R change by less than 1e-8 per snapshot over 10
    consecutive snapshots, tested only after the predicted arrival time so the
    quiet approach phase cannot satisfy it.  Exhausting ``cfg.n_steps`` first
    raises :class:`StationarityTimeout` with the partial result attached.

    ``initial_state`` overrides the sampled packet (the width scan uses this
    to launch pre-spread states); ``packet`` still defines the incident
    energy and the nominal launch point.
    """
    if cfg.absorber is None or cfg.absorber.strength <= 0:
        raise PreconditionError("tunneling runs need an absorbing boundary")
    if packet.p0 <= 0:
        raise PreconditionError("packet needs positive incident momentum")
    energy = packet.p0**2 / (2.0 * units.mass)

    if energy <= barrier.peak_height:
        a, b = turning_points(barrier, energy, units)
    else:
        a, b = barrier.x_start, barrier.x_end
    absorber_width = cfg.absorber.width_fraction * grid.span
    if barrier.x_end >= grid.x_max - absorber_width:
        raise PreconditionError(
            "barrier extends into the absorbing band; widen the grid"
        )

    psi0 = (
        initial_state
        if initial_state is not None
        else sample_gaussian(packet, grid, units)
    )
    psi0.require_normalized(1e-6)
    potential = barrier.potential()

    region_R = grid.x < a
    region_res = (grid.x >= a) & (grid.x <= b)
    region_T = grid.x > b

    v_in = packet.p0 / units.mass
    t_a_linear = max(barrier.x_start - packet.x0, 0.0) / v_in + packet.p0 / barrier.slope

    chunk = SolverConfig(
        dt=cfg.dt,
        n_steps=cfg.record_every,
        absorber=cfg.absorber,
        record_every=cfg.record_every,
    )
    psi = psi0
    acc_left = acc_right = 0.0
    t_list = [0.0]
    mx_list = [float(np.sum(grid.x * psi0.density()) * grid.dx)]
    w_list = [spatial_width(psi0)]
    n_list = [psi0.norm2()]
    t_frac_list = [float(np.sum(psi0.density()[region_T]) * grid.dx)]

    history = []
    steps_done = 0
    converged = False
    T = R = residual = 0.0
    while steps_done < cfg.n_steps:
        traj = split_step_evolve(psi, potential, chunk, units)
        psi = traj.final_state
        acc_left += traj.absorbed_left[-1]
        acc_right += traj.absorbed_right[-1]
        steps_done += chunk.n_steps
        t_now = steps_done * cfg.dt
        rho = psi.density()
        T = float(np.sum(rho[region_T]) * grid.dx) + acc_right
        R = float(np.sum(rho[region_R]) * grid.dx) + acc_left
        residual = float(np.sum(rho[region_res]) * grid.dx)
        n2 = float(np.sum(rho) * grid.dx)
        t_list.append(t_now)
        n_list.append(n2)
        t_frac_list.append(T)
        if n2 > 1e-12:
            mx = float(np.sum(grid.x * rho) * grid.dx / n2)
            var = float(np.sum((grid.x - mx) ** 2 * rho) * grid.dx / n2)
            mx_list.append(mx)
            w_list.append(math.sqrt(max(var, 0.0)) * math.sqrt(2.0))
        else:
            mx_list.append(np.nan)
            w_list.append(np.nan)
        history.append((T, R))
        if t_now >= t_a_linear and len(history) > STATIONARY_SNAPSHOTS:
            recent = history[-(STATIONARY_SNAPSHOTS + 1):]
            drift = max(
                abs(t1 - t0) + abs(r1 - r0)
                for (t0, r0), (t1, r1) in zip(recent, recent[1:])
            )
            if drift < STATIONARY_TOL:
                converged = True
                break

    times = np.array(t_list)
    means = np.array(mx_list)
    widths = np.array(w_list)
    t_a_measured = _crossing_time(times, means, a)
    sigma_at_turning = float(np.interp(t_a_measured, times, widths))

    trajectory = Trajectory(
        times=times,
        mean_x=means,
        mean_p=np.full_like(times, np.nan),
        width=widths,
        norm2=np.array(n_list),
        absorbed_left=np.full_like(times, np.nan),
        absorbed_right=np.full_like(times, np.nan),
        final_state=psi,
        extras={"transmitted_fraction": np.array(t_frac_list)},
    )
    result = TunnelingResult(
        T=T,
        R=R,
        residual=residual,
        absorbed_left=acc_left,
        absorbed_right=acc_right,
        t_measure=steps_done * cfg.dt,
        sigma_at_turning=sigma_at_turning,
        t_a_measured=t_a_measured,
        t_a_linear=t_a_linear,
        converged=converged,
        trajectory=trajectory,
    )
    if not converged:
        raise StationarityTimeout(
            f"T and R still drifting after {steps_done} steps", result
        )
    return result


@dataclass(frozen=True)
class ScanRow:
    sigma_at_arrival: float
    T: float
    R: float
    residual: float
    t_measure: float


@dataclass(frozen=True)
class ScanResult:
    """Width-scan table, sorted by sigma at arrival."""

    rows: tuple

    def monotonicity_violations(self, slack: float = 0.0):
        """Adjacent pairs where T decreases by more than ``slack`` as sigma
        grows.  Reported, never suppressed."""
        out = []
        for r0, r1 in zip(self.rows, self.rows[1:]):
            if r1.T < r0.T - slack:
                out.append((r0, r1))
        return out

    def to_csv(self, path, float_fmt=repr) -> None:
        with open(path, "w") as f:
            f.write("# schema: width-scan-v1\n")
            f.write("sigma_at_arrival,T,R,residual,t_measure\n")
            for r in self.rows:
                f.write(
                    ",".join(
                        float_fmt(float(v))
                        for v in (r.sigma_at_arrival, r.T, r.R, r.residual, r.t_measure)
                    )
                    + "\n"
                )


def width_scan(
    p0: float,
    barrier: BarrierSpec,
    grid: SpatialGrid,
    cfg: SolverConfig,
    base_packet: GaussianSpec | None = None,
    sigma_list=None,
    delay_list=None,
    units: UnitSystem = NATURAL,
    workers: int = 1,
) -> ScanResult:
    """Transmission versus packet width at fixed mean momentum p0.

    Exactly one of ``sigma_list`` (fresh packets of different widths) or
    ``delay_list`` (one packet free-evolved for each delay before launch, so
    its width at arrival has grown by the spreading law while its momentum
    distribution is untouched) must be given.  The delay pre-evolution is
    performed in place: the drifted profile is translated back to the launch
    point, which is the same state a longer free approach would deliver.
    Entries are independent runs and may execute concurrently; the table is
    assembled in input order, then stably sorted by measured sigma at arrival.
    """
    if (sigma_list is None) == (delay_list is None):
        raise ValueError("give exactly one of sigma_list or delay_list")
    base = base_packet or GaussianSpec(x0=0.0, p0=p0, sigma=1.0)
    if base.p0 != p0:
        base = GaussianSpec(base.x0, p0, base.sigma)

    def entry(arg):
        if sigma_list is not None:
            spec = GaussianSpec(base.x0, p0, float(arg))
            res = run_tunneling(spec, barrier, cfg, grid, units)
        else:
            psi = sample_gaussian(base, grid, units)
            if arg:
                drift = base.p0 * float(arg) / units.mass
                psi = spectral_shift(free_evolve(psi, float(arg), units), drift)
            res = run_tunneling(base, barrier, cfg, grid, units, initial_state=psi)
        return ScanRow(
            sigma_at_arrival=res.sigma_at_turning,
            T=res.T,
            R=res.R,
            residual=res.residual,
            t_measure=res.t_measure,
        )

    args = list(sigma_list if sigma_list is not None else delay_list)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(entry, args))
    else:
        rows = [entry(a) for a in args]
    rows.sort(key=lambda r: r.sigma_at_arrival)
    return ScanResult(tuple(rows))


# ---------------------------------------------------------------------------
# The slow-packet animation scenario (SI scale) and its desk-scale surrogate
# ---------------------------------------------------------------------------


def _hbar_si() -> float:
    from .core import HBAR_SI

    return HBAR_SI


@dataclass(frozen=True)
class AnimationScenario:
    """SI parameters of the slow-packet deceleration scenario.

    A packet with sigma = 2 mm and speed 1 m/s climbs a linear ramp that
    stops it after 0.3 m.  The particle mass is back-solved from the stated
    10% width growth at the turning point:

        t_a = 2 * stop_distance / speed        (ramp starts at the launch point)
        hbar * t_a / (m sigma^2) = sqrt(1.1^2 - 1)   =>   m ~ 3.45e-29 kg
    """

    sigma: float
    speed: float
    stop_distance: float
    growth: float
    mass: float
    p0: float
    v0: float
    t_a: float
    energy: float

    @property
    def predicted_width_ratio(self) -> float:
        u = _hbar_si() * self.t_a / (self.mass * self.sigma**2)
        return math.sqrt(1.0 + u * u)

    @property
    def semiclassical_ratio(self) -> float:
        """p0 * sigma / hbar; sets the grid cost of simulating it directly."""
        return self.p0 * self.sigma / _hbar_si()


def animation_scenario(
    sigma: float = 0.002,
    speed: float = 1.0,
    stop_distance: float = 0.3,
    growth: float = 1.10,
) -> AnimationScenario:
    """Back-solve the mass and ramp strength of the SI animation scenario."""
    t_a = 2.0 * stop_distance / speed
    theta = math.sqrt(growth**2 - 1.0)
    mass = _hbar_si() * t_a / (sigma**2 * theta)
    p0 = mass * speed
    v0 = p0 / t_a
    return AnimationScenario(
        sigma=sigma,
        speed=speed,
        stop_distance=stop_distance,
        growth=growth,
        mass=mass,
        p0=p0,
        v0=v0,
        t_a=t_a,
        energy=p0 * speed / 2.0,
    )


@dataclass(frozen=True)
class SurrogateResult:
    """Desk-scale measurement of the slow-packet scenario's crossing time.

    The scenario is scale-free apart from two dimensionless numbers: the
    width-growth parameter theta = hbar t_a/(m sigma^2), preserved exactly,
    and the semiclassicality N = p0 sigma / hbar, reduced from ~655 so the
    grid stays affordable.  With the packet launched on the linear front, the
    residual scale-breaking terms (tail overlap with the front's base and
    with the peak region) are exponentially small at both values of N, so the
    dimensionless measurement transfers.  Times map back to SI through
    t_SI = t' * (t_a_SI / t_a').
    """

    t_a_dimensionless: float
    t_a_measured_dimensionless: float
    t_a_si: float
    t_a_measured_si: float
    width_ratio_measured: float
    semiclassical_ratio: float

    @property
    def crossing_time_relative_error(self) -> float:
        return abs(self.t_a_measured_dimensionless / self.t_a_dimensionless - 1.0)


def animation_surrogate(
    scenario: AnimationScenario | None = None,
    semiclassical_ratio: float = 160.0,
    n: int = 8192,
    dt: float = 1e-4,
) -> SurrogateResult:
    """Measure the turning-point crossing time of the animation scenario on a
    desk-scale grid (natural units, sigma = 1).

    The packet launches already *on* the barrier's linear front (the front
    extends 12 sigma behind the launch point): the stated width growth follows
    the free-spreading law, which holds only while the whole packet feels one
    linear slope.  A front starting at the packet's center would chirp the
    packet (its leading half decelerates first) and compress it instead --
    measurably so, since the chirp-to-momentum-spread ratio is 1/theta,
    independent of scale.
    """
    sc = scenario or animation_scenario()
    theta = _hbar_si() * sc.t_a / (sc.mass * sc.sigma**2)
    p0 = semiclassical_ratio
    t_a = theta
    slope = p0 / t_a
    stop = 0.5 * p0 * t_a  # launch-to-turning-point distance

    grid = SpatialGrid(-0.35 * stop, 1.45 * stop, n)
    front_base = -12.0  # 12 sigma behind the launch point
    x_peak = 1.4 * stop  # linear front ends 0.4*stop beyond the turning point
    peak = slope * (x_peak - front_base)
    ramp = PiecewiseLinear(
        (
            (front_base, 0.0),
            (x_peak, peak),
            (x_peak + 0.4 * stop, peak - slope * 0.4 * stop),
        )
    )
    psi = sample_gaussian(GaussianSpec(x0=0.0, p0=p0, sigma=1.0), grid)

    n_steps = int(round(1.5 * t_a / dt))
    cfg = SolverConfig(
        dt=1.5 * t_a / n_steps,
        n_steps=n_steps,
        record_every=max(1, n_steps // 300),
    )
    traj = split_step_evolve(psi, ramp, cfg)
    t_meas = _crossing_time(traj.times, traj.mean_x, stop)
    width_at = float(np.interp(t_meas, traj.times, traj.width))
    scale = sc.t_a / t_a
    return SurrogateResult(
        t_a_dimensionless=t_a,
        t_a_measured_dimensionless=t_meas,
        t_a_si=sc.t_a,
        t_a_measured_si=t_meas * scale,
        width_ratio_measured=width_at,
        semiclassical_ratio=semiclassical_ratio,
    )
