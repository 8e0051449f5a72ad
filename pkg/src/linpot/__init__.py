"""Exact quantum evolution under scalar linear potentials, an independent
split-step Fourier solver, and the experiments built on both: Gaussian-packet
tunneling at linear-front barriers, a three-capacitor phase-shift generator,
Stern-Gerlach splitting, and the composed spin-flip gate.
"""

from .analytic import (
    EvolutionResult,
    PhaseLedger,
    PlaneWavePhase,
    ZassenhausTerms,
    free_evolve,
    linear_evolve,
    linear_evolve_momentum,
    plane_wave_phase,
    spectral_shift,
    zassenhaus_terms,
)
from .core import (
    NATURAL,
    Free,
    GaussianSpec,
    Linear,
    PiecewiseLinear,
    Potential,
    Sampled,
    SpatialGrid,
    UnitSystem,
    WaveFunction,
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
from .devices import (
    GateResult,
    PsgGeometry,
    SgSpec,
    SpinDensity,
    SpinorPacket,
    psg_compose,
    psg_phase,
    sg_apply,
    solve_psg_for_phase,
    spin_flip_circuit,
)
from .oracle import (
    Absorber,
    ConvergenceStudy,
    SolverConfig,
    Trajectory,
    convergence_study,
    split_step_evolve,
)
from .tunneling import (
    BarrierSpec,
    ScanResult,
    TunnelingResult,
    animation_scenario,
    animation_surrogate,
    run_tunneling,
    turning_points,
    width_scan,
    wkb_sigma_R,
    wkb_transmission,
)

__version__ = "0.1.0"
