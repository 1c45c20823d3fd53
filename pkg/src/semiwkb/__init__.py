"""Semiclassical propagation on the line: classical manifold transport,
a Fourier-multiplier dispersion correction, and an exact grid reference."""

from .errors import (
    SemiwkbError,
    GridMismatchError,
    BandwidthError,
    BoundaryMassError,
    CausticError,
    CausticDomainError,
    NotHyperbolicError,
    DegenerateLinesError,
    OutOfDomainError,
    BranchError,
    ConvergenceError,
    StepSizeError,
    UnsupportedOracleError,
)
from .grids import (
    GridSpec,
    WaveFunction,
    hbar_fourier_transform,
    overlap,
    WignerField,
    wigner_function,
    band_mass,
    refine_wavefunction,
    embed_wavefunction,
    edge_mass_fraction,
    spectral_edge_fraction,
)
from .hamiltonians import (
    PhasePoint,
    QuadraticPhase,
    FreeParticle,
    IntegrableMomentum,
    ParabolicBarrier,
    StandardPotential,
    KickedHarmonic,
    analytic_oracle,
    validate_momentum_window,
)
from .dynamics import (
    FlowResult,
    FlowBundle,
    LagrangianLine,
    flow,
    flow_bundle,
    kick_times,
    period_tangent,
    lyapunov_exponent,
    ehrenfest_time,
    hyperbolic_subspaces,
    shear_from_lagrangians,
    shear_p_pq,
)
from .transport import (
    TrajectoryBundle,
    TransportMap,
    build_bundle,
    build_transport_map,
    refined_transport_map,
    invert_transport,
    evolved_phase,
    transport_operator,
    transport_operator_adjoint,
    curvature_matrix_A,
    window_mass_deficit,
)
from .metaplectic import (
    ScaledAmplitude,
    MetaplecticKernel,
    PropagationResult,
    gaussian_profile,
    profile_for_slope,
    dispersed_gaussian,
    apply_L,
    apply_L_adjoint,
    center_kernel,
    accumulate_kernel,
    apply_metaplectic,
    propagate_extended_wkb,
    propagate_thawed_gaussian,
    backward_wkb_test,
    BackwardTestResult,
)
from .reference import (
    PropagationConfig,
    ExactResult,
    split_operator_step,
    split_operator_evolve,
    momentum_evolve,
    kho_step,
    kho_evolve,
    exact_state,
    fidelity,
    fidelity_series,
    expectation_q,
    expectation_p,
    kho_default_grid,
)
from .experiments import (
    Case,
    ExperimentSpec,
    build_model,
    initial_coherent_state,
    load_baselines,
    write_table,
    read_table,
    run_experiment,
    builtin_specs,
    get_builtin_spec,
    load_spec_file,
    resolve_outdir,
)

__version__ = "0.1.0"
