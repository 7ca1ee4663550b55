"""Simulation of a two-level emitter interacting with a traveling light pulse.

The library models the emitter and the pulse as a cascaded open quantum
system: virtual cavities emit the incoming wavepacket and pick up chosen
output temporal modes, and everything evolves under time-dependent Lindblad
master equations.  An independent time-bin collision solver cross-validates
the master-equation path in the one- and two-photon sectors.
"""

from .errors import (
    CapacityError,
    ConfigValidationError,
    DimensionError,
    NumericalFailureError,
    PulseJcmError,
    PulseWindowError,
    ResolutionError,
    StateCorruptionError,
    StiffnessError,
    TruncationError,
)
from .integrate import IntegratorConfig, Trajectory, evolve, lindblad_rhs
from .models import (
    FieldStateSpec,
    ModelSpec,
    add_reflection,
    build_classical_drive,
    build_jcm1,
    build_jcm2,
    build_jcm3,
    build_reference_jcm,
    coherent_truncation_deficit,
    initial_state,
    minimal_coherent_truncation,
    observable_set,
    total_excitation_op,
)
from .operators import (
    Operator,
    SystemState,
    annihilation_op,
    check_state,
    embed,
    expectation,
    hermitian_eigs,
    identity_op,
    kron,
    lowering_op,
    number_op,
    partial_trace,
)
from .oracle import (
    FewPhotonState,
    ModeDecomposition,
    SingleExcitationSolution,
    dominant_orthogonal_mode,
    joint_pair_population,
    output_mode_decomposition,
    project_reduced_state,
    single_excitation_solve,
    timebin_solve,
)
from .pulses import (
    CouplingPolicy,
    PulseShape,
    custom_pulse,
    decaying_exponential_pulse,
    flat_pulse,
    g_u,
    g_v,
    gaussian_pulse,
    ip_coefficients,
    rising_exponential_pulse,
    theta,
)

__version__ = "0.1.0"

from .scenarios import (  # noqa: E402  (depends on __version__)
    CollapseRevivalResult,
    ScenarioConfig,
    SweepResult,
    check_csv_schema,
    collapse_revival_experiment,
    fig3_suite,
    fig4_subtraction,
    fig4_suite,
    fig4_sweep,
    run_scenario,
    validate_config,
    write_csv,
)
