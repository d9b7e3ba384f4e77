"""Thin-film models for fluids lubricating elastic plates.

The package provides, bottom up: periodic pseudo-spectral machinery with a
Chebyshev vertical direction (`spectral`), the family of film-height
evolution equations and the stationary pressure problem (`thinfilm`), the
full-order coupled channel/plate solver (`fsi`), reconstruction of
approximate full-order solutions from the reduced displacement
(`reconstruction`), and error-norm / convergence-rate verification
(`verify`).  Scaling laws and coefficient maps live in `scaling`; the
`lubelastic` command line in `cli`.
"""

from .errors import (
    AssemblyError,
    DegenerateFitError,
    GridMismatchError,
    ParameterError,
    PositivityError,
    RegimeError,
    UsageError,
)
from .scaling import (
    LameParams,
    ModelParams,
    NonlinearScalingPreset,
    RegimeCheck,
    eps_power,
    model_params_from_dict,
    model_params_from_json,
    reduced_coefficient_e0,
    reduced_coefficient_eh,
    reynolds_number,
    time_scale_exponent,
    validate_theorem_regime,
)
from .spectral import (
    ChannelField,
    PeriodicField,
    PeriodicGrid,
    VerticalNodes,
    dealiased_product,
    mean_value,
    spectral_derivative,
    vertical_integral,
)
from .thinfilm import (
    FilmState,
    FilmTrajectory,
    ThinFilmModel,
    film_energy,
    rhs,
    solve_linear_sixth,
    solve_reynolds_stationary,
    step,
)
from .fsi import (
    EnergyLedger,
    FsiParams,
    FsiSolver,
    FsiState,
    FsiTrajectory,
    assemble_mode_system,
    harmonic_ramp_forcing,
    run_fsi,
    step_fsi,
    zero_forcing,
)
from .reconstruction import (
    ApproxTriple,
    ReducedSolution,
    assemble_approx,
    chain_closure_error,
    flux_rate,
    forcing_F,
    horizontal_velocity,
    limit_pressure,
    solve_reduced,
    vertical_velocity,
)
from .verify import (
    AuditResult,
    ErrorReport,
    RateFit,
    RateStudyConfig,
    RateStudyResult,
    energy_audit,
    fit_rate,
    norm_LinfH2,
    run_rate_study,
    thin_norm_L2L2,
)

__version__ = "0.1.0"
