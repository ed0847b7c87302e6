"""Steady-state entanglement of Kerr magnon modes coupled to a driven cavity.

Pipeline: classical mean field -> effective squeezing couplings ->
linearized drift/diffusion model -> stationary covariance (Lyapunov) ->
Gaussian logarithmic negativity, plus a sweep engine and CLI on top.
All frequency-like quantities are angular (rad/s) in memory; see
:mod:`kerrmag.params` for the configuration grammar.
"""

from .dynamics import (
    BogoliubovDiagnostics,
    DriftModel,
    bogoliubov,
    build_drift,
    is_stable,
    optimality_gap,
)
from .entanglement import (
    Mode,
    ModePair,
    NegativityResult,
    all_pairs,
    log_negativity,
    log_negativity_closed_form,
    reduce,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DivergenceError,
    DriftUnstableError,
    InvalidParameterError,
    KerrmagError,
    MultistabilityError,
    NumericalError,
    SingularityError,
    UnsupportedOperationError,
)
from .meanfield import (
    EffectiveCouplings,
    SteadyAmplitudes,
    direct_couplings,
    effective_couplings,
    kerr_shifted_detuning,
    m1_closed_form,
    solve_meanfield,
)
from .params import (
    DEFAULT_CONSTANTS,
    PhysicalConstants,
    SphereSpec,
    SystemParams,
    apply_overrides,
    dumps_config,
    kerr_coefficient,
    load_config,
    params_from_mapping,
    power_from_rabi,
    rabi_from_power,
    resolve_params,
    save_config,
    spin_count,
    thermal_occupation,
)
from .steadystate import (
    CovarianceMatrix,
    integrate_cm,
    lyapunov_steady,
    solve_lyapunov,
    symplectic_eigenvalues,
    two_time_cm,
)
from .sweep import (
    AxisSpec,
    SweepResult,
    SweepSpec,
    emit_table,
    evaluate_point,
    load_table,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AxisSpec",
    "BogoliubovDiagnostics",
    "ConfigError",
    "ConvergenceError",
    "CovarianceMatrix",
    "DEFAULT_CONSTANTS",
    "DivergenceError",
    "DriftModel",
    "DriftUnstableError",
    "EffectiveCouplings",
    "InvalidParameterError",
    "KerrmagError",
    "Mode",
    "ModePair",
    "MultistabilityError",
    "NegativityResult",
    "NumericalError",
    "PhysicalConstants",
    "SingularityError",
    "SphereSpec",
    "SteadyAmplitudes",
    "SweepResult",
    "SweepSpec",
    "SystemParams",
    "UnsupportedOperationError",
    "all_pairs",
    "apply_overrides",
    "bogoliubov",
    "build_drift",
    "direct_couplings",
    "dumps_config",
    "effective_couplings",
    "emit_table",
    "evaluate_point",
    "integrate_cm",
    "is_stable",
    "kerr_coefficient",
    "kerr_shifted_detuning",
    "load_config",
    "load_table",
    "log_negativity",
    "log_negativity_closed_form",
    "lyapunov_steady",
    "m1_closed_form",
    "optimality_gap",
    "params_from_mapping",
    "power_from_rabi",
    "rabi_from_power",
    "reduce",
    "resolve_params",
    "run_sweep",
    "save_config",
    "solve_lyapunov",
    "solve_meanfield",
    "spin_count",
    "symplectic_eigenvalues",
    "thermal_occupation",
    "two_time_cm",
]
