"""Thermodynamically restricted GKLS generators: construction, audits,
and composite-system commutation tests.

The library works in Liouville space with column-stacking vectorization
and natural units (hbar = k_B = 1); level 0 is always the ground state.
"""

__version__ = "0.1.0"

from .liouville import (
    EigenoperatorBasis,
    Spectrum,
    Transition,
    assemble_superop,
    conjugation_superop,
    devectorize,
    eigenoperator_basis,
    hs_inner,
    hs_norm,
    vectorize,
)
from .generator import (
    DephasingTerm,
    GKLSGenerator,
    GKSCoefficients,
    JumpTerm,
    ThermoSpec,
    build_restricted_generator,
    dephasing_from_alpha,
    fix_detailed_balance,
    flat_rate,
    gks_from_map,
    kms_rates,
    ohmic_rate,
)
from .dynamics import (
    BathSpec,
    Propagator,
    SteadyState,
    Trajectory,
    TransportModel,
    TransportReport,
    build_transport_model,
    heat_current,
    propagate,
    relative_entropy,
    steady_state,
    transport_steady_report,
)
from .validator import (
    CheckResult,
    ValidationReport,
    check_commutation,
    check_cptp,
    check_detailed_balance,
    check_fixed_point,
    check_spectral,
    check_structure_support,
    choi_matrix,
    run_standard_checks,
    spohn_monitor,
)
from .composite import (
    CompositeModel,
    KrausSet,
    TauScan,
    build_strict_coupling,
    contour_coefficient,
    effective_generator,
    expansion_trace_formulas,
    partial_trace_env,
    partial_trace_sys,
    tau_expansion,
    theorem1_defect,
)
from . import presets

__all__ = [
    "__version__",
    "presets",
    # liouville
    "EigenoperatorBasis",
    "Spectrum",
    "Transition",
    "assemble_superop",
    "conjugation_superop",
    "devectorize",
    "eigenoperator_basis",
    "hs_inner",
    "hs_norm",
    "vectorize",
    # generator
    "DephasingTerm",
    "GKLSGenerator",
    "GKSCoefficients",
    "JumpTerm",
    "ThermoSpec",
    "build_restricted_generator",
    "dephasing_from_alpha",
    "fix_detailed_balance",
    "flat_rate",
    "gks_from_map",
    "kms_rates",
    "ohmic_rate",
    # dynamics
    "BathSpec",
    "Propagator",
    "SteadyState",
    "Trajectory",
    "TransportModel",
    "TransportReport",
    "build_transport_model",
    "heat_current",
    "propagate",
    "relative_entropy",
    "steady_state",
    "transport_steady_report",
    # validator
    "CheckResult",
    "ValidationReport",
    "check_commutation",
    "check_cptp",
    "check_detailed_balance",
    "check_fixed_point",
    "check_spectral",
    "check_structure_support",
    "choi_matrix",
    "run_standard_checks",
    "spohn_monitor",
    # composite
    "CompositeModel",
    "KrausSet",
    "TauScan",
    "build_strict_coupling",
    "contour_coefficient",
    "effective_generator",
    "expansion_trace_formulas",
    "partial_trace_env",
    "partial_trace_sys",
    "tau_expansion",
    "theorem1_defect",
]
