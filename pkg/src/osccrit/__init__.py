"""Integral oscillation criteria, simulation and non-oscillating witnesses for
coupled higher-order power-law systems."""
from .criteria import (
    CriteriaReport,
    Envelope,
    HypothesisViolation,
    SystemSpec,
    Verdict,
    Violation,
    classify_oscillation,
    validate_hypotheses,
)
from .fixed_point import (
    FixedPointConfig,
    FixedPointResult,
    compute_P,
    choose_K1_T,
    iterate_to_fixed_point,
    verify_solution,
)
from .quadrature import (
    CoefFn,
    IntegralVerdict,
    QuadConfig,
    eval_coef,
    moment_integral,
    nested_criterion_integral,
    tail_kernel_integral,
)
from .simulate import (
    Classification,
    InitialState,
    SimConfig,
    Trajectory,
    classify_trajectory,
    integrate,
    is_proper,
    to_first_order,
)

__all__ = [
    "Classification", "CoefFn", "CriteriaReport", "Envelope", "FixedPointConfig", "FixedPointResult",
    "HypothesisViolation", "InitialState", "IntegralVerdict", "QuadConfig", "SimConfig", "SystemSpec",
    "Trajectory", "Verdict", "Violation", "choose_K1_T", "classify_oscillation", "classify_trajectory",
    "compute_P", "eval_coef", "integrate", "is_proper", "iterate_to_fixed_point", "moment_integral",
    "nested_criterion_integral", "tail_kernel_integral", "to_first_order", "validate_hypotheses",
    "verify_solution",
]
