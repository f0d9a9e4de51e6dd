"""Optimal prediction of the ultimate supremum of a spectrally negative Lévy process."""

from .errors import (
    ArgumentError,
    CaseOneError,
    DegenerateModelError,
    DomainError,
    LevyStopError,
    ModelConditionError,
    NotApplicable,
    NumericsError,
    SimulationBudgetError,
)
from .levy_model import Family, LevyModel, ValidationReport, phi, psi, psi_deriv, validate
from .montecarlo import (
    SimConfig,
    SimEstimate,
    simulate_prediction_error,
    simulate_reflected_stop,
    simulate_ultimate_supremum,
)
from .scale import ExpSumFunction, build_w, eval_w, eval_w_prime, integral_I
from .stopping import (
    Case,
    GeneralPenalty,
    QuadraticPenalty,
    StoppingSolution,
    f_a,
    find_a_star,
    g_function,
    monotone_penalty_verdict,
    solve,
    threshold_b_star,
    transform_h_general,
    transform_h_quadratic,
)

__version__ = "0.1.0"
