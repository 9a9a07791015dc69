"""Numerical global-solvability certificates for pseudo-linear planar systems

    phi' = P phi + Q psi + F,    psi' = R phi + S psi + G,

where the coefficients may depend on (t, phi, psi).
"""

__version__ = "0.1.0"

from .core import CoefficientField, PseudoLinearSystem, eval_coefficients, from_second_order
from .corpus import CorpusEntry, EmdenFowlerParams, corpus_get, corpus_names, emden_fowler_L_closed_form
from .criteria import (BoundCurve, Certificate, SamplingPlan, Verdict, certify_t31, certify_t32,
                       check_envelope_domination, compute_KL_curves)
from .envelopes import EnvelopeSet
from .integrator import IntegrationConfig, Status, Trajectory, dense_eval, integrate
from .quadrature import GridFunction, cumulative_integral, exp_weighted_integral
from .riccati import linear_form_check, reconstruct_solution, solve_riccati, theorem21_condition
from .volterra import compute_volterra_data, envelope_bounds, volterra_residual

__all__ = [
    "CoefficientField", "PseudoLinearSystem", "eval_coefficients", "from_second_order",
    "CorpusEntry", "EmdenFowlerParams", "corpus_get", "corpus_names", "emden_fowler_L_closed_form",
    "BoundCurve", "Certificate", "SamplingPlan", "Verdict", "certify_t31", "certify_t32",
    "check_envelope_domination", "compute_KL_curves", "EnvelopeSet",
    "IntegrationConfig", "Status", "Trajectory", "dense_eval", "integrate",
    "GridFunction", "cumulative_integral", "exp_weighted_integral",
    "linear_form_check", "reconstruct_solution", "solve_riccati", "theorem21_condition",
    "compute_volterra_data", "envelope_bounds", "volterra_residual",
]
