"""Counterfactual event histories: simulation, likelihood-ratio weights and direct-effect estimation."""

from .estimators import aalen_fit, counterfactual_hazard, hazard_to_survival, nelson_aalen, sequential_g_fit
from .events import Cohort, Event, Path, StepFunction, counting_process, read_cohort, state_at, write_cohort
from .graph import LocalIndependenceGraph, closure, parents, validate_dependencies
from .identify import (JointModel, gformula_direct_effect, relative_direct_risk,
                       truncated_factorization_oracle)
from .scenario import InterventionSpec, ScenarioSpec, load_intervention, load_scenario, validate_intervention
from .simulate import apply_action, simulate_cohort, simulate_counterfactual
from .weights import factorization_check, ipw_expectation, positivity_check, weight_trajectory

__version__ = "0.1.0"

__all__ = [
    "Cohort", "Event", "InterventionSpec", "JointModel", "LocalIndependenceGraph", "Path", "ScenarioSpec",
    "StepFunction", "aalen_fit", "apply_action", "closure", "counterfactual_hazard", "counting_process",
    "factorization_check", "gformula_direct_effect", "hazard_to_survival", "ipw_expectation", "load_intervention",
    "load_scenario", "nelson_aalen", "parents", "positivity_check", "read_cohort", "relative_direct_risk",
    "sequential_g_fit", "simulate_cohort", "simulate_counterfactual", "state_at", "truncated_factorization_oracle",
    "validate_dependencies", "validate_intervention", "weight_trajectory", "write_cohort",
]
