"""Prescribed-time smooth state and output feedback for uncertain chained systems."""

from .config import Scenario, ScenarioConfig
from .control import (GainSchedule, ObserverLaw, StateFeedbackLaw, beta_output_feedback,
                      beta_state_feedback, closed_form_x0, open_loop_u0)
from .errors import (AssumptionViolation, BetaTooSmallError, ConfigError, DomainError,
                     GainOverflowError, PtchainError, SimulationDiverged, SingularityError,
                     UncertaintySpecError)
from .integrate import IntegratorConfig
from .model import (BilinearScenario, ChainedState, ChainedSystem, UncertaintyBoundTable,
                    UncertaintySpec, bilinear_example_spec, bilinear_to_chained, derive_bounds,
                    from_transformed, linear_spec, to_transformed, zero_spec)
from .ple import PleBasis, eval_P, eval_Q, ple_basis
from .sim import (Trajectory, simulate_output_feedback, simulate_state_feedback,
                  simulate_transformed)
from .verify import VerificationReport, run_suite

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolation", "BetaTooSmallError", "BilinearScenario", "ChainedState",
    "ChainedSystem", "ConfigError", "DomainError", "GainOverflowError", "GainSchedule",
    "IntegratorConfig", "ObserverLaw", "PleBasis", "PtchainError", "Scenario", "ScenarioConfig",
    "SimulationDiverged", "SingularityError", "StateFeedbackLaw", "Trajectory",
    "UncertaintyBoundTable", "UncertaintySpec", "UncertaintySpecError", "VerificationReport",
    "beta_output_feedback", "beta_state_feedback", "bilinear_example_spec", "bilinear_to_chained",
    "closed_form_x0", "derive_bounds", "eval_P", "eval_Q", "from_transformed", "linear_spec",
    "open_loop_u0", "ple_basis", "run_suite", "simulate_output_feedback",
    "simulate_state_feedback", "simulate_transformed", "to_transformed", "zero_spec",
]
