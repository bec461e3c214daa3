"""Range-only center estimation and two-agent encirclement simulation."""

__version__ = "0.1.0"

from .controller import ControllerConfig, validate_gains
from .errors import EncircleError
from .estimator import EstimatorConfig, EstimatorState
from .fwnn import FwnnConfig, FwnnState
from .harness import RunResult, persistent_excitation, run, summarize, write_outputs
from .scenario import Scenario, load_scenario, paper_sim, parse_scenario
from .world import NoiseConfig, WorldState

__all__ = [
    "ControllerConfig",
    "EncircleError",
    "EstimatorConfig",
    "EstimatorState",
    "FwnnConfig",
    "FwnnState",
    "NoiseConfig",
    "RunResult",
    "Scenario",
    "WorldState",
    "load_scenario",
    "paper_sim",
    "parse_scenario",
    "persistent_excitation",
    "run",
    "summarize",
    "validate_gains",
    "write_outputs",
    "__version__",
]
