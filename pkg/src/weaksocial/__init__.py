"""Belief formation over weakly connected social networks.

Sending sub-networks learn their own truth; receiving sub-networks are pulled
toward a mixture of the sending truths set by the influence matrix.
"""

from .beliefs import (
    AgentLikelihood,
    AwarenessSchedule,
    LikelihoodModel,
    StateSpace,
    TrueStateAssignment,
)
from .errors import (
    NotWeaklyStructured,
    ParseError,
    ValidationError,
    WeakSocialError,
    ZeroEvidence,
)
from .graph import (
    CombinationMatrix,
    NetworkPartition,
    classify,
    confinement_matrix,
    influence_matrix,
    limiting_power,
    summarize,
    validate,
)
from .kernels import BACKEND, available_backends
from .predict import confinement_bands, limiting_beliefs
from .scenario import Scenario, check_assumptions, export_trace, load, load_fixture, save
from .sim import Model, SimulationConfig, assess, run

__version__ = "0.1.0"

__all__ = [
    "AgentLikelihood", "AwarenessSchedule", "BACKEND", "CombinationMatrix", "LikelihoodModel",
    "Model", "NetworkPartition", "NotWeaklyStructured", "ParseError", "Scenario",
    "SimulationConfig", "StateSpace", "TrueStateAssignment", "ValidationError",
    "WeakSocialError", "ZeroEvidence", "assess", "available_backends", "check_assumptions",
    "classify", "confinement_bands", "confinement_matrix", "export_trace", "influence_matrix",
    "limiting_beliefs", "limiting_power", "load", "load_fixture", "run", "save", "summarize",
    "validate",
]
