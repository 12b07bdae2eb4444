"""P.835 listening-test HTTP service."""

from .app import create_app
from .model import ExperimentDefinition, participant_schedule
from .store import ExperimentStore

__all__ = ["create_app", "ExperimentDefinition", "participant_schedule", "ExperimentStore"]
