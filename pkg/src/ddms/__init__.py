"""Duration-dependent Markov-switching models with parametric link functions."""
from .chain import TransitionMatrix, build_transition_matrix, unconditional_probabilities
from .errors import (DegenerateDifferences, DegenerateLikelihood, DomainError, EstimationFailed,
                     SingularChain)
from .links import LinkKind, LinkSpec
from .models import DurationVolParams, GarchParams, MeanSwitchParams

__version__ = "0.1.0"

__all__ = [
    "DegenerateDifferences", "DegenerateLikelihood", "DomainError", "DurationVolParams",
    "EstimationFailed", "GarchParams", "LinkKind", "LinkSpec", "MeanSwitchParams",
    "SingularChain", "TransitionMatrix", "build_transition_matrix", "unconditional_probabilities",
]
