"""
Exception hierarchy for modalchar.

Every error an operation documents is raised as a subclass of
``ModalCharError`` so the CLI can map them to exit code 2 in one place.
"""

from typing import Optional


class ModalCharError(Exception):
    """Base class for all modalchar errors."""


class FormulaSyntaxError(ModalCharError):
    """Formula text does not conform to the grammar."""

    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class FragmentError(ModalCharError):
    """A formula lies outside the fragment an operation requires."""


class ModelError(ModalCharError):
    """A Kripke model or example set is malformed."""


class UnknownPropositionError(ModelError):
    """A formula mentions a proposition outside the ambient set."""


class ResourceLimitExceeded(ModalCharError):
    """A non-elementary construction would exceed its budget."""

    def __init__(self, limit_name: str, limit: int, needed: Optional[int] = None):
        self.limit_name = limit_name
        self.limit = limit
        self.needed = needed
        detail = f"needs more than {limit}" if needed is None else f"needs {needed}"
        super().__init__(f"{limit_name} budget exceeded: {detail} (limit {limit})")


class WitnessError(ModalCharError):
    """Simulation witnesses cannot be composed."""


class PreconditionError(ModalCharError):
    """An operation's precondition does not hold."""


class CharacterizationError(ModalCharError):
    """A constructed characterization failed its self-check."""


class LearningError(ModalCharError):
    """The learner cannot produce a hypothesis."""


class OracleInconsistencyError(LearningError):
    """Oracle answers eliminated every candidate formula."""


class OracleProtocolError(LearningError):
    """An external oracle violated the stdio protocol."""
