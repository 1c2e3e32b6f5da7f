"""Exception hierarchy shared by the simulation, solver and CLI layers."""

from __future__ import annotations


class KeenError(Exception):
    """Base class for every error raised by keensim."""


class ModelDomainError(KeenError, ValueError):
    """A behavioral function or vector field was evaluated outside its domain."""


class NoPreimageError(ModelDomainError):
    """An inverse behavioral function was asked for a value outside its range."""


class ParameterError(KeenError, ValueError):
    """A parameter record violates one of its invariants."""


class StallError(KeenError, RuntimeError):
    """The adaptive integrator shrank its step below the minimum."""


class ScenarioError(KeenError, ValueError):
    """A scenario document failed validation.

    ``pointer`` is an RFC 6901 JSON pointer to the offending location.
    """

    def __init__(self, message: str, pointer: str = ""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")


class NoEquilibriumError(KeenError):
    """A closed-form equilibrium does not exist for the given parameters."""
