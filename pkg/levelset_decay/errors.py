"""Exceptions raised by levelset_decay operations.

Every error carries the process exit code the CLI reports for it: 1 for
domain, applicability and numeric failures, 2 for usage and config problems.
"""
from typing import List, Optional


class LevelsetDecayError(Exception):
    exit_code = 1


class DomainError(LevelsetDecayError, ValueError):
    """Input outside the domain of a function (negative t, empty field)."""


class RangeError(LevelsetDecayError, ValueError):
    """Level requested outside the applicability range of a bound or grid."""


class ParameterError(LevelsetDecayError, ValueError):
    """Parameters violate a stated precondition."""


class ApplicabilityError(LevelsetDecayError):
    """A lemma or theorem does not apply to the given parameters."""


class AxiomError(ApplicabilityError):
    """A non-conforming growth function was used in strict mode."""


class NumericError(LevelsetDecayError, ArithmeticError):
    pass


class ConvergenceError(NumericError):
    def __init__(self, message: str, history: Optional[List[float]] = None):
        super().__init__(message)
        self.history = list(history or [])


class CapacityError(LevelsetDecayError):
    pass


class InsufficientDataError(LevelsetDecayError):
    pass


class ConfigError(LevelsetDecayError):
    exit_code = 2


class UsageError(ConfigError):
    pass
