from typing import Any, Optional, Sequence


class ParityLangError(Exception):
    """Base exception for paritylang"""


class PolicyError(ParityLangError):
    """Solver policy cannot be used for a lattice"""


class SystemDefinitionError(ParityLangError):
    pass


class UnconvergedError(ParityLangError):
    """A fixpoint iteration did not stabilise within the iteration budget.

    The last iterate is kept so callers can still report it.
    """

    def __init__(
        self, message: str, last_iterate: Any = None, equation: Optional[int] = None
    ):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.equation = equation


class ContractViolationError(ParityLangError):
    """A Kleene chain moved against its direction: the function is not monotone"""

    def __init__(self, message: str, equation: Optional[int] = None):
        super().__init__(message)
        self.equation = equation


class ModelError(ParityLangError):
    """Something is wrong with an automaton, tree or run given as input"""


class ParseError(ModelError):
    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AutomatonValidationError(ModelError):
    def __init__(self, message: str, violations: Sequence[Any] = ()):
        super().__init__(message)
        self.violations = list(violations)


class KindMismatchError(ModelError):
    pass


class AlphabetMismatchError(ModelError):
    pass


class TreeShapeError(ModelError):
    pass


class InstanceTooLargeError(ParityLangError):
    """An oracle refuses an instance outside its brute-force budget"""


class NoSettingsFoundError(ParityLangError):
    pass
