"""Exception hierarchy shared by all modules."""


class TreedetError(Exception):
    """Base class for every error raised by this package."""


class PrefixMismatch(TreedetError):
    pass


class NotATreetop(TreedetError):
    pass


class EmptyTree(TreedetError):
    pass


class IndexMismatch(TreedetError):
    pass


class FormulaSyntaxError(TreedetError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class NegativeBoundVariable(TreedetError):
    pass


class NotAFixpoint(TreedetError):
    pass


class NoFixpointOnCycle(TreedetError):
    pass


class UnknownLetter(TreedetError):
    pass


class NondeterministicRabin(TreedetError):
    pass


class NotDeterministic(TreedetError):
    pass


class AlphabetMismatch(TreedetError):
    pass


class AutomatonFormatError(TreedetError):
    pass


class TooLarge(TreedetError):
    pass


class NotApplicable(TreedetError):
    pass


class NotARuleInstance(TreedetError):
    pass


class NotALasso(TreedetError):
    pass


class StructuralError(TreedetError):
    def __init__(self, message, node=None):
        if node is not None:
            message = f"node {node}: {message}"
        super().__init__(message)
        self.node = node


class BudgetExceeded(TreedetError):
    pass


class TranslationFailed(TreedetError):
    pass
