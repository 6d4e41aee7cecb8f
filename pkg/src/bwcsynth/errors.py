"""Exception hierarchy shared by every module of the package."""


class BwcError(Exception):
    """Base class for all errors raised by bwcsynth.

    Parsers attach a ``span`` (see ``textformat.SourceSpan``) when the error
    can be traced back to a position in the input text.
    """
    span = None


class ModelError(BwcError, ValueError):
    """A game, model or strategy violates a structural invariant."""


class BlockingState(ModelError):
    def __init__(self, state):
        super().__init__(f"state {state!r} has no outgoing edge")
        self.state = state


class NonPositiveWeight(ModelError):
    def __init__(self, edge, weight):
        super().__init__(
            f"edge {edge} has weight {weight}; shortest-path games need weights > 0")
        self.edge = edge
        self.weight = weight


class DanglingEdge(ModelError):
    def __init__(self, edge):
        super().__init__(f"edge {edge} references an unknown state")
        self.edge = edge


class MissingRow(ModelError):
    def __init__(self, state):
        super().__init__(f"stochastic model has no row for player-2 state {state!r}")
        self.state = state


class UnknownEdge(ModelError):
    pass


class ProbabilityNotOne(ModelError):
    def __init__(self, state, total):
        super().__init__(f"row of {state!r} sums to {total}, not 1")
        self.state = state
        self.total = total


class UndefinedAction(ModelError):
    def __init__(self, memory, state):
        super().__init__(f"strategy has no action for memory {memory!r} at state {state!r}")
        self.memory = memory
        self.state = state


class InvalidQuery(BwcError, ValueError):
    pass


class NotAWec(BwcError):
    """The end component does not allow the worst-case threshold to be met."""


class CalibrationBudgetExceeded(BwcError):
    def __init__(self, message, max_k=None):
        super().__init__(message)
        self.max_k = max_k


class ParseError(BwcError, ValueError):
    """Malformed text input. ``span`` locates the offending token."""

    def __init__(self, message, span=None):
        if span is not None:
            message = f"{span}: {message}"
        super().__init__(message)
        self.span = span


class DuplicateState(ParseError):
    pass


class UnknownState(ParseError):
    pass
