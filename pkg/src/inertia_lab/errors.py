"""Exception hierarchy shared by the library and the harness."""


class ConfigurationError(ValueError):
    """Invalid parameters for a schedule, table, potential, source or scenario."""


class HypothesisError(ConfigurationError):
    """A scenario declares a theorem whose hypotheses it does not satisfy."""


class NumericFailure(ArithmeticError):
    """A nonfinite value appeared during a computation."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class StiffnessFailure(NumericFailure):
    """The adaptive step collapsed below the underflow threshold.

    ``state`` holds the last accepted state.
    """
