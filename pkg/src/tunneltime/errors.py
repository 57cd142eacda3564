"""Exception types raised by the physics and numerics layers."""


class PhysicsError(ValueError):
    """A physical or numerical precondition was violated."""


class NonFiniteError(PhysicsError):
    def __init__(self, message, index=None, abscissa=None):
        super().__init__(message)
        self.index = index
        self.abscissa = abscissa


class AliasingError(PhysicsError):
    """Requested sampling exceeds what the input grid can resolve."""

    def __init__(self, message, max_resolvable=None):
        super().__init__(message)
        self.max_resolvable = max_resolvable


class BoundaryPeakError(PhysicsError):
    """The maximum of a sampled curve sits on the grid boundary."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
