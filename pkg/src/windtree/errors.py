"""Shared exception types."""


class DomainError(ValueError):
    """Input outside the domain an operation is defined on."""


class PrecisionError(RuntimeError):
    """A quantized-direction computation could not be certified at the
    requested precision."""


class CornerHit(Exception):
    """The flow ran into an obstacle corner, where the bounce is undefined.

    Carries the exact corner point as a pair of Fractions.
    """

    def __init__(self, x, y):
        super().__init__(f"corner hit at ({x}, {y})")
        self.x = x
        self.y = y

    @property
    def point(self):
        return (self.x, self.y)
