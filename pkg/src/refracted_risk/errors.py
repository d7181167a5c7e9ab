"""Exception hierarchy shared by the analytic and simulation layers."""


class ModelError(ValueError):
    """A model or query violates a structural invariant.

    ``field`` names the offending parameter (dotted path) so that config
    loaders can point at the source line.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class RefractionTooLargeError(ModelError):
    pass


class PoleError(ValueError):
    """Evaluation too close to a pole -alpha_i of the Laplace exponent."""


class DegenerateRootsError(ValueError):
    """q = 0 with zero mean: the scale-function expansion has a double root."""


class NetProfitError(ValueError):
    """Operation requires E[X_1] > alpha."""


class OrderingError(ValueError):
    """Levels violate a <= x <= c or a <= b <= c."""


class QuadratureError(RuntimeError):
    pass
