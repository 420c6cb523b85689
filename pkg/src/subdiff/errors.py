"""Exception types shared across the package."""


class NumericalFailure(RuntimeError):
    """A solver or quadrature routine left its validity envelope.

    Raised e.g. on mass drift beyond the scheme tolerance or on a
    non-convergent Laplace tail.  Maps to CLI exit code 3.
    """
