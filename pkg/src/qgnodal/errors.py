"""Exception hierarchy shared across the package."""


class QGError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidGraphError(QGError):
    """The graph fails structural validation (see `qgnodal.graphs.validate`)."""

    def __init__(self, issues):
        self.issues = tuple(issues)
        super().__init__("invalid graph: " + "; ".join(self.issues))


class SpectrumError(QGError):
    """The eigenvalue scan could not bracket the requested number of roots."""


class NotARootError(QGError):
    """Eigenfunction recovery was requested away from any secular root."""


class DegenerateEdgeError(QGError):
    """A function restricted to some edge is numerically identically zero,
    so its zero set on that edge is not a finite point set."""


class GenericityError(QGError):
    """No generic configuration was found within the retry budget."""


class SearchError(QGError):
    """A parameter search (epsilon selection, coefficient search) exhausted
    its budget without a verified hit."""


class RangeExplosionError(QGError):
    """Heat-flow propagation would require coefficient ratios beyond 1e300
    before the nodal count stabilizes."""
