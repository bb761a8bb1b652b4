"""Exception hierarchy shared by all ncrpg modules."""


class NCRPGError(Exception):
    """Base class for every error raised by ncrpg."""


class DimensionError(NCRPGError, ValueError):
    """An array does not have the shape required by the manifold."""


class UnsupportedOperationError(NCRPGError, NotImplementedError):
    """The manifold does not provide the requested operation."""


class IllPosedLogError(NCRPGError, ArithmeticError):
    """The logarithmic map is requested at or beyond the cut locus."""


class RetractionSingularityError(NCRPGError, ArithmeticError):
    """A fixed-rank retraction would leave the manifold."""


class DomainError(NCRPGError, ValueError):
    """A scalar function is evaluated outside its domain."""


class DegenerateProxError(NCRPGError, ArithmeticError):
    """A proximal map produced a vector that cannot be normalized."""


class RankDropError(NCRPGError, ArithmeticError):
    """A fixed-rank prox step reduced the rank of the iterate."""


class InvalidConfigError(NCRPGError, ValueError):
    """Solver or stepsize parameters lie outside their admissible range."""


class StallError(NCRPGError, RuntimeError):
    """Backtracking exceeded its cap on shrink steps."""


class ProxBoundWarning(UserWarning):
    """The sphere prox parameter exceeds the contraction bound."""


class AssumptionWarning(UserWarning):
    """Curvature or smoothness assumptions could not be checked."""
