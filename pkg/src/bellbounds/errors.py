"""Exception types raised across the package."""


class BellBoundsError(Exception):
    pass


class DomainError(BellBoundsError, ValueError):
    """A scalar parameter lies outside the domain of the operation."""


class NonHermitianInput(BellBoundsError, ValueError):
    pass


class ParseError(BellBoundsError, ValueError):
    pass


class InvalidState(BellBoundsError, ValueError):
    """Matrix fails one of the density-matrix checks.

    ``kind`` is one of ``"shape"``, ``"hermitian"``, ``"trace"``, ``"psd"``.
    """

    def __init__(self, kind, detail=""):
        self.kind = kind
        msg = f"invalid state ({kind})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class DegenerateCorrelation(BellBoundsError):
    pass


class NotEntangled(BellBoundsError):
    pass


class SupportError(BellBoundsError):
    pass


class NoConvergenceWarning(UserWarning):
    """Iterative solver hit its iteration cap; the best iterate is returned."""


class UndefinedGradient(BellBoundsError):
    pass


class RankError(BellBoundsError):
    pass


class NoMultiplier(BellBoundsError):
    pass


class EmptyRegime(BellBoundsError):
    pass
