"""Exception and warning types raised across the package."""


class LevelQuadError(Exception):
    """Base class for numerical failures (CLI exit code 1)."""


class SingularMomentSystem(LevelQuadError):
    pass


class EmptyBand(LevelQuadError):
    """No grid node falls inside the active kernel band."""


class SingularOnBand(LevelQuadError):
    """A flagged singular point of the integrand lies inside the active band."""


class UndefinedGradient(LevelQuadError):
    pass


class DegenerateArc(LevelQuadError):
    pass


class NoInterface(LevelQuadError):
    """The sampled level-set function never changes sign."""


class NotConverged(LevelQuadError):
    def __init__(self, residual, rounds):
        super().__init__(f"fast sweeping did not converge after {rounds} rounds "
                         f"(last change {residual:.3e})")
        self.residual = residual
        self.rounds = rounds


class IllConditionedFit(LevelQuadError):
    pass


class FitFailed(LevelQuadError):
    pass


class ResourceCap(LevelQuadError):
    pass


class EmptyBandWarning(UserWarning):
    pass


class EpsilonResolutionWarning(UserWarning):
    """The band half-width is under two grid spacings."""
