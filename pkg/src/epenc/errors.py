"""Exception types shared across the package."""


class EpencError(Exception):
    """Base class for computational failures (CLI exit code 1)."""


class ContinuationAmbiguous(EpencError):
    pass


class TooCloseToTP(EpencError):
    pass


class PoleProximity(EpencError):
    pass


class NoRoot(EpencError):
    pass


class ConvergenceFailure(EpencError):
    def __init__(self, msg: str, k: int | None = None):
        super().__init__(msg)
        self.k = k


class SeparatorProximity(EpencError):
    pass


class CoalescentInput(EpencError):
    pass


class NotCoalescent(EpencError):
    pass


class DriftExceeded(EpencError):
    pass


class StallNearTP(EpencError):
    pass


class NonConvergent(EpencError):
    pass


class OddLayoutInput(EpencError):
    pass


class EvenLayoutInput(EpencError):
    pass


class OutOfRegion(EpencError):
    pass


class GridTooCoarse(EpencError):
    pass


class StepFailure(EpencError):
    pass


class FitIllConditioned(EpencError):
    pass
