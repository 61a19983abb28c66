"""Exception types shared across the engine.

Every module raises subclasses of WfbtError so callers can catch one base
class at the pipeline boundary while tests assert the precise failure.
"""


class WfbtError(Exception):
    """Base class for all engine errors."""


# market data
class MissingColumn(WfbtError):
    pass


class EmptyAfterCleaning(WfbtError):
    pass


class DuplicateDate(WfbtError):
    pass


class SeriesTooShort(WfbtError):
    pass


# arima
class NonConvergence(WfbtError):
    pass


class AllFitsFailed(WfbtError):
    pass


class HistoryTooShort(WfbtError):
    pass


# lstm
class ShapeMismatch(WfbtError):
    pass


class EmptyDataset(WfbtError):
    pass


class DivergedLoss(WfbtError):
    pass


# hybrid / features
class AlignmentError(WfbtError):
    pass


# walk-forward
class CoverageGap(WfbtError):
    pass


# tuning
class NoCompletedTrials(WfbtError):
    pass


# backtest / metrics
class LengthMismatch(WfbtError):
    pass


class EmptyInput(WfbtError):
    pass


class RuinReturn(WfbtError):
    pass


# stats
class ZeroVarianceDifferences(WfbtError):
    pass


class DegenerateRegressor(WfbtError):
    pass


# ensemble
class WeightSumInvalid(WfbtError):
    pass


class NoCommonStart(WfbtError):
    pass


# cli / artifacts
class IncompleteArtifact(WfbtError):
    pass
