"""Exception types shared across the package."""


class MarketError(ValueError):
    """Base class for all domain errors raised by this package."""


class DimensionMismatch(MarketError):
    """Vector lengths disagree (selection vs. prices, task vector vs. mappings, ...)."""


class UnsetPrice(MarketError):
    """A listing was used in a computation before its price was set."""


class SizeLimitExceeded(MarketError):
    """An exact solver was asked for more listings than it enumerates (N > 20 tabulated)."""


class ParameterError(MarketError):
    """An argument is outside its documented domain (empty grid, eta <= 0, cap >= 1, ...)."""


class ConfigurationError(MarketError):
    """A scenario / provider configuration is invalid or incomplete."""


class EmptyMarketError(MarketError):
    """A pricing operation was invoked with no buyers present."""


class ScoreParseError(MarketError):
    """A score file line could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ScoreDataError(MarketError):
    """A score file parsed but contains invalid data (NaN, infinite values)."""
