"""Exception hierarchy shared by every module.

The CLI maps these onto its exit codes, so each class carries the category it
belongs to rather than relying on message text.
"""

from __future__ import annotations


class WorldPriceError(Exception):
    """Base class for all errors raised by this package."""


# --- input / validation (CLI exit 2) ---------------------------------------


class InputError(WorldPriceError, ValueError):
    pass


class EmptyPanel(InputError):
    pass


class DuplicateCell(InputError):
    pass


class NegativeValue(InputError):
    pass


class NonFiniteValue(InputError):
    pass


class ZeroTotalQuantity(InputError):
    pass


class UnpricedQuantity(InputError):
    """A positive quantity sits on a cell with no observed price."""


class PanelParseError(InputError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class BadParams(InputError):
    pass


class BadBaseline(InputError):
    pass


class UnknownProduct(InputError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class IncompletePanel(InputError):
    pass


class ZeroSystemCost(InputError):
    pass


class NoMaskedCells(InputError):
    pass


# --- identification (CLI exit 4) -------------------------------------------


class IdentificationError(WorldPriceError):
    pass


class DisconnectedPanel(IdentificationError):
    pass


class DegenerateWeights(IdentificationError):
    pass


class IdentifiabilityUnreachable(IdentificationError):
    pass


# --- convex weights (CLI exit 3 for infeasibility) --------------------------


class InfeasibleCost(WorldPriceError):
    def __init__(self, cost: float, low: float, high: float):
        self.cost = cost
        self.low = low
        self.high = high
        super().__init__(
            f"cost {cost!r} lies outside the exposure interval [{low!r}, {high!r}]"
        )


class DegenerateExposure(WorldPriceError):
    pass


class ToleranceUnreachable(WorldPriceError):
    """Slack could not be brought within tolerance; ``solution`` is the best found."""

    def __init__(self, message: str, solution=None, limiting_slack: float | None = None):
        self.solution = solution
        self.limiting_slack = limiting_slack
        super().__init__(message)


class SolverError(WorldPriceError):
    """The active-set loop stopped at a point that fails the KKT conditions."""
