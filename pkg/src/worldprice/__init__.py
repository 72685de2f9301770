"""Cost-preserving world prices for products priced across many locations."""

from .errors import WorldPriceError
from .panel import PricePanel, aggregates, build_panel, read_panel

__version__ = "0.1.0"

__all__ = ["PricePanel", "WorldPriceError", "__version__", "aggregates", "build_panel", "read_panel"]
