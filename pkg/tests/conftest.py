from __future__ import annotations

import numpy as np
import pytest

from worldprice.panel import PricePanel

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def simpson():
    return PricePanel(("A", "B"), ("E", "C"), [[10.0, 4.0], [12.0, 6.0]], [[90.0, 10.0], [10.0, 90.0]])


def random_panel(rng, I, J, missing=0.0, price_range=(1.0, 20.0), q_range=(0.5, 50.0)):
    """Random panel; with ``missing`` > 0 cells are dropped but row 0 and column 0 stay."""
    prices = rng.uniform(*price_range, size=(I, J))
    q = rng.uniform(*q_range, size=(I, J))
    if missing:
        drop = rng.random((I, J)) < missing
        drop[:, 0] = False  # row 0 and column 0 keep the observed graph connected
        drop[0, :] = False
        prices = np.where(drop, np.nan, prices)
        q = np.where(drop, 0.0, q)
    return PricePanel([f"P{i}" for i in range(I)], [f"C{j}" for j in range(J)], prices, q)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
