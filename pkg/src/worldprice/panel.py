"""Product x campus price/quantity panels and the aggregates built from them."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateCell,
    EmptyPanel,
    NegativeValue,
    NonFiniteValue,
    PanelParseError,
    UnknownProduct,
    UnpricedQuantity,
    ZeroTotalQuantity,
)

CSV_HEADER = ("product_id", "campus_id", "price", "quantity")


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PricePanel:
    """Unit prices and deployed quantities for I products over J campuses.

    ``prices`` holds NaN where a (product, campus) pair is unobserved; such
    cells must carry zero quantity. ``cost_target`` optionally overrides the
    realized cost used for cost preservation (the sparsity stress test keeps
    the pre-masking cost as its accounting target).
    """

    product_ids: tuple[str, ...]
    campus_ids: tuple[str, ...]
    prices: np.ndarray
    quantities: np.ndarray
    cost_target: float | None = None

    def __post_init__(self):
        products = tuple(str(p) for p in self.product_ids)
        campuses = tuple(str(c) for c in self.campus_ids)
        object.__setattr__(self, "product_ids", products)
        object.__setattr__(self, "campus_ids", campuses)
        if not products or not campuses:
            raise EmptyPanel("panel needs at least one product and one campus")
        if len(set(products)) != len(products):
            raise DuplicateCell("product identifiers must be unique")
        if len(set(campuses)) != len(campuses):
            raise DuplicateCell("campus identifiers must be unique")

        prices = _frozen(self.prices)
        quantities = _frozen(self.quantities)
        shape = (len(products), len(campuses))
        if prices.shape != shape or quantities.shape != shape:
            raise ValueError(
                f"prices {prices.shape} and quantities {quantities.shape} must both be {shape}"
            )
        observed = ~np.isnan(prices)
        if np.isinf(prices).any():
            raise NonFiniteValue("prices must be finite")
        if not np.isfinite(quantities).all():
            raise NonFiniteValue("quantities must be finite")
        if (prices[observed] < 0).any():
            raise NegativeValue("prices must be nonnegative")
        if (quantities < 0).any():
            raise NegativeValue("quantities must be nonnegative")
        if (quantities[~observed] > 0).any():
            i, j = np.argwhere(~observed & (quantities > 0))[0]
            raise UnpricedQuantity(
                f"cell ({products[i]}, {campuses[j]}) has positive quantity but no price"
            )
        totals = quantities.sum(axis=1)
        if (totals <= 0).any():
            bad = [products[i] for i in np.flatnonzero(totals <= 0)]
            raise ZeroTotalQuantity(f"products with zero total quantity: {bad}")
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "quantities", quantities)
        if self.cost_target is not None:
            object.__setattr__(self, "cost_target", float(self.cost_target))

    @property
    def shape(self) -> tuple[int, int]:
        return self.prices.shape

    @property
    def observed(self) -> np.ndarray:
        return ~np.isnan(self.prices)

    def product_index(self, product_id: str) -> int:
        try:
            return self.product_ids.index(str(product_id))
        except ValueError:
            raise UnknownProduct(f"unknown product {product_id!r}") from None

    def with_quantities(self, quantities, cost_target=None) -> "PricePanel":
        return PricePanel(self.product_ids, self.campus_ids, self.prices, quantities, cost_target)

    def records(self) -> list[tuple[str, str, float, float]]:
        """Observed cells as (product, campus, price, quantity), row-major."""
        out = []
        for i, p in enumerate(self.product_ids):
            for j, c in enumerate(self.campus_ids):
                if not math.isnan(self.prices[i, j]):
                    out.append((p, c, float(self.prices[i, j]), float(self.quantities[i, j])))
        return out


@dataclass(frozen=True)
class PanelAggregates:
    product_totals: np.ndarray
    system_cost: float
    exposure: np.ndarray | None  # None when the panel has missing cells
    global_quantity_shares: np.ndarray
    cost_target: float = field(default=float("nan"))


def build_panel(records: Iterable[Sequence], cost_target: float | None = None) -> PricePanel:
    """Assemble a panel from ``(product_id, campus_id, price, quantity)`` records.

    Identifiers keep their order of first appearance.
    """
    products: dict[str, int] = {}
    campuses: dict[str, int] = {}
    cells: dict[tuple[int, int], tuple[float, float]] = {}
    for rec in records:
        pid, cid, price, qty = rec
        pid, cid = str(pid), str(cid)
        price, qty = float(price), float(qty)
        if not (math.isfinite(price) and math.isfinite(qty)):
            raise NonFiniteValue(f"non-finite value in record ({pid}, {cid})")
        if price < 0 or qty < 0:
            raise NegativeValue(f"negative value in record ({pid}, {cid})")
        i = products.setdefault(pid, len(products))
        j = campuses.setdefault(cid, len(campuses))
        if (i, j) in cells:
            raise DuplicateCell(f"duplicate cell ({pid}, {cid})")
        cells[(i, j)] = (price, qty)
    if not cells:
        raise EmptyPanel("no records")
    prices = np.full((len(products), len(campuses)), np.nan)
    quantities = np.zeros_like(prices)
    for (i, j), (p, q) in cells.items():
        prices[i, j] = p
        quantities[i, j] = q
    return PricePanel(tuple(products), tuple(campuses), prices, quantities, cost_target)


def is_complete(panel: PricePanel) -> bool:
    return bool(panel.observed.all())


def aggregates(panel: PricePanel) -> PanelAggregates:
    q = panel.quantities
    totals = q.sum(axis=1)
    cost = float(np.nansum(panel.prices * q))
    exposure = None
    if is_complete(panel):
        exposure = _frozen(totals @ panel.prices)
    shares = q.sum(axis=0) / q.sum()
    target = panel.cost_target if panel.cost_target is not None else cost
    return PanelAggregates(_frozen(totals), cost, exposure, _frozen(shares), target)


def exposure_of(prices: np.ndarray, product_totals: np.ndarray) -> np.ndarray:
    """Campus exposures sum_i Q_i p_ij for a complete price grid."""
    if np.isnan(prices).any():
        raise ValueError("exposure needs a complete price grid")
    return np.asarray(product_totals, dtype=float) @ np.asarray(prices, dtype=float)


# --- serialization ---------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def panel_to_csv(panel: PricePanel) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for pid, cid, p, q in panel.records():
        w.writerow([pid, cid, _fmt(p), _fmt(q)])
    return buf.getvalue()


def panel_to_json(panel: PricePanel) -> str:
    recs = [
        {"product_id": pid, "campus_id": cid, "price": p, "quantity": q}
        for pid, cid, p, q in panel.records()
    ]
    if panel.cost_target is not None:
        return json.dumps({"records": recs, "cost_target": float(panel.cost_target)}, indent=1) + "\n"
    return json.dumps(recs, indent=1) + "\n"


def _parse_number(raw, field_name: str, line: int | None, source: str | None) -> float:
    try:
        val = float(raw)
    except (TypeError, ValueError):
        raise PanelParseError(f"{field_name} {raw!r} is not a number", line, source) from None
    if not math.isfinite(val):
        raise PanelParseError(f"{field_name} must be finite, got {raw!r}", line, source)
    if val < 0:
        raise PanelParseError(f"{field_name} must be nonnegative, got {raw!r}", line, source)
    return val


def _build_checked(rows: list[tuple[str, str, float, float, int]], source, cost_target):
    seen: dict[tuple[str, str], int] = {}
    for pid, cid, _, _, line in rows:
        if (pid, cid) in seen:
            raise PanelParseError(
                f"duplicate cell ({pid}, {cid}); first seen on line {seen[(pid, cid)]}",
                line,
                source,
            )
        seen[(pid, cid)] = line
    if not rows:
        raise PanelParseError("no data rows", None, source)
    try:
        return build_panel([r[:4] for r in rows], cost_target)
    except (ZeroTotalQuantity, UnpricedQuantity) as exc:
        raise PanelParseError(str(exc), None, source) from exc


def parse_panel_csv(text: str, source: str | None = None, cost_target=None) -> PricePanel:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise PanelParseError("empty file", 1, source) from None
    header = [h.strip().lstrip("﻿") for h in header]
    if tuple(header) != CSV_HEADER:
        raise PanelParseError(
            f"expected header {','.join(CSV_HEADER)}, got {','.join(header)}", 1, source
        )
    rows = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise PanelParseError(f"expected 4 fields, got {len(row)}", line, source)
        pid, cid = row[0].strip(), row[1].strip()
        if not pid or not cid:
            raise PanelParseError("empty identifier", line, source)
        price = _parse_number(row[2].strip(), "price", line, source)
        qty = _parse_number(row[3].strip(), "quantity", line, source)
        rows.append((pid, cid, price, qty, line))
    return _build_checked(rows, source, cost_target)


def parse_panel_json(text: str, source: str | None = None, cost_target=None) -> PricePanel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PanelParseError(f"invalid JSON: {exc.msg}", exc.lineno, source) from None
    if isinstance(data, dict):
        if cost_target is None:
            cost_target = data.get("cost_target")
        data = data.get("records")
    if not isinstance(data, list):
        raise PanelParseError("expected a list of records", None, source)
    rows = []
    for k, rec in enumerate(data, start=1):
        if not isinstance(rec, dict) or set(CSV_HEADER) - set(rec):
            raise PanelParseError(f"record {k} must have fields {CSV_HEADER}", None, source)
        price = _parse_number(rec["price"], f"record {k} price", None, source)
        qty = _parse_number(rec["quantity"], f"record {k} quantity", None, source)
        rows.append((str(rec["product_id"]), str(rec["campus_id"]), price, qty, k))
    return _build_checked(rows, source, cost_target)


def read_panel(path, cost_target: float | None = None) -> PricePanel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PanelParseError(f"cannot read: {exc.strerror}", None, str(path)) from None
    if path.suffix.lower() == ".json":
        return parse_panel_json(text, str(path), cost_target)
    return parse_panel_csv(text, str(path), cost_target)
