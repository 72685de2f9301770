from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from ..errors import PanelParseError


class OperatorTag(str, Enum):
    NAIVE = "Naive"
    FIXED_EFFECTS = "FixedEffects"
    CONVEX_WEIGHTS = "ConvexWeights"
    CONVEX_SLACK = "ConvexSlack"
    CONVEX_BOUNDARY = "ConvexBoundary"


@dataclass(frozen=True, eq=False)
class WorldPriceVector:
    """One blended price per product, aligned with ``product_ids``."""

    operator: OperatorTag
    prices: np.ndarray
    product_ids: tuple[str, ...]

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float, copy=True)
        if prices.shape != (len(self.product_ids),):
            raise ValueError("one world price per product is required")
        if not np.isfinite(prices).all():
            raise ValueError("world prices must be finite")
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "operator", OperatorTag(self.operator))
        object.__setattr__(self, "product_ids", tuple(self.product_ids))

    def as_dict(self) -> dict[str, float]:
        return {p: float(v) for p, v in zip(self.product_ids, self.prices)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["product_id", "world_price", "operator"])
        for p, v in zip(self.product_ids, self.prices):
            w.writerow([p, repr(float(v)), self.operator.value])
        return buf.getvalue()

    def to_json_obj(self) -> dict:
        return {
            "operator": self.operator.value,
            "prices": [{"product_id": p, "world_price": float(v)} for p, v in zip(self.product_ids, self.prices)],
        }


def read_world_prices(path) -> WorldPriceVector:
    """Read a ``product_id,world_price,operator`` CSV (or the JSON form)."""
    path = Path(path)
    src = str(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PanelParseError(f"cannot read: {exc.strerror}", None, src) from None
    if path.suffix.lower() == ".json":
        try:
            obj = json.loads(text)
            if "world_prices" in obj:
                obj = obj["world_prices"]
            rows = [(str(r["product_id"]), float(r["world_price"])) for r in obj["prices"]]
            return WorldPriceVector(obj["operator"], [v for _, v in rows], [p for p, _ in rows])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise PanelParseError(f"not a world-price JSON document ({exc})", None, src) from None
    reader = csv.reader(io.StringIO(text))
    header = [h.strip() for h in next(reader, [])]
    if header[:2] != ["product_id", "world_price"]:
        raise PanelParseError("expected header product_id,world_price[,operator]", 1, src)
    ids, vals, tags = [], [], set()
    for row in reader:
        if not row:
            continue
        try:
            vals.append(float(row[1]))
        except (IndexError, ValueError):
            raise PanelParseError("bad world_price field", reader.line_num, src) from None
        if row[0] in ids:
            raise PanelParseError(f"duplicate product {row[0]!r}", reader.line_num, src)
        ids.append(row[0])
        if len(row) > 2 and row[2]:
            tags.add(row[2])
    if len(tags) > 1:
        raise PanelParseError(f"mixed operators in one file: {sorted(tags)}", None, src)
    tag = tags.pop() if tags else OperatorTag.NAIVE.value
    return WorldPriceVector(tag, vals, ids)
