"""worldprice command-line interface.

Subcommands: blend, diagnose, select, simulate, sweep. Exit codes are
0 on success, 2 for input errors, 3 when the cost target cannot be met and 4
when the panel does not identify the fixed effects. Every JSON report embeds
a run manifest (command, resolved parameters, seed, tool version and the
SHA-256 of each input file, keyed by role); no timestamps are written, so reruns are
byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import cdr, diagnose, dominance_pairs
from .errors import (
    BadBaseline,
    BadParams,
    DegenerateExposure,
    IdentificationError,
    InfeasibleCost,
    InputError,
    PanelParseError,
    ToleranceUnreachable,
    WorldPriceError,
)
from .operators import WorldPriceVector, convex_blend, fe_blend, naive_blend, read_world_prices
from .operators.convex import FALLBACKS
from .operators.selection import Thresholds, select_operator
from .panel import aggregates, panel_to_csv, panel_to_json, read_panel
from .scenarios import (
    AIDC_DEFAULTS,
    DEFAULT_GRIDS,
    INTERACTION_DEFAULTS,
    MIX_DEFAULTS,
    SWEEP_KINDS,
    ScenarioConfig,
    apply_sparsity_mask,
    gen_aidc_opex,
    gen_dominance_scenario,
    gen_interaction,
    gen_minimal_simpson,
    gen_mix_extremity,
    preset_params,
    run_sweep,
)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_IDENT, EXIT_OTHER = 0, 2, 3, 4, 1

SIMULATE_KINDS = ("minimal-simpson", "dominance", "aidc", "mix-extremity", "interaction", "sparsity")


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# --- small helpers -----------------------------------------------------------


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _digests(**paths) -> dict:
    """SHA-256 per input role; keyed by role, not path, so moving files is harmless."""
    out = {}
    for role, p in paths.items():
        if p is None:
            continue
        try:
            out[role] = _sha256(p)
        except OSError as exc:
            raise PanelParseError(f"cannot read: {exc.strerror}", None, str(p)) from None
    return out


def _manifest(command: str, params: dict, seed, inputs: dict) -> dict:
    return {
        "command": command,
        "params": _plain(params),
        "seed": seed,
        "tool_version": __version__,
        "input_digest": inputs,
    }


def _plain(x):
    """JSON-ready copy: tuples to lists, numpy scalars to Python, NaN to None."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, allow_nan=False) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_value(raw: str):
    """Config values: ints, floats, booleans, comma lists of numbers, else strings."""
    s = raw.strip()
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null", ""):
        return None
    if "," in s:
        return tuple(parse_value(part) for part in s.split(","))
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def read_config(path) -> dict:
    """Flat ``key = value`` file; blank lines and ``#`` comments are ignored."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PanelParseError(f"cannot read: {exc.strerror}", None, str(path)) from None
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PanelParseError("expected key=value", n, str(path))
        key, val = line.split("=", 1)
        out[key.strip().replace("-", "_")] = parse_value(val)
    return out


def _set_pairs(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip().replace("-", "_")] = parse_value(v)
    return out


def _merge(args, defaults: dict, extra_ok: bool) -> tuple[dict, dict]:
    """Resolve option values: flag > config file > built-in default.

    Returns (options, generator_params). Config keys that are not options go
    to the generator params when ``extra_ok``; otherwise they are an error.
    """
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    opts = {}
    for key, default in defaults.items():
        val = getattr(args, key, None)
        if val is None:
            val = cfg.pop(key, default)
        else:
            cfg.pop(key, None)
        opts[key] = val
    if cfg and not extra_ok:
        raise UsageError(f"unknown config keys: {sorted(cfg)}")
    cfg.update(_set_pairs(getattr(args, "set", None)))
    return opts, cfg


def _table(headers, rows) -> str:
    """Plain text table with numbers rounded to two decimals."""

    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.2f}"
        return str(v)

    cells = [[cell(v) for v in r] for r in rows]
    widths = [max(len(str(h)), *(len(r[k]) for r in cells)) for k, h in enumerate(headers)]
    lines = ["  ".join(str(h).ljust(w) for h, w in zip(headers, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


def _say(args, text: str) -> None:
    if not getattr(args, "quiet", False):
        sys.stdout.write(text)


# --- blend -------------------------------------------------------------------


def read_baseline(path, campus_ids) -> np.ndarray:
    """Baseline weights from ``campus_id,weight`` CSV or a JSON object/list."""
    path = Path(path)
    src = str(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PanelParseError(f"cannot read: {exc.strerror}", None, src) from None
    if path.suffix.lower() == ".json":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PanelParseError(f"invalid JSON: {exc.msg}", exc.lineno, src) from None
        if isinstance(obj, list):
            if len(obj) != len(campus_ids):
                raise BadBaseline(f"baseline has {len(obj)} weights for {len(campus_ids)} campuses")
            return np.asarray(obj, dtype=float)
        if not isinstance(obj, dict):
            raise PanelParseError("expected an object of campus weights", None, src)
        table = {str(k): v for k, v in obj.items()}
    else:
        reader = csv.reader(io.StringIO(text))
        header = [h.strip() for h in next(reader, [])]
        if header != ["campus_id", "weight"]:
            raise PanelParseError("expected header campus_id,weight", 1, src)
        table = {}
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise PanelParseError("expected 2 fields", reader.line_num, src)
            try:
                table[row[0].strip()] = float(row[1])
            except ValueError:
                raise PanelParseError(f"weight {row[1]!r} is not a number", reader.line_num, src) from None
    if set(table) != set(campus_ids):
        raise BadBaseline(f"baseline campuses {sorted(table)} do not match panel campuses {sorted(campus_ids)}")
    return np.array([float(table[c]) for c in campus_ids])


def cmd_blend(args) -> int:
    opts, _ = _merge(
        args,
        {"operator": "naive", "fallback": "error", "epsilon": 1e-6, "cost_target": None, "baseline": None},
        extra_ok=False,
    )
    if opts["operator"] not in ("naive", "fe", "convex"):
        raise UsageError(f"unknown operator {opts['operator']!r}")
    if opts["fallback"] not in FALLBACKS:
        raise UsageError(f"unknown fallback {opts['fallback']!r}")
    panel = read_panel(args.input, opts["cost_target"])
    report = {"cost_target": aggregates(panel).cost_target}
    if opts["operator"] == "naive":
        wpv = naive_blend(panel)
    elif opts["operator"] == "fe":
        wpv, fit = fe_blend(panel)
        report["fe_fit"] = fit.summary()
    else:
        baseline = read_baseline(opts["baseline"], panel.campus_ids) if opts["baseline"] else None
        wpv, sol = convex_blend(panel, baseline, opts["fallback"], float(opts["epsilon"]))
        report["convex"] = sol.summary(panel.campus_ids)
        report["feasibility"] = sol.feasibility.as_dict()
    report["cdr"] = cdr(panel, wpv)
    out_csv = Path(args.output)
    out_json = Path(args.report) if args.report else out_csv.with_suffix(".json")
    doc = {
        "manifest": _manifest(
            "blend",
            {k: v for k, v in opts.items() if k != "baseline"},
            None,
            _digests(panel=args.input, baseline=opts["baseline"]),
        ),
        "world_prices": wpv.to_json_obj(),
        **report,
    }
    write_atomic(out_csv, wpv.to_csv())
    write_atomic(out_json, _dumps(doc))
    _say(args, _table(["product", "world_price"], [(p, float(v)) for p, v in zip(wpv.product_ids, wpv.prices)]))
    return EXIT_OK


# --- diagnose ----------------------------------------------------------------


def _align(world: WorldPriceVector, product_ids) -> WorldPriceVector:
    if set(world.product_ids) != set(product_ids):
        missing = sorted(set(product_ids) - set(world.product_ids))
        extra = sorted(set(world.product_ids) - set(product_ids))
        raise UsageError(f"world prices do not match panel products (missing {missing}, unexpected {extra})")
    idx = [world.product_ids.index(p) for p in product_ids]
    return WorldPriceVector(world.operator, world.prices[idx], product_ids)


def cmd_diagnose(args) -> int:
    opts, _ = _merge(args, {"cost_target": None, "pair": None}, extra_ok=False)
    panel = read_panel(args.input, opts["cost_target"])
    world = _align(read_world_prices(args.world), panel.product_ids)
    pair = tuple(opts["pair"]) if opts["pair"] else None
    if pair is not None and len(pair) != 2:
        raise UsageError("--pair takes two product ids")
    rep = diagnose(panel, world, pair)
    doc = {
        "manifest": _manifest("diagnose", opts, None, _digests(panel=args.input, world_prices=args.world)),
        "operator": world.operator.value,
        **rep.to_json_obj(),
    }
    write_atomic(args.output, _dumps(doc))
    _say(args, _table(["metric", "value"], [("ovr", rep.ovr), ("cdr", rep.cdr), ("dominant_pairs", rep.dominant_pair_count)]))
    return EXIT_OK


# --- select ------------------------------------------------------------------


def cmd_select(args) -> int:
    opts, _ = _merge(args, {"ovr_max": 0.0, "rms_max": None, "cost_target": None}, extra_ok=False)
    panel = read_panel(args.input, opts["cost_target"])
    th = Thresholds(float(opts["ovr_max"]), None if opts["rms_max"] is None else float(opts["rms_max"]))
    rec = select_operator(panel, th)
    resolved = dict(opts, ovr_max=rec.thresholds.ovr_max, rms_max=rec.thresholds.rms_max)
    doc = {"manifest": _manifest("select", resolved, None, _digests(panel=args.input)), **rec.to_json_obj()}
    write_atomic(args.output, _dumps(doc))
    _say(args, f"recommended operator: {rec.operator} ({rec.rule})\n")
    return EXIT_OK


# --- simulate ----------------------------------------------------------------


def _simulate_panel(kind: str, seed: int, params: dict):
    p = dict(params)
    if kind == "minimal-simpson":
        if p:
            raise BadParams(f"minimal-simpson takes no parameters, got {sorted(p)}")
        return gen_minimal_simpson(), {}
    if kind == "dominance":
        preset = p.pop("preset", None)
        base = preset_params(preset) if preset else {}
        base.update(p)
        if "I" not in base or "J" not in base:
            raise BadParams("dominance needs a preset or both I and J")
        return _call(gen_dominance_scenario, seed=seed, **base), dict(base, preset=preset)
    if kind == "aidc":
        return _call(gen_aidc_opex, seed=seed, **p), dict(AIDC_DEFAULTS, **p)
    if kind == "mix-extremity":
        p.setdefault("eta", 0.5)
        return _call(gen_mix_extremity, **p), dict(MIX_DEFAULTS, **p)
    if kind == "interaction":
        p.setdefault("gamma", 0.0)
        return _call(gen_interaction, seed=seed, **p), dict(INTERACTION_DEFAULTS, **p)
    if kind == "sparsity":
        rho = p.pop("rho_mask", p.pop("rho", 0.3))
        redistribute = p.pop("redistribute", True)
        gamma = p.pop("gamma", 0.0)
        full = _call(gen_interaction, gamma, seed=seed, **p)
        masked = apply_sparsity_mask(full, float(rho), seed=seed + 1, redistribute=bool(redistribute))
        return masked, dict(INTERACTION_DEFAULTS, **p, gamma=gamma, rho_mask=rho, redistribute=redistribute)
    raise BadParams(f"unknown kind {kind!r}; known: {list(SIMULATE_KINDS)}")


def _call(fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except TypeError as exc:  # unexpected keyword from a config file
        raise BadParams(str(exc)) from None


def cmd_simulate(args) -> int:
    opts, params = _merge(args, {"seed": 0, "preset": None}, extra_ok=True)
    seed = int(opts["seed"])
    if opts["preset"] is not None:
        params["preset"] = opts["preset"]
    panel, resolved = _simulate_panel(args.kind, seed, params)
    agg = aggregates(panel)
    dom = dominance_pairs(panel)
    summary = {
        "manifest": _manifest("simulate", dict(kind=args.kind, **resolved), seed, {}),
        "products": list(panel.product_ids),
        "campuses": list(panel.campus_ids),
        "dominance_pair_count": len(dom),
        "system_cost": agg.system_cost,
        "cost_target": agg.cost_target,
        "product_totals": dict(zip(panel.product_ids, agg.product_totals.tolist())),
        "observed_cells": int(panel.observed.sum()),
    }
    out = Path(args.output_dir)
    write_atomic(out / "panel.csv", panel_to_csv(panel))
    write_atomic(out / "panel.json", panel_to_json(panel))
    write_atomic(out / "summary.json", _dumps(summary))
    _say(args, f"{args.kind}: {panel.shape[0]} products x {panel.shape[1]} campuses, C = {agg.cost_target:.2f}\n")
    return EXIT_OK


# --- sweep -------------------------------------------------------------------


def parse_grid(text) -> tuple:
    """``start:stop:step`` (inclusive) or a comma list."""
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    if isinstance(text, (int, float)):
        return (float(text),)
    s = str(text).strip()
    if s.count(":") == 2:
        try:
            start, stop, step = (float(x) for x in s.split(":"))
        except ValueError:
            raise UsageError(f"bad grid {text!r}") from None
        if step <= 0 or stop < start:
            raise UsageError("grid needs step > 0 and stop >= start")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + k * step, 12) for k in range(n))
    try:
        return tuple(float(x) for x in s.split(","))
    except ValueError:
        raise UsageError(f"bad grid {text!r}") from None


def cmd_sweep(args) -> int:
    opts, params = _merge(args, {"seed": 0, "grid": None, "replicates": 1, "workers": 1}, extra_ok=True)
    if args.kind not in SWEEP_KINDS:
        raise UsageError(f"unknown sweep kind {args.kind!r}")
    grid = DEFAULT_GRIDS[args.kind] if opts["grid"] is None else parse_grid(opts["grid"])
    seed = int(opts["seed"])
    cfg = ScenarioConfig(args.kind, seed, params)
    rep = run_sweep(cfg, grid, int(opts["replicates"]), workers=int(opts["workers"]))
    # Worker count never changes results, so it is left out of the manifest.
    resolved = {"kind": args.kind, "grid": list(rep.grid), "replicates": rep.replicates, **rep.params}
    doc = {"manifest": _manifest("sweep", resolved, seed, {}), **rep.to_json_obj()}
    out = Path(args.output_dir)
    write_atomic(out / "sweep.json", _dumps(doc))
    write_atomic(out / "sweep.csv", rep.to_csv())
    write_atomic(out / "figure_data.csv", rep.to_tidy_csv())
    rows = []
    for g, pt in zip(rep.grid, rep.per_point):
        ops = pt["operators"]
        rows.append([g] + [ops[o]["ranking_gap"] for o in ("naive", "fe", "convex")] + [ops[o]["reversal_rate"] for o in ("naive", "fe", "convex")])
    _say(args, _table(["grid", "gap_naive", "gap_fe", "gap_convex", "rev_naive", "rev_fe", "rev_convex"], rows))
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="worldprice", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="flat key=value file; flags override its values")
        p.add_argument("-q", "--quiet", action="store_true", help="suppress the summary table")

    b = sub.add_parser("blend", help="compute world prices for a panel")
    b.add_argument("input", help="panel CSV or JSON")
    b.add_argument("--operator", choices=("naive", "fe", "convex"))
    b.add_argument("--baseline", help="baseline weights (campus_id,weight CSV or JSON)")
    b.add_argument("--fallback", choices=FALLBACKS)
    b.add_argument("--epsilon", type=float)
    b.add_argument("--cost-target", type=float, help="accounting cost C (default: realized cost)")
    b.add_argument("-o", "--output", required=True, help="world-price CSV")
    b.add_argument("--report", help="JSON report path (default: output with .json suffix)")
    common(b)
    b.set_defaults(func=cmd_blend)

    d = sub.add_parser("diagnose", help="OVR, CDR and violations for given world prices")
    d.add_argument("input", help="panel CSV or JSON")
    d.add_argument("world", help="world-price CSV or JSON")
    d.add_argument("--pair", nargs=2, metavar=("A", "B"), help="also report the ranking gap A minus B")
    d.add_argument("--cost-target", type=float)
    d.add_argument("-o", "--output", required=True)
    common(d)
    d.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("select", help="recommend FE or convex weights for a panel")
    s.add_argument("input")
    s.add_argument("--ovr-max", type=float, help="largest FE order-violation rate kept (default 0)")
    s.add_argument("--rms-max", type=float, help="largest FE residual RMS kept (default 5%% of unit cost)")
    s.add_argument("--cost-target", type=float)
    s.add_argument("-o", "--output", required=True)
    common(s)
    s.set_defaults(func=cmd_select)

    m = sub.add_parser("simulate", help="generate a scenario panel")
    m.add_argument("kind", choices=SIMULATE_KINDS)
    m.add_argument("--preset", help="dominance preset (scenario_a, scenario_b)")
    m.add_argument("--seed", type=int)
    m.add_argument("--set", action="append", metavar="KEY=VALUE", help="generator parameter (repeatable)")
    m.add_argument("-d", "--output-dir", required=True)
    common(m)
    m.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run a stress sweep and write figure data")
    w.add_argument("kind", choices=SWEEP_KINDS)
    w.add_argument("--grid", help="start:stop:step or comma list")
    w.add_argument("--replicates", type=int)
    w.add_argument("--seed", type=int)
    w.add_argument("--workers", type=int, help="process count; results do not depend on it")
    w.add_argument("--set", action="append", metavar="KEY=VALUE", help="generator parameter (repeatable)")
    w.add_argument("-d", "--output-dir", required=True)
    common(w)
    w.set_defaults(func=cmd_sweep)
    return ap


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (InfeasibleCost, DegenerateExposure, ToleranceUnreachable)):
        return EXIT_INFEASIBLE
    if isinstance(exc, IdentificationError):
        return EXIT_IDENT
    if isinstance(exc, (InputError, ValueError, OSError)):
        return EXIT_INPUT
    return EXIT_OTHER


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        return args.func(args)
    except (WorldPriceError, ValueError, OSError) as exc:
        sys.stderr.write(f"worldprice {args.command}: {type(exc).__name__}: {exc}\n")
        return exit_code_for(exc)


if __name__ == "__main__":
    raise SystemExit(main())
