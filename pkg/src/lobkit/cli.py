"""``lobkit`` command line.

Every command writes its outputs plus ``manifest.json`` into ``--out``. The
manifest echoes the resolved settings (input paths reduced to basenames) and
the sha256 of every input and output, so two runs with the same settings
produce byte-identical output directories.

Settings resolve as: built-in defaults < ``--config`` file < command-line
flags. For ``generate`` the ``LOBKIT_SEED`` environment variable sits between
the config file and the flags.

Exit codes: 0 success, 2 usage error, 3 input error, 4 internal invariant
breach.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from pathlib import Path
from typing import Callable, Optional

from lobkit import analytics, scales, snapshot
from lobkit.errors import InvalidConfig, InvariantBreach, LobkitError
from lobkit.events import (
    QuoteRecorder,
    SnapshotRecorder,
    TradingCalendar,
    format_time,
    read_events,
    replay,
    write_execution_log,
)
from lobkit.flowgen import FlowConfig, generate

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 2, 3, 4

EMITS = ("executions", "series", "grid")


class UsageError(Exception):
    pass


# --- option parsing -------------------------------------------------------------


def _plan(text: str) -> str:
    if text not in snapshot.PLANS:
        raise ValueError(f"unknown plan {text!r}; choose from {', '.join(snapshot.PLANS)}")
    return text


def _window(text: str) -> tuple[int, int]:
    lo, hi = (int(x) for x in text.split(":"))
    return lo, hi


def _emit(text: str) -> tuple[str, ...]:
    names = tuple(x.strip() for x in text.split(",") if x.strip())
    bad = [n for n in names if n not in EMITS]
    if bad or not names:
        raise ValueError(f"--emit takes a comma list of {', '.join(EMITS)}")
    return names


def _formats(text: str) -> tuple[str, ...]:
    names = tuple(x.strip() for x in text.split(",") if x.strip())
    if not names or any(n not in ("csv", "json") for n in names):
        raise ValueError("--format takes csv, json or csv,json")
    return names


def _calendar_kind(text: str) -> str:
    if text not in ("uniform", "lse2002"):
        raise ValueError("--calendar is uniform or lse2002")
    return text


# (dest, type, default, help); shared by argparse and the config file reader
CALENDAR_OPTS = [
    ("calendar", _calendar_kind, "uniform", "uniform days or the 2002 LSE calendar (lse2002)"),
    ("day_length", float, 31501.0, "seconds per trading day for the uniform calendar"),
    ("days", int, None, "number of days (default: enough to cover the last event)"),
]

COMMAND_OPTS: dict[str, list] = {
    "replay": [
        ("emit", _emit, ("executions",), "comma list of executions, series, grid"),
        ("plan", _plan, "fig1", "sampling plan for the grid"),
        ("step", float, 10.0, "sampling step in seconds for the quote series"),
        ("cap", int, snapshot.DEFAULT_CAP, "clip grid cells at this volume"),
        ("window", _window, None, "grid price window LO:HI (default: first midquote +-150)"),
    ],
    "scales": [
        ("step", float, 10.0, "quote sampling step in seconds"),
        ("threshold", float, 5.0, "spread excess in ticks that counts as a shock"),
        ("baseline_window", float, 600.0, "seconds of history for the baseline spread"),
        ("month_days", int, scales.MONTH_DAYS, "trading days in a month"),
    ],
    "shape": [
        ("plan", _plan, "fig3", "sampling plan"),
        ("bins_per_unit", int, 2000, "bins per unit of normalized price"),
    ],
    "imbalance": [
        ("plan", _plan, "fig5", "sampling plan"),
    ],
    "relax": [
        ("step", float, 10.0, "spread sampling step in seconds"),
        ("threshold", float, 5.0, "spread excess in ticks that counts as a shock"),
        ("baseline_window", float, 600.0, "seconds of history for the baseline spread"),
    ],
    "grid": [
        ("plan", _plan, "fig1", "sampling plan"),
        ("cap", int, snapshot.DEFAULT_CAP, "clip cells at this volume"),
        ("window", _window, None, "price window LO:HI (default: first midquote +-150)"),
        ("format", _formats, ("csv",), "csv, json or csv,json"),
    ],
}

GENERATE_OPTS = [
    ("seed", int, None, "random seed (overrides config and LOBKIT_SEED)"),
    ("days", int, None, "number of days to simulate"),
]


def _add_opts(p: argparse.ArgumentParser, opts):
    for dest, _, default, help_text in opts:
        shown = "" if default is None else f" (default: {_show(default)})"
        p.add_argument("--" + dest.replace("_", "-"), dest=dest, default=None,
                       metavar=dest.upper(), help=help_text + shown)


def _show(v):
    return ",".join(map(str, v)) if isinstance(v, tuple) else v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lobkit", description="Limit order book replay and analytics.",
                                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("generate", help="simulate order flow into DIR/flow.lob", allow_abbrev=False)
    g.add_argument("--config", required=True, help="flow generator config (key = value lines)")
    g.add_argument("--out", required=True, help="output directory")
    _add_opts(g, GENERATE_OPTS)

    helps = {
        "replay": "replay an event file; emit executions, quote series, depth grid",
        "scales": "time and price scale table (text + CSV)",
        "shape": "average book shape against normalized price",
        "imbalance": "buy/sell imbalance and book width per snapshot",
        "relax": "spread shocks and their relaxation half-lives",
        "grid": "price-by-time depth grid",
    }
    for name, opts in COMMAND_OPTS.items():
        p = sub.add_parser(name, help=helps[name], allow_abbrev=False)
        p.add_argument("--input", required=True, help="canonical event file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", help="settings file (key = value lines, same names as the flags)")
        _add_opts(p, CALENDAR_OPTS + opts)
    return parser


def _read_config(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve(opts, args: argparse.Namespace, config: dict[str, str]) -> dict:
    """Merge defaults, config file values and flags for ``opts``."""
    known = {dest for dest, *_ in opts}
    unknown = sorted(set(config) - known)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    out = {}
    for dest, conv, default, _ in opts:
        raw, origin = getattr(args, dest), "--" + dest.replace("_", "-")
        if raw is None and dest in config:
            raw, origin = config[dest], f"config key {dest}"
        if raw is None:
            out[dest] = default
            continue
        try:
            out[dest] = conv(raw)
        except ValueError as exc:
            raise UsageError(f"{origin}: {exc}") from None
    return out


# --- outputs and manifest ---------------------------------------------------------


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in sorted(v.items())}
    return v


def write_manifest(out_dir: Path, command: str, settings: dict, inputs: list[Path],
                   outputs: list[str]) -> None:
    doc = {
        "command": command,
        "settings": _jsonable(settings),
        "inputs": {p.name: sha256_file(p) for p in inputs},
        "outputs": {name: sha256_file(out_dir / name) for name in sorted(outputs)},
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(x) if isinstance(x, float) else str(x)


# --- commands -----------------------------------------------------------------------


def _calendar(settings: dict, events) -> TradingCalendar:
    if settings["calendar"] == "lse2002":
        return TradingCalendar.lse_2002()
    t_last = events[-1].t if events else 0.0
    if settings["days"] is not None:
        cal = TradingCalendar(settings["days"], settings["day_length"])
        if t_last >= cal.span:
            raise UsageError(f"--days {settings['days']} ends before the last event at t={t_last}")
        return cal
    return TradingCalendar.covering(t_last, settings["day_length"])


def _snapshots(events, cal, plan_name) -> tuple[list, object]:
    rec = SnapshotRecorder(snapshot.schedule(plan_name, cal))
    result = replay(events, observers=[rec])
    result.book.check_invariants()
    return rec.snapshots, result


def cmd_generate(args) -> tuple[dict, list[Path], list[str]]:
    cfg_path = Path(args.config)
    if not cfg_path.is_file():
        raise UsageError(f"config file {args.config} not found")
    try:
        cfg = FlowConfig.from_file(cfg_path)
    except InvalidConfig as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    env_seed = os.environ.get("LOBKIT_SEED")
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed)
        except ValueError:
            raise UsageError(f"LOBKIT_SEED={env_seed!r} is not an integer") from None
    flags = resolve(GENERATE_OPTS, args, {})
    for key, value in flags.items():
        if value is not None:
            setattr(cfg, key, value)
    try:
        cfg.validate()
    except InvalidConfig as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    generate(cfg, out / "flow.lob")
    settings = dataclasses.asdict(cfg)
    settings["config"] = cfg_path.name
    return settings, [cfg_path], ["flow.lob"]


def cmd_replay(args, s, events, cal, out: Path) -> list[str]:
    written = []
    observers = []
    quotes = grid_rec = None
    if "series" in s["emit"]:
        quotes = QuoteRecorder(snapshot.schedule(snapshot.EveryN(s["step"]), cal))
        observers.append(quotes)
    if "grid" in s["emit"]:
        grid_rec = SnapshotRecorder(snapshot.schedule(s["plan"], cal))
        observers.append(grid_rec)
    result = replay(events, observers=observers)
    result.book.check_invariants()
    if "executions" in s["emit"]:
        write_execution_log(out / "executions.csv", result.executions)
        written.append("executions.csv")
    if quotes is not None:
        lines = ["t,best_bid,best_ask,spread,midquote"]
        for t, b, a in quotes.quotes:
            two = b is not None and a is not None
            lines.append(",".join([format_time(t), _num(b), _num(a),
                                   _num(a - b if two else None), _num((a + b) / 2 if two else None)]))
        _write(out / "series.csv", "\n".join(lines) + "\n")
        written.append("series.csv")
    if grid_rec is not None:
        g = snapshot.grid(grid_rec.snapshots, s["window"], s["cap"])
        _write(out / "grid.csv", g.to_csv())
        written.append("grid.csv")
    return written


def cmd_scales(args, s, events, cal, out: Path) -> list[str]:
    def check(result):
        result.book.check_invariants()

    rows = scales.measure_scales(events, cal, step=s["step"], shock_threshold=s["threshold"],
                                 baseline_window=s["baseline_window"], month_days=s["month_days"],
                                 result_hook=check)
    _write(out / "scales.txt", scales.format_table(rows))
    _write(out / "scales.csv", scales.to_csv(rows))
    return ["scales.txt", "scales.csv"]


def cmd_shape(args, s, events, cal, out: Path) -> list[str]:
    snaps, _ = _snapshots(events, cal, s["plan"])
    profile = analytics.ShapeProfile(s["bins_per_unit"])
    for snap in snaps:
        analytics.accumulate_shape(profile, snap)
    profile.to_csv(out / "shape.csv")
    return ["shape.csv"]


def cmd_imbalance(args, s, events, cal, out: Path) -> list[str]:
    snaps, _ = _snapshots(events, cal, s["plan"])
    lines = ["t,v_buy,v_sell,i_buy,i_sell,width,width_symmetric"]
    for snap in snaps:
        vb, vs = analytics.total_volumes(snap)
        ib = isell = w = ws = None
        if vb + vs:
            point = analytics.imbalance(snap)
            ib, isell = point.i_buy, point.i_sell
        if snap.two_sided:
            w = analytics.median_width(snap)
            ws = analytics.median_width(snap, "symmetric")
        lines.append(",".join([format_time(snap.t), str(vb), str(vs),
                               _num(ib), _num(isell), _num(w), _num(ws)]))
    _write(out / "imbalance.csv", "\n".join(lines) + "\n")
    return ["imbalance.csv"]


def cmd_relax(args, s, events, cal, out: Path) -> list[str]:
    quotes = QuoteRecorder(snapshot.schedule(snapshot.EveryN(s["step"]), cal))
    result = replay(events, observers=[quotes])
    result.book.check_invariants()
    t, spread = quotes.spread_series()
    shocks = analytics.spread_relaxation(t, spread, s["threshold"], s["baseline_window"], cal)
    doc = [sh.to_record() for sh in shocks]
    _write(out / "relax.json", json.dumps(doc, indent=2) + "\n")
    return ["relax.json"]


def cmd_grid(args, s, events, cal, out: Path) -> list[str]:
    snaps, _ = _snapshots(events, cal, s["plan"])
    g = snapshot.grid(snaps, s["window"], s["cap"])
    written = []
    if "csv" in s["format"]:
        _write(out / "grid.csv", g.to_csv())
        written.append("grid.csv")
    if "json" in s["format"]:
        _write(out / "grid.json", g.to_json())
        written.append("grid.json")
    return written


COMMANDS: dict[str, Callable] = {
    "replay": cmd_replay,
    "scales": cmd_scales,
    "shape": cmd_shape,
    "imbalance": cmd_imbalance,
    "relax": cmd_relax,
    "grid": cmd_grid,
}


def _run(args) -> None:
    out = Path(args.out)
    if args.command == "generate":
        out.mkdir(parents=True, exist_ok=True)
        settings, inputs, outputs = cmd_generate(args)
        write_manifest(out, "generate", settings, inputs, outputs)
        return
    opts = CALENDAR_OPTS + COMMAND_OPTS[args.command]
    settings = resolve(opts, args, _read_config(args.config) if args.config else {})
    in_path = Path(args.input)
    try:
        events = read_events(in_path)
    except OSError as exc:
        raise _InputError(f"cannot read {args.input}: {exc.strerror}") from None
    cal = _calendar(settings, events)
    out.mkdir(parents=True, exist_ok=True)
    outputs = COMMANDS[args.command](args, settings, events, cal, out)
    settings = dict(settings, input=in_path.name)
    inputs = [in_path]
    if args.config:
        settings["config"] = Path(args.config).name
        inputs.append(Path(args.config))
    write_manifest(out, args.command, settings, inputs, outputs)


class _InputError(Exception):
    pass


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        _run(args)
    except UsageError as exc:
        print(f"lobkit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvariantBreach, AssertionError) as exc:
        print(f"lobkit {args.command}: internal invariant breach: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (LobkitError, _InputError) as exc:
        print(f"lobkit {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
