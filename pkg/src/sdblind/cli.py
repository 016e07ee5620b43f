"""Command-line front end: ``sdblind simulate|sweep|audit``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import io
from .audit import Monitor, run_audit
from .detector import PROFILES, ConfigError, DetectorConfig, i0_to_mv
from .feedback import SolverError
from .simulator import DEFAULT_GATES, analytic_count_rate, simulate_power_point
from .sweep import BLIND_THRESHOLD, make_grid, run_sweep

DEFAULT_GRID = "1e-12:1e-2:81:log"
EXIT_ERROR = 1


class CLIError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError("usage", message)


def parse_grid(spec: str):
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise CLIError("grid", f"expected pmin:pmax:n[:log|linear], got {spec!r}")
    try:
        p_min, p_max, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise CLIError("grid", f"bad number in {spec!r}") from None
    spacing = parts[3] if len(parts) == 4 else "log"
    try:
        return make_grid(p_min, p_max, n, spacing)
    except ValueError as exc:
        raise CLIError("grid", str(exc)) from None


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned value")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", action="append", default=[], metavar="FILE",
                        help="TOML detector config (repeatable)")
    common.add_argument("--defaults", choices=sorted(PROFILES),
                        help="fill missing config keys from a built-in profile")
    common.add_argument("--gates", type=_positive_int, default=DEFAULT_GATES)
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")

    p = _Parser(prog="sdblind", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="one power point")
    s.add_argument("--power", type=float, required=True, help="incident power, W")

    for name, hlp in (("sweep", "power sweep with feature extraction"),
                      ("audit", "best-practice audit")):
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.add_argument("--grid", default=DEFAULT_GRID, help="pmin:pmax:n:log|linear")
        sp.add_argument("--blind-threshold", type=float, default=BLIND_THRESHOLD, metavar="HZ")
        if name == "sweep":
            sp.add_argument("--plot-data", action="store_true",
                            help="also write two-column power/count-rate files")
        else:
            sp.add_argument("--monitor-resistor", type=float, metavar="OHM")
            sp.add_argument("--alarm-current", type=float, metavar="A")
            sp.add_argument("--static", action="store_true",
                            help="config-only checks, no sweeps")
    return p


def load_configs(args) -> list[tuple[str, DetectorConfig, dict]]:
    if not args.config:
        if args.defaults is None:
            raise CLIError("config", "no --config given (use --defaults paper for the built-in profile)")
        return [("default", PROFILES[args.defaults](), {"source": None, "defaults": args.defaults})]
    out = []
    for path in args.config:
        cfg, meta = io.load_config(path, args.defaults)
        out.append((Path(path).stem, cfg, meta))
    stems = [o[0] for o in out]
    if len(set(stems)) != len(stems):
        raise CLIError("config", "config files must have distinct names")
    return out


def _metadata(cfg: DetectorConfig, meta: dict, args, grid=None) -> dict:
    d = {"config": asdict(cfg), "disc_level_mv_equiv": i0_to_mv(cfg.disc_level),
         "config_source": meta, "n_gates": args.gates, "seed": args.seed}
    if grid is not None:
        d["grid"] = args.grid
    return d


def _outdir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CLIError("io", f"{out}: {exc.strerror}") from None
    return out


def cmd_simulate(args) -> int:
    configs = load_configs(args)
    out = _outdir(args)
    for stem, cfg, meta in configs:
        op, res = simulate_power_point(args.power, cfg, args.gates, args.seed)
        doc = {"schema_version": io.SCHEMA_VERSION, "kind": "power_point",
               "operating_point": asdict(op), "gate_chain": asdict(res),
               "analytic_count_rate_hz": analytic_count_rate(op, cfg),
               "metadata": _metadata(cfg, meta, args)}
        text = io.dumps(doc)
        if out is None:
            sys.stdout.write(text)
        else:
            (out / f"{stem}.point.json").write_text(text)
    return 0


def _sweeps(args, configs, grid):
    return [run_sweep(cfg, grid, args.gates, args.seed, args.jobs, args.blind_threshold)
            for _, cfg, _ in configs]


def cmd_sweep(args) -> int:
    configs = load_configs(args)
    grid = parse_grid(args.grid)
    out = _outdir(args) or Path(".")
    for (stem, cfg, meta), sweep in zip(configs, _sweeps(args, configs, grid)):
        io.emit_sweep_csv(sweep, out / f"{stem}.csv")
        io.emit_features_json(sweep.features, out / f"{stem}.features.json",
                              _metadata(cfg, meta, args, grid))
        if args.plot_data:
            io.emit_plot_data(sweep, out / f"{stem}.dat")
        gaps = ", ".join(f"[{lo:.3g}, {hi:.3g}] W" for lo, hi in sweep.features.blinding_gaps) or "none"
        print(f"{stem}: {len(sweep.points)} points, gaps: {gaps}, "
              f"recovery: {sweep.features.recovery_power}")
    return 0


def cmd_audit(args) -> int:
    configs = load_configs(args)
    monitor = None
    if (args.monitor_resistor is None) != (args.alarm_current is None):
        raise CLIError("usage", "--monitor-resistor and --alarm-current go together")
    if args.monitor_resistor is not None:
        try:
            monitor = Monitor(args.monitor_resistor, args.alarm_current)
        except ValueError as exc:
            raise CLIError("usage", str(exc)) from None
    sweeps = None
    if not args.static:
        sweeps = _sweeps(args, configs, parse_grid(args.grid))
    report = run_audit([c for _, c, _ in configs], sweeps, monitor)
    meta = {"detectors": [_metadata(c, m, args) for _, c, m in configs],
            "grid": None if args.static else args.grid,
            "monitor": None if monitor is None else asdict(monitor)}
    out = _outdir(args)
    if out is None:
        sys.stdout.write(io.dumps(io.report_to_dict(report, meta)))
    else:
        io.emit_report_json(report, out / "audit.json", meta)
        for c in report.criteria:
            print(f"{c.id} {c.verdict}")
    return report.exit_code


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "audit": cmd_audit}


def _fail(kind: str, message: str) -> int:
    line = " ".join(str(message).split())
    print(f"sdblind: error: {kind}: {line}", file=sys.stderr)
    return EXIT_ERROR


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except CLIError as exc:
        return _fail(exc.kind, exc)
    except ConfigError as exc:
        return _fail("config", exc)
    except io.ConfigParseError as exc:
        return _fail("config", exc)
    except SolverError as exc:
        return _fail("solver", exc)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail("io", exc)
    except ValueError as exc:
        return _fail("value", exc)


if __name__ == "__main__":
    sys.exit(main())
