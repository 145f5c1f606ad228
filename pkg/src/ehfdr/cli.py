"""Command-line entry point: ``ehfdr <command> [--config FILE] [overrides]``.

Exit status: 0 on success, 1 when ``validate`` finds a violated invariant,
2 on configuration errors, 3 when a numerical routine failed at some grid
point (the point is reported on stderr).
"""

import argparse
import csv
import io
import json
import math
import platform
import sys
import time
from pathlib import Path

import mpmath
import numpy as np

from . import __version__
from .config import load
from .errors import ConfigError
from .experiments import COMMANDS, ROW_FIELDS, summarize

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# flag name -> config key
_FLAG_KEYS = {
    "scheme": "run.scheme",
    "mode": "run.mode",
    "ps_dbm": "run.ps_dbm",
    "ps_fixed_dbm": "run.ps_fixed_dbm",
    "n_blocks": "run.n_blocks",
    "seed": "run.seed",
    "alpha": "run.alpha",
    "gamma_hat_db": "run.gamma_hat_db",
    "kappa": "run.kappa",
    "axis": "sweep.axis",
    "out": "output.path",
    "format": "output.format",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="flat key=value or JSON config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (repeatable)")
    common.add_argument("--scheme", help="maximum, sinr, target, a comma list or 'all'")
    common.add_argument("--mode", help="delay_limited, delay_tolerant or instantaneous")
    common.add_argument("--ps-dbm", help="source power grid, e.g. 10..50:5")
    common.add_argument("--ps-fixed-dbm", help="source power for sweeps over other axes")
    common.add_argument("--n-blocks", help="Monte Carlo blocks per point")
    common.add_argument("--seed")
    common.add_argument("--alpha", help="statistical TS factor of the maximum relay")
    common.add_argument("--gamma-hat-db", help="fixed target SINR of the target relay")
    common.add_argument("--kappa", help="CSI error variance ratio for Monte Carlo runs")
    common.add_argument("--axis", help="ee-sweep axis: ps, gamma_hat or sigma02")
    common.add_argument("--out", help="output table path ('-' for stdout)")
    common.add_argument("--format", help="csv or json")

    parser = _Parser(prog="ehfdr", description="Energy-harvesting full-duplex relay link simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, func in COMMANDS.items():
        doc = (func.__doc__ or "").strip().splitlines()
        sub.add_parser(name, parents=[common], help=doc[0] if doc else None)
    return parser


def _overrides(args):
    out = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        out[key.strip()] = value.strip()
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag)
        if value is not None:
            out[key] = value
    return out


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return f"{float(value):.10g}"
    return str(value)


def render_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ROW_FIELDS)
    for row in rows:
        writer.writerow([_cell(v) for v in row.as_tuple()])
    return buf.getvalue()


def render_json(rows):
    records = [dict(zip(ROW_FIELDS, (_cell(v) for v in row.as_tuple()))) for row in rows]
    return json.dumps(records, indent=1) + "\n"


def _versions():
    return {
        "ehfdr": __version__,
        "numpy": np.__version__,
        "mpmath": mpmath.__version__,
        "python": platform.python_version(),
    }


def run(command, config_path=None, overrides=None, stdout=None, stderr=None):
    """Execute one command; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = load(config_path, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    started = time.perf_counter()
    rows = COMMANDS[command](cfg)
    wall = time.perf_counter() - started

    fmt = cfg["output.format"]
    text = render_csv(rows) if fmt == "csv" else render_json(rows)
    target = cfg["output.path"] or f"{command}.{fmt}"
    counts = summarize(rows)
    manifest = {
        "command": command,
        "config": cfg.to_dict(),
        "seed": cfg["run.seed"],
        "versions": _versions(),
        "wall_time_s": round(wall, 3),
        "rows": len(rows),
        "status_counts": counts,
        "output": target,
    }
    if target == "-":
        stdout.write(text)
    else:
        path = Path(target)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        manifest_path = path.with_name(path.stem + ".manifest.json")
        manifest_path.write_text(json.dumps(manifest, indent=1) + "\n")
        print(f"wrote {len(rows)} rows to {path} (manifest {manifest_path})", file=stdout)

    for row in rows:
        if row.status in ("error", "fail"):
            where = f"{row.axis}={_cell(row.axis_value)} scheme={row.scheme} metric={row.metric}"
            print(f"{row.status}: {where} {row.note}".rstrip(), file=stderr)
    if counts.get("error"):
        return EXIT_NUMERIC
    if counts.get("fail"):
        return EXIT_VIOLATION
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = _overrides(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.command, args.config, overrides)


if __name__ == "__main__":
    sys.exit(main())
