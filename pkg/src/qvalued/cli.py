"""Command line harness: ``qvalued <subcommand> [--config PATH] [--seed N] ...``.

Each subcommand runs its suites, writes one CSV per table into
``OUT/<subcommand>/`` plus ``summary.txt`` with a PASS/FAIL line per
assertion and the fitted constants, and exits with status 1 if any
assertion failed (warnings count only under ``--strict``).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import sys
from pathlib import Path

from .config import SECTIONS, CampaignConfig, ConfigError

__all__ = ["main", "run", "build_parser", "write_results", "aggregate"]

log = logging.getLogger("qvalued")

COMMANDS = list(SECTIONS)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return str(int(v))
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def write_results(results, out: Path, strict: bool) -> tuple[bool, str]:
    """Write tables and summary; return (all passed, summary text)."""
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    ok = True
    check_rows = []
    for r in results:
        for name, (header, rows) in r.tables.items():
            (out / f"{r.suite}_{name}.csv" if name != r.suite else out / f"{name}.csv").write_text(_csv_text(header, rows))
        for c in r.checks:
            failed = not c.passed and (strict or not c.warning)
            ok &= not failed
            tag = "PASS" if c.passed else ("WARN" if c.warning and not strict else "FAIL")
            lines.append(f"{tag}  {r.suite}: {c.name}  value={c.value!r} bound={c.bound!r}")
            check_rows.append([r.command, r.suite, c.name, tag, c.value, c.bound])
        for k, v in sorted(r.constants.items()):
            lines.append(f"CONST {r.suite}: {k} = {v!r}")
    (out / "checks.csv").write_text(_csv_text(["command", "suite", "check", "status", "value", "bound"], check_rows))
    lines.append(f"RESULT {'PASS' if ok else 'FAIL'}")
    text = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(text)
    return ok, text


def aggregate(root: Path, out: Path) -> tuple[bool, str]:
    """Collect ``checks.csv`` files below ``root`` into one table and summary."""
    files = sorted(p for p in root.rglob("checks.csv") if out not in p.parents)
    if not files:
        raise FileNotFoundError(f"no checks.csv below {root}")
    rows = []
    for f in files:
        with f.open() as fh:
            rows.extend(list(csv.reader(fh))[1:])
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(_csv_text(["command", "suite", "check", "status", "value", "bound"], rows))
    failed = [r for r in rows if r[3] == "FAIL"]
    counts = {}
    for r in rows:
        key = (r[0], r[3])
        counts[key] = counts.get(key, 0) + 1
    lines = [f"{cmd}: {status} {n}" for (cmd, status), n in sorted(counts.items())]
    lines += [f"FAIL  {r[0]}/{r[1]}: {r[2]}" for r in failed]
    lines.append(f"RESULT {'PASS' if not failed else 'FAIL'}")
    text = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(text)
    return not failed, text


def run(command: str, cfg: CampaignConfig) -> int:
    """Run one subcommand; returns the exit status."""
    out = Path(cfg.out) / command
    if command == "report":
        root = Path(cfg.report.inputs or cfg.out)
        ok, text = aggregate(root, out)
    else:
        from .campaigns import run_suites

        results = run_suites(command, cfg, cfg.suites or None)
        ok, text = write_results(results, out, cfg.strict)
    sys.stdout.write(text)
    return 0 if ok else 1


def _defaults_epilog() -> str:
    cfg = CampaignConfig()
    lines = ["configuration defaults (INI sections, override with --config):", ""]
    lines += ["  " + ln for ln in cfg.to_ini().strip().splitlines()]
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI campaign file")
    common.add_argument("--seed", type=int, help="override the campaign seed")
    common.add_argument("--out", metavar="DIR", help="output directory (default: runs)")
    common.add_argument("--suite", metavar="NAME[,NAME...]", help="run only these suites of the subcommand")
    common.add_argument("--strict", action="store_true", help="turn warnings into failures")
    common.add_argument("--input", metavar="CURRENT", help="current-analyze: fixture name or current JSON file")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(
        prog="qvalued",
        description="Verification campaigns for Q-valued maps, almost-projections and graph currents.",
        epilog=_defaults_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "metric-bench": "assignment metric against exhaustive permutations, metric axioms",
        "embed-verify": "embedding properties and the face lattice",
        "rho-star-verify": "almost-projection sweeps, tube coincidence, energy inequality",
        "dirichlet-min": "branch minimiser energy and reverse Holder ratios",
        "current-analyze": "excess, varifold, BV, Taylor and Stokes suites",
        "lipschitz-approx": "Lipschitz approximation of the spike current",
        "competitor": "competitor construction ledger",
        "report": "aggregate checks.csv files into one summary",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], epilog=_defaults_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = CampaignConfig.load(args.config) if args.config else CampaignConfig()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out:
        changes["out"] = args.out
    if args.suite:
        changes["suites"] = tuple(s.strip() for s in args.suite.split(",") if s.strip())
    if args.strict:
        changes["strict"] = True
    cfg = dataclasses.replace(cfg, **changes)
    if args.input:
        cfg.current = dataclasses.replace(cfg.current, input=args.input)
    try:
        cfg.validate()
        return run(args.command, cfg)
    except (ConfigError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
