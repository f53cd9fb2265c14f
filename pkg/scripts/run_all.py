"""Run every campaign with one seed and aggregate the checks.

    python3 scripts/run_all.py [--config PATH] [--seed N] [--out DIR]
"""

from __future__ import annotations

import argparse
import sys

from qvalued.cli import COMMANDS, main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description="run all campaigns")
    ap.add_argument("--config")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs")
    args = ap.parse_args()
    common = ["--seed", str(args.seed), "--out", args.out] + (["--config", args.config] if args.config else [])
    status = 0
    for cmd in COMMANDS:
        if cmd == "report":
            continue
        print(f"== {cmd}", flush=True)
        status |= cli_main([cmd, *common])
    print("== report", flush=True)
    status |= cli_main(["report", *common])
    return status


if __name__ == "__main__":
    sys.exit(main())
