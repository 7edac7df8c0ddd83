"""Run every config in configs/ and print one status line per run."""
import argparse
import sys
import time
from pathlib import Path

from slicfan.cli import main

ROOT = Path(__file__).resolve().parents[1]


def run(configs, out):
    worst = 0
    for cfg in configs:
        start = time.perf_counter()
        argv = ["run", str(cfg)] + (["--out", out] if out else [])
        code = main(argv)
        print(f"== {cfg.name}: exit {code} ({time.perf_counter() - start:.0f}s)", flush=True)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("configs", nargs="*", type=Path, help="defaults to configs/*.ini")
    ap.add_argument("--out", help="output root")
    args = ap.parse_args()
    sys.exit(run(args.configs or sorted((ROOT / "configs").glob("*.ini")), args.out))
