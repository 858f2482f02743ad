"""Run every bundled scenario and collect the CHECK lines.

Usage: python3 scripts/run_presets.py [--out results] [--skip NAME ...]
"""

import argparse
import contextlib
import io
import sys
import time

from finrank.cli import main
from finrank.scenario import preset_names


def run(out: str, skip: set) -> int:
    failures = 0
    for name in preset_names():
        if name in skip:
            print(f"== {name}: skipped")
            continue
        start = time.perf_counter()
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            code = main(["run", "--preset", name, "--out", out])
        print(f"== {name}: exit {code} in {time.perf_counter() - start:.1f} s")
        for line in buf.getvalue().splitlines():
            if line.startswith("CHECK"):
                print("   " + line)
        failures += code != 0
    return failures


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--skip", nargs="*", default=[])
    a = ap.parse_args()
    sys.exit(1 if run(a.out, set(a.skip)) else 0)
