"""Run every config in demos/configs through the CLI.

Usage: python demos/run_demos.py [out_dir] [--skip-slow]
"""

import json
import sys
import time
from pathlib import Path

from zaremba.cli import run

SLOW = {"dichotomy_decay"}


def main(argv):
    skip_slow = "--skip-slow" in argv
    args = [a for a in argv if not a.startswith("--")]
    out_root = Path(args[0] if args else "demo_out")
    status = 0
    for conf in sorted(Path(__file__).with_name("configs").glob("*.json")):
        if skip_slow and conf.stem in SLOW:
            continue
        command = json.loads(conf.read_text())["command"]
        t0 = time.perf_counter()
        code = run([command, "--config", str(conf), "--out", str(out_root / conf.stem), "--svg"])
        print(f"{conf.stem:18s} {command:10s} exit {code}  {time.perf_counter() - t0:6.1f} s")
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
