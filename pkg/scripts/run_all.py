"""Run every experiment at acceptance scale and write one CSV per command.

    python3 scripts/run_all.py [outdir]

Exit status is nonzero if any experiment reports a failing row.
"""

import sys
from pathlib import Path

from outerlp import cli

RUNS = [
    ("axioms-fuzz", ["--n", "500", "--size", "1..10", "--seed", "101"]),
    ("norms", ["--n", "500", "--size", "1..8", "--seed", "404"]),
    ("decompose", ["--n", "1000", "--size", "2..8", "--r", "1,2", "--seed", "303"]),
    ("decompose_dyadic", ["--space", "dyadic", "--n", "100", "--j", "4..8", "--seed", "707"]),
    ("duality", ["--n", "100", "--size", "4,6,8", "--seed", "505"]),
    ("counterexample", ["--m", "1..12", "--r", "2,4"]),
    ("tent-equivalence", ["--n", "50", "--j", "4,8", "--seed", "808"]),
    ("hls", ["--n", "120", "--j", "6", "--seed", "909"]),
    ("embed", []),
    ("type-map", ["--j", "4..8"]),
    ("h1-atom", ["--j=-3..3"]),
]


def main(argv):
    out = Path(argv[1] if len(argv) > 1 else "results")
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for name, args in RUNS:
        command = "decompose" if name == "decompose_dyadic" else name
        code = cli.main([command, *args, "--output", str(out / f"{name}.csv")])
        print(f"{name:18s} exit {code}")
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main(sys.argv))
