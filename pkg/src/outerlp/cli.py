"""``outerlp <command> [--flags]``: run one experiment and emit CSV or JSON rows."""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .errors import ConfigParse, OuterLpError
from .harness import COMMANDS, config_from_dict, run
from .io import encode

FLAGS = {
    "n": "number of instances (or suite members)",
    "seed": "base seed",
    "size": "instance sizes |X|, e.g. 8 or 4,6,8 or 2..10",
    "generator-count": "generators per instance (default: random)",
    "p": "p values, e.g. 2,4,inf",
    "q": "q values",
    "r": "r values",
    "m": "chain depths, e.g. 2..10",
    "eps": "decay exponents",
    "d": "dimension of the grid (1 or 2)",
    "j": "grid heights L or atom scales, e.g. 4..8",
    "space": "finite or dyadic (decompose)",
    "tuples": "exponent tuples, e.g. 2:2,2:inf or 2:2:2:2",
}

INT_FLAGS = {"n", "seed", "generator-count", "d"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="outerlp", description=__doc__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON file with ExperimentConfig fields")
    ap.add_argument("--format", choices=("csv", "json"), default=None)
    ap.add_argument("--output", help="write rows here instead of stdout")
    ap.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                    help="tolerance override, repeatable")
    for flag, text in FLAGS.items():
        ap.add_argument(f"--{flag}", help=text, type=int if flag in INT_FLAGS else str)
    return ap


def _config(args):
    doc = {}
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigParse(f"cannot read config {args.config!r}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigParse("config must be a JSON object")
    doc["command"] = args.command
    for flag in FLAGS:
        v = getattr(args, flag.replace("-", "_"))
        if v is not None:
            doc[flag.replace("-", "_")] = v
    if args.format:
        doc["format"] = args.format
    if args.output:
        doc["output"] = args.output
    tols = dict(doc.get("tolerances", {}))
    for item in args.tol:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigParse(f"--tol expects NAME=VALUE, got {item!r}")
        tols[name] = float(value)
    doc["tolerances"] = tols
    return config_from_dict(doc)


def _cell(v):
    v = encode(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return "" if v is None else v


class _Writer:
    """Single serialization point, writing each row as it arrives.

    CSV columns are the keys of the first row; keys first seen later go to the
    trailing ``extra`` column as a JSON object.
    """

    def __init__(self, fh, fmt):
        self.fh, self.fmt = fh, fmt
        self.cols = None

    def __call__(self, row):
        if self.fmt == "json":
            self.fh.write(json.dumps(encode(row)) + "\n")
        else:
            if self.cols is None:
                self.cols = list(row) + ["extra"]
                self.w = csv.writer(self.fh, lineterminator="\n")
                self.w.writerow(self.cols)
            extra = {k: v for k, v in row.items() if k not in self.cols}
            cells = [_cell(row.get(k)) for k in self.cols[:-1]]
            self.w.writerow(cells + [json.dumps(encode(extra)) if extra else ""])
        self.fh.flush()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        fh = open(cfg.output, "w", newline="") if cfg.output else sys.stdout
        try:
            writer = _Writer(fh, cfg.format)
            ok = True
            for row in run(cfg, sink=writer):
                ok &= bool(row["passed"])
        finally:
            if cfg.output:
                fh.close()
    except OuterLpError as exc:
        print(f"outerlp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
