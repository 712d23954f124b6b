"""Run every experiment config through the CLI and collect reports under one directory.

    python scripts/run_experiments.py --out results
    python scripts/run_experiments.py --out results --only sweep-a forces
"""
import argparse
import sys
from pathlib import Path

from tfwlab.cli import main as cli

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

# (command, config) in the order the acceptance suite uses them
RUNS = [
    ("check", "uniform.yaml"),
    ("solve", "reference.yaml"),
    ("check", "reference.yaml"),
    ("sweep-a", "reference.yaml"),
    ("forces", "reference.yaml"),
    ("truncate", "supercell.yaml"),
    ("perturb", "supercell.yaml"),
]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--out", default="results")
    p.add_argument("--only", nargs="*", help="subset of commands to run")
    p.add_argument("--dump-fields", action="store_true")
    args = p.parse_args(argv)
    status = 0
    for command, config in RUNS:
        if args.only and command not in args.only:
            continue
        out = Path(args.out) / f"{command}_{Path(config).stem}"
        extra = ["--dump-fields"] if args.dump_fields else []
        status |= cli([command, "--config", str(CONFIGS / config), "--out", str(out), *extra])
    return status


if __name__ == "__main__":
    sys.exit(main())
