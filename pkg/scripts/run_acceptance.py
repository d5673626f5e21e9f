"""Run the acceptance criteria and print one line per criterion.

    python3 scripts/run_acceptance.py [--seed 42] [--threads 4] [--only 1,3]
"""
import argparse
import json
import sys

from sddpde.certify import run_all


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--only", default="", help="comma-separated criterion numbers")
    p.add_argument("--json", default="", help="also write full results here")
    args = p.parse_args()
    numbers = [int(x) for x in args.only.split(",") if x] or None
    results = run_all(args.seed, args.threads, numbers)
    for r in results:
        print(r.line())
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([r.to_dict() for r in results], fh, indent=2, default=str)
    return 0 if all(r.passed for r in results) else 2


if __name__ == "__main__":
    sys.exit(main())
