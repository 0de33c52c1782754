#!/usr/bin/env python3
"""Run the full acceptance battery and print one line per criterion.

Usage: python3 scripts/run_acceptance.py [--parallel] [--json OUT.json]
"""

import argparse
import json
import sys

from cylreact import verify


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--parallel", action="store_true")
    ap.add_argument("--json", default=None, help="dump records to this file")
    args = ap.parse_args()
    records = verify.run_all(parallel=args.parallel)
    for rec in records:
        print(f"[{rec.status:>14}] {rec.name:32s} measured={rec.measured!r:>24} "
              f"wall={rec.wall_clock:6.2f}s budget={rec.budget_s:g}s")
    overall = verify.overall_status(records)
    print(f"overall: {overall}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([r.to_json_dict() for r in records], fh, indent=2,
                      sort_keys=True)
    return 0 if overall == verify.PASS else 1


if __name__ == "__main__":
    sys.exit(main())
