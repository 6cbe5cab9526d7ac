#!/usr/bin/env python3
"""Recompute HR@N / NDCG@N from a rank dump and compare with a metrics CSV.

Usage: recompute_metrics.py ranks.tsv metrics.csv

Candidates are sorted by descending score, ties broken by ascending item id.
Exits 1 on any mismatch.
"""

import csv
import math
import sys
from collections import OrderedDict


def load_cases(path):
    cases = OrderedDict()
    with open(path, newline="") as f:
        reader = csv.DictReader(f, delimiter="\t")
        for row in reader:
            key = int(row["user"])
            cases.setdefault(key, []).append(
                (float(row["score"]), int(row["item"]), row["is_positive"] == "1")
            )
    return cases


def positive_rank(candidates):
    ordered = sorted(candidates, key=lambda c: (-c[0], c[1]))
    for position, (_, _, positive) in enumerate(ordered, start=1):
        if positive:
            return position
    raise ValueError("case without a positive")


def main(argv):
    if len(argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    ranks = [positive_rank(c) for c in load_cases(argv[1]).values()]
    ok = True
    with open(argv[2], newline="") as f:
        for row in csv.DictReader(f):
            n = int(row["n"])
            hits = sum(1 for r in ranks if r <= n)
            hr = hits / len(ranks)
            total = 0.0
            for r in ranks:
                if r <= n:
                    total += 1.0 / math.log2(r + 1.0)
            ndcg = total / len(ranks)
            want_hr, want_ndcg = float(row["hr"]), float(row["ndcg"])
            match = hr == want_hr and ndcg == want_ndcg and int(row["cases"]) == len(ranks)
            ok &= match
            print(f"N={n} hr={hr!r} ndcg={ndcg!r} harness hr={want_hr!r} ndcg={want_ndcg!r} "
                  f"{'match' if match else 'MISMATCH'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv))
