"""Spreadsheet-style recomputation of the Company A fixture numbers.

Reads the raw fixture CSVs plus the default stage database and writes
oracle.csv. Stage memberships for the company plan are taken from the
default database with the eight expected moves and three exclusions
applied by hand, not from the library.

    python3 oracle.py > oracle.csv
"""
import csv
import json
import os
import sys
from collections import defaultdict
from fractions import Fraction

HERE = os.path.dirname(os.path.abspath(__file__))
STAGES = ["Essential", "Intermediate", "Advanced", "Full"]
MOVES = {
    "A.5.1.2": "Essential",
    "A.6.1.2": "Essential",
    "A.6.1.5": "Intermediate",
    "A.6.2.2": "Full",
    "A.7.1.1": "Advanced",
    "A.7.2.3": "Full",
    "A.11.1.2": "Intermediate",
    "A.18.1.4": "Intermediate",
}


def key(cid):
    return tuple(int(x) for x in cid.split(".")[1:])


def two_dp(frac):
    # half-up at the hundredths digit
    hundredths = (frac.numerator * 200 + frac.denominator) // (2 * frac.denominator)
    return f"{hundredths // 100}.{hundredths % 100:02d}"


def rows(name):
    with open(os.path.join(HERE, name), newline="") as f:
        return list(csv.DictReader(f))


def main():
    with open(os.path.join(HERE, "..", "default_plan.json")) as f:
        default = {a["control"]: a["stage"] for a in json.load(f)["assignments"]}
    excluded = {r["control_id"] for r in rows("applicability.csv") if r["applicable"] == "false"}
    company = {c: MOVES.get(c, s) for c, s in default.items() if c not in excluded}
    model = {c: s for c, s in default.items() if c not in excluded}
    levels = {r["control_id"]: int(r["level"]) for r in rows("measurements.csv")}

    sums = defaultdict(int)
    counts = defaultdict(int)
    for r in rows("survey.csv"):
        sums[r["control_id"]] += int(r["score"])
        counts[r["control_id"]] += 1

    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["metric", "sum", "count", "average"])
    for cid in sorted(sums, key=key):
        out.writerow([f"importance:{cid}", sums[cid], counts[cid], two_dp(Fraction(sums[cid], counts[cid]))])
    for label, plan in (("company", company), ("model", model)):
        for stage in STAGES:
            members = [c for c in plan if plan[c] == stage]
            total = sum(levels[c] for c in members)
            out.writerow([f"{label}:{stage}", total, len(members), two_dp(Fraction(total, len(members)))])
    total = sum(levels.values())
    out.writerow(["naive", total, len(levels), two_dp(Fraction(total, len(levels)))])


if __name__ == "__main__":
    main()
