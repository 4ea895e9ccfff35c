#!/usr/bin/env python3
"""Write the synthetic multi-project dataset used by the test suite.

With --balanced-before DATE, every release dated before DATE is trimmed to
equal defective and clean class counts by dropping its last majority rows.
"""
import argparse
import csv
import math
import random
import sys

RELEASES = [
    ("alpha", "1.0", "2005-02-14"), ("beta", "0.9", "2005-05-02"),
    ("gamma", "2.1", "2005-09-20"), ("alpha", "1.1", "2006-01-10"),
    ("delta", "0.1", "2006-03-30"), ("beta", "1.0", "2006-08-08"),
    ("epsilon", "3.0", "2006-11-11"), ("gamma", "2.2", "2007-02-27"),
    ("alpha", "1.2", "2007-06-05"), ("delta", "0.2", "2007-07-19"),
    ("beta", "1.1", "2007-12-01"), ("epsilon", "3.1", "2008-04-16"),
    ("gamma", "2.3", "2008-05-21"), ("alpha", "2.0", "2008-10-09"),
    ("delta", "0.3", "2009-01-13"), ("beta", "1.2", "2009-03-03"),
    ("epsilon", "3.2", "2009-08-25"), ("gamma", "3.0", "2009-11-30"),
]
FEATURES = ["loc", "wmc", "cbo", "rfc", "lcom"]


def balance(rows):
    defective = [r for r in rows if r[-1] > 0]
    clean = [r for r in rows if r[-1] == 0]
    n = min(len(defective), len(clean))
    keep = {id(r) for r in defective[:n] + clean[:n]}
    return [r for r in rows if id(r) in keep]


def main(out, balanced_before=None):
    rng = random.Random(20240611)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["project", "version", "date", "class"] + FEATURES + ["bug"])
    for project, version, date in RELEASES:
        rows = []
        scale = {"alpha": 1.0, "beta": 1.6, "gamma": 0.7, "delta": 2.2, "epsilon": 1.2}[project]
        for i in range(rng.randint(25, 55)):
            loc = int(rng.lognormvariate(4.5, 0.9) * scale)
            wmc = max(1, int(loc / 25 + rng.gauss(0, 3)))
            cbo = max(0, int(rng.gauss(6, 3) + wmc / 6))
            rfc = max(1, int(wmc * 2.5 + rng.gauss(0, 5)))
            lcom = max(0, int(wmc * wmc / 4 + rng.gauss(0, 10)))
            risk = 1 / (1 + math.exp(-(math.log1p(loc) - 5.0 * scale ** 0.2) * 1.8 - 0.08 * (cbo - 8)))
            bug = 0
            if rng.random() < risk:
                bug = 1 + int(rng.expovariate(1.0))
            rows.append([project, version, date, f"{project}.C{i:03d}", loc, wmc, cbo, rfc, lcom, bug])
        if balanced_before and date < balanced_before:
            rows = balance(rows)
        w.writerows(rows)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--balanced-before", metavar="DATE")
    main(sys.stdout, ap.parse_args().balanced_before)
