#!/usr/bin/env python3
"""Merge per-release metric files into one input CSV for `timewise`.

usage: jureczko_to_csv.py RELEASES.csv DIR > dataset.csv

RELEASES.csv has columns release,date (ISO dates), e.g. the
reference_releases.csv fixture. DIR holds one `<release>.csv` per release in
the usual layout: name, version, class name, twenty numeric metrics, bug.
"""
import csv
import os
import sys

METRICS = ["wmc", "dit", "noc", "cbo", "rfc", "lcom", "ca", "ce", "npm", "lcom3", "loc",
           "dam", "moa", "mfa", "cam", "ic", "cbm", "amc", "max_cc", "avg_cc"]


def split_release(release):
    for sep in ("-", "_"):
        if sep in release:
            project, version = release.split(sep, 1)
            return project, version
    head = release.rstrip("0123456789.")
    return head, release[len(head):] or "1"


def main():
    releases, directory = sys.argv[1], sys.argv[2]
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["project", "version", "date", "class"] + METRICS + ["bug"])
    with open(releases, newline="") as f:
        for rel in csv.DictReader(f):
            project, version = split_release(rel["release"])
            path = os.path.join(directory, rel["release"] + ".csv")
            with open(path, newline="") as metrics:
                reader = csv.reader(metrics)
                next(reader)
                for row in reader:
                    if not row:
                        continue
                    values = row[3:3 + len(METRICS)]
                    out.writerow([project, version, rel["date"], row[2]] + values + [row[-1]])


if __name__ == "__main__":
    main()
