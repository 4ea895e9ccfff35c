#!/usr/bin/env python3
"""Rewrite `YYYY-Mon-DD` dates in one CSV column as ISO `YYYY-MM-DD`.

usage: convert_release_dates.py COLUMN < in.csv > out.csv
"""
import csv
import sys
from datetime import datetime


def main():
    column = sys.argv[1]
    reader = csv.DictReader(sys.stdin)
    writer = csv.DictWriter(sys.stdout, fieldnames=reader.fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in reader:
        row[column] = datetime.strptime(row[column].strip(), "%Y-%b-%d").date().isoformat()
        writer.writerow(row)


if __name__ == "__main__":
    main()
