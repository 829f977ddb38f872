"""Builds tests/data/fixture_14d.csv: a 14-day scenario-1 record with ISO
timestamps and about 25% of heart-rate cells blanked in outage runs.

    python tools/make_fixture.py build/circadian tests/data/fixture_14d.csv
"""

import csv
import random
import subprocess
import sys


def main(cli: str, out_path: str) -> None:
    text = subprocess.run(
        [cli, "simulate", "--scenario", "1", "--days", "14", "--seed", "14",
         "--start-date", "2024-03-04"],
        check=True, capture_output=True, text=True,
    ).stdout
    rows = list(csv.reader(text.splitlines()))
    header, body = rows[0], rows[1:]
    rng = random.Random(14)
    target = len(body) // 4
    missing = set()
    while len(missing) < target:
        start = rng.randrange(len(body))
        length = rng.choice([5, 15, 30, 60, 120])
        missing.update(range(start, min(start + length, len(body))))
    missing = sorted(missing)[:target]
    for row in body:  # devices report whole beats
        row[1] = str(round(float(row[1])))
    for i in missing:
        body[i][1] = ""
    with open(out_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(body)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
