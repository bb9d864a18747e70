"""Convert a Global Terrorism Database extract into the events CSV.

Usage: python3 docs/gtd_to_events.py gtd.csv events.csv

Keeps rows with a full date and coordinates. Missing ``nkill`` counts
as 0 deaths. Rows with day 0 or month 0 (unknown) are dropped.
"""

import csv
import datetime
import sys


def convert(src, dst):
    kept = dropped = 0
    with open(src, newline="", encoding="utf-8", errors="replace") as fin, \
            open(dst, "w", newline="") as fout:
        out = csv.writer(fout)
        out.writerow(["date", "lat", "lon", "deaths"])
        for row in csv.DictReader(fin):
            try:
                day = datetime.date(int(row["iyear"]), int(row["imonth"]), int(row["iday"]))
                lat, lon = float(row["latitude"]), float(row["longitude"])
            except (ValueError, KeyError):
                dropped += 1
                continue
            nkill = row.get("nkill") or "0"
            deaths = int(float(nkill)) if nkill.strip() else 0
            out.writerow([day.isoformat(), lat, lon, deaths])
            kept += 1
    return kept, dropped


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    kept, dropped = convert(sys.argv[1], sys.argv[2])
    print(f"kept {kept} rows, dropped {dropped}")
