#!/usr/bin/env python3
"""Convert locally downloaded UCI originals into the harness CSV layout.

The benchmark datasets are not redistributed here; download them once from
the UCI Machine Learning Repository and point this script at the files:

  AutoMPG   auto-mpg.data          (whitespace table, 9 columns,
                                    https://archive.ics.uci.edu/dataset/9)
  Housing   housing.data           (whitespace table, 14 columns,
                                    https://archive.ics.uci.edu/dataset/50  *withdrawn upstream;
                                    widely mirrored as the Boston housing file)
  Concrete  Concrete_Data.xls      (https://archive.ics.uci.edu/dataset/165;
                                    export the sheet as CSV first)
  Power     Folds5x2_pp.xlsx       (https://archive.ics.uci.edu/dataset/294;
                                    export sheet 1 as CSV first)
  Crime     communities.data       (comma table, no header,
                                    https://archive.ics.uci.edu/dataset/183)

Usage:
  python scripts/fetch_uci.py autompg path/to/auto-mpg.data
  python scripts/fetch_uci.py housing path/to/housing.data
  python scripts/fetch_uci.py concrete path/to/concrete.csv
  python scripts/fetch_uci.py power path/to/power.csv
  python scripts/fetch_uci.py crime path/to/communities.data

Each writes data/<name>.csv with a header row and the response as the last
column; the harness cleaning drops text columns and incomplete rows, so no
further preprocessing is needed.
"""

import csv
import sys
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

AUTOMPG_COLS = ["mpg", "cylinders", "displacement", "horsepower", "weight",
                "acceleration", "model_year", "origin", "car_name"]
HOUSING_COLS = ["CRIM", "ZN", "INDUS", "CHAS", "NOX", "RM", "AGE", "DIS",
                "RAD", "TAX", "PTRATIO", "B", "LSTAT", "MEDV"]
CONCRETE_COLS = ["cement", "slag", "fly_ash", "water", "superplasticizer",
                 "coarse_aggregate", "fine_aggregate", "age", "strength"]
POWER_COLS = ["AT", "V", "AP", "RH", "PE"]


def _write(name: str, header: list[str], rows: list[list[str]]) -> None:
    DATA_DIR.mkdir(exist_ok=True)
    out = DATA_DIR / f"{name}.csv"
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {out} ({len(rows)} rows)")


def convert_autompg(src: Path) -> None:
    rows = []
    for line in src.read_text().splitlines():
        if not line.strip():
            continue
        # last field is the quoted car name, everything before is whitespace-split
        head, _, name = line.partition('"')
        cells = head.split() + [name.rstrip('"').strip()]
        if len(cells) != 9:
            raise SystemExit(f"unexpected auto-mpg line: {line!r}")
        # response (mpg) moves to the end
        rows.append(cells[1:] + [cells[0]])
    _write("autompg", AUTOMPG_COLS[1:] + ["mpg"], rows)


def convert_housing(src: Path) -> None:
    rows = []
    for line in src.read_text().splitlines():
        cells = line.split()
        if not cells:
            continue
        if len(cells) != 14:
            raise SystemExit(f"unexpected housing line: {line!r}")
        rows.append(cells)
    _write("housing", HOUSING_COLS, rows)


def _convert_csvish(name: str, src: Path, header: list[str]) -> None:
    with src.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    # drop a header row if the file has one
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    width = len(header)
    bad = [r for r in rows if len(r) != width]
    if bad:
        raise SystemExit(f"{name}: expected {width} columns, got {len(bad[0])}")
    _write(name, header, rows)


def convert_crime(src: Path) -> None:
    with src.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    width = len(rows[0])
    # communities.data: 5 leading identifier columns, response last
    header = [f"attr{i}" for i in range(1, width)] + ["violent_crimes"]
    _write("crime", header, rows)


CONVERTERS = {
    "autompg": convert_autompg,
    "housing": convert_housing,
    "concrete": lambda src: _convert_csvish("concrete", src, CONCRETE_COLS),
    "power": lambda src: _convert_csvish("power", src, POWER_COLS),
    "crime": convert_crime,
}


def main() -> None:
    if len(sys.argv) != 3 or sys.argv[1] not in CONVERTERS:
        print(__doc__)
        raise SystemExit(1)
    src = Path(sys.argv[2])
    if not src.exists():
        raise SystemExit(f"source file not found: {src}")
    CONVERTERS[sys.argv[1]](src)


if __name__ == "__main__":
    main()
