#!/usr/bin/env python3
"""Rebuild data/car.csv and data/new-thyroid.csv.

The UCI originals are tried first. When the UCI archive is unreachable the
files are rebuilt from the KEEL copies that ship inside the ``keel-ds`` wheel
on PyPI:

* New-Thyroid: KEEL's ``new-thyroid2.dat`` keeps the UCI row order (150
  normal, 35 hyper, 30 hypo).  Its positive rows are exactly rows 150..184,
  which is asserted before the last 30 rows are labelled ``hypo``.
* Car Evaluation: KEEL only ships ``car-good`` and ``car-vgood`` (one class vs
  the rest, UCI row order).  Those give the good and vgood rows exactly.  The
  acc/unacc split is filled in from the DEX concept hierarchy the data was
  generated from (PRICE = f(buying, maint), TECH = f(COMFORT, safety),
  COMFORT = f(doors, persons, lug_boot)).  The result is checked against the
  UCI class totals 1210/384/69/65 and the per-attribute class counts.

Usage: python3 tools/fetch_datasets.py [--out data] [--offline]
"""

import argparse
import io
import pathlib
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from collections import Counter

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"
CAR_COLUMNS = ["buying", "maint", "doors", "persons", "lug_boot", "safety"]
THYROID_COLUMNS = ["t3_resin", "thyroxin", "triiodothyronine", "tsh_basal", "tsh_diff"]
THYROID_LABELS = {"1": "normal", "2": "hyper", "3": "hypo"}

CAR_SCHEMA = """\
buying ordinal low,med,high,vhigh
maint ordinal low,med,high,vhigh
doors ordinal 2,3,4,5more
persons ordinal 2,4,more
lug_boot ordinal small,med,big
safety ordinal low,med,high
"""


def fetch(url, timeout=10):
    with urllib.request.urlopen(url, timeout=timeout) as r:
        return r.read().decode()


def car_from_uci():
    rows = [l.split(",") for l in fetch(f"{UCI}/car/car.data").split() if l]
    return [(r[:6], r[6]) for r in rows]


def thyroid_from_uci():
    rows = [l.split(",") for l in fetch(f"{UCI}/thyroid-disease/new-thyroid.data").split() if l]
    return [(r[1:6], THYROID_LABELS[r[0]]) for r in rows]


def keel_wheel():
    tmp = tempfile.mkdtemp()
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q",
                    "keel-ds==0.2.5", "-d", tmp], check=True)
    whl = next(pathlib.Path(tmp).glob("keel_ds-*.whl"))
    return zipfile.ZipFile(whl)


def keel_rows(z, name):
    text = z.read(f"keel_ds/data/imbalanced/raw/{name}.dat").decode()
    out = []
    for line in io.StringIO(text):
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        parts = [p.strip() for p in line.split(",")]
        out.append((parts[:-1], parts[-1]))
    return out


def thyroid_from_keel(z):
    rows = keel_rows(z, "new-thyroid2")
    positives = [i for i, (_, c) in enumerate(rows) if c == "positive"]
    if len(rows) != 215 or positives != list(range(150, 185)):
        raise RuntimeError("new-thyroid2.dat is not in UCI order")
    labels = ["normal"] * 150 + ["hyper"] * 35 + ["hypo"] * 30
    return [(f, l) for (f, _), l in zip(rows, labels)]


PRICE_LOW = {("med", "low"), ("low", "med"), ("low", "low")}
PRICE_MED = {("med", "med"), ("low", "high")}
PRICE_HIGH = {("vhigh", "vhigh"), ("vhigh", "high"), ("high", "vhigh")}


def car_from_keel(z):
    good = keel_rows(z, "car-good")
    vgood = keel_rows(z, "car-vgood")
    if [f for f, _ in good] != [f for f, _ in vgood] or len(good) != 1728:
        raise RuntimeError("car-good/car-vgood rows do not line up")

    # TECH level per (doors, persons, lug_boot, safety), read off the exact
    # good/vgood rows: exc -> vgood under a medium or low price, good -> good
    # under a low price.
    tech = {}
    for (f, g), (_, v) in zip(good, vgood):
        key = tuple(f[2:])
        if v == "positive":
            tech[key] = "exc"
        elif g == "positive":
            tech.setdefault(key, "good")
    for key in {tuple(f[2:]) for f, _ in good}:
        if key in tech:
            continue
        doors, persons, lug, safety = key
        if persons == "2" or safety == "low":
            tech[key] = "bad"
        elif doors == "2" and persons == "more" and lug == "small":
            tech[key] = "bad"
        else:
            tech[key] = "acc"

    def label(f):
        price = (f[0], f[1])
        t = tech[tuple(f[2:])]
        if t == "bad" or price in PRICE_HIGH:
            return "unacc"
        if price in PRICE_LOW:
            return {"exc": "vgood", "good": "good", "acc": "acc"}[t]
        if price in PRICE_MED:
            return {"exc": "vgood", "good": "acc", "acc": "acc"}[t]
        return "acc" if t in ("good", "exc") else "unacc"

    rows = [(f, label(f)) for f, _ in good]
    for (f, g), (_, v), (_, l) in zip(good, vgood, rows):
        assert (l == "good") == (g == "positive") and (l == "vgood") == (v == "positive")
    return rows


CAR_MARGINALS = {
    "safety": {"low": (576, 0, 0, 0), "med": (357, 180, 39, 0), "high": (277, 204, 30, 65)},
    "persons": {"2": (576, 0, 0, 0), "4": (312, 198, 36, 30), "more": (322, 186, 33, 35)},
    "buying": {"vhigh": (360, 72, 0, 0), "high": (324, 108, 0, 0),
               "med": (268, 115, 23, 26), "low": (258, 89, 46, 39)},
    "maint": {"vhigh": (360, 72, 0, 0), "high": (314, 105, 0, 13),
              "med": (268, 115, 23, 26), "low": (268, 92, 46, 26)},
}


def check_car(rows):
    counts = Counter(l for _, l in rows)
    expected = {"unacc": 1210, "acc": 384, "good": 69, "vgood": 65}
    if dict(counts) != expected:
        raise RuntimeError(f"car class totals {dict(counts)} != {expected}")
    order = ["unacc", "acc", "good", "vgood"]
    for col, table in CAR_MARGINALS.items():
        j = CAR_COLUMNS.index(col)
        for value, want in table.items():
            got = tuple(sum(1 for f, l in rows if f[j] == value and l == o) for o in order)
            if got != want:
                raise RuntimeError(f"car {col}={value}: {got} != {want}")


def write_csv(path, columns, rows):
    with open(path, "w") as out:
        out.write(",".join(columns + ["class"]) + "\n")
        for f, l in rows:
            out.write(",".join(list(f) + [l]) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--offline", action="store_true", help="skip the UCI download attempt")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    car = thyroid = None
    source = "uci"
    if not args.offline:
        try:
            car, thyroid = car_from_uci(), thyroid_from_uci()
        except Exception as e:  # noqa: BLE001
            print(f"UCI unreachable ({e}); rebuilding from keel-ds", file=sys.stderr)
    if car is None:
        source = "keel-ds"
        z = keel_wheel()
        car, thyroid = car_from_keel(z), thyroid_from_keel(z)

    check_car(car)
    assert Counter(l for _, l in thyroid) == {"normal": 150, "hyper": 35, "hypo": 30}

    write_csv(out / "car.csv", CAR_COLUMNS, car)
    (out / "car.schema").write_text(CAR_SCHEMA)
    write_csv(out / "new-thyroid.csv", THYROID_COLUMNS, thyroid)
    print(f"wrote {out}/car.csv ({len(car)} rows) and {out}/new-thyroid.csv "
          f"({len(thyroid)} rows) from {source}")


if __name__ == "__main__":
    main()
