#!/usr/bin/env python3
"""Writes the synthetic CSV tables used by the corpus specs.

Output is fully deterministic; rerunning overwrites the files byte-for-byte.
"""

import csv
import math
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent


def write(name, header, rows):
    with open(HERE / name, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(r)


def fmt(x, digits=3):
    s = f"{x:.{digits}f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def gapminder():
    countries = [
        # name, fertility 1955, fertility 2005, life 1955, life 2005, pop 1955 (millions), growth/yr
        ("China", 5.6, 1.7, 50.5, 73.0, 608.7, 0.0135),
        ("India", 5.9, 2.8, 40.2, 64.7, 393.0, 0.0195),
        ("United States", 3.6, 2.0, 69.5, 78.0, 165.9, 0.0113),
    ]
    rows = []
    for year in range(1955, 2006, 5):
        t = (year - 1955) / 50
        for name, f0, f1, l0, l1, p0, g in countries:
            ease = 0.5 - 0.5 * math.cos(math.pi * t)
            fert = f0 + (f1 - f0) * ease
            life = l0 + (l1 - l0) * math.sqrt(t)
            pop = p0 * 1e6 * math.exp(g * (year - 1955))
            rows.append((name, year, fmt(fert), fmt(life), int(round(pop))))
    write("gapminder.csv", ["country", "year", "fertility", "life_expect", "pop"], rows)


def migration():
    birds = [("hawk", -100.0, 50.0, 0.0), ("plover", -90.0, 47.0, 1.3), ("tern", -80.0, 44.0, 2.6)]
    rows = []
    for name, lon0, lat0, phase in birds:
        for day in range(1, 61):
            s = day / 60
            lon = lon0 + 25 * s + 2.5 * math.sin(4 * math.pi * s + phase)
            lat = lat0 - 30 * s + 1.5 * math.cos(3 * math.pi * s + phase)
            rows.append((name, day, fmt(lon), fmt(lat)))
    write("migration.csv", ["bird", "day", "lon", "lat"], rows)


def dunkin():
    rng = random.Random(20230401)
    rows = []
    for i in range(40):
        lon = -74.0 + rng.uniform(-1.2, 1.2)
        lat = 40.7 + rng.uniform(-0.8, 0.8)
        open_h = rng.choice([4.5, 5.0, 5.5, 6.0, 6.5, 7.0])
        close_h = rng.choice([19.0, 20.0, 21.0, 22.0, 23.0])
        rows.append((f"store{i + 1:02d}", fmt(lon, 4), fmt(lat, 4), fmt(open_h, 1), fmt(close_h, 1)))
    write("dunkin.csv", ["store", "lon", "lat", "open", "close"], rows)


def bar_race():
    names = ["Apex", "Birch", "Cobalt", "Dune", "Ember", "Fjord", "Garnet", "Harbor", "Iris", "Juniper",
             "Kestrel", "Lumen"]
    rng = random.Random(7)
    base = {n: rng.uniform(5, 20) for n in names}
    rate = {n: rng.uniform(-0.05, 0.25) for n in names}
    rows = []
    for year in range(2000, 2010):
        vals = {n: base[n] * (1 + rate[n]) ** (year - 2000) for n in names}
        ordered = sorted(names, key=lambda n: (-round(vals[n], 1), n))
        for rank, n in enumerate(ordered, start=1):
            rows.append((n, year, fmt(vals[n], 1), rank))
    write("bar_race.csv", ["name", "year", "value", "rank"], rows)


def stocks():
    symbols = [("ACME", 40.0, 0.020, 0.0), ("BOLT", 25.0, 0.035, 1.0), ("CRUX", 60.0, 0.008, 2.0)]
    rows = []
    for sym, p0, drift, phase in symbols:
        for month in range(1, 25):
            price = p0 * math.exp(drift * month) * (1 + 0.08 * math.sin(month / 2 + phase))
            rows.append((sym, month, fmt(price, 2)))
    write("stocks.csv", ["symbol", "month", "price"], rows)


def bump():
    teams = ["Otters", "Pumas", "Quails", "Ravens", "Sharks", "Tigers"]
    rng = random.Random(11)
    points = {t: 0 for t in teams}
    rows = []
    for week in range(1, 11):
        for t in teams:
            points[t] += rng.choice([0, 1, 1, 3, 3])
        ordered = sorted(teams, key=lambda t: (-points[t], t))
        for rank, t in enumerate(ordered, start=1):
            rows.append((t, week, points[t], rank))
    write("bump.csv", ["team", "week", "points", "rank"], rows)


def series():
    rows = []
    for month in range(1, 49):
        value = 100 + 20 * math.sin(month / 4) + month * 0.8
        rows.append((month, fmt(value, 2)))
    write("series.csv", ["month", "value"], rows)


if __name__ == "__main__":
    gapminder()
    migration()
    dunkin()
    bar_race()
    stocks()
    bump()
    series()
