"""Seeded generator for small US-Accidents-shaped CSV fixtures.

Severity depends on hour, weather, pressure and a few POI flags so the
classifiers have signal to find; a fraction of cells are blanked or corrupted
to exercise the cleaner.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .ingest.records import DEFAULT_SCHEMA

BUNDLED_FIXTURE = Path(__file__).parent / "data" / "synthetic_1000.csv"

# (state, relative weight, centre lat, centre lng)
_STATES = [
    ("CA", 30, 36.5, -119.5),
    ("FL", 14, 28.3, -81.6),
    ("SC", 9, 33.9, -80.9),
    ("TX", 8, 31.0, -99.0),
    ("NY", 6, 42.9, -75.5),
    ("NC", 5, 35.5, -79.4),
    ("OR", 4, 44.0, -120.5),
    ("VA", 4, 37.5, -78.8),
    ("PA", 3, 40.9, -77.8),
    ("OH", 3, 40.3, -82.8),
    ("MN", 2, 46.3, -94.3),
    ("IL", 2, 40.0, -89.2),
]
_WEATHER = [
    ("Clear", 35),
    ("Fair", 20),
    ("Mostly Cloudy", 12),
    ("Overcast", 9),
    ("Partly Cloudy", 8),
    ("Light Rain", 7),
    ("Scattered Clouds", 4),
    ("Light Snow", 2),
    ("Rain", 2),
    ("Fog", 1),
]
_YEARS = [(2016, 6), (2017, 9), (2018, 10), (2019, 12), (2020, 25), (2021, 38)]
# morning and evening peaks, highest at 17:00
_HOUR_WEIGHTS = [2, 1, 1, 1, 2, 3, 5, 8, 9, 6, 5, 5, 5, 6, 7, 8, 10, 12, 8, 5, 4, 3, 3, 2]


def _pick(rng, table):
    w = np.array([t[1] for t in table], dtype=float)
    return rng.choice(len(table), p=w / w.sum())


def generate_rows(n: int = 1000, seed: int = 7, dirty: bool = True) -> list[list[str]]:
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        s = _STATES[_pick(rng, _STATES)]
        state, lat0, lng0 = s[0], s[2], s[3]
        year = _YEARS[_pick(rng, _YEARS)][0]
        hour = int(rng.choice(24, p=np.array(_HOUR_WEIGHTS) / sum(_HOUR_WEIGHTS)))
        month, day = int(rng.integers(1, 13)), int(rng.integers(1, 29))
        minute, second = int(rng.integers(0, 60)), int(rng.integers(0, 60))
        weather = _WEATHER[_pick(rng, _WEATHER)][0]
        temp = float(np.round(rng.normal(62, 17), 1))
        pressure = float(np.round(rng.normal(29.9, 0.35), 2))
        flags = [bool(rng.random() < p) for p in (0.02, 0.01, 0.12, 0.08, 0.03, 0.15)]

        # latent severity score
        z = 0.0
        z += 0.9 if hour >= 15 and hour <= 19 else 0.0
        z += 0.8 if hour < 5 else 0.0
        z += 1.0 if "Snow" in weather or weather in ("Rain", "Fog") else 0.0
        z += 0.6 if pressure < 29.5 else 0.0
        z -= 1.2 if flags[5] or flags[2] else 0.0
        z += 0.5 if state in ("SC", "OR", "MN") else 0.0
        z += rng.normal(0, 0.6)
        severity = 1 if z < -1.0 else 2 if z < 1.3 else 3 if z < 2.2 else 4

        row = {
            "ID": f"A-{i + 1}",
            "Severity": str(severity),
            "Start_Time": f"{year:04d}-{month:02d}-{day:02d} {hour:02d}:{minute:02d}:{second:02d}",
            "State": state,
            "Start_Lat": f"{lat0 + rng.normal(0, 1.0):.6f}",
            "Start_Lng": f"{lng0 + rng.normal(0, 1.0):.6f}",
            "Temperature(F)": f"{temp:.1f}",
            "Pressure(in)": f"{pressure:.2f}",
            "Weather_Condition": weather,
            "Description": f"Accident on route {int(rng.integers(1, 99))}, lane blocked",
        }
        for header, flag in zip(DEFAULT_SCHEMA.poi, flags):
            row[header] = "True" if flag else "False"

        if dirty:
            u = rng.random()
            if u < 0.04:
                row["Temperature(F)"] = rng.choice(["", "NA", "N/A"])
            elif u < 0.07:
                row["Pressure(in)"] = rng.choice(["", "null"])
            elif u < 0.10:
                row["Weather_Condition"] = rng.choice(["", "None"])
            elif u < 0.12:
                row["Weather_Condition"] = "  " + weather.lower() + " "
            elif u < 0.125:
                row["Severity"] = rng.choice(["", "7", "0"])
            elif u < 0.13:
                row["Start_Time"] = rng.choice(["", "2020-13-40 25:00:00", "yesterday"])
            elif u < 0.134:
                row["State"] = rng.choice(["", "XX"])
            elif u < 0.137:
                row["Start_Lat"] = rng.choice(["", "123.0"])
            elif u < 0.14:
                row["Traffic_Signal"] = ""
        rows.append(row)
    header = [*DEFAULT_SCHEMA.header(), "Description"]
    return [header] + [[r[h] for h in header] for r in rows]


def write_fixture(path: str | Path, n: int = 1000, seed: int = 7, dirty: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(generate_rows(n, seed, dirty))
    return path
