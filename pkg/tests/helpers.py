"""Record and CSV builders shared by the tests."""

import csv
import random
from datetime import datetime

from crashsev.ingest import DEFAULT_SCHEMA, CrashRecord, RawRecord
from crashsev.ingest.records import POI_FLAGS, US_STATES


def make_record(i, severity=2, state="CA", ts="2016-02-08 05:46:00", **kw):
    fields = dict(
        id=f"R{i}",
        severity=severity,
        start_time=datetime.fromisoformat(ts),
        state=state,
        start_lat=37.0,
        start_lng=-120.0,
        temperature_f=60.0,
        pressure_in=29.9,
        weather="Clear",
        poi_flags=(False,) * 6,
    )
    fields.update(kw)
    return CrashRecord(**fields)


def raw_row(line=2, **cells):
    base = {
        "ID": "A-1",
        "Severity": "2",
        "Start_Time": "2016-02-08 05:46:00",
        "State": "OH",
        "Start_Lat": "39.865147",
        "Start_Lng": "-84.058723",
        "Temperature(F)": "36.9",
        "Pressure(in)": "29.68",
        "Weather_Condition": "Light Rain",
        "Amenity": "False",
        "Bump": "False",
        "Crossing": "False",
        "Junction": "False",
        "Stop": "False",
        "Traffic_Signal": "False",
    }
    base.update(cells)
    return RawRecord({k.casefold(): v for k, v in base.items()}, line)


def write_csv(path, rows):
    header = DEFAULT_SCHEMA.header()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([r.cells.get(h.casefold(), "") for h in header])
    return path


def random_records(n, seed):
    rnd = random.Random(seed)
    states = sorted(US_STATES)
    weathers = ["Clear", "Light Rain", "Snow", "Unknown", "Überfrost", "Fog / Mist"]
    out = []
    for i in range(n):
        ts = datetime(rnd.randint(2016, 2021), rnd.randint(1, 12), rnd.randint(1, 28),
                      rnd.randint(0, 23), rnd.randint(0, 59), rnd.randint(0, 59))
        out.append(CrashRecord(
            id=f"X-{rnd.randrange(10**9)}-{i}",
            severity=rnd.randint(1, 4),
            start_time=ts,
            state=rnd.choice(states[:8]),
            start_lat=rnd.uniform(-90, 90),
            start_lng=rnd.uniform(-180, 180),
            temperature_f=rnd.uniform(-40, 120),
            pressure_in=rnd.uniform(27, 32),
            weather=rnd.choice(weathers),
            poi_flags=tuple(rnd.random() < 0.3 for _ in POI_FLAGS),
        ))
    return out
