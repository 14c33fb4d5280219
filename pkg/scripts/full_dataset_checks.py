"""Model ordering and exploratory findings on the full public accidents CSV.

    python3 scripts/full_dataset_checks.py --csv US_Accidents.csv [--workers 4]

The CSV path can also come from $CRASHSEV_DATASET. Prints one line per check
and exits non-zero if any check fails.
"""

import argparse
import json
import logging
import os
import sys
import tempfile
import time

from crashsev.benchmark import DATASET_ENV, dataset_findings, ingest_store, model_accuracies

TARGET_ACCURACY = {"logistic": 0.71, "knn": 0.75, "forest": 0.82}
TOLERANCE = 0.10


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--csv", default=os.environ.get(DATASET_ENV))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--sample-rows", type=int, default=100_000)
    a = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    if not a.csv or not os.path.isfile(a.csv):
        print("dataset absent: pass --csv or set", DATASET_ENV)
        return 0

    results = []
    t0 = time.time()
    acc = model_accuracies(a.csv, a.sample_rows, workers=a.workers)
    print(json.dumps(acc, indent=1))
    w = {k: v["accuracy"] for k, v in acc.items()}
    results.append(("model ordering forest > knn > logistic", w["forest"] > w["knn"] > w["logistic"]))
    for kind, target in TARGET_ACCURACY.items():
        results.append((f"{kind} accuracy {w[kind]:.3f} within {TOLERANCE} of {target}",
                        abs(w[kind] - target) <= TOLERANCE))
    print(f"models took {time.time() - t0:.0f}s")

    with tempfile.TemporaryDirectory() as tmp:
        ingest_store(a.csv, os.path.join(tmp, "store"), workers=a.workers)
        f = dataset_findings(os.path.join(tmp, "store"), workers=a.workers)
    print(json.dumps(f, indent=1))
    results += [
        ("top states CA, FL, SC", f["top_states"] == ["CA", "FL", "SC"]),
        ("severity-2 pressure window [29.5, 30.5) beats the rest", f["pressure_window"] > f["pressure_best_other"]),
        ("severity-2 temperature mass in [40, 80) exceeds the rest", f["temperature_inside"] > f["temperature_outside"]),
        ("severe accidents peak at hour 17", f["severe_peak_hour"] == 17),
        ("severity 2 is modal", f["modal_severity"] == 2),
    ]
    for name, ok in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return 0 if all(ok for _, ok in results) else 1


if __name__ == "__main__":
    sys.exit(main())
