"""Regenerate the bundled 1,000-row synthetic CSV (or write a custom one)."""

import argparse

from crashsev.synthetic import BUNDLED_FIXTURE, write_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(BUNDLED_FIXTURE))
    ap.add_argument("--rows", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--clean", action="store_true", help="no blank or corrupt cells")
    a = ap.parse_args()
    write_fixture(a.out, a.rows, a.seed, dirty=not a.clean)
    print(f"wrote {a.rows} rows to {a.out}")


if __name__ == "__main__":
    main()
