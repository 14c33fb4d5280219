"""Regenerate the golden SVGs in tests/golden from their JSON specs.

Run only after an intentional rendering change, then review the diff.
"""

from pathlib import Path

from crashsev.report import ChartSpec, render_chart

GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden"

SPECS = {
    "bar": {
        "kind": "bar",
        "title": "Accidents by state",
        "data": [["CA", 3], ["OH", 1], ["FL", 2]],
        "x_label": "State",
        "y_label": "Accidents",
    },
    "pie": {
        "kind": "pie",
        "title": "Accidents per year",
        "data": [["2016", 410], ["2017", 717], ["2018", 893], ["2019", 953]],
    },
    "line": {
        "kind": "line",
        "title": "Accidents by hour",
        "series": [
            ["weekday", [[0, 3], [4, 1], [8, 12], [12, 9], [17, 15], [20, 6], [23, 2]]],
            ["weekend", [[0, 5], [4, 2], [8, 4], [12, 8], [17, 7], [20, 6], [23, 4]]],
        ],
        "x_label": "Hour",
        "y_label": "Accidents",
    },
}


def main():
    import json

    GOLDEN.mkdir(parents=True, exist_ok=True)
    for name, spec in SPECS.items():
        (GOLDEN / f"{name}.json").write_text(json.dumps(spec, indent=1) + "\n", encoding="utf-8")
        svg = render_chart(ChartSpec.from_dict(spec))
        (GOLDEN / f"{name}.svg").write_text(svg, encoding="utf-8")
        print(f"wrote {name}.json and {name}.svg")


if __name__ == "__main__":
    main()
