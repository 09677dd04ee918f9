"""Smoke test for the compiled `diethelper` module.

Run after installing the extension, e.g.

    pip install --no-build-isolation ./crates/python
    python python/smoke_test.py
"""

import json
import sys

import diethelper


def main():
    catalog = diethelper.Catalog()
    assert sorted(catalog.names()) == [
        "gluten-free",
        "milk-free",
        "nut-free",
        "pesco-vegetarian",
        "sugar-free",
        "vegan",
        "vegetarian",
    ], catalog.names()

    result = diethelper.check_label(
        fragments=["Ingredients: Wheat", "Flour, Salt"], diets=["gluten-free"]
    )
    assert result.verdict == "violations_found"
    assert result.flagged_pairs() == [(0, "wheat")]
    assert json.loads(result.to_json())["violated_diets"] == ["gluten-free"]

    assert diethelper.check_label("milk, eggs, honey").is_compliant

    custom = diethelper.check_label("Tomato, palm oil", custom=["Palm Oil"])
    assert custom.violated_diets == [diethelper.CUSTOM_DIET]

    try:
        diethelper.check_label(fragments=[])
    except diethelper.NoTextFound:
        pass
    else:
        raise AssertionError("empty fragment list must ask for a retake")

    matcher = diethelper.Matcher(["nut-free", "vegan"])
    for label in ["Peanut butter, salt", "Coconut milk", "Rice"]:
        got = matcher.check(label).to_json()
        want = diethelper.check_label(label, diets=["nut-free", "vegan"]).to_json()
        assert got == want, (label, got, want)

    print(f"diethelper {diethelper.__version__}: smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
