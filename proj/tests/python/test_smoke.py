"""Smoke tests for the python bindings (run by ctest with PYTHONPATH set)."""

import json
import math
import sys
import tempfile

import nrulesim as nr


def test_registry():
    scenarios = nr.list_scenarios()
    assert len(scenarios) == 10
    ids = {s["id"] for s in scenarios}
    assert "detector-capture" in ids
    assert "localization" in ids


def test_build_validate_roundtrip():
    scenario = nr.build_scenario("parallel-branch", gR=1.0, gL=2.0)
    assert scenario.dimension == 4
    assert nr.validate(scenario) == []

    text = scenario.to_json()
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        fh.write(text)
        path = fh.name
    loaded = nr.load_scenario(path)
    assert loaded.to_json() == text

    bad = json.loads(text)
    bad["surprise"] = 1
    threw = False
    try:
        with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
            fh.write(json.dumps(bad))
            bad_path = fh.name
        nr.load_scenario(bad_path)
    except Exception:
        threw = True
    assert threw, "unknown keys must be rejected"


def test_trajectory_determinism():
    scenario = nr.build_scenario("series-counter", n=3)
    a = nr.run_trajectory(scenario, seed=42)
    b = nr.run_trajectory(scenario, seed=42)
    assert a["events"] == b["events"]
    assert [e["chosen"] for e in a["events"]] == ["A1", "A2", "A3"]
    times = [e["t"] for e in a["events"]]
    assert times == sorted(times)


def test_ensemble_against_oracle():
    scenario = nr.build_scenario("parallel-branch", gR=1.0, gL=2.0)
    stats = nr.run_ensemble(scenario, trials=4000, seed=7)
    counts = {o["outcome"]: o["count"] for o in stats["outcomes"]}
    right = counts.get("A_r>A_f", 0)
    freq = right / 4000.0
    sigma = math.sqrt(0.2 * 0.8 / 4000.0)
    assert abs(freq - 0.2) < 4 * sigma, freq
    assert stats["oracleComparison"]["pass"] is True
    assert stats["invariantFailures"] == []


def test_race_and_unitary():
    scenario = nr.build_scenario("detector-capture", g=1.0)
    race = nr.race_probabilities(scenario, tmax=10.0)
    assert abs(race["firstStage"]["probabilities"]["d1"] - (1 - 1 / 101)) < 1e-6

    pops = nr.unitary_populations(scenario, t=0.7)
    assert abs(pops["norm"] - 1.0) < 1e-10


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok {test.__name__}")
    print(f"{len(tests)} python smoke tests passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
