"""Smoke test for the rads Python extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o target/wheels
    pip install target/wheels/rads-*.whl
(or `maturin develop --release -m crates/py/Cargo.toml` inside a virtualenv).
"""

import json
import math
import os
import tempfile

import rads


def main():
    entries = [
        ("a", [[0.9, 0.1], [0.1, 0.9]]),
        ("b", [[0.2, 0.8], [0.3, 0.7]]),
        ("c", [[0.6, 0.4], [0.6, 0.4]]),
        ("d", [[0.55, 0.45], [0.45, 0.55]]),
    ]

    records = rads.build_signals(entries)
    a = records[0]
    assert abs(a["pe"] - 0.6931) < 1e-3 and abs(a["mi"] - 0.3680) < 1e-3, a
    assert records[2]["mi"] == 0.0

    w_plus, w_minus = rads.class_weights(0.5)
    assert math.isclose(w_plus, 1.8) and math.isclose(w_minus, 0.2)

    sel = rads.select(entries, "mi_only", 2)
    by_mi = sorted(records, key=lambda r: (-r["mi"], r["id"]))
    assert sel["selected"] == [r["id"] for r in by_mi[:2]], sel
    first = rads.select(entries, "rads", 2, seed=3, sampler=json.dumps({"agent": {"episodes": 20}}))
    again = rads.select(entries, "rads", 2, seed=3, sampler=json.dumps({"agent": {"episodes": 20}}))
    assert first == again and len(first["selected"]) <= 2

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "scores.jsonl")
        rads.save_scores(path, entries)
        assert rads.load_scores(path) == entries

    try:
        rads.select(entries, "coreset", 1)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown policy accepted")

    report = rads.run_transfer("random", 5, seed=1, harness=json.dumps({"bootstrap_resamples": 100}))
    assert report["budget_used"] == 5
    assert report["ci_low"] <= report["ci_high"]

    out = rads.sweep("uncertainty", [0, 4], [0, 1], harness=json.dumps({"bootstrap_resamples": 50}))
    assert len(out["reports"]) == 4 and len(out["summary"]) == 2

    gap = rads.corpus_gap(["chest pain", "no fever"], ["chest pain", "acute fracture"])
    assert 0.0 < gap["jaccard"] < 1.0 and gap["kl_ab"] >= 0.0

    print("smoke test passed")


if __name__ == "__main__":
    main()
