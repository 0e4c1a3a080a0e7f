"""Smoke test for the hypersbm extension module.

Build and run from the workspace root:

    cargo build --release -p hypersbm-py
    cp target/release/libhypersbm.so crates/py/python/hypersbm.so
    python3 crates/py/python/smoke_test.py
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import hypersbm  # noqa: E402


def main():
    assert hypersbm.relations(4, 4) == [
        [4, 0, 0, 0],
        [3, 1, 0, 0],
        [2, 2, 0, 0],
        [2, 1, 1, 0],
        [1, 1, 1, 1],
    ]
    assert hypersbm.neighbor_pairs(2, 2) == [(0, 1)]
    assert hypersbm.confusion_coefficients(2, 2, 10) == [(0, 1, 4)]
    assert hypersbm.renyi_half(0.2, 0.2) == 0.0

    params = hypersbm.ModelParams(90, 2, 3, [0.9, 0.1])
    truth = hypersbm.balanced_assignment(90, 2)
    graph = hypersbm.sample_hypergraph(params, seed=7)
    again = hypersbm.sample_hypergraph(params, seed=7)
    assert graph.edges() == again.edges()
    assert len(graph) > 0

    est = hypersbm.detect(graph, 2)
    ratio, perm = hypersbm.mismatch_ratio(est, truth, 2)
    assert 0.0 <= ratio <= 0.05, ratio
    assert sorted(perm) == [0, 1]

    e = hypersbm.minimax_exponent(params)
    assert e > 0 and math.isfinite(e)

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "g.txt")
        graph.write(path)
        assert hypersbm.Hypergraph.read(path).edges() == graph.edges()

    try:
        hypersbm.ModelParams(10, 2, 2, [0.5])
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    print(f"ok: {len(graph)} edges, mismatch {ratio}, exponent {e:.4f}")


if __name__ == "__main__":
    main()
