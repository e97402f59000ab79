"""Smoke test for the compiled `concept_gae` module.

Build it first with `maturin develop -m crates/py/Cargo.toml`, then run
`python python/smoke_test.py`.
"""

import math
import tempfile
from pathlib import Path

import concept_gae as cg


def main():
    graph, features, truth = cg.generate_planted({"seed": 3, "n_concepts": 12, "n_informative": 4})
    assert len(graph) == 60 and len(features.concepts) == 12
    assert len(truth["informative"]) == 4

    split = cg.split_edges(graph, (0.6, 0.2, 0.2), seed=3)
    model = cg.train(graph, features, split, {"epochs": 30, "standardize": True, "seed": 3})
    assert model.epoch == 30
    dev = model.evaluate("dev")
    assert 0.5 < dev["auc"] <= 1.0, dev
    assert len(model.embeddings()) == 60
    assert len(model.history()) == 30

    grid = {"max_epochs": 30, "learning_rates": [3e-3], "lambdas": [1e-3]}
    best, board = cg.sweep(graph, features, split, {"standardize": True}, grid, theta=12)
    assert len(board) == 1 and len(best.active_concepts) <= 12
    try:
        cg.sweep(graph, features, split, {"standardize": True}, grid, theta=0)
    except cg.InfeasibleError:
        pass
    else:
        raise AssertionError("theta=0 should be infeasible")

    report = best.analyze(features)
    assert "concepts" in report

    assert cg.auc([0.9, 0.1, 0.8, 0.3], [True, False, True, False]) == 1.0
    assert math.isclose(cg.average_precision([0.1, 0.9], [True, False]), 0.5)
    assert cg.prox_group_row([3.0, 4.0], 10.0, [1.0, 1.0]) == [0.0, 0.0]

    rotation, residual = cg.procrustes_align([[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [-1.0, 0.0]])
    assert residual < 1e-12 and math.isclose(rotation[0][1], 1.0)

    null = cg.modularity_null(graph, n_shuffles=10, seed=0)
    assert null["q"] > 0.2 and len(null["partition"]) == 60

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        graph.save(tmp / "graph.json")
        features.save(tmp / "features")
        split.save(tmp / "split.json")
        model.save(tmp / "model")
        again = cg.Graph.load(tmp / "graph.json")
        assert again.edges == graph.edges
        assert cg.FeatureBundle.load(tmp / "features").concepts == features.concepts
        cg.EdgeSplit.load(tmp / "split.json", again)
        try:
            cg.Graph.load(tmp / "missing.json")
        except OSError:
            pass
        else:
            raise AssertionError("missing file should raise OSError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
