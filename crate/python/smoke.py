"""Smoke test for the dymatch_py extension module."""

import random

import dymatch_py as dm


def fully_dynamic():
    sim = dm.Simulation(30, 3, beta=2, seed=4)
    rng = random.Random(4)
    edges = set()
    for _ in range(200):
        if edges and rng.random() < 0.3:
            u, v = rng.choice(sorted(edges))
            sim.delete(u, v)
            edges.discard((u, v))
            continue
        u, v = sorted(rng.sample(range(30), 2))
        if (u, v) in edges:
            continue
        out = sim.insert(u, v)
        assert out["max_link_tokens"] <= 2
        edges.add((u, v))
    cert = sim.certify()
    assert cert["ok"], cert
    assert sorted(sim.edges()) == sorted(edges)
    assert dm.free_edge(30, sim.edges(), sim.matching()) is None
    assert dm.three_aug_paths(30, sim.edges(), sim.matching()) == []
    assert 3 * len(sim.matching()) >= 2 * dm.maximum_matching_size(30, sim.edges())
    m = sim.metrics()
    assert m["rounds_total"] == sim.rounds == sum(m["rounds_per_update"])


def batch():
    sim = dm.Simulation(40, 4, beta=4, algorithm="batchinc")
    out = sim.insert_batch([(2 * i, 2 * i + 1) for i in range(10)])
    assert out["minibatches"] == 3
    assert len(sim.matching()) == 10
    try:
        sim.delete(0, 1)
    except ValueError:
        pass
    else:
        raise AssertionError("batchinc must reject deletions")


def oracles():
    path = [(0, 1), (1, 2), (2, 3)]
    assert (0, 1, 2, 3) in dm.three_aug_paths(4, path, [(1, 2)])
    assert dm.free_edge(4, path, []) is not None
    assert dm.maximum_matching_size(4, path) == 2
    t = dm.lb_trial(40, 4, 2, seed=3)
    assert t["ok"] and t["bits_to_p"] >= 2


if __name__ == "__main__":
    fully_dynamic()
    batch()
    oracles()
    print("smoke ok")
