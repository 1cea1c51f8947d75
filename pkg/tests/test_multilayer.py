import math

import numpy as np
import pytest
from hypothesis import given, settings

from structemb.distance import SimilarityConfig, structural_distances
from structemb.multilayer import build_multilayer, layer_stats, write_layer_stats_csv

from test_graph import random_graphs


@pytest.fixture(scope="module")
def karate_ml(karate):
    table = structural_distances(karate)
    return table, build_multilayer(table)


def test_weights_are_exp_neg_distance(karate_ml):
    table, m = karate_ml
    for k in range(table.num_layers):
        for u, v, f in zip(*table.layer(k)):
            nbrs, w = m.neighbors(int(u), k)
            j = np.flatnonzero(nbrs == v)
            assert len(j) == 1
            assert w[j[0]] == np.exp(-f)


def test_layers_symmetric(karate_ml):
    _, m = karate_ml
    for k in range(m.num_layers):
        edges = {}
        for u in range(m.n):
            for v, w in zip(*m.neighbors(u, k)):
                edges[(u, int(v))] = w
        assert all(edges[(v, u)] == w for (u, v), w in edges.items())


def test_heavy_edges_and_up_weight(karate_ml):
    _, m = karate_ml
    for k in range(m.num_layers):
        for u in range(m.n):
            _, w = m.neighbors(u, k)
            heavy = int((w > m.avg_weight[k]).sum())
            assert m.heavy_edges[u, k] == heavy
            if k < m.num_layers - 1:
                assert m.up_weight[u, k] == pytest.approx(math.log(heavy + math.e))
    assert m.down_weight(0, 1) == 1.0


def test_layer_change_probabilities(karate_ml):
    _, m = karate_ml
    top = m.num_layers - 1
    assert m.layer_change_probabilities(3, 0) == (1.0, 0.0)
    assert m.layer_change_probabilities(3, top) == (0.0, 1.0)
    up, down = m.layer_change_probabilities(3, 2)
    assert up + down == pytest.approx(1.0)
    assert up >= 0.5  # log(heavy + e) >= 1


def test_layer_zero_complete(karate_ml, karate):
    _, m = karate_ml
    assert layer_stats(m, 0).edges == karate.n * (karate.n - 1) // 2
    s = layer_stats(m, 0)
    assert 0 < s.min_weight <= s.avg_weight <= s.max_weight == 1.0
    with pytest.raises(IndexError):
        layer_stats(m, m.num_layers)


def test_stats_csv(tmp_path, karate_ml):
    _, m = karate_ml
    path = tmp_path / "s.csv"
    write_layer_stats_csv(m, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "layer,edges,avg_weight,min_weight,max_weight"
    assert len(lines) == m.num_layers + 1


@settings(max_examples=60, deadline=None)
@given(random_graphs(max_n=16))
def test_transition_probabilities_sum_to_one(g):
    m = build_multilayer(structural_distances(g))
    for k in range(m.num_layers):
        for u in range(m.n):
            _, p = m.transition_probabilities(u, k)
            if len(p):
                assert abs(p.sum() - 1.0) <= 1e-12
                assert (p > 0).all()


def test_transition_probabilities_sum_to_one_opt(karate):
    m = build_multilayer(structural_distances(karate, SimilarityConfig(neighbor_limit=True, compression=True)))
    for k in range(m.num_layers):
        for u in range(m.n):
            _, p = m.transition_probabilities(u, k)
            if len(p):
                assert abs(p.sum() - 1.0) <= 1e-12


def test_opt2_layers_are_subgraphs(karate):
    full = build_multilayer(structural_distances(karate))
    lim = build_multilayer(structural_distances(karate, SimilarityConfig(neighbor_limit=True)))
    for k in range(lim.num_layers):
        for u in range(karate.n):
            a = dict(zip(*full.neighbors(u, k)))
            for v, w in zip(*lim.neighbors(u, k)):
                assert a[v] == w
