import networkx as nx
import numpy as np
import pytest

from structemb.distance import structural_distances
from structemb.evaluation import (
    ROLE_NAMES,
    OneVsRestLogistic,
    class_separation,
    classify,
    distance_correlation,
    edge_sample,
    edge_sampled_pair,
    fit_exponent,
    gen_barbell,
    gen_chung_lu,
    gen_egonet_substitute,
    gen_er,
    gen_mirrored,
    gen_roles,
    pair_distance_report,
    quartile_labels,
    scaling_run,
)
from structemb.graph import Graph, GraphError

from oracles import to_nx


def test_barbell_construction(barbell):
    g, classes = barbell
    assert g.n == 30
    assert g.num_edges == 2 * 45 + 11
    assert len(classes) == 7
    assert sorted(x for c in classes for x in c) == list(range(30))
    deg = g.degrees
    assert sorted(deg[classes[1]].tolist()) == [10, 10]
    assert set(deg[classes[0]].tolist()) == {9}


def test_barbell_odd_path_has_middle_singleton():
    g, classes = gen_barbell(4, 3)
    assert [len(c) for c in classes] == [6, 2, 2, 1]
    with pytest.raises(ValueError):
        gen_barbell(2, 1)


def test_mirrored_karate(mirrored_karate, karate):
    g, mirror = mirrored_karate
    assert g.n == 68
    assert g.num_edges == 157
    assert all(mirror[mirror[u]] == u and mirror[u] != u for u in range(g.n))
    edges = {frozenset(e) for e in g.edges()}
    assert all(frozenset((mirror[u], mirror[v])) in edges for u, v in g.edges())
    assert g.labels[mirror[g.index_of(1)]] == "35"


def test_mirrored_plain_and_symbolic_labels():
    base = Graph.from_edges([("a", "b"), ("b", "c")])
    g, mirror = gen_mirrored(base)
    assert g.n == 6 and g.num_edges == 4
    assert g.labels[mirror[g.index_of("a")]] == "a'"
    with pytest.raises(GraphError):
        gen_mirrored(base, bridge="zz")
    g2, _ = gen_mirrored(base, bridge=("a", "c"))
    assert g2.num_edges == 5


def test_edge_sample_extremes(karate, rng):
    assert edge_sample(karate, 1.0, rng).num_edges == karate.num_edges
    with pytest.raises(GraphError):
        edge_sample(karate, 0.0, rng)
    with pytest.raises(ValueError):
        edge_sample(karate, 1.5, rng)


def test_edge_sample_binomial(karate, rng):
    s, m = 0.6, karate.num_edges
    kept = [edge_sample(karate, s, rng).num_edges for _ in range(400)]
    assert abs(np.mean(kept) - s * m) < 4 * np.sqrt(s * (1 - s) * m / 400)
    assert np.var(kept) == pytest.approx(s * (1 - s) * m, rel=0.25)


def test_edge_sampled_pair(karate, rng):
    g, pairs = edge_sampled_pair(karate, 1.0, rng)
    assert g.n == 68 and len(pairs) == 34
    assert all(g.labels[a][2:] == g.labels[b][2:] for a, b in pairs)
    assert all(g.labels[a].startswith("a:") and g.labels[b].startswith("b:") for a, b in pairs)


def test_er_degree_and_determinism():
    g = gen_er(2000, 10, np.random.default_rng(7))
    assert g.degrees.mean() == pytest.approx(10, rel=0.05)
    again = gen_er(2000, 10, np.random.default_rng(7))
    np.testing.assert_array_equal(g.indices, again.indices)


def test_chung_lu_keeps_every_node(rng):
    g = gen_chung_lu(np.full(50, 0.5), rng)
    assert g.n == 50


def test_egonet_substitute(rng):
    g = gen_egonet_substitute(rng)
    deg = g.degrees
    assert g.n == 224
    assert 25 <= deg.mean() <= 31
    assert deg.min() >= 1 and deg.max() <= 223
    assert deg.std() > 15  # heterogeneous, unlike an ER graph of the same density


def test_roles_graph():
    g, roles = gen_roles(np.random.default_rng(3))
    assert g.n == 200
    assert nx.is_connected(to_nx(g))
    assert set(roles.tolist()) == set(range(len(ROLE_NAMES)))
    deg = g.degrees
    assert (deg[roles == ROLE_NAMES.index("path")] == 2).all()
    assert (deg[roles == ROLE_NAMES.index("leaf")] == 1).all()


def test_pair_distance_report():
    x = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 3.0], [4.0, 3.0]])
    rep = pair_distance_report(x, [(0, 1), (2, 3)])
    assert rep.special.tolist() == [1.0, 4.0]
    assert rep.all_mean == pytest.approx((1 + 3 + 5 + np.sqrt(10) + np.sqrt(18) + 4) / 6)
    assert rep.ratio == pytest.approx(rep.all_mean / 2.5)
    assert rep.fraction_special_below(2.0) == 0.5
    xs, ys = rep.ccdf("special", points=3)
    assert ys[0] == 1.0 and ys[-1] == 0.0
    with pytest.raises(ValueError):
        pair_distance_report(x, [(0, 7)])


def test_class_separation():
    x = np.array([[0.0], [0.1], [5.0], [5.1], [9.0]])
    assert class_separation(x, [[0, 1], [2, 3], [4]]).all()
    assert not class_separation(x, [[0, 2], [1, 3]]).any()


def average_ranks(values):
    values = list(values)
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for t in range(i, j + 1):
            ranks[order[t]] = (i + j) / 2 + 1
        i = j + 1
    return np.array(ranks)


def test_correlation_against_rank_oracle(karate, rng):
    table = structural_distances(karate)
    x = rng.normal(size=(karate.n, 2))
    for k in (0, 2):
        c = distance_correlation(table, x, k)
        us, vs, f = table.layer(k)
        d = np.linalg.norm(x[us] - x[vs], axis=1)
        assert c.pearson == pytest.approx(np.corrcoef(f, d)[0, 1], abs=1e-12)
        assert c.spearman == pytest.approx(np.corrcoef(average_ranks(f), average_ranks(d))[0, 1], abs=1e-12)
        assert c.pairs == len(f)
        assert 0 <= c.pearson_pvalue <= 1 and 0 <= c.spearman_pvalue <= 1


def test_correlation_affine_invariance_and_null(karate, rng):
    table = structural_distances(karate)
    x = rng.normal(size=(karate.n, 2))
    base = distance_correlation(table, x, 1)
    moved = distance_correlation(table, 3.5 * x + 2.0, 1)
    assert moved.spearman == pytest.approx(base.spearman, abs=1e-12)
    assert moved.pearson == pytest.approx(base.pearson, abs=1e-12)
    assert abs(base.spearman) < 0.2 and abs(base.pearson) < 0.2


def test_quartile_labels():
    assert quartile_labels([8, 7, 6, 5, 4, 3, 2, 1]).tolist() == [4, 4, 3, 3, 2, 2, 1, 1]
    # ties split by node id
    assert quartile_labels([1, 1, 1, 1]).tolist() == [1, 2, 3, 4]


def test_classify_separable_and_chance(rng):
    centers = np.array([[0, 0], [6, 0], [0, 6], [6, 6]])
    y = np.repeat(np.arange(4), 50)
    x = centers[y] + rng.normal(0, 0.5, (200, 2))
    assert classify(x, y, rng).mean >= 0.95
    noise = rng.normal(size=(200, 2))
    assert classify(noise, rng.permutation(y), rng).mean < 0.45
    with pytest.raises(ValueError):
        classify(x[:10], y, rng)


def test_logistic_binary_matches_reference_optimum(rng):
    # at the optimum the gradient of the regularised objective vanishes
    x = rng.normal(size=(120, 3))
    y = (x @ [1.0, -2.0, 0.5] + rng.normal(0, 0.5, 120) > 0).astype(int)
    model = OneVsRestLogistic(iterations=3000, learning_rate=1.0).fit(x, y)
    xs = (x - model.mean_) / model.scale_
    xb = np.hstack([xs, np.ones((120, 1))])
    w = model.coef_[1]
    p = 1 / (1 + np.exp(-(xb @ w)))
    grad = xb.T @ (p - y) / 120 + np.r_[np.full(3, 1.0 / 120), 0.0] * w
    assert np.abs(grad).max() < 1e-4
    assert np.mean(model.predict(x) == y) > 0.85


def test_fit_exponent():
    sizes = np.array([1000, 4000, 16000])
    assert fit_exponent(sizes, 3e-3 * sizes) == pytest.approx(1.0)
    assert fit_exponent(sizes, 2e-5 * sizes**1.5) == pytest.approx(1.5)


def test_scaling_run_shape(rng):
    seen = []
    res = scaling_run([50, 100], lambda g, seed: seen.append(g.n), rng, avg_degree=4, repeats=2)
    assert res.sizes == [50, 100] and len(res.times) == 2
    assert len(seen) == 4
    assert np.isfinite(res.exponent)
