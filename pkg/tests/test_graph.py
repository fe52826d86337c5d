import itertools
import math

import numpy as np
import pytest
from scipy import stats

from clbootstrap.graph import (
    IndexOutOfRange,
    SelfLoop,
    edge_probability,
    from_edges,
    read_edge_list,
    sample_graph,
    sample_graph_naive,
    write_edge_list,
)
from clbootstrap.weights import gen_power_law, gen_uniform, make_sequence


def test_edge_probability_examples():
    ws = make_sequence([3, 5, 22])
    assert ws.total_weight == 30
    assert edge_probability(ws, 0, 1) == 0.5
    assert edge_probability(ws, 1, 2) == 1.0
    uni = gen_uniform(7)
    assert edge_probability(uni, 2, 5) == 1 / 7


def test_edge_probability_guards():
    ws = gen_uniform(3)
    with pytest.raises(SelfLoop):
        edge_probability(ws, 1, 1)
    with pytest.raises(IndexOutOfRange):
        edge_probability(ws, 0, 3)


def test_two_vertex_frequency():
    ws = make_sequence([1, 1])
    trials = 10**5
    hits = sum(sample_graph(ws, s).m for s in range(trials))
    sigma = math.sqrt(trials * 0.25)
    assert abs(hits - trials / 2) <= 3 * sigma


def test_all_clamped_gives_complete_graph():
    ws = make_sequence([10.0] * 6)
    g = sample_graph(ws, 1)
    assert g.m == 15
    assert sample_graph_naive(make_sequence([3.0, 3.0, 3.0]), 5).m == 3


def test_structure_invariants():
    ws = gen_power_law(3000, 0.7)
    g = sample_graph(ws, 42)
    e = g.edges()
    assert np.all(e[:, 0] < e[:, 1])
    assert len({tuple(x) for x in e}) == g.m
    for v in range(0, g.n, 97):
        nb = g.neighbors(v)
        assert np.all(np.diff(nb) > 0) and v not in nb
        for u in nb:
            assert v in g.neighbors(u)


def test_deterministic_in_seed():
    ws = gen_power_law(2000, 0.6)
    a, b = sample_graph(ws, 9), sample_graph(ws, 9)
    assert np.array_equal(a.indices, b.indices) and np.array_equal(a.indptr, b.indptr)
    assert sample_graph(ws, 10).edge_set() != a.edge_set()


def test_vertex_subset_stays_inside():
    ws = gen_power_law(500, 0.6)
    sub = np.arange(300, 500)
    g = sample_graph(ws, 3, vertices=sub)
    assert g.n == 500
    assert np.all(g.edges() >= 300)


def test_from_edges_guards():
    with pytest.raises(SelfLoop):
        from_edges(3, [0], [0])
    with pytest.raises(IndexOutOfRange):
        from_edges(3, [0], [3])
    with pytest.raises(ValueError):
        from_edges(3, [0, 1], [1, 0])


def test_edge_list_round_trip(tmp_path):
    g = sample_graph(gen_power_law(300, 0.6), 4)
    path = tmp_path / "edges.txt"
    write_edge_list(g, path)
    first = path.read_text().splitlines()[0].split()
    assert int(first[0]) >= 1
    assert read_edge_list(path, g.n).edge_set() == g.edge_set()


def test_induced_subgraph():
    g = from_edges(4, [0, 1, 2], [1, 2, 3])
    assert g.induced([1, 2, 3]).edge_set() == {(1, 2), (2, 3)}


def expected_mean_degree_check(w=3.0, n=10**4, samples=50):
    """Mean degree over samples vs ``w^2 (n-1) / W``, in units of the standard error."""
    ws = gen_uniform(n, w)
    p = min(w * w / ws.total_weight, 1.0)
    pairs = n * (n - 1) / 2
    means = [2 * sample_graph(ws, s).m / n for s in range(samples)]
    expect = w * w * (n - 1) / ws.total_weight
    se = math.sqrt(4 * pairs * p * (1 - p) / n**2 / samples)
    return (np.mean(means) - expect) / se


def test_expected_degree_within_three_se():
    assert abs(expected_mean_degree_check()) <= 3


def joint_law_harness(weights, samples=20000, seed=0):
    """Chi-square p-values for the edge-indicator vector of fast and naive samplers.

    Returns (fast vs exact law, naive vs exact law, fast vs naive).
    """
    ws = make_sequence(weights)
    n = ws.n
    pairs = list(itertools.combinations(range(n), 2))
    probs = np.array([edge_probability(ws, u, v) for u, v in pairs])
    fixed = (probs == 0) | (probs == 1)
    free = np.nonzero(~fixed)[0]
    outcomes = list(itertools.product((0, 1), repeat=free.size))
    exact = np.array(
        [np.prod([probs[k] if bit else 1 - probs[k] for k, bit in zip(free, o)]) for o in outcomes]
    )
    index = {o: i for i, o in enumerate(outcomes)}

    def histogram(sampler, base):
        counts = np.zeros(len(outcomes))
        for s in range(samples):
            es = sampler(ws, base + s).edge_set()
            bits = tuple(int(pairs[k] in es) for k in free)
            # forced pairs must always follow their probability
            assert all((pairs[k] in es) == (probs[k] == 1) for k in np.nonzero(fixed)[0])
            counts[index[bits]] += 1
        return counts

    fast = histogram(sample_graph, seed)
    naive = histogram(sample_graph_naive, seed + samples)
    keep = exact * samples >= 5
    exp_k = np.append(exact[keep], exact[~keep].sum()) * samples

    def gof(obs):
        obs_k = np.append(obs[keep], obs[~keep].sum())
        mask = exp_k > 0
        return stats.chisquare(obs_k[mask], exp_k[mask] * obs_k[mask].sum() / exp_k[mask].sum()).pvalue

    table = np.vstack((np.append(fast[keep], fast[~keep].sum()), np.append(naive[keep], naive[~keep].sum())))
    table = table[:, table.sum(axis=0) > 0]
    two_sample = stats.chi2_contingency(table).pvalue
    return gof(fast), gof(naive), two_sample


def test_joint_law_small_graph():
    # 6 vertices: a clamped heavy pair plus a spread of probabilities
    p_fast, p_naive, p_two = joint_law_harness([1.0, 1.0, 1.5, 2.0, 6.0, 7.0], samples=8000)
    assert min(p_fast, p_naive, p_two) > 0.001


def test_degree_distribution_matches_naive():
    ws = gen_power_law(500, 0.6)
    fast = np.concatenate([sample_graph(ws, s).degrees() for s in range(60)])
    naive = np.concatenate([sample_graph_naive(ws, 10**6 + s).degrees() for s in range(60)])
    top = 12
    hist = np.vstack(
        (np.bincount(np.minimum(fast, top), minlength=top + 1), np.bincount(np.minimum(naive, top), minlength=top + 1))
    )
    assert stats.chi2_contingency(hist[:, hist.sum(axis=0) > 0]).pvalue > 0.01
