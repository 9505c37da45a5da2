import math

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from curvscape.curvature import MeasureConfig, resistance_curvature, resistance_data
from curvscape.errors import UndefinedCorrelationError
from curvscape.graph import Graph, generate_er, named_graph
from curvscape.landscape import PipelineConfig
from curvscape.stats import (
    BoundCheckReport,
    adjusted_rand_index,
    check_forman_bounds,
    check_orc_bounds,
    check_resistance_bounds,
    community_set,
    derive_seed,
    normalized_adjacency_lambda2,
    orc_bound_terms,
    pairwise_distinguish,
    pearson,
    permutation_test,
    perturbation_sweep,
    raw_distance,
    spectral_cluster,
)

FAST = PipelineConfig(resolution=200)


def connected_er(n, p, seed):
    for k in range(1000):
        g = generate_er(n, p, derive_seed(seed, k))
        if g.is_connected():
            return g
    raise AssertionError("no connected sample")


# --- pearson and permutation tests -----------------------------------------


def test_pearson():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [-1, -2, -3]) == pytest.approx(-1.0)
    with pytest.raises(UndefinedCorrelationError):
        pearson([1, 2, 3], [1, 1, 1])
    assert pearson([0, 0.1, 0.2, 0.3], [0, 1, 2, 3]) == pytest.approx(1.0)


def test_permutation_test_identical_sets():
    A = community_set(3, 12, 0)
    res = permutation_test(A, list(A), FAST, 20, 1)
    assert res.observed_distance == 0.0
    # splits that happen to reproduce the two halves tie at 0 and count as not higher
    assert min(res.permuted_distances) >= 0.0
    assert res.fraction_higher == sum(d > 0 for d in res.permuted_distances) / 20
    assert res.fraction_higher >= 0.5
    assert res.n_permutations == len(res.permuted_distances) == 20


def test_permutation_test_reproducible_and_bounded():
    A, B = community_set(4, 12, 0), community_set(4, 12, 1)
    a = permutation_test(A, B, FAST, 15, 3)
    b = permutation_test(A, B, FAST, 15, 3)
    assert a == b
    assert 0.0 <= a.fraction_higher <= 1.0
    want = sum(d > a.observed_distance for d in a.permuted_distances) / 15
    assert a.fraction_higher == want


def test_permutation_test_validation():
    A = community_set(2, 12, 0)
    with pytest.raises(ValueError):
        permutation_test(A, A, FAST, 0)
    with pytest.raises(ValueError):
        permutation_test(A[:1], A, FAST, 5)


# --- perturbation sweeps ----------------------------------------------------


def test_sweep_without_perturbation_has_no_correlation():
    with pytest.raises(UndefinedCorrelationError):
        perturbation_sweep(community_set(2, 12, 0), "add", [0.0], FAST)


def test_sweep_report_shape():
    base = community_set(3, 12, 0)
    rep = perturbation_sweep(base, "delete", [0.0, 0.2, 0.4], FAST, seed=1)
    assert len(rep.distances) == len(rep.fractions) == len(rep.max_relative_change) == 3
    assert rep.distances[0] == 0.0 and rep.max_relative_change[0] == 0.0
    assert rep.to_csv().splitlines()[0] == "fraction,distance,max_relative_change"
    with pytest.raises(ValueError):
        perturbation_sweep(base, "add", [0.2, 0.1], FAST)


# --- distinguishability -----------------------------------------------------


def test_raw_distance_is_quantile_wasserstein():
    assert raw_distance(np.array([0.0, 1.0]), np.array([1.0, 2.0])) == pytest.approx(1.0)
    assert raw_distance(np.array([1.0]), np.array([1.0, 1.0])) == 0.0


def test_isomorphic_pair_never_distinguished():
    g = generate_er(10, 0.5, 2)
    h = g.relabel(np.random.default_rng(0).permutation(10))
    for method in ("raw_hist", "bottleneck"):
        for kind in ("frc", "orc"):
            assert pairwise_distinguish([g, h], method, PipelineConfig(kind=kind)) == 0.0


def test_rook_shrikhande_distinguishability():
    pair = [named_graph("rook4x4"), named_graph("shrikhande")]
    assert pairwise_distinguish(pair, "raw_hist", PipelineConfig(kind="frc")) == 0.0
    assert pairwise_distinguish(pair, "raw_hist", PipelineConfig(kind="rec")) == 0.0
    for m in (MeasureConfig(), MeasureConfig("rw", 2)):
        assert pairwise_distinguish(pair, "raw_hist", PipelineConfig(kind="orc", measure=m)) == 1.0
    assert pairwise_distinguish(pair, "bottleneck", PipelineConfig(kind="frc")) == 0.0
    assert pairwise_distinguish(pair, "bottleneck", PipelineConfig(kind="orc")) == 1.0


# --- clustering -------------------------------------------------------------


def test_ari_examples():
    assert adjusted_rand_index([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0
    assert adjusted_rand_index([0, 0, 1, 1], [5, 5, 2, 2]) == 1.0
    assert adjusted_rand_index([0, 0, 0, 0], [0, 0, 1, 1]) == 0.0
    with pytest.raises(ValueError):
        adjusted_rand_index([0, 1], [0])


def test_ari_matches_sklearn():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(2, 30))
        a = rng.integers(0, 4, n)
        b = rng.integers(0, 3, n)
        assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_score(a, b), abs=1e-12)
        assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_index(b, a), abs=1e-12)


def test_spectral_cluster_blocks():
    D = np.full((8, 8), 10.0)
    D[:4, :4] = 0.0
    D[4:, 4:] = 0.0
    np.fill_diagonal(D, 0.0)
    labels = spectral_cluster(D, 2, 0)
    assert adjusted_rand_index(labels, [0] * 4 + [1] * 4) == 1.0


def test_spectral_cluster_k_equals_n_and_determinism():
    rng = np.random.default_rng(1)
    X = rng.random((6, 2))
    D = np.linalg.norm(X[:, None] - X[None], axis=2)
    assert len(set(spectral_cluster(D, 6, 0).tolist())) == 6
    np.testing.assert_array_equal(spectral_cluster(D, 3, 4), spectral_cluster(D, 3, 4))
    with pytest.raises(ValueError):
        spectral_cluster(D, 7)


# --- bound checkers ---------------------------------------------------------


def test_report_margin_bookkeeping():
    r = BoundCheckReport("x")
    r.record(0.0, 0.5, 1.0)
    r.record(0.0, 1.5, 1.0)
    assert (r.samples, r.violations) == (2, 1)
    assert r.worst_margin == pytest.approx(-0.5)


def test_forman_single_edge_arithmetic():
    from curvscape.curvature import forman

    # attaching a pendant vertex to an endpoint lowers the edge by one
    g = named_graph("k2")
    h = Graph(3, ((0, 1), (1, 2)))
    assert forman(h)[(0, 1)] - forman(g)[(0, 1)] == -1
    # closing a triangle on a path raises the path edges by two
    p = named_graph("path3")
    t = named_graph("k3")
    assert forman(t)[(0, 1)] - forman(p)[(0, 1)] == 2


def test_forman_bounds_hold():
    for seed in range(3):
        rep = check_forman_bounds(connected_er(12, 0.3, seed), 50, seed)
        assert rep.violations == 0 and rep.samples > 0


@pytest.mark.parametrize("cfg", [MeasureConfig(), MeasureConfig("rw", 2)])
def test_orc_bounds_hold(cfg):
    rep = check_orc_bounds(connected_er(12, 0.3, 0), cfg, 20, 0)
    assert rep.violations == 0 and rep.samples > 0


def test_orc_identity_perturbation():
    g = connected_er(10, 0.4, 1)
    terms, w_max, _ = orc_bound_terms(g, g)
    assert w_max == 0.0
    for _, lower, value, upper in terms:
        assert lower - 1e-9 <= value <= upper + 1e-9


def test_orc_upper_bound_unperturbed():
    for seed in range(5):
        g = connected_er(14, 0.3, seed)
        for _, _, value, upper in orc_bound_terms(g, g)[0]:
            assert value <= upper + 1e-9


def test_rec_diamond_from_triangle():
    k3 = named_graph("k3")
    diamond = Graph(4, ((0, 1), (0, 2), (1, 2), (2, 3), (0, 3)))
    R0 = resistance_data(Graph(4, k3.edges + ((2, 3),))).R
    R1 = resistance_data(diamond).R
    # adding an edge can only lower effective resistances
    assert np.all(R1 <= R0 + 1e-12)
    # yet the curvature of (0, 1) falls from 2 to 8/5: p_0 picks up a new R term
    before = resistance_curvature(Graph(4, k3.edges + ((2, 3),)))
    after = resistance_curvature(diamond)
    assert before[(0, 1)] == pytest.approx(2.0)
    assert after[(0, 1)] == pytest.approx(1.6)


def test_rec_deleting_cycle_edge_lowers_curvature():
    c4 = named_graph("c4")
    path = Graph(4, ((0, 1), (1, 2), (2, 3)))
    before = resistance_curvature(c4).as_dict()
    after = resistance_curvature(path).as_dict()
    for e, x in after.items():
        assert x <= before[e] + 1e-12


def test_rec_addition_can_lower_curvature():
    # path 0-1-2-3 plus (0, 2): REC of (2, 3) drops from 1 to 2/3 because
    # vertex 2 gains a neighbour and with it an extra resistance term in p_2
    path = Graph(4, ((0, 1), (1, 2), (2, 3)))
    added = path.with_edges(path.edges + ((0, 2),))
    assert resistance_curvature(path)[(2, 3)] == pytest.approx(1.0)
    assert resistance_curvature(added)[(2, 3)] == pytest.approx(2 / 3)


def test_rec_checker_reports_auxiliaries():
    g = connected_er(12, 0.4, 0)
    rep = check_resistance_bounds(g, 10, 0, mode="add")
    assert rep.theorem == "rec_add"
    for key in ("delta_add", "delta_del", "lambda2", "monotonicity_violations", "bound_violations"):
        assert key in rep.auxiliaries
    assert rep.samples > 0


def test_lambda2_of_complete_graph():
    # D^-1/2 A D^-1/2 of K_n has eigenvalues 1 and -1/(n-1)
    assert normalized_adjacency_lambda2(named_graph("k4")) == pytest.approx(-1 / 3)
    assert normalized_adjacency_lambda2(named_graph("c4")) == pytest.approx(0.0, abs=1e-12)


def test_checker_reports_serialise():
    rep = check_forman_bounds(connected_er(10, 0.4, 0), 4, 0)
    obj = rep.to_json()
    assert obj["theorem"] == "forman" and obj["violations"] == 0
    assert not math.isnan(obj["worst_margin"])
