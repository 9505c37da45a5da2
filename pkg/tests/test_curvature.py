import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from curvscape.curvature import (
    EdgeFunction,
    MeasureConfig,
    NodeMeasure,
    curvature,
    forman,
    jump,
    node_measure,
    ollivier_ricci,
    resistance_curvature,
    resistance_data,
    wasserstein1,
)
from curvscape.errors import DegenerateMeasureError, DisconnectedError
from curvscape.graph import Graph, generate_er, named_graph, shortest_path_matrix

RW2 = MeasureConfig("rw", 2)


def values(f):
    return sorted(f.values.tolist())


# --- Forman -----------------------------------------------------------------


def test_forman_closed_forms():
    assert values(forman(named_graph("k3"))) == [3, 3, 3]
    assert values(forman(named_graph("k2"))) == [2]
    assert set(forman(named_graph("rook4x4")).values) == {-2}
    assert set(forman(named_graph("shrikhande")).values) == {-2}


def test_forman_matches_definition():
    for seed in range(10):
        g = generate_er(14, 0.35, seed)
        nb = [set(x) for x in g.neighbours]
        want = {(u, v): 4 - len(nb[u]) - len(nb[v]) + 3 * len(nb[u] & nb[v]) for u, v in g.edges}
        assert forman(g).as_dict() == pytest.approx(want)


# --- Ollivier ---------------------------------------------------------------


def test_orc_closed_forms():
    assert values(ollivier_ricci(named_graph("k3"))) == pytest.approx([0.5] * 3, abs=1e-9)
    path = ollivier_ricci(named_graph("path3"))
    assert path[(0, 1)] == pytest.approx(0.0, abs=1e-9)
    assert values(ollivier_ricci(named_graph("c4"))) == pytest.approx([0.0] * 4, abs=1e-9)


def _lp_w1(mu, nu, d):
    a, b = mu.mass, nu.mass
    cost = d[np.ix_(mu.support, nu.support)]
    na, nb = len(a), len(b)
    rows = []
    for i in range(na):
        r = np.zeros(na * nb)
        r[i * nb : (i + 1) * nb] = 1
        rows.append(r)
    for j in range(nb):
        r = np.zeros(na * nb)
        r[j::nb] = 1
        rows.append(r)
    res = linprog(cost.ravel(), A_eq=np.array(rows), b_eq=np.concatenate([a, b]), bounds=(0, None))
    return res.fun


@pytest.mark.parametrize("cfg", [MeasureConfig(), RW2, MeasureConfig("rw", 3, 0.2), MeasureConfig(self_mass=0.5)])
def test_wasserstein_matches_linprog(cfg):
    for seed in range(6):
        g = generate_er(12, 0.35, seed)
        d = shortest_path_matrix(g)
        active = [v for v in range(g.n) if g.degrees[v]]
        for x, y in itertools.combinations(active[:6], 2):
            if not np.isfinite(d[x, y]):
                continue
            mu, nu = node_measure(g, x, cfg), node_measure(g, y, cfg)
            assert wasserstein1(mu, nu, d) == pytest.approx(_lp_w1(mu, nu, d), abs=1e-9)


def test_random_walk_measure_matches_matrix_powers():
    g = generate_er(10, 0.4, 2)
    A = g.adjacency.toarray()
    deg = A.sum(axis=1)
    P = np.divide(A, deg[:, None], out=np.zeros_like(A), where=deg[:, None] > 0)
    for m in (1, 2, 3):
        S = sum(np.linalg.matrix_power(P, k) for k in range(1, m + 1))
        for v in range(g.n):
            if not deg[v]:
                continue
            mu = node_measure(g, v, MeasureConfig("rw", m))
            dense = np.zeros(g.n)
            dense[mu.support] = mu.mass
            np.testing.assert_allclose(dense, S[v] / S[v].sum(), atol=1e-12)


def test_uniform_measure_with_self_mass():
    mu = node_measure(named_graph("star4"), 0, MeasureConfig(self_mass=0.2)).as_dict()
    assert mu == pytest.approx({0: 0.2, 1: 0.2, 2: 0.2, 3: 0.2, 4: 0.2})


def test_rook_shrikhande_orc_multisets_differ():
    for cfg in (MeasureConfig(), RW2):
        a = values(ollivier_ricci(named_graph("rook4x4"), cfg))
        b = values(ollivier_ricci(named_graph("shrikhande"), cfg))
        assert not np.allclose(a, b)


def test_rook_shrikhande_orc_exact_values():
    # both graphs are edge-transitive, so each has one ORC value per measure
    cases = {
        ("rook4x4", "uniform_1hop"): 1 / 3,
        ("shrikhande", "uniform_1hop"): 1 / 6,
        ("rook4x4", "random_walk"): 13 / 18,
        ("shrikhande", "random_walk"): 7 / 12,
    }
    for (name, kind), want in cases.items():
        vals = ollivier_ricci(named_graph(name), MeasureConfig(kind, 2)).values
        np.testing.assert_allclose(vals, want, atol=1e-9)


def test_jump_of_dirac_measure():
    g = named_graph("star4")
    d = shortest_path_matrix(g)
    assert jump(node_measure(g, 0), 0, d) == pytest.approx(1.0)
    assert jump(NodeMeasure.dirac(3), 3, d) == 0.0


def test_orc_errors():
    g = Graph(4, ((0, 1), (2, 3)))
    with pytest.raises(DisconnectedError):
        ollivier_ricci(g, pairs=[(0, 2)])
    with pytest.raises(DegenerateMeasureError):
        node_measure(Graph(3, ((0, 1),)), 2)


def test_measure_config_validation():
    with pytest.raises(ValueError):
        MeasureConfig("heat")
    with pytest.raises(ValueError):
        MeasureConfig("rw", 0)
    with pytest.raises(ValueError):
        MeasureConfig(self_mass=1.0)


# --- Resistance -------------------------------------------------------------


def _pinv_resistance(g):
    L = np.diag(g.degrees.astype(float)) - g.adjacency.toarray()
    Lp = np.linalg.pinv(L)
    d = np.diag(Lp)
    return d[:, None] + d[None, :] - 2 * Lp


def test_resistance_matches_pseudoinverse():
    for seed in range(10):
        g = generate_er(12, 0.4, seed)
        if not g.is_connected():
            continue
        np.testing.assert_allclose(resistance_data(g).R, _pinv_resistance(g), atol=1e-10)


def test_resistance_per_component():
    g = Graph(5, ((0, 1), (1, 2), (3, 4)))
    R = resistance_data(g).R
    assert R[0, 2] == pytest.approx(2.0)
    assert R[3, 4] == pytest.approx(1.0)
    assert np.isinf(R[0, 3])


def test_rec_closed_forms():
    assert values(resistance_curvature(named_graph("k2"))) == pytest.approx([2.0], abs=1e-9)
    assert values(resistance_curvature(named_graph("k3"))) == pytest.approx([2.0] * 3, abs=1e-9)
    # c4: R = 3/4 on edges, p = 1 - 3/4 = 1/4 at every node
    assert values(resistance_curvature(named_graph("c4"))) == pytest.approx([4 / 3] * 4, abs=1e-9)


def test_rec_equal_on_rook_and_shrikhande():
    a = values(resistance_curvature(named_graph("rook4x4")))
    b = values(resistance_curvature(named_graph("shrikhande")))
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_node_resistance_curvature_sums_to_one_on_trees():
    # p_i sums to 1 on any connected graph (Foster); trees make it easy to see
    g = Graph(6, ((0, 1), (1, 2), (1, 3), (3, 4), (3, 5)))
    assert resistance_data(g).p.sum() == pytest.approx(1.0)
    g = generate_er(15, 0.4, 3)
    if g.is_connected():
        assert resistance_data(g).p.sum() == pytest.approx(1.0)


# --- EdgeFunction -----------------------------------------------------------


def test_edge_function_serialisation():
    f = EdgeFunction.from_mapping({(2, 1): 0.5, (0, 1): -1.25})
    assert f.edges == ((0, 1), (1, 2))
    assert f[(2, 1)] == 0.5
    assert f.to_csv() == "u,v,value\n0,1,-1.25\n1,2,0.5\n"
    assert f.to_json() == [{"u": 0, "v": 1, "value": -1.25}, {"u": 1, "v": 2, "value": 0.5}]
    with pytest.raises(ValueError):
        EdgeFunction(((0, 1),), [np.inf])


def test_curvature_dispatch():
    g = named_graph("k4")
    assert curvature(g, "frc").as_dict() == forman(g).as_dict()
    with pytest.raises(ValueError):
        curvature(g, "bakry-emery")
