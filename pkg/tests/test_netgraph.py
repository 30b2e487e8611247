import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnet import netgraph, qstate
from qnet.qstate import BitPhaseLink, PureLink, WernerLink


def rng(seed=0):
    return np.random.default_rng(seed)


# -- lattice constructors -------------------------------------------------------


def test_square_counts():
    net = netgraph.gen_square(2, "open")
    assert (net.n, net.m) == (4, 4)
    net = netgraph.gen_square(3, "torus")
    assert (net.n, net.m) == (9, 18)
    assert netgraph.gen_square(4, "open").degree_histogram() == {2: 4, 3: 8, 4: 4}
    for L in (3, 5, 8):
        assert netgraph.gen_square(L, "open").m == 2 * L * (L - 1)
        assert netgraph.gen_square(L, "torus").m == 2 * L * L


def test_other_lattices():
    assert netgraph.gen_triangular(3, "torus").degree_histogram() == {6: 9}
    assert netgraph.gen_honeycomb(4, "torus").degree_histogram() == {3: 32}
    cub = netgraph.gen_cubic(3, "torus")
    assert (cub.n, cub.m) == (27, 81)
    assert cub.degree_histogram() == {6: 27}
    fe = netgraph.gen_four_eight(4, "torus")
    assert fe.degree_histogram() == {3: 64}


def test_lattices_are_simple_graphs():
    for net in (netgraph.gen_square(4), netgraph.gen_triangular(4), netgraph.gen_honeycomb(4),
                netgraph.gen_cubic(3), netgraph.gen_four_eight(3)):
        assert len({tuple(sorted(e)) for e in net.edges()}) == net.m


def test_payload_and_multiplicity_on_every_edge():
    link = PureLink(0.3)
    net = netgraph.gen_honeycomb(3, "torus", link, mult=2)
    assert all(p is link for p in net.payloads)
    assert np.all(net.mult == 2)


def test_lattice_size_validation():
    with pytest.raises(ValueError):
        netgraph.gen_square(1)
    with pytest.raises(ValueError):
        netgraph.gen_square(4, "mobius")


# -- random graphs -----------------------------------------------------------------


def test_er_extremes():
    assert netgraph.gen_er(50, 0.0, rng()).m == 0
    full = netgraph.gen_er(100, 1.0, rng())
    assert full.m == 4950
    assert full.degree_histogram() == {99: 100}


def test_er_mean_degree():
    N, c = 500, 3.0
    means = [netgraph.gen_er(N, c / N, rng(s)).degree().mean() for s in range(100)]
    # per-sample mean degree has variance ~ 2c(1-p)/N
    sigma = math.sqrt(2 * c * (1 - c / N) / N / len(means))
    assert abs(np.mean(means) - c * (N - 1) / N) < 3 * sigma


def test_generators_reproducible():
    for make in (lambda r: netgraph.gen_er(200, 0.03, r), lambda r: netgraph.gen_ws(200, 4, 0.1, r),
                 lambda r: netgraph.gen_ba(200, 2, r)):
        assert make(rng(7)).edges() == make(rng(7)).edges()


def test_ws():
    ring = netgraph.gen_ws(30, 4, 0.0, rng())
    assert ring.degree_histogram() == {4: 30}
    net = netgraph.gen_ws(200, 6, 0.2, rng(1))
    assert net.m == 600
    assert len({tuple(sorted(e)) for e in net.edges()}) == net.m
    with pytest.raises(ValueError):
        netgraph.gen_ws(30, 3, 0.1, rng())


def test_ba_power_law_tail():
    counts = np.zeros(1000, int)
    for s in range(50):
        deg = netgraph.gen_ba(1000, 2, rng(s)).degree()
        counts[: deg.max() + 1] += np.bincount(deg)
    ks = np.arange(len(counts))
    sel = (ks >= 3) & (counts >= 20)
    slope = np.polyfit(np.log(ks[sel]), np.log(counts[sel]), 1)[0]
    assert -3.5 <= slope <= -2.5


# -- duals ---------------------------------------------------------------------------


def _check_dual_geometry(net, d):
    faces = d.faces
    for e, (u, v) in enumerate(net.edges()):
        de = d.edge_map[e]
        f, g = int(d.network.eu[de]), int(d.network.ev[de])
        assert {u, v} <= set(faces[f]) and {u, v} <= set(faces[g])


@pytest.mark.parametrize("make, dual_topology", [(netgraph.gen_square, "square"),
                                                 (netgraph.gen_triangular, "honeycomb"),
                                                 (netgraph.gen_honeycomb, "triangular")])
def test_dual_shape_and_geometry(make, dual_topology):
    net = make(4, "torus")
    d = netgraph.dual(net)
    assert d.network.topology == dual_topology
    assert d.network.m == net.m
    assert sorted(d.edge_map.tolist()) == list(range(net.m))
    _check_dual_geometry(net, d)


def test_square_is_self_dual():
    d = netgraph.dual(netgraph.gen_square(4, "torus"))
    assert d.network.n == 16 and d.network.shape == (4,)


def test_dual_of_dual_round_trips():
    # identify each second-dual node with the primal node shared by all the
    # first-dual faces around it; under that identification the composed edge
    # map must send every primal edge to itself
    net = netgraph.gen_square(5, "torus")
    d1 = netgraph.dual(net)
    d2 = netgraph.dual(d1.network)
    ident = {}
    for node, around in enumerate(d2.faces):
        common = set.intersection(*(set(d1.faces[f]) for f in around))
        assert len(common) == 1
        ident[node] = common.pop()
    composed = d2.edge_map[d1.edge_map]
    for e, (u, v) in enumerate(net.edges()):
        de = composed[e]
        a, b = ident[int(d2.network.eu[de])], ident[int(d2.network.ev[de])]
        assert {a, b} == {u, v}
    assert sorted(ident.values()) == list(range(net.n))


def test_dual_rejects_open_or_unknown():
    with pytest.raises(ValueError):
        netgraph.dual(netgraph.gen_square(4, "open"))
    with pytest.raises(ValueError):
        netgraph.dual(netgraph.gen_cubic(3))


# -- honeycomb -> triangular ------------------------------------------------------


def test_honeycomb_to_triangular_counts_and_bell():
    L = 4
    hexnet = netgraph.gen_honeycomb(L, "torus", PureLink.bell(), mult=2)
    assert hexnet.n == 2 * L * L
    tri = netgraph.honeycomb_to_triangular(hexnet, rng=rng())
    assert tri.n == L * L and tri.topology == "triangular"
    assert tri.degree_histogram() == {6: L * L}
    assert all(p.entanglement == pytest.approx(1.0) for p in tri.payloads)


def test_honeycomb_to_triangular_bx_is_deterministic():
    phi = PureLink.from_concurrence(0.8)
    hexnet = netgraph.gen_honeycomb(3, "torus", phi, mult=2)
    tri = netgraph.honeycomb_to_triangular(hexnet, basis="bx")
    for p in tri.payloads:
        assert p.concurrence == pytest.approx(0.64, abs=1e-12)


def test_honeycomb_to_triangular_preserves_mean_entanglement():
    phi = PureLink(0.2)
    hexnet = netgraph.gen_honeycomb(8, "torus", phi, mult=2)
    es = np.concatenate([[p.entanglement for p in netgraph.honeycomb_to_triangular(hexnet, rng=rng(s)).payloads]
                         for s in range(20)])
    assert abs(es.mean() - phi.entanglement) < 2 * es.std() / math.sqrt(len(es))


def test_honeycomb_to_triangular_needs_double_bonds():
    with pytest.raises(ValueError):
        netgraph.honeycomb_to_triangular(netgraph.gen_honeycomb(3, "torus", PureLink(0.3)))
    with pytest.raises(ValueError):
        netgraph.honeycomb_to_triangular(netgraph.gen_square(3, "torus", PureLink(0.3), mult=2))


# -- GHZ site lattice ------------------------------------------------------------


def test_ghz_generators_own_every_edge_once():
    net = netgraph.gen_four_eight(4)
    gens = netgraph.ghz_generators(net)
    owned = [e for _, es in gens for e in es]
    assert sorted(owned) == list(range(net.m))
    for g, es in gens:
        assert len(es) == 2 and all(g in (int(net.eu[e]), int(net.ev[e])) for e in es)
    assert len(gens) == net.m // 2


def test_ghz_site_lattice_matches_shared_node_rule():
    net = netgraph.gen_four_eight(4)
    gens = netgraph.ghz_generators(net)
    sites = netgraph.ghz_site_lattice(net)
    assert sites.n == len(gens)
    members = [{g} | {net.other(e, g) for e in es} for g, es in gens]
    expected = sorted((a, b) for a, b in itertools.combinations(range(len(gens)), 2)
                      for _ in range(len(members[a] & members[b])))
    got = sorted(tuple(sorted(e)) for e in sites.edges())
    assert got == expected


# -- q-swap ------------------------------------------------------------------------


def _star(q, link, mult=2):
    return netgraph.Network.from_edges(q + 1, [(0, v) for v in range(1, q + 1)], mult=[mult] * q, payloads=link)


def test_q_swap_star_to_cycle():
    net = netgraph.q_swap(_star(4, PureLink.bell()), 0, rng=rng())
    assert sorted(tuple(sorted(e)) for e in net.edges()) == [(1, 2), (1, 4), (2, 3), (3, 4)]
    assert net.degree()[0] == 0
    assert all(p.entanglement == pytest.approx(1.0) for p in net.payloads)
    assert np.all(net.mult == 1)


def test_q_swap_bx_concurrence():
    net = netgraph.q_swap(_star(4, PureLink.from_concurrence(0.8)), 0, basis="bx")
    assert all(p.concurrence == pytest.approx(0.64, abs=1e-12) for p in net.payloads)


def test_q_swap_small_and_odd_degrees():
    two = netgraph.q_swap(_star(2, PureLink.bell()), 0, rng=rng())
    assert two.edges() == [(1, 2), (2, 1)]
    five = netgraph.q_swap(_star(5, PureLink.bell()), 0, rng=rng())
    assert five.m == 5 and five.degree_histogram() == {0: 1, 2: 5}


def test_q_swap_preconditions():
    with pytest.raises(ValueError):
        netgraph.q_swap(_star(1, PureLink.bell()), 0, rng=rng())
    with pytest.raises(ValueError):
        netgraph.q_swap(_star(4, PureLink.bell(), mult=1), 0, rng=rng())
    with pytest.raises(ValueError):
        netgraph.q_swap(_star(4, WernerLink(0.9)), 0, rng=rng())
    with pytest.raises(ValueError):
        netgraph.q_swap(_star(4, PureLink(0.3)), 0)  # Bell basis needs an rng


# -- paths -----------------------------------------------------------------------


def test_shortest_path_trivial():
    net = netgraph.Network.from_edges(2, [(0, 1)])
    p = netgraph.shortest_path(net, 0, 1)
    assert p.nodes == (0, 1) and p.edges == (0,)
    sq = netgraph.gen_square(6, "open")
    p = netgraph.shortest_path(sq, 0, 6 * 3 + 4)
    assert len(p) == 3 + 4
    for (a, b), e in zip(zip(p.nodes, p.nodes[1:]), p.edges):
        assert {a, b} == {int(sq.eu[e]), int(sq.ev[e])}


def test_shortest_path_disconnected():
    net = netgraph.Network.from_edges(3, [(0, 1)])
    assert not netgraph.shortest_path(net, 0, 2).found


def _random_weighted(seed, n=10, p=0.35):
    r = rng(seed)
    net = netgraph.gen_er(n, p, r)
    return net, r.random(net.m)


def test_shortest_path_against_exhaustive_enumeration():
    checked = 0
    for seed in range(300):
        net, w = _random_weighted(seed)
        g = nx.MultiGraph()
        g.add_nodes_from(range(net.n))
        for e, (u, v) in enumerate(net.edges()):
            g.add_edge(u, v, key=e)
        got = netgraph.shortest_path(net, 0, net.n - 1, w)
        paths = list(nx.all_simple_edge_paths(g, 0, net.n - 1))
        if not paths:
            assert not got.found
            continue
        best = min(sum(w[k] for _, _, k in path) for path in paths)
        assert netgraph.path_weight(got, w) == pytest.approx(best, abs=1e-12)
        checked += 1
    assert checked > 50


def test_shortest_path_lexicographic_tie_break():
    # two equal hop paths 0-1-3 and 0-2-3
    net = netgraph.Network.from_edges(4, [(0, 2), (2, 3), (0, 1), (1, 3)])
    assert netgraph.shortest_path(net, 0, 3).nodes == (0, 1, 3)


def test_banned_edges():
    net = netgraph.Network.from_edges(4, [(0, 1), (1, 3), (0, 2), (2, 3)])
    assert netgraph.shortest_path(net, 0, 3, banned_edges=[0]).nodes == (0, 2, 3)


def test_all_simple_paths_count():
    net = netgraph.gen_square(3, "open")
    ours = list(netgraph.all_simple_paths(net, 0, 8))
    theirs = list(nx.all_simple_paths(nx.Graph(net.edges()), 0, 8))
    assert len(ours) == len(theirs)


def test_path_descriptor_invariants():
    with pytest.raises(ValueError):
        netgraph.PathDescriptor((0, 1, 2), (0,))
    with pytest.raises(ValueError):
        netgraph.PathDescriptor((0, 1, 0), (0, 0))


# -- serialization ----------------------------------------------------------------


def test_text_and_json_round_trip():
    payloads = [PureLink(0.3), WernerLink(0.85), BitPhaseLink(0.1, 0.02), None]
    net = netgraph.Network.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)], mult=[1, 2, 1, 3], payloads=payloads)
    for dump, load in ((netgraph.to_text, netgraph.from_text), (netgraph.to_json, netgraph.from_json)):
        back = load(dump(net))
        assert netgraph.same_network(net, back)
        assert back.payloads == net.payloads


def test_lattice_round_trip_keeps_metadata():
    net = netgraph.gen_square(4, "torus", PureLink(0.2))
    assert netgraph.same_network(net, netgraph.from_json(netgraph.to_json(net)))
    assert netgraph.same_network(net, netgraph.from_text(netgraph.to_text(net)))


@given(st.integers(2, 30), st.floats(0, 1), st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_prop_er_is_simple_and_reproducible(N, p, seed):
    a = netgraph.gen_er(N, p, rng(seed))
    b = netgraph.gen_er(N, p, rng(seed))
    assert a.edges() == b.edges()
    assert len({tuple(sorted(e)) for e in a.edges()}) == a.m
    assert all(u != v for u, v in a.edges())
