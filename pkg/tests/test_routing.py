import math
import warnings
from functools import reduce

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qnet import netgraph, routing
from qnet.qstate import NoiseModel, PureLink, WernerLink, concurrence_werner, purify_werner, swap_werner
from qnet.routing import SppGeometry, TwoWeightEdge


def swap_fold(xs):
    return reduce(swap_werner, [WernerLink(x) for x in xs])


def werner_net(n, edges, xs):
    return netgraph.Network.from_edges(n, edges, payloads=[WernerLink(x) for x in xs])


# -- chains -----------------------------------------------------------------------


def test_chain_of_five():
    links = [WernerLink(0.9)] * 5
    c = routing.chain_swap_concurrence(links)
    assert c == pytest.approx(concurrence_werner(swap_fold([0.9] * 5)), abs=1e-15)
    assert c == pytest.approx((3 * 0.59049 - 1) / 2, abs=1e-12)
    assert round(c, 4) == 0.3857


def test_chain_trivial_cases():
    assert routing.chain_swap_concurrence([WernerLink(0.7)]) == concurrence_werner(WernerLink(0.7))
    assert routing.chain_swap_concurrence([WernerLink(1.0)] * 7) == 1.0
    with pytest.raises(ValueError):
        routing.chain_swap_concurrence([])


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8))
def test_prop_chain_equals_swap_fold(xs):
    c = routing.chain_swap_concurrence([WernerLink(x) for x in xs])
    assert c == pytest.approx(concurrence_werner(swap_fold(xs)), abs=1e-12)


# -- best swap path ------------------------------------------------------------------


def brute_max_product(net, A, B):
    g = nx.MultiGraph()
    g.add_nodes_from(range(net.n))
    for e, (u, v) in enumerate(net.edges()):
        g.add_edge(u, v, key=e)
    best = -1.0
    for path in nx.all_simple_edge_paths(g, A, B):
        best = max(best, math.prod(net.payloads[k].x for _, _, k in path))
    return best


def test_best_swap_path_matches_brute_force():
    checked = 0
    for seed in range(1000):
        r = np.random.default_rng(seed)
        n = int(r.integers(2, 11))
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if r.random() < 0.4]
        if not edges:
            continue
        net = werner_net(n, edges, r.uniform(0.3, 1.0, len(edges)))
        A, B = (int(v) for v in r.choice(n, 2, replace=False))
        best = brute_max_product(net, A, B)
        if best < 0:
            with pytest.raises(ValueError):
                routing.best_swap_path(net, A, B)
            continue
        path = routing.best_swap_path(net, A, B)
        assert path.nodes[0] == A and path.nodes[-1] == B
        assert routing.path_product(net, path) == pytest.approx(best, rel=1e-12)
        checked += 1
    assert checked > 500


def test_best_swap_path_prefers_higher_product():
    # 0-1-3 has product 0.8, 0-2-3 has 0.7
    net = werner_net(4, [(0, 2), (2, 3), (0, 1), (1, 3)], [0.7, 1.0, 0.8, 1.0])
    assert routing.best_swap_path(net, 0, 3).nodes == (0, 1, 3)


def test_best_swap_path_uniform_is_fewest_hops():
    net = netgraph.gen_square(6, "torus", WernerLink(0.9))
    path = routing.best_swap_path(net, 0, 14)
    assert len(path) == len(netgraph.shortest_path(net, 0, 14)) == 4


def test_best_swap_path_rejects_zero_weight():
    with pytest.raises(ValueError):
        routing.best_swap_path(werner_net(2, [(0, 1)], [0.0]), 0, 1)


# -- SPP closed forms ----------------------------------------------------------------


def spp_composed(u, v, r, failure):
    purified, p = purify_werner(WernerLink(u), WernerLink(v))
    ok = concurrence_werner(swap_werner(purified, WernerLink(r)))
    bad = concurrence_werner(swap_werner(WernerLink(max(u, v)), WernerLink(r))) if failure == "keep" else 0.0
    return p * ok + (1 - p) * bad


@pytest.mark.parametrize("failure", routing.FAILURE_MODES)
def test_spp_average_matches_link_algebra(failure):
    for u in np.linspace(0.3, 1.0, 8):
        for v in np.linspace(0.3, 1.0, 8):
            for r in (0.5, 0.8, 1.0):
                got = routing.spp_average(u, v, r, failure)
                assert got == pytest.approx(spp_composed(u, v, r, failure), abs=1e-12)


def test_geometry_validation():
    SppGeometry(3, 0.5, 0.0, 0.8)
    for bad in [(0, 0.5, 0, 0.8), (3, 0, 0, 0.8), (3, 1.2, 0, 0.8), (3, 0.5, -0.1, 0.8), (3, 0.5, 0, 0)]:
        with pytest.raises(ValueError):
            SppGeometry(*bad)
    assert SppGeometry(4, 0.5, 0, 0.0625).link_x == pytest.approx(0.5)


def test_region_nonempty_shrinks_and_vanishes():
    a = np.linspace(0.001, 1, 400)
    y = np.linspace(0.001, 0.999, 400)
    sizes = [int(routing.advantage_region(b, a, y).sum()) for b in (0, 0.01, 0.07, 0.11, 0.135)]
    assert sizes[0] > 0 and sizes[-1] > 0
    assert all(s > t for s, t in zip(sizes, sizes[1:]))
    prev = routing.advantage_region(0.0, a, y)
    for b in np.linspace(0.0, 0.135, 28)[1:]:
        cur = routing.advantage_region(b, a, y)
        assert not (cur & ~prev).any()
        prev = cur
    assert not routing.advantage_region(0.14, a, y).any()


def test_region_false_when_everything_separable():
    # whole chain and best purified outcome both below the entanglement floor
    assert not routing.spp_advantage(SppGeometry(10, 0.5, 0.0, 0.05))
    assert not routing.spp_advantage(SppGeometry(10, 0.5, 0.0, 0.2), "keep")


def test_best_subpath_fraction_doubles_y():
    for y in np.linspace(0.34, 0.48, 8):
        for b in (0.0, 0.05):
            a = routing.best_subpath_fraction(y, b)
            assert y**a == pytest.approx(2 * y, abs=1e-6)


def test_multi_spp_reduces_to_single():
    for alpha in (0.1, 0.4, 0.9):
        for y in (0.35, 0.45, 0.6):
            for failure in routing.FAILURE_MODES:
                one = routing.multi_spp_average(1, alpha, y, failure)
                assert one == pytest.approx(routing.spp_average(y**alpha, y**alpha, y ** (1 - alpha), failure),
                                            abs=1e-12)
                assert routing.multi_spp_advantage(1, alpha, y, failure) == routing.spp_advantage(
                    SppGeometry(1, alpha, 0.0, y), failure)


def test_multi_spp_region_grows_with_n():
    grid = [(al, y) for al in np.linspace(0.01, 1, 60) for y in np.linspace(0.01, 0.99, 60)]
    regions = [{g for g in grid if routing.multi_spp_advantage(n, *g)} for n in (1, 2, 4, 8, 16)]
    assert all(small < big for small, big in zip(regions, regions[1:]))
    sizes = [len(s) for s in regions]
    steps = np.diff(sizes)
    assert all(s > t for s, t in zip(steps, steps[1:]))


def test_multi_spp_validation():
    with pytest.raises(ValueError):
        routing.multi_spp_average(0, 0.5, 0.5)
    with pytest.raises(ValueError):
        routing.multi_spp_average(2, 0.0, 0.5)


# -- SPP on networks -------------------------------------------------------------------


def test_spp_without_alternate_equals_baseline():
    net = werner_net(4, [(0, 1), (1, 2), (2, 3)], [0.9, 0.95, 0.97])
    res = routing.spp(net, 0, 3)
    assert res.avg_concurrence == res.baseline == pytest.approx(routing.chain_swap_concurrence(
        [WernerLink(x) for x in (0.9, 0.95, 0.97)]))
    assert res.geometry is None and res.plan is None


def _parallel_edge_net():
    # chain 0-1-2-3 with a second edge between 0 and 1
    return werner_net(4, [(0, 1), (1, 2), (2, 3), (0, 1)], [0.95] * 4)


@pytest.mark.parametrize("failure", routing.FAILURE_MODES)
def test_spp_parallel_edge_closed_form_and_monte_carlo(failure):
    net = _parallel_edge_net()
    res = routing.spp(net, 0, 3, failure=failure)
    g = res.geometry
    assert (g.L, g.a, g.b) == (3, pytest.approx(1 / 3), 0.0)
    assert g.y == pytest.approx(0.95**3)
    exact = spp_composed(0.95, 0.95, 0.95**2, failure)
    assert res.avg_concurrence == pytest.approx(exact, abs=1e-12)
    assert res.baseline == pytest.approx((3 * 0.95**3 - 1) / 2)
    assert routing.spp_advantage(g, failure) == (res.avg_concurrence > res.baseline)
    n = 10**6
    draws = routing.sample_spp(0.95, 0.95, 0.95**2, np.random.default_rng(3), n, failure)
    assert abs(draws.mean() - exact) < 5 * draws.std() / math.sqrt(n)
    sampled = routing.spp(net, 0, 3, np.random.default_rng(4), failure, samples=n)
    assert abs(sampled.avg_concurrence - exact) < 5 * draws.std() / math.sqrt(n)


def test_spp_keep_beats_baseline_on_parallel_edge():
    res = routing.spp(_parallel_edge_net(), 0, 3, failure="keep")
    assert res.avg_concurrence >= res.baseline


def test_spp_best_gain_not_worse_than_shortest():
    for seed in range(40):
        r = np.random.default_rng(seed)
        net = netgraph.gen_er(12, 0.3, r, WernerLink(0.97))
        for failure in routing.FAILURE_MODES:
            a = routing.spp(net, 0, 5, failure=failure, search="best-gain")
            b = routing.spp(net, 0, 5, failure=failure, search="shortest")
            assert a.avg_concurrence >= b.avg_concurrence - 1e-15
            assert a.avg_concurrence >= 0 and a.baseline == b.baseline


def test_spp_disconnected_and_argument_checks():
    net = werner_net(4, [(0, 1), (2, 3)], [0.9, 0.9])
    assert routing.spp(net, 0, 3).avg_concurrence == 0.0
    with pytest.raises(ValueError):
        routing.spp(net, 0, 1, failure="retry")
    with pytest.raises(ValueError):
        routing.spp(net, 0, 1, search="random")
    with pytest.raises(ValueError):
        routing.spp(_parallel_edge_net(), 0, 3, samples=10)


# -- network averages --------------------------------------------------------------------


def test_avg_concurrence_complete_bell_graph():
    n = 8
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    net = werner_net(n, edges, [1.0] * len(edges))
    assert routing.avg_network_concurrence(net) == 1.0
    assert routing.avg_network_concurrence(net, "spp") == 1.0


def test_avg_concurrence_below_floor():
    net = netgraph.gen_square(4, "torus", WernerLink(0.3))
    assert routing.avg_network_concurrence(net) == 0.0
    assert routing.avg_network_concurrence(net, "spp") == 0.0


def test_avg_concurrence_disconnected_pairs_count_zero():
    net = werner_net(4, [(0, 1), (2, 3)], [1.0, 1.0])
    assert routing.avg_network_concurrence(net) == pytest.approx(2 / 6)


def test_er_spp_gain_at_mean_degree_one():
    N, x = 200, 0.98
    gains_keep, gains_zero = [], []
    for seed in range(20):
        net = netgraph.gen_er(N, 1 / N, np.random.default_rng(seed), WernerLink(x))
        naive = routing.avg_network_concurrence(net)
        gains_keep.append(routing.avg_network_concurrence(net, "spp", failure="keep") - naive)
        gains_zero.append(routing.avg_network_concurrence(net, "spp") - naive)
    # SPP is only applied where it helps, so no sample can lose
    assert min(gains_keep) >= 0 and min(gains_zero) >= 0
    assert np.mean(gains_keep) > 0


def test_avg_concurrence_sampled_close_to_exact():
    net = netgraph.gen_er(10, 0.5, np.random.default_rng(1), WernerLink(0.97))
    exact = routing.avg_network_concurrence(net, "spp", failure="keep")
    a = routing.avg_network_concurrence(net, "spp", trials=4000, seed=2, failure="keep")
    assert a == routing.avg_network_concurrence(net, "spp", trials=4000, seed=2, failure="keep")
    assert a == pytest.approx(exact, abs=5e-3)


# -- formulas ---------------------------------------------------------------------------


def test_delta_c_scalings():
    assert routing.DELTA_C_CONSTANT == 6.5e-5
    assert routing.delta_c_asymptotic(1.0, 0.0) == 6.5e-5
    assert routing.delta_c_asymptotic(1000, 0.9) / routing.delta_c_asymptotic(2000, 0.9) == pytest.approx(4)
    assert routing.delta_c_asymptotic(1000, 0.95) / routing.delta_c_asymptotic(1000, 0.9) == pytest.approx(16)
    with pytest.raises(ValueError):
        routing.delta_c_asymptotic(100, 1.0)


def test_noisy_gain_noiseless():
    assert routing.noisy_spp_gain(NoiseModel(0.0, 0.0, 1.0)) == 1 / 36


def test_noisy_gain_drops_with_gate_reliability():
    gains = [routing.noisy_spp_gain(NoiseModel(0.0, 0.0, p2)) for p2 in (1.0, 0.999, 0.99, 0.9)]
    assert all(a > b for a, b in zip(gains, gains[1:]))
    assert routing.noisy_gain_sign_change(p2=0.99) is not None


def test_noisy_gain_matches_closed_form():
    for eta in (0.01, 0.05, 0.1, 0.3):
        for p2 in (1.0, 0.97):
            d = 2 * eta * (1 - eta)
            expect = 0.25 * (4 * (1 - d) ** 2 / (9 * (1 - 2 * d)) - (1 + 2 * d) / 3 - (1 / p2**2 - 1))
            assert routing.noisy_spp_gain(NoiseModel(0.0, eta, p2)) == pytest.approx(expect, abs=1e-15)


def test_noisy_gain_singular():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        with pytest.raises(RuntimeWarning):
            routing.noisy_spp_gain(NoiseModel(0.0, 0.5, 1.0))
    with pytest.warns(RuntimeWarning):
        assert math.isnan(routing.noisy_spp_gain(NoiseModel(0.0, 0.5, 1.0)))


def test_teleport_fidelity():
    bell = PureLink.from_concurrence(1.0)
    assert routing.teleport_chain_fidelity([bell] * 4) == pytest.approx(1.0)
    assert routing.teleport_chain_fidelity([bell, PureLink(0.0), bell]) == 0.75
    assert routing.teleport_chain_fidelity([PureLink(0.2)] * 2) == pytest.approx(0.91, abs=1e-12)
    with pytest.raises(ValueError):
        routing.teleport_chain_fidelity([])


@given(st.lists(st.floats(0.0, 0.5), min_size=1, max_size=6), st.floats(0.0, 0.5))
def test_prop_teleport_bounded_and_monotone(phis, extra):
    links = [PureLink(p) for p in phis]
    f = routing.teleport_chain_fidelity(links)
    assert 0.75 <= f <= 1.0 + 1e-12
    assert routing.teleport_chain_fidelity(links + [PureLink(extra)]) <= f + 1e-12


# -- two-weight measure --------------------------------------------------------------------


def test_two_weight_single_edge_and_degenerate():
    assert routing.two_weight_path_fidelity([TwoWeightEdge(0.3, 0.6)], c=0.1) == pytest.approx(1.0)
    edges = [TwoWeightEdge(0.5, 0.5), TwoWeightEdge(0.9, 0.9)]
    assert routing.two_weight_path_fidelity(edges, 0.2) == pytest.approx(0.2 + 2 * 0.45)
    with pytest.raises(ValueError):
        TwoWeightEdge(0.0, 0.5)


def test_degenerate_weights_reduce_to_one_product():
    # with x = y the measure is c + 2 prod x, so its optimum is the max-product path
    r = np.random.default_rng(0)
    for _ in range(100):
        n = 6
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if r.random() < 0.5]
        if not edges:
            continue
        ws = r.uniform(0.1, 1.0, len(edges))
        net = netgraph.Network.from_edges(n, edges, payloads=[TwoWeightEdge(w, w) for w in ws])
        paths = list(netgraph.all_simple_paths(net, 0, n - 1))
        if not paths:
            continue
        best = max(routing.two_weight_path_fidelity([net.payloads[e] for e in p.edges], 0.3) for p in paths)
        prod_net = werner_net(n, edges, ws)
        assert best == pytest.approx(0.3 + 2 * brute_max_product(prod_net, 0, n - 1), abs=1e-12)


def test_substructure_counterexample_verified():
    w = routing.substructure_counterexample()
    assert w.verify()
    assert w.net.n <= 6
    assert w.net.neighbors(w.Z) == [w.B]
    assert w.best_az.edges[:-1] != w.best_ab.edges
    # independent enumeration with networkx
    g = nx.MultiGraph()
    for e, (u, v) in enumerate(w.net.edges()):
        g.add_edge(u, v, key=e)

    def best(target):
        return max(nx.all_simple_edge_paths(g, w.A, target), key=lambda p: routing.two_weight_path_fidelity(
            [w.net.payloads[k] for _, _, k in p], w.c))

    assert tuple(k for _, _, k in best(w.B)) == w.best_ab.edges
    assert tuple(k for _, _, k in best(w.Z)) == w.best_az.edges
