from itertools import combinations

import pytest

from qbmkit.topology import (
    ConnectivityGraph, all_to_all, chain_next_nn, chain_nn, edge_list, make_graph, nn_particle,
)


@pytest.mark.parametrize("n, count", [(1, 0), (4, 6), (8, 28)])
def test_all_to_all_edge_counts(n, count):
    assert len(all_to_all(n).edges) == count


def test_all_to_all_rejects_empty():
    with pytest.raises(ValueError):
        all_to_all(0)


def test_chains():
    assert chain_nn(2).edges == ((0, 1),)
    assert chain_nn(3).edges == ((0, 1), (1, 2))
    assert len(chain_nn(8).edges) == 7
    assert len(chain_next_nn(8).edges) == 13
    assert len(chain_next_nn(3).edges) == 3
    g = chain_next_nn(5)
    assert (0, 2) in g.edges and (0, 3) not in g.edges
    for n in range(3, 10):
        assert set(chain_nn(n).edges) <= set(chain_next_nn(n).edges)
    with pytest.raises(ValueError):
        chain_nn(1)
    with pytest.raises(ValueError):
        chain_next_nn(2)


def test_nn_particle_degrees_and_count():
    g = nn_particle(4, 4)
    assert g.n_sites == 16
    assert g.degree(0) == 7
    assert g.degree(5) == 11
    assert len(g.edges) == 4 * 6 + 3 * 16


@pytest.mark.parametrize("q", [1, 2, 3, 4])
def test_two_particles_is_all_to_all(q):
    assert set(nn_particle(2, q).edges) == set(all_to_all(2 * q).edges)


def test_nn_particle_rejects_bad_sizes():
    with pytest.raises(ValueError):
        nn_particle(1, 4)
    with pytest.raises(ValueError):
        nn_particle(3, 0)


def test_edges_are_validated_and_normalized():
    g = edge_list(4, [(2, 1), (0, 3)])
    assert g.edges == ((0, 3), (1, 2))
    for bad in ([(1, 1)], [(0, 1), (1, 0)], [(0, 4)]):
        with pytest.raises(ValueError):
            edge_list(4, bad)


@pytest.mark.parametrize("g", [all_to_all(5), chain_nn(6), chain_next_nn(6), nn_particle(3, 2)])
def test_serialization_round_trip(g):
    back = ConnectivityGraph.from_lines(g.n_sites, g.to_lines())
    assert back.edges == g.edges
    assert all(i < j for i, j in g.edges)
    assert g.to_lines() == sorted(g.to_lines(), key=lambda s: tuple(map(int, s.split())))


def test_make_graph_dispatch():
    assert make_graph("chain_nn", 4).edges == chain_nn(4).edges
    assert make_graph("nn_particle", m=2, q=2).edges == tuple(combinations(range(4), 2))
    with pytest.raises(ValueError):
        make_graph("ring", 4)
