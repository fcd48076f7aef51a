"""Connectivity graphs for two-site Hamiltonian terms."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

KINDS = ("all_to_all", "chain_nn", "chain_next_nn", "nn_particle", "edge_list")


@dataclass(frozen=True)
class ConnectivityGraph:
    n_sites: int
    edges: tuple[tuple[int, int], ...]
    kind: str = "edge_list"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("graph needs at least one site")
        norm = []
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop on site {i}")
            if i > j:
                i, j = j, i
            if j >= self.n_sites or i < 0:
                raise ValueError(f"edge ({i}, {j}) outside {self.n_sites} sites")
            norm.append((i, j))
        if len(set(norm)) != len(norm):
            raise ValueError("duplicate edges")
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    def degree(self, site: int) -> int:
        return sum(site in e for e in self.edges)

    def to_lines(self) -> list[str]:
        return [f"{i} {j}" for i, j in self.edges]

    @classmethod
    def from_lines(cls, n_sites: int, lines) -> "ConnectivityGraph":
        edges = [tuple(int(t) for t in ln.split()) for ln in lines if ln.strip()]
        return cls(n_sites, tuple(edges))


def all_to_all(n: int) -> ConnectivityGraph:
    if n < 1:
        raise ValueError("all_to_all needs n >= 1")
    return ConnectivityGraph(n, tuple(combinations(range(n), 2)), "all_to_all", {"n": n})


def chain_nn(n: int) -> ConnectivityGraph:
    """Open chain with nearest-neighbour bonds."""
    if n < 2:
        raise ValueError("chain_nn needs n >= 2")
    return ConnectivityGraph(n, tuple((i, i + 1) for i in range(n - 1)), "chain_nn", {"n": n})


def chain_next_nn(n: int) -> ConnectivityGraph:
    """Open chain with nearest and next-nearest bonds."""
    if n < 3:
        raise ValueError("chain_next_nn needs n >= 3")
    edges = [(i, i + 1) for i in range(n - 1)] + [(i, i + 2) for i in range(n - 2)]
    return ConnectivityGraph(n, tuple(edges), "chain_next_nn", {"n": n})


def nn_particle(m: int, q: int) -> ConnectivityGraph:
    """``m`` particles of ``q`` contiguous sites each.

    Sites of one particle are fully connected; adjacent particles (open
    boundary) are joined by all ``q*q`` cross pairs.
    """
    if m < 2 or q < 1:
        raise ValueError("nn_particle needs m >= 2 and q >= 1")
    edges = set()
    for k in range(m):
        block = range(k * q, (k + 1) * q)
        edges.update(combinations(block, 2))
        if k + 1 < m:
            nxt = range((k + 1) * q, (k + 2) * q)
            edges.update((i, j) for i in block for j in nxt)
    return ConnectivityGraph(m * q, tuple(edges), "nn_particle", {"m": m, "q": q})


def edge_list(n: int, edges) -> ConnectivityGraph:
    return ConnectivityGraph(n, tuple(tuple(e) for e in edges), "edge_list", {"n": n})


def make_graph(kind: str, n: int | None = None, m: int | None = None, q: int | None = None,
               edges=None) -> ConnectivityGraph:
    if kind == "all_to_all":
        return all_to_all(n)
    if kind == "chain_nn":
        return chain_nn(n)
    if kind == "chain_next_nn":
        return chain_next_nn(n)
    if kind == "nn_particle":
        return nn_particle(m, q)
    if kind == "edge_list":
        return edge_list(n, edges or ())
    raise ValueError(f"unknown connectivity kind {kind!r}; expected one of {KINDS}")
