"""Two-local Pauli Hamiltonian families on a connectivity graph."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .pauli import PauliString, TermTable
from .topology import ConnectivityGraph
from .io import fmt


@dataclass(frozen=True)
class HamiltonianFamily:
    label: str
    one_site: tuple[str, ...]
    two_site: tuple[str, ...]


# one-site letters in X<Y<Z order; two-site pairs in table row order
FAMILIES = {
    f.label: f
    for f in (
        HamiltonianFamily("ising", ("Z",), ("ZZ",)),
        HamiltonianFamily("tfim", ("X", "Z"), ("ZZ",)),
        HamiltonianFamily("spin_glass", ("X", "Y", "Z"), ("XX", "YY", "ZZ")),
        HamiltonianFamily("spin_glass_real", ("X", "Z"), ("XX", "YY", "ZZ")),
        HamiltonianFamily(
            "generic", ("X", "Y", "Z"), ("XX", "XY", "XZ", "YX", "YY", "YZ", "ZX", "ZY", "ZZ")
        ),
        HamiltonianFamily("generic_real", ("X", "Z"), ("XX", "XZ", "YY", "ZX", "ZZ")),
    )
}


def get_family(label: str) -> HamiltonianFamily:
    key = label.replace("-", "_").lower()
    try:
        return FAMILIES[key]
    except KeyError:
        raise ValueError(f"unknown Hamiltonian family {label!r}; expected one of {sorted(FAMILIES)}")


@dataclass(frozen=True)
class HamiltonianSpec:
    family: HamiltonianFamily
    graph: ConnectivityGraph
    terms: tuple[PauliString, ...]
    sites: tuple[tuple[int, ...], ...]

    @property
    def n_sites(self) -> int:
        return self.graph.n_sites

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @cached_property
    def table(self) -> TermTable:
        return TermTable(self.terms)

    def check_parameters(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_terms,):
            raise ValueError(f"expected {self.n_terms} parameters, got shape {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("non-finite parameters")
        return theta

    def matrix(self, theta, limit: int | None = None) -> np.ndarray:
        theta = self.check_parameters(theta)
        if limit is None:
            return self.table.dense_matrix(theta)
        return self.table.dense_matrix(theta, limit=limit)

    def operator(self, theta):
        return self.table.operator(self.check_parameters(theta))


def _word(n: int, placed: dict[int, str]) -> PauliString:
    return PauliString("".join(placed.get(i, "I") for i in range(n)))


def build_terms(family: HamiltonianFamily | str, graph: ConnectivityGraph) -> HamiltonianSpec:
    """Instantiate a family on a graph with the canonical term order.

    One-site terms come first (site ascending, then letter), followed by
    two-site terms over sorted edges with pairs in family order. For a pair
    ``kl`` on edge ``(i, j)`` letter ``k`` sits on ``i`` and ``l`` on ``j``.
    """
    if isinstance(family, str):
        family = get_family(family)
    n = graph.n_sites
    terms, sites = [], []
    for i in range(n):
        for k in family.one_site:
            terms.append(_word(n, {i: k}))
            sites.append((i,))
    for i, j in graph.edges:
        for kl in family.two_site:
            terms.append(_word(n, {i: kl[0], j: kl[1]}))
            sites.append((i, j))
    return HamiltonianSpec(family, graph, tuple(terms), tuple(sites))


def zero_parameters(spec: HamiltonianSpec) -> np.ndarray:
    return np.zeros(spec.n_terms)


def random_parameters(spec: HamiltonianSpec, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return rng.uniform(-scale, scale, size=spec.n_terms)


def dump_parameters(spec: HamiltonianSpec, theta) -> str:
    """One line per term: ``index  word  sites  value``."""
    theta = spec.check_parameters(theta)
    lines = []
    for k, (p, s, t) in enumerate(zip(spec.terms, spec.sites, theta)):
        lines.append(f"{k}  {p.letters}  {','.join(map(str, s))}  {fmt(t)}")
    return "\n".join(lines) + "\n"


def load_parameters(spec: HamiltonianSpec, text: str) -> np.ndarray:
    theta = np.zeros(spec.n_terms)
    seen = 0
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        k, word, _, value = line.split()
        k = int(k)
        if spec.terms[k].letters != word:
            raise ValueError(f"term {k} is {word} in file but {spec.terms[k]} in spec")
        theta[k] = float(value)
        seen += 1
    if seen != spec.n_terms:
        raise ValueError(f"parameter file has {seen} entries, spec has {spec.n_terms}")
    return theta
