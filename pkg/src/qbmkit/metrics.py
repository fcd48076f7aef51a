"""Divergences, entropies and (conditional) mutual information, in nats.

Functions taking a state accept either a density matrix or a 1-D
probability table; the latter is treated as the diagonal density matrix
and reduced through classical marginals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .io import format_table
from .thermal import partial_trace, von_neumann_entropy

Q_FLOOR = 1e-300


def kl_divergence(p, q) -> float:
    """``sum_{p>0} p log(p/q)``; ``inf`` when ``p`` has mass where ``q`` vanishes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("length mismatch")
    for name, x in (("p", p), ("q", q)):
        if abs(x.sum() - 1.0) > 1e-9:
            raise ValueError(f"{name} is not normalized (sums to {x.sum()})")
    mask = p > 0
    qm = q[mask]
    if np.any((qm < Q_FLOOR) & (p[mask] > 1e-12)):
        return float("inf")
    pm = p[mask]
    return float(np.sum(pm * (np.log(pm) - np.log(np.maximum(qm, Q_FLOOR)))))


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def _n_sites(state) -> int:
    return np.asarray(state).shape[0].bit_length() - 1


def marginal(p, keep: Sequence[int]) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    n = _n_sites(p)
    drop = tuple(i for i in range(n) if i not in set(keep))
    return p.reshape([2] * n).sum(axis=drop).reshape(-1)


def subsystem_entropy(state, sites: Iterable[int]) -> float:
    sites = sorted(set(sites))
    if not sites:
        return 0.0
    state = np.asarray(state)
    n = _n_sites(state)
    if state.ndim == 1:
        return shannon_entropy(marginal(state, sites))
    if len(sites) == n:
        return von_neumann_entropy(state)
    return von_neumann_entropy(partial_trace(state, sites))


def _check_disjoint(*sets) -> None:
    seen = set()
    for s in sets:
        s = set(s)
        if seen & s:
            raise ValueError(f"subsystems overlap on sites {sorted(seen & s)}")
        seen |= s


def mutual_information(state, a: Sequence[int], b: Sequence[int]) -> float:
    """``S(A) + S(B) - S(AB)``."""
    _check_disjoint(a, b)
    n = _n_sites(state)
    if set(a) | set(b) != set(range(n)):
        raise ValueError("A and B must cover all sites; trace out the rest first")
    return subsystem_entropy(state, a) + subsystem_entropy(state, b) - subsystem_entropy(state, range(n))


def conditional_mutual_information(state, a: Sequence[int], c: Sequence[int], b: Sequence[int]) -> float:
    """``I(A:C|B) = S(AB) + S(BC) - S(ABC) - S(B)`` on reduced states."""
    _check_disjoint(a, b, c)
    a, b, c = set(a), set(b), set(c)
    return (
        subsystem_entropy(state, a | b)
        + subsystem_entropy(state, b | c)
        - subsystem_entropy(state, a | b | c)
        - subsystem_entropy(state, b)
    )


@dataclass
class CmiProfile:
    anchor: int
    rows: list[tuple[int, tuple[int, ...], float]] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, _, v in self.rows])

    def to_table(self) -> str:
        return format_table(
            ["anchor", "c", "conditioning", "cmi_nats"],
            [(self.anchor, c, " ".join(map(str, b)) or "-", v) for c, b, v in self.rows],
        )


def cmi_profile(distribution, anchor: int = 0, c_list: Sequence[int] = (1, 2, 3, 4)) -> CmiProfile:
    """CMI between ``anchor`` and each ``c`` given the sites strictly between them."""
    p = getattr(distribution, "p", distribution)
    p = np.asarray(p, dtype=float)
    n = _n_sites(p)
    prof = CmiProfile(anchor)
    for c in c_list:
        if not (0 <= c < n) or c == anchor:
            raise ValueError(f"invalid site {c} for a {n}-site profile anchored at {anchor}")
        lo, hi = sorted((anchor, c))
        between = tuple(range(lo + 1, hi))
        prof.rows.append((c, between, conditional_mutual_information(p, [anchor], [c], between)))
    return prof


def sample_bits(p, count: int, seed: int = 0) -> np.ndarray:
    """Draw ``count`` bit strings (rows, site 0 first) from a probability table."""
    p = np.asarray(p, dtype=float)
    n = _n_sites(p)
    idx = np.random.default_rng(seed).choice(p.shape[0], size=count, p=p / p.sum())
    return ((idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1).astype(np.int8)


def pairwise_sample_mi(samples=None, *, distribution=None, count: int = 100_000, seed: int = 0) -> np.ndarray:
    """Plug-in MI between every pair of binary sites; diagonal holds site entropies."""
    if samples is None:
        if distribution is None:
            raise ValueError("need samples or a distribution to resample")
        samples = sample_bits(getattr(distribution, "p", distribution), count, seed)
    x = np.asarray(samples).astype(np.int64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need at least two samples")
    n_samples, n = x.shape
    ones = x.sum(axis=0).astype(float)
    both = (x.T @ x).astype(float)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            n11 = both[i, j]
            n10 = ones[i] - n11
            n01 = ones[j] - n11
            n00 = n_samples - n11 - n10 - n01
            joint = np.array([[n00, n01], [n10, n11]]) / n_samples
            if i == j:
                out[i, i] = shannon_entropy([1 - ones[i] / n_samples, ones[i] / n_samples])
                continue
            pi = joint.sum(axis=1)
            pj = joint.sum(axis=0)
            nz = joint > 0
            val = np.sum(joint[nz] * np.log(joint[nz] / np.outer(pi, pj)[nz]))
            out[i, j] = out[j, i] = max(float(val), 0.0)
    return out


def mi_table(matrix: np.ndarray) -> str:
    n = matrix.shape[0]
    return format_table(["site"] + [f"s{j}" for j in range(n)],
                        [[f"s{i}"] + list(matrix[i]) for i in range(n)])
