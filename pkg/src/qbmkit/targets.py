"""Target distributions and their density-matrix embeddings.

Bit strings index the probability table with site 0 as the most
significant bit. Spins follow ``s_i = 1 - 2 * bit_i`` so that bit 0 is spin
+1, the eigenvalue of Z on ``|0>``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .io import fmt
from .pauli import PauliString, TermTable, basis_indices


@dataclass
class TargetDistribution:
    n_sites: int
    p: np.ndarray
    provenance: dict = field(default_factory=dict)
    energy: "EnergyFunction | None" = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (1 << self.n_sites,):
            raise ValueError(f"table has {p.shape} entries, expected {1 << self.n_sites}")
        if np.any(p < 0):
            raise ValueError("negative probabilities")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()}")
        self.p = p

    def to_lines(self) -> list[str]:
        n = self.n_sites
        return [f"{s:0{n}b} {fmt(v)}" for s, v in enumerate(self.p)]

    @classmethod
    def from_lines(cls, lines, provenance=None) -> "TargetDistribution":
        rows = [ln.split() for ln in lines if ln.strip() and not ln.startswith("#")]
        n = len(rows[0][0])
        p = np.zeros(1 << n)
        for bits, val in rows:
            p[int(bits, 2)] = float(val)
        # no renormalization: 17-digit tables round-trip exactly
        return cls(n, p, dict(provenance or {}))


def spins(n: int) -> np.ndarray:
    """(2^n, n) array of +-1 spins for every basis index."""
    idx = basis_indices(n)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return 1 - 2 * bits


def _normalize(logits: np.ndarray) -> np.ndarray:
    w = np.exp(logits - logits.max())
    return w / w.sum()


@dataclass
class EnergyFunction:
    """Spin energy ``sum_k sum_t w[k][t] prod_{i in t} s_i``."""

    n_sites: int
    tuples: dict[int, list[tuple[int, ...]]]
    coeffs: dict[int, np.ndarray]

    def energies(self) -> np.ndarray:
        s = spins(self.n_sites)
        e = np.zeros(1 << self.n_sites)
        for k, tups in self.tuples.items():
            for t, w in zip(tups, self.coeffs[k]):
                e += w * np.prod(s[:, list(t)], axis=1)
        return e


def boltzmann_target(n: int, norms: Sequence[float], beta: float = 1.0, seed: int = 0,
                     tuples: dict[int, list[tuple[int, ...]]] | None = None) -> TargetDistribution:
    """Random k-body Boltzmann distribution with per-order L1 norms.

    ``norms[k-1]`` is the L1 norm of the order-k coefficients. Orders default
    to every index combination; ``tuples`` restricts them to a graph.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if any(x < 0 for x in norms):
        raise ValueError("norms must be non-negative")
    if len(norms) > n:
        raise ValueError(f"interaction order {len(norms)} exceeds {n} sites")
    rng = np.random.default_rng(seed)
    if tuples is None:
        tuples = {k: list(combinations(range(n), k)) for k in range(1, len(norms) + 1)}
    coeffs = {}
    for k in range(1, len(norms) + 1):
        w = rng.uniform(-1.0, 1.0, size=len(tuples[k]))
        if norms[k - 1] > 0:
            w = w * (norms[k - 1] / np.abs(w).sum())
        else:
            w = np.zeros_like(w)
        coeffs[k] = w
    energy = EnergyFunction(n, {k: tuples[k] for k in coeffs}, coeffs)
    p = _normalize(-beta * energy.energies())
    prov = {"kind": "boltzmann", "n": n, "norms": list(map(float, norms)), "beta": float(beta),
            "seed": int(seed)}
    return TargetDistribution(n, p, prov, energy)


def next_nn_energy(n: int) -> np.ndarray:
    s = spins(n)
    e = s.sum(axis=1).astype(float)
    e += np.sum(s[:, :-1] * s[:, 1:], axis=1)
    e += 0.5 * np.sum(s[:, :-2] * s[:, 2:], axis=1)
    return e


def next_nn_target(n: int) -> TargetDistribution:
    """Chain with unit fields, unit NN and half-strength next-NN couplings, beta = 1."""
    if n < 3:
        raise ValueError("next-NN target needs n >= 3")
    return TargetDistribution(n, _normalize(-next_nn_energy(n)), {"kind": "next_nn", "n": n})


@dataclass
class EventTable:
    records: np.ndarray  # (n_events, m)
    columns: list[str]
    bounds: list[tuple[float, float]]

    def __post_init__(self):
        self.records = np.asarray(self.records, dtype=float)
        if self.records.ndim != 2:
            raise ValueError("records must be a 2-D array")
        for lo, hi in self.bounds:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"invalid feature bounds ({lo}, {hi})")

    def __len__(self) -> int:
        return self.records.shape[0]

    def subset(self, index) -> "EventTable":
        return EventTable(self.records[index], list(self.columns), list(self.bounds))


def _data_bounds(x: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(x)), float(np.max(x))
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def make_event_table(records, columns=None, bounds=None) -> EventTable:
    records = np.asarray(records, dtype=float)
    if records.ndim != 2 or records.shape[0] == 0:
        raise ValueError("empty event table")
    m = records.shape[1]
    columns = list(columns) if columns else [f"f{i}" for i in range(m)]
    if bounds is None:
        bounds = [None] * m
    bounds = [b if b is not None else _data_bounds(records[:, i]) for i, b in enumerate(bounds)]
    return EventTable(records, columns, bounds)


def read_events(path, columns: Sequence[str] | None = None, delimiter: str = ",",
                bounds=None, sort_descending: bool = False) -> EventTable:
    """Load selected feature columns from a delimited file with a header row.

    ``sort_descending`` orders each record's features from largest to
    smallest magnitude, for per-particle features that should be ranked.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = [h.strip() for h in next(reader)]
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if columns is None:
        columns = header
    missing = [c for c in columns if c not in header]
    if missing:
        raise ValueError(f"columns {missing} not in event file header {header}")
    pos = [header.index(c) for c in columns]
    data = np.array([[float(r[i]) for i in pos] for r in rows], dtype=float)
    if data.size == 0:
        raise ValueError(f"no events in {path}")
    if sort_descending:
        order = np.argsort(-np.abs(data), axis=1, kind="stable")
        data = np.take_along_axis(data, order, axis=1)
    return make_event_table(data, columns, bounds)


def bin_features(events: EventTable, bits: int | Sequence[int]) -> np.ndarray:
    """Equal-width bin index per feature; edge values and outliers clamp to the end bins."""
    m = events.records.shape[1]
    bits = [bits] * m if np.isscalar(bits) else list(bits)
    out = np.zeros(events.records.shape, dtype=np.int64)
    for f in range(m):
        nb = 1 << bits[f]
        lo, hi = events.bounds[f]
        x = (events.records[:, f] - lo) / (hi - lo) * nb
        out[:, f] = np.clip(np.floor(x), 0, nb - 1).astype(np.int64)
    return out


def histogram_target(events: EventTable, bits: int | Sequence[int]) -> TargetDistribution:
    """Joint histogram over features, feature-major layout, MSB first."""
    if len(events) == 0:
        raise ValueError("empty event table")
    m = events.records.shape[1]
    bits = [int(bits)] * m if np.isscalar(bits) else [int(b) for b in bits]
    n = sum(bits)
    idx = np.zeros(len(events), dtype=np.int64)
    for f, b in enumerate(bin_features(events, bits).T):
        idx = (idx << bits[f]) | b
    counts = np.bincount(idx, minlength=1 << n).astype(float)
    prov = {"kind": "histogram", "columns": list(events.columns), "bits": bits,
            "bounds": [list(map(float, b)) for b in events.bounds], "n_events": len(events)}
    return TargetDistribution(n, counts / counts.sum(), prov)


def split_events(events: EventTable, ratios: Sequence[float] = (0.7, 0.15, 0.15), seed: int = 0):
    """Seeded partition into train/test/validation without replacement."""
    ratios = np.asarray(ratios, dtype=float)
    if np.any(ratios <= 0) or abs(ratios.sum() - 1.0) > 1e-9:
        raise ValueError(f"ratios {ratios.tolist()} must be positive and sum to 1")
    n = len(events)
    perm = np.random.default_rng(seed).permutation(n)
    sizes = np.floor(ratios * n + 1e-9).astype(int)
    # hand leftover events to the largest fractional remainders
    rem = ratios * n - sizes
    for i in np.argsort(-rem, kind="stable")[: n - sizes.sum()]:
        sizes[i] += 1
    cuts = np.cumsum(sizes)[:-1]
    return tuple(events.subset(np.sort(part)) for part in np.split(perm, cuts))


@dataclass
class TargetState:
    """Diagonal (``eta = diag(p)``) or pure (``amplitudes sqrt(p)``) embedding."""

    target: TargetDistribution
    mode: str

    def __post_init__(self):
        if self.mode not in ("diagonal", "pure"):
            raise ValueError(f"embedding must be 'diagonal' or 'pure', got {self.mode!r}")

    @property
    def n_sites(self) -> int:
        return self.target.n_sites

    @property
    def p(self) -> np.ndarray:
        return self.target.p

    @property
    def amplitudes(self) -> np.ndarray:
        return np.sqrt(self.target.p)

    def dense(self) -> np.ndarray:
        if self.mode == "diagonal":
            return np.diag(self.target.p)
        a = self.amplitudes
        return np.outer(a, a)

    @property
    def purity(self) -> float:
        return 1.0 if self.mode == "pure" else float(np.sum(self.target.p ** 2))

    @property
    def entropy(self) -> float:
        if self.mode == "pure":
            return 0.0
        p = self.target.p[self.target.p > 0]
        return float(-np.sum(p * np.log(p)))


def embed(target: TargetDistribution, mode: str) -> TargetState:
    return TargetState(target, mode)


def target_expectations(state: TargetState, terms: Sequence[PauliString] | TermTable) -> np.ndarray:
    """``Tr(eta P_i)`` for each term, computed without a dense ``eta``."""
    table = terms if isinstance(terms, TermTable) else TermTable(terms)
    if table.n_sites != state.n_sites:
        raise ValueError(f"terms act on {table.n_sites} sites, target has {state.n_sites}")
    if state.mode == "pure":
        return table.state_expectations(state.amplitudes)
    out = np.zeros(len(table))
    for mask, ids, signs in table.groups:
        if mask == 0:
            out[ids] = signs @ state.p
    return table._finish(out)
