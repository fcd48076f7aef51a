"""Thermal pure quantum states from random stabilizer states.

A uniformly random Clifford applied to ``|0...0>`` yields a uniformly random
stabilizer state, so the sampler draws the state directly from its canonical
form: every stabilizer state is, up to global phase,

    2**(-k/2) * sum_y i**(l.y) (-1)**q(y) |G y + c>

for an affine subspace ``{G y + c}`` of dimension ``k``, a linear form ``l``
and a quadratic form ``q`` over GF(2). Each ``(subspace, l, q)`` labels a
distinct state, so choosing ``k`` with probability proportional to the
number of states of that support size and the rest uniformly is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .hamiltonian import HamiltonianSpec
from .krylov import expm_apply
from .pauli import PauliString, TermTable


@lru_cache(maxsize=None)
def _support_weights(n: int) -> tuple[float, ...]:
    # states with k-dim support: 2**(n-k) * [n k]_2 cosets, 2**k linear, 2**(k(k+1)/2) quadratic
    counts = []
    for k in range(n + 1):
        num, den = 1, 1
        for i in range(k):
            num *= (1 << (n - i)) - 1
            den *= (1 << (i + 1)) - 1
        counts.append((1 << n) * (num // den) * (1 << (k * (k + 1) // 2)))
    total = sum(counts)
    return tuple(c / total for c in counts)


def stabilizer_count(n: int) -> int:
    out = 1 << n
    for k in range(1, n + 1):
        out *= (1 << k) + 1
    return out


def _gf2_rank(m: np.ndarray) -> int:
    """Rank over GF(2), eliminating on columns packed into integers."""
    m = np.asarray(m) % 2
    pivots: dict[int, int] = {}
    for col in m.T:
        x = int("".join(map(str, col)) or "0", 2)
        while x:
            top = x.bit_length() - 1
            if top not in pivots:
                pivots[top] = x
                break
            x ^= pivots[top]
    return len(pivots)


def random_stabilizer_state(n: int, seed=None, rng: np.random.Generator | None = None) -> np.ndarray:
    """Uniformly random n-qubit stabilizer state as a dense amplitude vector."""
    if n < 1:
        raise ValueError("need n >= 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    k = int(rng.choice(n + 1, p=_support_weights(n)))
    while True:
        g = rng.integers(0, 2, size=(n, k), dtype=np.int64)
        if _gf2_rank(g) == k:
            break
    c = rng.integers(0, 2, size=n, dtype=np.int64)
    lin = rng.integers(0, 2, size=k, dtype=np.int64)
    quad = np.triu(rng.integers(0, 2, size=(k, k), dtype=np.int64))

    ys = (np.arange(1 << k)[:, None] >> np.arange(k)[None, :]) & 1  # (2^k, k)
    xs = (ys @ g.T + c) % 2  # (2^k, n)
    weights = 1 << np.arange(n - 1, -1, -1)
    index = xs @ weights
    ipow = (ys @ lin) % 4
    sign = np.sum((ys @ quad) * ys, axis=1) % 2
    amp = (1j ** ipow) * (1 - 2 * sign)

    psi = np.zeros(1 << n, dtype=complex)
    psi[index] = amp / np.sqrt(1 << k)
    return psi


def state_rng(seed: int, step: int, index: int) -> np.random.Generator:
    """Counter-based stream so each TPQ state is independent of evaluation order."""
    return np.random.default_rng([int(seed), int(step), int(index)])


def stabilizer_block(n: int, n_states: int, seed: int, step: int = 0) -> np.ndarray:
    return np.stack(
        [random_stabilizer_state(n, rng=state_rng(seed, step, i)) for i in range(n_states)], axis=1
    )


def tpq_state(spec: HamiltonianSpec, theta, beta: float, D: int, base: np.ndarray) -> np.ndarray:
    """Normalized ``exp(-beta H / 2) base``; ``base`` may be a block of columns."""
    theta = spec.check_parameters(theta)
    if beta == 0 or not np.any(theta):
        b = np.asarray(base, dtype=complex)
        return b / np.linalg.norm(b, axis=0)
    return expm_apply(spec.operator(theta), base, beta / 2, D, normalize=True)


@dataclass
class TpqEnsembleEstimate:
    mean: np.ndarray
    stderr: np.ndarray
    n_states: int
    D: int
    seed: int
    step: int = 0


def _resolve(spec: HamiltonianSpec, terms) -> TermTable:
    if terms is None:
        return spec.table
    return terms if isinstance(terms, TermTable) else TermTable(terms)


def ensemble_values(spec: HamiltonianSpec, theta, beta: float,
                    terms: Sequence[PauliString] | TermTable | None, n_states: int, D: int,
                    seed: int, step: int = 0) -> np.ndarray:
    """``<psi_beta|P_i|psi_beta>`` for every term and TPQ state, shape (k, n_states)."""
    if n_states < 1:
        raise ValueError("need at least one TPQ state")
    table = _resolve(spec, terms)
    base = stabilizer_block(spec.n_sites, n_states, seed, step)
    psi = tpq_state(spec, theta, beta, D, base)
    return table.state_expectations(psi)


def ensemble_mean(spec, theta, beta, terms, n_states, D, seed, step=0) -> np.ndarray:
    """TPQ estimate of ``Tr(rho_beta P_i)``; a single state is allowed."""
    return ensemble_values(spec, theta, beta, terms, n_states, D, seed, step).mean(axis=1)


def estimate_expectations(spec: HamiltonianSpec, theta, beta: float,
                          terms: Sequence[PauliString] | TermTable | None, n_states: int, D: int,
                          seed: int, step: int = 0) -> TpqEnsembleEstimate:
    """Ensemble mean and standard error of ``<psi_beta|P_i|psi_beta>`` over TPQ states."""
    if n_states < 2:
        raise ValueError("need at least two TPQ states for a standard error")
    vals = ensemble_values(spec, theta, beta, terms, n_states, D, seed, step)
    mean = vals.mean(axis=1)
    stderr = vals.std(axis=1, ddof=1) / np.sqrt(n_states)
    return TpqEnsembleEstimate(mean, stderr, n_states, D, seed, step)
