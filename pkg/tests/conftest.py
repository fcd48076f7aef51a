"""Independent oracles shared by the test modules.

These deliberately avoid the package's bitmask kernels: Pauli operators
are built by Kronecker products and matrix functions by scipy.
"""

from functools import reduce

import numpy as np
import pytest
import scipy.linalg

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_pauli(word: str) -> np.ndarray:
    return reduce(np.kron, [PAULI[c] for c in word])


def kron_hamiltonian(words, theta) -> np.ndarray:
    return sum(t * kron_pauli(w) for w, t in zip(words, theta))


def expm_gibbs(h: np.ndarray, beta: float = 1.0) -> np.ndarray:
    """Scaling-and-squaring exponential, normalized."""
    e = scipy.linalg.expm(-beta * h)
    return e / np.trace(e)


def index_partial_trace(rho: np.ndarray, keep) -> np.ndarray:
    """Reduced matrix by explicit summation over traced-out bit patterns."""
    n = rho.shape[0].bit_length() - 1
    keep = sorted(keep)
    drop = [i for i in range(n) if i not in keep]
    dk = 1 << len(keep)
    out = np.zeros((dk, dk), dtype=complex)

    def index(kbits, dbits):
        bits = [0] * n
        for pos, b in zip(keep, kbits):
            bits[pos] = b
        for pos, b in zip(drop, dbits):
            bits[pos] = b
        return int("".join(map(str, bits)), 2)

    def pattern(x, width):
        return [(x >> (width - 1 - i)) & 1 for i in range(width)]

    for a in range(dk):
        for b in range(dk):
            for d in range(1 << len(drop)):
                out[a, b] += rho[index(pattern(a, len(keep)), pattern(d, len(drop))),
                                 index(pattern(b, len(keep)), pattern(d, len(drop)))]
    return out


def random_density(n: int, rng, rank: int | None = None) -> np.ndarray:
    d = 1 << n
    k = d if rank is None else rank
    a = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_probs(n: int, rng) -> np.ndarray:
    p = rng.random(1 << n)
    return p / p.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one "criterion N: PASS|FAIL ..." line per acceptance check, echoed in the summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
