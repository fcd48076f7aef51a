"""Pauli strings acting on dense state vectors.

Site 0 is the leftmost letter and the most significant bit of a basis
index, so ``"XIZ"`` acts with X on bit ``n-1`` of the integer index.
A Pauli string maps ``|x>`` to ``i**n_y * (-1)**popcount(x & zmask) |x ^ xmask>``
where ``xmask`` marks X/Y sites and ``zmask`` marks Z/Y sites.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

PAULI_LETTERS = "IXYZ"
DENSE_LIMIT = 12

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class PauliError(ValueError):
    pass


class DenseLimitError(ValueError):
    """Raised when a dense 2^n x 2^n object would exceed the configured size."""


@dataclass(frozen=True)
class PauliString:
    """An n-site word over ``{I, X, Y, Z}``."""

    letters: str

    def __post_init__(self):
        if not self.letters:
            raise PauliError("empty Pauli string")
        bad = set(self.letters) - set(PAULI_LETTERS)
        if bad:
            raise PauliError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")

    @property
    def n_sites(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return self.letters

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.letters) if c != "I")

    @cached_property
    def xmask(self) -> int:
        n = self.n_sites
        return sum(1 << (n - 1 - i) for i, c in enumerate(self.letters) if c in "XY")

    @cached_property
    def zmask(self) -> int:
        n = self.n_sites
        return sum(1 << (n - 1 - i) for i, c in enumerate(self.letters) if c in "ZY")

    @property
    def n_y(self) -> int:
        return self.letters.count("Y")

    @property
    def is_diagonal(self) -> bool:
        return self.xmask == 0

    def signs(self) -> np.ndarray:
        """Real sign ``(-1)**popcount(x & zmask)`` for every basis index ``x``."""
        return _signs(self.n_sites, self.zmask)

    def phases(self) -> np.ndarray:
        """Complex phase of ``P|x>`` for every basis index ``x``."""
        return (1j ** (self.n_y % 4)) * self.signs()


def parse_pauli(text: str, *, as_term: bool = False) -> PauliString:
    """Parse a letter word such as ``"XIZ"``.

    With ``as_term=True`` the all-identity word is rejected, since it only
    shifts a Hamiltonian by a constant.
    """
    p = PauliString(text.strip().upper() if text else text)
    if as_term and p.is_identity:
        raise PauliError(f"identity string {p.letters!r} is not a valid Hamiltonian term")
    return p


@lru_cache(maxsize=64)
def basis_indices(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    idx.flags.writeable = False
    return idx


@lru_cache(maxsize=4096)
def _signs(n: int, zmask: int) -> np.ndarray:
    parity = np.bitwise_count(basis_indices(n) & zmask) & 1
    out = 1.0 - 2.0 * parity.astype(np.float64)
    out.flags.writeable = False
    return out


def _check_size(n: int, v: np.ndarray) -> None:
    if v.shape[0] != 1 << n:
        raise ValueError(f"state has {v.shape[0]} amplitudes, expected {1 << n} for {n} sites")


def apply_pauli(p: PauliString, v: np.ndarray) -> np.ndarray:
    """Return ``P @ v``. ``v`` may be a vector or a (2^n, k) block of columns."""
    v = np.asarray(v)
    _check_size(p.n_sites, v)
    idx = basis_indices(p.n_sites)
    src = idx ^ p.xmask
    ph = p.phases()[src]
    if v.ndim == 2:
        ph = ph[:, None]
    return ph * v[src]


def pauli_expectation(p: PauliString, v: np.ndarray) -> float:
    """Real part of ``<v|P|v>``; the imaginary part must vanish."""
    v = np.asarray(v)
    _check_size(p.n_sites, v)
    val = np.vdot(v, apply_pauli(p, v))
    if abs(val.imag) > 1e-10:
        raise ValueError(f"non-real expectation {val} for Hermitian {p}")
    return float(val.real)


def apply_hamiltonian(terms: Sequence[PauliString], theta, v: np.ndarray) -> np.ndarray:
    """Return ``sum_i theta_i P_i v``."""
    theta = np.asarray(theta, dtype=float)
    if len(terms) != theta.shape[0]:
        raise ValueError(f"{len(terms)} terms but {theta.shape[0]} parameters")
    v = np.asarray(v)
    out = np.zeros(v.shape, dtype=complex)
    for p, t in zip(terms, theta):
        if t != 0.0:
            out += t * apply_pauli(p, v)
    return out


def to_dense(p: PauliString, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Kronecker product of the per-site 2x2 matrices, site 0 outermost."""
    if p.n_sites > limit:
        raise DenseLimitError(f"{p.n_sites} sites exceeds dense limit {limit}")
    out = np.ones((1, 1), dtype=complex)
    for c in p.letters:
        out = np.kron(out, _SINGLE[c])
    return out


class TermTable:
    """Precomputed masks and signs for a fixed list of Pauli strings.

    Terms sharing an X-mask are grouped so that expectation values reduce to
    one gather plus a small matrix product per group. Purely imaginary terms
    (odd number of Y letters) give an exactly zero real part whenever the
    state or density matrix is real, which keeps Y-odd parameters pinned at
    zero during training on real targets.
    """

    def __init__(self, terms: Sequence[PauliString]):
        terms = list(terms)
        if not terms:
            raise ValueError("empty term list")
        n = terms[0].n_sites
        if any(t.n_sites != n for t in terms):
            raise ValueError("terms act on different numbers of sites")
        self.terms = terms
        self.n_sites = n
        self.dim = 1 << n
        self.n_y = np.array([t.n_y % 4 for t in terms])
        groups: dict[int, list[int]] = {}
        for i, t in enumerate(terms):
            groups.setdefault(t.xmask, []).append(i)
        self.groups = [
            (mask, np.array(ids), np.stack([terms[i].signs() for i in ids]))
            for mask, ids in sorted(groups.items())
        ]

    def __len__(self) -> int:
        return len(self.terms)

    def _finish(self, raw: np.ndarray) -> np.ndarray:
        # real part of i**n_y * raw, written so imaginary-free inputs give exact zeros
        raw = np.asarray(raw)
        if not np.iscomplexobj(raw):
            out = np.where((self.n_y % 2 == 0)[(...,) + (None,) * (raw.ndim - 1)], raw, 0.0)
            flip = (self.n_y == 2)[(...,) + (None,) * (raw.ndim - 1)]
            return np.where(flip, -out, out)
        sel = self.n_y[(...,) + (None,) * (raw.ndim - 1)]
        re, im = raw.real, raw.imag
        return np.select([sel == 0, sel == 1, sel == 2], [re, -im, -re], im)

    def density_expectations(self, rho: np.ndarray) -> np.ndarray:
        """``Tr(rho P_i)`` for every term."""
        if rho.shape != (self.dim, self.dim):
            raise ValueError(f"density matrix shape {rho.shape} does not match {self.n_sites} sites")
        idx = basis_indices(self.n_sites)
        raw = np.zeros(len(self.terms), dtype=rho.dtype)
        for mask, ids, signs in self.groups:
            raw[ids] = signs @ rho[idx, idx ^ mask]
        return self._finish(raw)

    def state_expectations(self, psi: np.ndarray) -> np.ndarray:
        """``<psi|P_i|psi>`` for a vector (returns shape (k,)) or a block of columns (k, s)."""
        psi = np.asarray(psi)
        if psi.shape[0] != self.dim:
            raise ValueError(f"state has {psi.shape[0]} amplitudes, expected {self.dim}")
        idx = basis_indices(self.n_sites)
        shape = (len(self.terms),) + psi.shape[1:]
        raw = np.zeros(shape, dtype=psi.dtype)
        for mask, ids, signs in self.groups:
            w = np.conj(psi[idx ^ mask]) * psi
            raw[ids] = signs @ w
        return self._finish(raw)

    def group_coefficients(self, theta) -> list[tuple[int, np.ndarray]]:
        """Per X-mask column coefficients ``c[x]`` with ``H[x ^ mask, x] = c[x]``.

        Coefficient arrays are real when no nonzero parameter sits on a
        Y-odd term.
        """
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (len(self.terms),):
            raise ValueError(f"{len(self.terms)} terms but parameter shape {theta.shape}")
        out = []
        for mask, ids, signs in self.groups:
            t = theta[ids]
            ny = self.n_y[ids]
            re = (t * np.where(ny == 0, 1.0, np.where(ny == 2, -1.0, 0.0))) @ signs
            odd = (ny % 2 == 1) & (t != 0.0)
            if odd.any():
                im = (t * np.where(ny == 1, 1.0, np.where(ny == 3, -1.0, 0.0))) @ signs
                out.append((mask, re + 1j * im))
            else:
                out.append((mask, re))
        return out

    def dense_matrix(self, theta, limit: int = DENSE_LIMIT) -> np.ndarray:
        """Dense ``sum_i theta_i P_i``; real dtype when the result is real."""
        if self.n_sites > limit:
            raise DenseLimitError(f"{self.n_sites} sites exceeds dense limit {limit}")
        coeffs = self.group_coefficients(theta)
        dtype = complex if any(np.iscomplexobj(c) for _, c in coeffs) else float
        idx = basis_indices(self.n_sites)
        h = np.zeros((self.dim, self.dim), dtype=dtype)
        for mask, c in coeffs:
            h[idx ^ mask, idx] += c
        return h

    def sparse_matrix(self, theta):
        """CSR ``sum_i theta_i P_i`` for sizes beyond the dense path."""
        from scipy import sparse

        coeffs = self.group_coefficients(theta)
        dtype = complex if any(np.iscomplexobj(c) for _, c in coeffs) else float
        idx = basis_indices(self.n_sites)
        rows = np.concatenate([idx ^ mask for mask, _ in coeffs])
        cols = np.tile(idx, len(coeffs))
        data = np.concatenate([c.astype(dtype) for _, c in coeffs])
        keep = data != 0
        m = sparse.csr_matrix((data[keep], (rows[keep], cols[keep])), shape=(self.dim, self.dim))
        m.sum_duplicates()
        return m

    def operator(self, theta, dense_up_to: int = 10):
        """Matrix supporting ``@``: dense for small systems, CSR otherwise."""
        if self.n_sites <= dense_up_to:
            return self.dense_matrix(theta)
        return self.sparse_matrix(theta)
