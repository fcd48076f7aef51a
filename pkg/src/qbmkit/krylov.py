"""Lanczos tridiagonalization, Krylov imaginary-time evolution and Ritz-pair Gibbs estimates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .hamiltonian import HamiltonianSpec

BREAKDOWN_TOL = 1e-12


@dataclass
class LanczosResult:
    alphas: np.ndarray
    betas: np.ndarray
    basis: np.ndarray  # (dim, D) orthonormal columns

    @property
    def dimension(self) -> int:
        return len(self.alphas)

    def tridiagonal(self) -> np.ndarray:
        return np.diag(self.alphas) + np.diag(self.betas, 1) + np.diag(self.betas, -1)

    def ritz_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Ritz values ascending and the matching Ritz vectors as columns."""
        if self.dimension == 1:
            return self.alphas.copy(), self.basis.copy()
        e, s = eigh_tridiagonal(self.alphas, self.betas)
        return e, self.basis @ s


def _as_matvec(op) -> Callable:
    if callable(op):
        return op
    return lambda v: op @ v


def lanczos(matvec, v0: np.ndarray, D: int, tol: float = BREAKDOWN_TOL) -> LanczosResult:
    """Lanczos with full reorthogonalization.

    Stops early when the residual norm drops below ``tol``, in which case the
    Krylov space is invariant and the result has fewer than ``D`` vectors.
    """
    if D < 1:
        raise ValueError("Krylov dimension must be >= 1")
    matvec = _as_matvec(matvec)
    v = np.asarray(v0, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("zero start vector")
    D = min(D, v.shape[0])
    basis = np.zeros((v.shape[0], D), dtype=complex)
    basis[:, 0] = v / nrm
    alphas, betas = [], []
    for k in range(D):
        w = matvec(basis[:, k])
        alphas.append(float(np.real(np.vdot(basis[:, k], w))))
        # two Gram-Schmidt passes against the whole basis
        for _ in range(2):
            w = w - basis[:, : k + 1] @ (basis[:, : k + 1].conj().T @ w)
        if k == D - 1:
            break
        b = float(np.linalg.norm(w))
        if b < tol:
            basis = basis[:, : k + 1]
            break
        betas.append(b)
        basis[:, k + 1] = w / b
    return LanczosResult(np.array(alphas), np.array(betas), basis)


def _block_lanczos_columns(matvec, V: np.ndarray, D: int, tol: float):
    """Independent Lanczos runs, one per column of ``V`` (columns normalized).

    Columns that break down keep zero vectors afterwards, which decouples
    the trailing part of their tridiagonal matrices. The basis is returned
    with shape (s, D, dim).
    """
    dim, s = V.shape
    D = min(D, dim)
    basis = np.zeros((s, D, dim), dtype=complex)
    alphas = np.zeros((s, D))
    betas = np.zeros((s, max(D - 1, 0)))
    basis[:, 0] = V.T
    for k in range(D):
        w = np.asarray(matvec(basis[:, k].T), dtype=complex).T.copy()  # (s, dim)
        alphas[:, k] = np.real(np.sum(basis[:, k].conj() * w, axis=1))
        q = basis[:, : k + 1]
        for _ in range(2):
            ov = np.matmul(q.conj(), w[:, :, None])  # (s, k+1, 1)
            w -= np.matmul(q.transpose(0, 2, 1), ov)[:, :, 0]
        if k == D - 1:
            break
        b = np.linalg.norm(w, axis=1)
        alive = b >= tol
        betas[:, k] = np.where(alive, b, 0.0)
        basis[:, k + 1] = np.where(alive[:, None], w / np.where(alive, b, 1.0)[:, None], 0.0)
    return alphas, betas, basis


def _tridiag_exp_e1(alphas: np.ndarray, betas: np.ndarray, tau: float) -> tuple[np.ndarray, float]:
    """``exp(-tau (T - e_min)) e_1`` and ``e_min`` for one tridiagonal matrix."""
    if len(alphas) == 1:
        return np.ones(1), float(alphas[0])
    e, s = eigh_tridiagonal(alphas, betas)
    c = s @ (np.exp(-tau * (e - e[0])) * s[0])
    return c, float(e[0])


def expm_apply(matvec, v: np.ndarray, tau: float, D: int, normalize: bool = False,
               tol: float = BREAKDOWN_TOL) -> np.ndarray:
    """Krylov approximation of ``exp(-tau H) v``.

    ``v`` may be a vector or a (dim, k) block whose columns are evolved
    independently. With ``normalize=True`` each output column has unit norm,
    which sidesteps overflow of ``exp(-tau E_min)``.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    v = np.asarray(v)
    single = v.ndim == 1
    V = v[:, None] if single else v
    norms = np.linalg.norm(V, axis=0)
    if np.any(norms == 0):
        raise ValueError("zero vector")
    if tau == 0:
        out = V / norms if normalize else V.astype(complex)
        return out[:, 0] if single else out
    matvec = _as_matvec(matvec)
    alphas, betas, basis = _block_lanczos_columns(matvec, V / norms, D, tol)
    out = np.zeros(V.shape, dtype=complex)
    for j in range(V.shape[1]):
        dead = np.flatnonzero(betas[j] == 0.0)
        m = dead[0] + 1 if dead.size else alphas.shape[1]
        c, e0 = _tridiag_exp_e1(alphas[j, :m], betas[j, : m - 1], tau)
        col = c @ basis[j, :m]
        if normalize:
            out[:, j] = col / np.linalg.norm(col)
        else:
            out[:, j] = norms[j] * np.exp(-tau * e0) * col
    return out[:, 0] if single else out


def _probe_rng(seed: int, probe: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(probe), 0x4B52])


def random_start(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def ritz_gibbs_diag(op, dim: int, beta: float, D: int, n_probes: int = 1, seed: int = 0) -> np.ndarray:
    """Diagonal of a low-rank Gibbs estimate built from deduplicated Ritz pairs."""
    if D < 1 or n_probes < 1:
        raise ValueError("need D >= 1 and n_probes >= 1")
    energies, vectors = [], []
    for probe in range(n_probes):
        res = lanczos(op, random_start(dim, _probe_rng(seed, probe)), D)
        e, y = res.ritz_pairs()
        for k in range(len(e)):
            dup = False
            for e_prev, y_prev in zip(energies, vectors):
                if abs(e_prev - e[k]) < 1e-8 and abs(np.vdot(y_prev, y[:, k])) > 0.99:
                    dup = True
                    break
            if not dup:
                energies.append(float(e[k]))
                vectors.append(y[:, k])
    e = np.array(energies)
    order = np.argsort(e, kind="stable")
    e = e[order]
    amp2 = np.abs(np.stack([vectors[i] for i in order], axis=1)) ** 2
    w = np.exp(-beta * (e - e[0]))
    q = amp2 @ w
    q = np.clip(q, 0.0, None)
    return q / q.sum()


def approx_gibbs_diag(spec: HamiltonianSpec, theta, beta: float, D: int, n_probes: int = 1,
                      seed: int = 0) -> np.ndarray:
    """Approximate model distribution ``q(s)`` without dense diagonalization."""
    op = spec.operator(theta)
    return ritz_gibbs_diag(op, 1 << spec.n_sites, beta, D, n_probes, seed)
