"""Dense Gibbs states and spectral quantities for small systems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hamiltonian import HamiltonianSpec
from .pauli import DENSE_LIMIT, DenseLimitError, PauliString, TermTable


@dataclass
class ThermalState:
    """Gibbs state with its eigenbasis kept around for logs and entropies.

    ``weights`` are the eigenvalues of ``rho`` and ``log_weights`` their exact
    logarithms, which avoids flooring tiny eigenvalues in relative entropies.
    """

    rho: np.ndarray
    beta: float
    weights: np.ndarray
    log_weights: np.ndarray
    vectors: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.rho.shape[0].bit_length() - 1

    def log_rho(self) -> np.ndarray:
        return (self.vectors * self.log_weights) @ self.vectors.conj().T


def gibbs_state(spec: HamiltonianSpec, theta, beta: float = 1.0, limit: int = DENSE_LIMIT) -> ThermalState:
    if spec.n_sites > limit:
        raise DenseLimitError(
            f"{spec.n_sites} sites exceeds dense limit {limit}; use the Krylov/TPQ path"
        )
    if not beta > 0:
        raise ValueError("beta must be positive")
    h = spec.matrix(theta, limit=limit)
    return gibbs_from_matrix(h, beta)


def gibbs_from_matrix(h: np.ndarray, beta: float = 1.0) -> ThermalState:
    energies, vecs = np.linalg.eigh(h)
    shifted = -beta * (energies - energies[0])
    log_z = np.log(np.sum(np.exp(shifted)))
    log_w = shifted - log_z
    w = np.exp(log_w)
    rho = (vecs * w) @ vecs.conj().T
    return ThermalState(rho, beta, w, log_w, vecs)


def model_distribution(state: ThermalState | np.ndarray) -> np.ndarray:
    rho = state.rho if isinstance(state, ThermalState) else np.asarray(state)
    q = np.clip(np.real(np.diagonal(rho)).copy(), 0.0, None)
    return q / q.sum()


def expectation_set(state: ThermalState | np.ndarray, terms: Sequence[PauliString] | TermTable) -> np.ndarray:
    """``Tr(rho P_i)`` for every term."""
    rho = state.rho if isinstance(state, ThermalState) else np.asarray(state)
    table = terms if isinstance(terms, TermTable) else TermTable(terms)
    return table.density_expectations(rho)


def _spectrum(rho) -> np.ndarray:
    if isinstance(rho, ThermalState):
        return rho.weights
    return np.linalg.eigvalsh(np.asarray(rho))


def von_neumann_entropy(rho) -> float:
    lam = _spectrum(rho)
    lam = lam[lam > 1e-15]
    return float(-np.sum(lam * np.log(lam)))


def purity(rho) -> float:
    m = rho.rho if isinstance(rho, ThermalState) else np.asarray(rho)
    return float(np.sum(np.abs(m) ** 2))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    lam, u = np.linalg.eigh(m)
    return (u * np.sqrt(np.clip(lam, 0.0, None))) @ u.conj().T


def fidelity(eta, rho) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(eta) rho sqrt(eta)))**2``.

    ``eta`` may be a state vector, in which case this is ``<psi|rho|psi>``.
    """
    rho = rho.rho if isinstance(rho, ThermalState) else np.asarray(rho)
    eta = np.asarray(eta)
    if eta.ndim == 1:
        if eta.shape[0] != rho.shape[0]:
            raise ValueError("dimension mismatch")
        return float(np.real(np.vdot(eta, rho @ eta)))
    if eta.shape != rho.shape:
        raise ValueError("dimension mismatch")
    lam, u = np.linalg.eigh(eta)
    if lam[-1] > 1 - 1e-12:
        psi = u[:, -1]
        return float(np.real(np.vdot(psi, rho @ psi)))
    s = _psd_sqrt(eta)
    mu = np.linalg.eigvalsh(s @ rho @ s)
    return float(np.sum(np.sqrt(np.clip(mu, 0.0, None))) ** 2)


def partial_trace(rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on ``keep`` (kept sites in ascending order)."""
    rho = np.asarray(rho)
    n = rho.shape[0].bit_length() - 1
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set is empty")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep sites {keep} outside {n} sites")
    drop = [i for i in range(n) if i not in keep]
    t = rho.reshape([2] * (2 * n))
    order = keep + drop + [n + i for i in keep] + [n + i for i in drop]
    dk, dd = 1 << len(keep), 1 << len(drop)
    t = t.transpose(order).reshape(dk, dd, dk, dd)
    return np.einsum("iaja->ij", t)
