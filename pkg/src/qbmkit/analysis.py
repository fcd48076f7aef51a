"""Post-training studies: pruning, temperature rescaling and TPQ accuracy grids."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .hamiltonian import HamiltonianSpec
from .io import format_table
from .metrics import kl_divergence
from .targets import TargetDistribution, TargetState, embed
from .thermal import gibbs_state, model_distribution
from .training import TrainConfig, train

PRUNE_THRESHOLDS = (0.0, 1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 1.0)
BETA_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)


def effective_beta(theta) -> float:
    """Largest parameter magnitude, the inverse temperature absorbed into ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if theta.size == 0:
        raise ValueError("empty parameter vector")
    return float(np.max(np.abs(theta)))


def prune(theta, threshold: float) -> tuple[np.ndarray, float]:
    """Zero every entry with ``|theta_i| < threshold``; return the fraction zeroed."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    theta = np.asarray(theta, dtype=float)
    drop = np.abs(theta) < threshold
    out = np.where(drop, 0.0, theta)
    return out, float(drop.mean()) if theta.size else 0.0


def _probabilities(target) -> np.ndarray:
    if isinstance(target, (TargetDistribution, TargetState)):
        return target.p
    return np.asarray(target, dtype=float)


def exact_dkl(spec: HamiltonianSpec, theta, target, beta: float = 1.0) -> float:
    q = model_distribution(gibbs_state(spec, theta, beta))
    return kl_divergence(_probabilities(target), q)


@dataclass
class PruneReport:
    rows: list[tuple[float, float, float]] = field(default_factory=list)  # threshold, dkl, removed %

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    @property
    def dkl(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    @property
    def removed_pct(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    def to_table(self) -> str:
        return format_table(["threshold", "dkl", "terms_removed_pct"], self.rows)


def prune_sweep(spec: HamiltonianSpec, theta, target,
                thresholds: Sequence[float] = PRUNE_THRESHOLDS) -> PruneReport:
    """Exact D_KL of the pruned model at each threshold, in the order given."""
    theta = spec.check_parameters(theta)
    report = PruneReport()
    for t in thresholds:
        pruned, frac = prune(theta, t)
        report.rows.append((float(t), exact_dkl(spec, pruned, target), 100.0 * frac))
    return report


@dataclass
class BetaSweep:
    rows: list[tuple[float, float, float]] = field(default_factory=list)  # factor, beta_eff, dkl

    @property
    def factors(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    @property
    def dkl(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    def to_table(self) -> str:
        return format_table(["factor", "effective_beta", "dkl"], self.rows)


def beta_sweep(spec: HamiltonianSpec, theta, target,
               factors: Sequence[float] = BETA_FACTORS) -> BetaSweep:
    """Rescale ``theta`` by each factor and evaluate exactly at unit inverse temperature."""
    theta = spec.check_parameters(theta)
    out = BetaSweep()
    base = effective_beta(theta) if theta.size else 0.0
    for c in factors:
        if c < 0:
            raise ValueError("scale factors must be non-negative")
        out.rows.append((float(c), float(c) * base, exact_dkl(spec, c * theta, target)))
    return out


@dataclass
class TpqGrid:
    n_states: list[int]
    dims: list[int]
    dkl: np.ndarray  # (len(n_states), len(dims))
    exact_dkl: float

    def to_table(self) -> str:
        rows = [(int(s), int(d), self.dkl[i, j])
                for i, s in enumerate(self.n_states) for j, d in enumerate(self.dims)]
        rows.append(("exact", "-", self.exact_dkl))
        return format_table(["n_states", "krylov_dim", "dkl"], rows)


def tpq_accuracy_grid(spec: HamiltonianSpec, target: TargetState | TargetDistribution,
                      n_states: Sequence[int], dims: Sequence[int], seed: int = 0,
                      steps: int = 1000, config: TrainConfig | None = None) -> TpqGrid:
    """Train once per (n_states, D) cell with the TPQ backend and score each run exactly.

    ``config`` supplies the remaining training settings; its backend, seed,
    step count and TPQ sizes are overridden per cell.
    """
    if isinstance(target, TargetDistribution):
        target = embed(target, "pure")
    if config is None:
        config = TrainConfig(spec, embedding=target.mode)
    config = replace(config, spec=spec, steps=steps, seed=seed, eval_every=steps,
                     eval_method="exact")
    ref = train(replace(config, backend="exact"), target).final["dkl"]
    grid = np.zeros((len(n_states), len(dims)))
    for i, s in enumerate(n_states):
        for j, d in enumerate(dims):
            cell = replace(config, backend="tpq", n_states=int(s), krylov_dim=int(d))
            grid[i, j] = train(cell, target).final["dkl"]
    return TpqGrid(list(map(int, n_states)), list(map(int, dims)), grid, float(ref))
