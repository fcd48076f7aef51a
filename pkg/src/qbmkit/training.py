"""Relative-entropy training of fully visible (quantum) Boltzmann machines."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict

import numpy as np

from .hamiltonian import HamiltonianSpec, zero_parameters
from .krylov import approx_gibbs_diag
from .metrics import kl_divergence
from .pauli import DENSE_LIMIT, DenseLimitError
from .targets import TargetDistribution, TargetState, embed, target_expectations
from .thermal import ThermalState, fidelity, gibbs_state, model_distribution, purity
from .tpq import ensemble_mean

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-300


@dataclass
class TrainConfig:
    spec: HamiltonianSpec
    embedding: str = "pure"
    backend: str = "exact"  # "exact" or "tpq"
    n_states: int = 100
    krylov_dim: int = 20
    steps: int = 1000
    lr: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    eval_every: int = 10
    seed: int = 0
    beta: float = 1.0
    optimizer: str = "amsgrad"  # "sgd" is plain gradient descent, used in tests
    bias_correction: bool = False
    freeze_bases: bool = False
    eval_method: str = "auto"  # "exact", "krylov" or "auto"
    eval_probes: int = 1
    dense_limit: int = DENSE_LIMIT

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("moment decay rates must lie in [0, 1)")
        if self.backend not in ("exact", "tpq"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.optimizer not in ("amsgrad", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.eval_method not in ("auto", "exact", "krylov"):
            raise ValueError(f"unknown eval method {self.eval_method!r}")
        if self.n_states < 1 or self.krylov_dim < 1:
            raise ValueError("n_states and krylov_dim must be >= 1")
        if self.embedding not in ("pure", "diagonal"):
            raise ValueError(f"unknown embedding {self.embedding!r}")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")

    def echo(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "spec"}
        d["family"] = self.spec.family.label
        d["connectivity"] = self.spec.graph.kind
        d["n_sites"] = self.spec.n_sites
        d["n_terms"] = self.spec.n_terms
        return d


@dataclass
class OptimizerState:
    m: np.ndarray
    v: np.ndarray
    vhat: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, k: int) -> "OptimizerState":
        return cls(np.zeros(k), np.zeros(k), np.zeros(k), 0)


@dataclass
class TrainingTrace:
    records: list[dict] = field(default_factory=list)
    theta: np.ndarray | None = None
    config: dict = field(default_factory=dict)

    def column(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.records], dtype=float)

    @property
    def final(self) -> dict:
        return self.records[-1]


def qre_loss(eta: TargetState | np.ndarray, rho: ThermalState | np.ndarray) -> float:
    """Quantum relative entropy ``Tr(eta log eta) - Tr(eta log rho)``."""
    if isinstance(rho, ThermalState):
        lw, vecs = rho.log_weights, rho.vectors
    else:
        lam, vecs = np.linalg.eigh(np.asarray(rho))
        lw = np.log(np.maximum(lam, LOG_FLOOR))
    dim = vecs.shape[0]
    if isinstance(eta, TargetState):
        if eta.p.shape[0] != dim:
            raise ValueError("dimension mismatch")
        if eta.mode == "pure":
            ov = np.abs(vecs.conj().T @ eta.amplitudes) ** 2
            return float(-ov @ lw)
        diag_log = (np.abs(vecs) ** 2) @ lw
        return float(-eta.entropy - eta.p @ diag_log)
    eta = np.asarray(eta)
    if eta.shape != (dim, dim):
        raise ValueError("dimension mismatch")
    mu = np.linalg.eigvalsh(eta)
    mu = mu[mu > 1e-15]
    neg_s = float(np.sum(mu * np.log(mu)))
    log_rho = (vecs * lw) @ vecs.conj().T
    return neg_s - float(np.real(np.trace(eta @ log_rho)))


def negative_log_likelihood(eta: TargetState, rho: ThermalState) -> float:
    """``-Tr(eta log rho)``."""
    return qre_loss(eta, rho) - (0.0 if eta.mode == "pure" else -eta.entropy)


def gradient(target_exps, model_exps) -> np.ndarray:
    """Derivative of the relative entropy: target minus model expectations."""
    a = np.asarray(target_exps, dtype=float)
    b = np.asarray(model_exps, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch {a.shape} vs {b.shape}")
    return a - b


def amsgrad_step(theta, g, state: OptimizerState, config: TrainConfig):
    """One AMSGrad update; returns new parameters and a new optimizer state."""
    theta = np.asarray(theta, dtype=float)
    g = np.asarray(g, dtype=float)
    if g.shape != theta.shape:
        raise ValueError("gradient and parameters differ in length")
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite gradient")
    b1, b2 = config.beta1, config.beta2
    t = state.t + 1
    m = b1 * state.m + (1 - b1) * g
    v = b2 * state.v + (1 - b2) * g * g
    vhat = np.maximum(state.vhat, v)
    if config.bias_correction:
        step = config.lr * (m / (1 - b1 ** t)) / (np.sqrt(vhat / (1 - b2 ** t)) + config.eps)
    else:
        step = config.lr * m / (np.sqrt(vhat) + config.eps)
    return theta - step, OptimizerState(m, v, vhat, t)


def _eval_method(config: TrainConfig) -> str:
    n = config.spec.n_sites
    if config.eval_method == "auto":
        return "exact" if n <= config.dense_limit else "krylov"
    if config.eval_method == "exact" and n > config.dense_limit:
        raise DenseLimitError(f"{n} sites exceeds dense limit {config.dense_limit}")
    return config.eval_method


def evaluate_exact(spec: HamiltonianSpec, theta, target: TargetState, beta: float = 1.0,
                   state: ThermalState | None = None) -> dict:
    if state is None:
        state = gibbs_state(spec, theta, beta)
    q = model_distribution(state)
    eta = target.amplitudes if target.mode == "pure" else target.dense()
    return {
        "nll": negative_log_likelihood(target, state),
        "qre": qre_loss(target, state),
        "dkl": kl_divergence(target.p, q),
        "fidelity": fidelity(eta, state),
        "purity": purity(state),
    }


def evaluate_krylov(spec: HamiltonianSpec, theta, target: TargetState, beta: float, D: int,
                    n_probes: int, seed: int) -> dict:
    q = approx_gibbs_diag(spec, theta, beta, D, n_probes, seed)
    p = target.p
    mask = p > 0
    nll = float(-np.sum(p[mask] * np.log(np.maximum(q[mask], LOG_FLOOR))))
    return {"nll": nll, "dkl": kl_divergence(p, q), "approximate": True}


def _model_expectations(config: TrainConfig, theta, step: int):
    spec = config.spec
    if config.backend == "exact":
        state = gibbs_state(spec, theta, config.beta, limit=config.dense_limit)
        return spec.table.density_expectations(state.rho), state
    mean = ensemble_mean(
        spec, theta, config.beta, spec.table, config.n_states, config.krylov_dim,
        config.seed, 0 if config.freeze_bases else step,
    )
    return mean, None


def train(config: TrainConfig, target: TargetState | TargetDistribution, callback=None) -> TrainingTrace:
    """Zero-initialized training loop; metrics every ``eval_every`` steps and at the end.

    A bare distribution is embedded according to ``config.embedding``.
    """
    spec = config.spec
    if isinstance(target, TargetDistribution):
        target = embed(target, config.embedding)
    elif target.mode != config.embedding:
        raise ValueError(f"target embedded as {target.mode!r} but config asks for {config.embedding!r}")
    if target.n_sites != spec.n_sites:
        raise ValueError(f"target has {target.n_sites} sites, model has {spec.n_sites}")
    if config.backend == "exact" and spec.n_sites > config.dense_limit:
        raise DenseLimitError(
            f"exact backend needs n <= {config.dense_limit}, got {spec.n_sites}; use backend=tpq"
        )
    method = _eval_method(config)
    target_exps = target_expectations(target, spec.table)
    theta = zero_parameters(spec)
    opt = OptimizerState.zeros(spec.n_terms)
    trace = TrainingTrace(config=config.echo())
    for step in range(config.steps + 1):
        model_exps, state = _model_expectations(config, theta, step)
        g = gradient(target_exps, model_exps)
        if step % config.eval_every == 0 or step == config.steps:
            if method == "exact":
                metrics = evaluate_exact(spec, theta, target, config.beta,
                                         state if config.backend == "exact" else None)
            else:
                metrics = evaluate_krylov(spec, theta, target, config.beta, config.krylov_dim,
                                          config.eval_probes, config.seed)
            rec = {"step": step, **metrics,
                   "effective_beta": float(np.max(np.abs(theta))) if theta.size else 0.0,
                   "grad_norm": float(np.linalg.norm(g))}
            trace.records.append(rec)
            if callback is not None:
                callback(rec)
            log.debug("step %d dkl %.6g", step, rec["dkl"])
        if step == config.steps:
            break
        if config.optimizer == "sgd":
            theta = theta - config.lr * g
        else:
            theta, opt = amsgrad_step(theta, g, opt, config)
    trace.theta = theta
    return trace
