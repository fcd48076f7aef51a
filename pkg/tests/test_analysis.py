import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbmkit.analysis import (
    PRUNE_THRESHOLDS, beta_sweep, effective_beta, exact_dkl, prune, prune_sweep, tpq_accuracy_grid,
)
from qbmkit.hamiltonian import build_terms
from qbmkit.metrics import kl_divergence
from qbmkit.pauli import DenseLimitError
from qbmkit.targets import embed, next_nn_target
from qbmkit.topology import all_to_all, chain_nn
from qbmkit.training import TrainConfig, train

vectors = st.lists(st.floats(-5, 5), min_size=1, max_size=20).map(np.array)


@pytest.fixture(scope="module")
def trained():
    spec = build_terms("generic_real", chain_nn(5))
    target = next_nn_target(5)
    trace = train(TrainConfig(spec, steps=300, eval_every=300), target)
    return spec, target, trace


def test_effective_beta_examples():
    assert effective_beta(np.zeros(4)) == 0.0
    assert effective_beta([0.3, -1.2, 0.7]) == 1.2
    with pytest.raises(ValueError):
        effective_beta([])


def test_prune_examples():
    theta = np.array([0.05, -0.2, 1.5, -0.001])
    same, frac = prune(theta, 0.0)
    np.testing.assert_array_equal(same, theta)
    assert frac == 0.0
    zero, frac = prune(theta, 2.0)
    assert frac == 1.0 and not np.any(zero)
    out, frac = prune(theta, 0.1)
    np.testing.assert_array_equal(out, [0, -0.2, 1.5, 0])
    assert frac == 0.5
    with pytest.raises(ValueError):
        prune(theta, -1.0)


@settings(max_examples=60, deadline=None)
@given(vectors, st.floats(0, 6))
def test_prune_properties(theta, t):
    once, _ = prune(theta, t)
    twice, _ = prune(once, t)
    np.testing.assert_array_equal(once, twice)
    assert effective_beta(once) <= effective_beta(theta)


def test_prune_sweep(trained):
    spec, target, trace = trained
    report = prune_sweep(spec, trace.theta, target)
    assert len(report.rows) == 8 and tuple(report.thresholds) == PRUNE_THRESHOLDS
    assert np.all(np.diff(report.removed_pct) >= 0)
    assert report.dkl[0] == trace.final["dkl"]
    assert report.to_table().splitlines()[0] == "threshold,dkl,terms_removed_pct"
    big = build_terms("ising", chain_nn(13))
    with pytest.raises(DenseLimitError):
        prune_sweep(big, np.zeros(big.n_terms), np.full(1 << 13, 2.0 ** -13))


def test_beta_sweep(trained):
    spec, target, trace = trained
    sweep = beta_sweep(spec, trace.theta, target, (1e-6, 0.5, 1.0, 2.0))
    assert sweep.dkl[2] == trace.final["dkl"]
    uniform = np.full(32, 1 / 32)
    assert sweep.dkl[0] == pytest.approx(kl_divergence(target.p, uniform), abs=1e-5)
    assert sweep.rows[3][1] == pytest.approx(2 * effective_beta(trace.theta))
    assert sweep.dkl[1] > sweep.dkl[2]


def test_exact_dkl_accepts_plain_tables(trained):
    spec, target, trace = trained
    assert exact_dkl(spec, trace.theta, target.p) == exact_dkl(spec, trace.theta, embed(target, "pure"))


@pytest.mark.slow
def test_tpq_grid_improves_with_ensemble_size():
    spec = build_terms("generic", all_to_all(6))
    target = next_nn_target(6)
    grids = [tpq_accuracy_grid(spec, target, [1, 10, 100], [2, 5, 20], seed=s, steps=300) for s in range(3)]
    stack = np.stack([g.dkl for g in grids])  # (seed, n_states, D)
    mean = stack.mean(axis=0)
    err = stack.std(axis=0, ddof=1) / np.sqrt(3)
    # at D = 2 the Krylov truncation bias dominates and more states do not help
    for j in (1, 2):
        for i in range(2):
            assert mean[i + 1, j] <= mean[i, j] + 3 * np.hypot(err[i, j], err[i + 1, j])
    assert np.all(stack[:, 0, 0] > stack[:, -1, -1])
    assert abs(mean[-1, -1] - grids[0].exact_dkl) <= max(0.05, 0.25 * grids[0].exact_dkl)
    lines = grids[0].to_table().splitlines()
    assert lines[0] == "n_states,krylov_dim,dkl" and lines[-1].startswith("exact,-,")
