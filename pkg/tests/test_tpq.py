import numpy as np
import pytest
from scipy.stats import chisquare

from conftest import kron_pauli
from qbmkit.hamiltonian import build_terms, random_parameters, zero_parameters
from qbmkit.pauli import PauliString, TermTable
from qbmkit.thermal import gibbs_state, purity
from qbmkit.topology import all_to_all
from qbmkit.tpq import (
    _gf2_rank, estimate_expectations, random_stabilizer_state, stabilizer_block, stabilizer_count,
    state_rng, tpq_state,
)


def all_paulis(n):
    words = [""]
    for _ in range(n):
        words = [w + c for w in words for c in "IXYZ"]
    return words


def canonical(psi):
    """Remove the global phase so equal states compare equal."""
    k = np.flatnonzero(np.abs(psi) > 1e-9)[0]
    return tuple(np.round(psi * abs(psi[k]) / psi[k], 8))


def test_counts():
    assert [stabilizer_count(n) for n in (1, 2, 3)] == [6, 60, 1080]


def test_gf2_rank_matches_span_size():
    r = np.random.default_rng(1)
    for _ in range(300):
        k = int(r.integers(0, 6))
        a = r.integers(0, 2, size=(5, k))
        span = {tuple(a @ np.array([(y >> i) & 1 for i in range(k)]) % 2) for y in range(1 << k)}
        assert 2 ** _gf2_rank(a) == len(span)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_states_have_stabilizer_structure(n):
    for i in range(40):
        psi = random_stabilizer_state(n, seed=[7, i])
        assert np.linalg.norm(psi) == pytest.approx(1.0)
        nz = np.abs(psi[np.abs(psi) > 1e-12])
        np.testing.assert_allclose(nz, nz[0])
        assert (len(nz) & (len(nz) - 1)) == 0
        phases = psi[np.abs(psi) > 1e-12] / psi[np.abs(psi) > 1e-12][0]
        assert np.all(np.min(np.abs(phases[:, None] - np.array([1, 1j, -1, -1j])), axis=1) < 1e-12)
        if n <= 3:
            # a stabilizer state is a +-1 eigenvector of exactly 2^n Pauli strings
            vals = [np.real(psi.conj() @ kron_pauli(w) @ psi) for w in all_paulis(n)]
            assert sum(abs(abs(v) - 1) < 1e-9 for v in vals) == 1 << n


@pytest.mark.parametrize("n, draws", [(1, 6000), (2, 12000)])
def test_sampling_is_uniform(n, draws):
    counts = {}
    for i in range(draws):
        key = canonical(random_stabilizer_state(n, rng=state_rng(99, 0, i)))
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == stabilizer_count(n)
    assert chisquare(list(counts.values())).pvalue > 1e-3


def test_two_design_moments():
    n, d, draws = 3, 8, 6000
    block = stabilizer_block(n, draws, seed=5)
    table = TermTable([PauliString(w) for w in all_paulis(n)[1:]])
    vals = table.state_expectations(block)
    z = vals.mean(axis=1) / (vals.std(axis=1, ddof=1) / np.sqrt(draws))
    assert np.abs(z).max() < 4.0
    # second moment of a 2-design: E sum_x |psi_x|^4 = 2 / (d + 1)
    m4 = np.sum(np.abs(block) ** 4, axis=0)
    assert abs(m4.mean() - 2 / (d + 1)) < 4 * m4.std(ddof=1) / np.sqrt(draws)


def test_counter_seeding_is_order_independent():
    block = stabilizer_block(3, 5, seed=2, step=4)
    single = random_stabilizer_state(3, rng=state_rng(2, 4, 3))
    np.testing.assert_array_equal(block[:, 3], single)
    assert not np.array_equal(stabilizer_block(3, 5, seed=2, step=5), block)


def test_tpq_state_is_normalized_evolution(rng):
    spec = build_terms("generic", all_to_all(3))
    theta = random_parameters(spec, rng)
    base = random_stabilizer_state(3, seed=0)
    psi = tpq_state(spec, theta, 1.0, 8, base)
    w, u = np.linalg.eigh(spec.matrix(theta))
    want = (u * np.exp(-0.5 * w)) @ u.conj().T @ base
    np.testing.assert_allclose(psi, want / np.linalg.norm(want), atol=1e-10)
    np.testing.assert_allclose(tpq_state(spec, zero_parameters(spec), 1.0, 8, base), base)


def test_zero_parameters_give_unbiased_zero_means():
    spec = build_terms("generic", all_to_all(3))
    est = estimate_expectations(spec, zero_parameters(spec), 1.0, None, 400, 8, seed=1)
    assert np.all(np.abs(est.mean) <= 3 * est.stderr + 1e-15)
    assert np.all(est.stderr >= 0)


def test_estimates_are_deterministic(rng):
    spec = build_terms("tfim", all_to_all(3))
    theta = random_parameters(spec, rng)
    a = estimate_expectations(spec, theta, 1.0, spec.terms, 20, 6, seed=3, step=2)
    b = estimate_expectations(spec, theta, 1.0, spec.table, 20, 6, seed=3, step=2)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.stderr, b.stderr)
    with pytest.raises(ValueError):
        estimate_expectations(spec, theta, 1.0, None, 1, 6, seed=3)


def test_standard_error_scales_as_inverse_square_root():
    spec = build_terms("generic", all_to_all(4))
    theta = random_parameters(spec, np.random.default_rng(8))
    sizes = np.array([50, 200, 800, 3200])
    errs = [estimate_expectations(spec, theta, 1.0, None, int(s), 16, seed=4).stderr.mean() for s in sizes]
    slope = np.polyfit(np.log(sizes), np.log(errs), 1)[0]
    assert -0.6 < slope < -0.4


def _exact_sides(spec, theta):
    r1, r2 = gibbs_state(spec, theta, 1.0), gibbs_state(spec, theta, 2.0)
    e1 = spec.table.density_expectations(r1.rho)
    e2 = spec.table.density_expectations(r2.rho)
    return e1, purity(r1) * (e1 - e2), r1


def test_bias_follows_purity_weighted_correction():
    spec = build_terms("generic", all_to_all(4))
    theta = random_parameters(spec, np.random.default_rng(21), scale=0.5)
    e1, corr, _ = _exact_sides(spec, theta)
    est = estimate_expectations(spec, theta, 1.0, None, 4000, 16, seed=6)
    gap = est.mean - e1
    assert np.corrcoef(gap, corr)[0, 1] > 0.9
    assert np.sum(((gap - corr) / est.stderr) ** 2) < np.sum((gap / est.stderr) ** 2) / 5


def test_bias_persists_for_nearly_pure_states():
    spec = build_terms("generic", all_to_all(4))
    theta = 10 * random_parameters(spec, np.random.default_rng(22))
    e1, _, state = _exact_sides(spec, theta)
    assert purity(state) > 0.9
    est = estimate_expectations(spec, theta, 1.0, None, 1000, 16, seed=7)
    assert np.abs((est.mean - e1) / np.maximum(est.stderr, 1e-15)).max() > 5


def test_stabilizer_ensemble_agrees_with_haar_ensemble():
    spec = build_terms("generic", all_to_all(4))
    theta = random_parameters(spec, np.random.default_rng(23))
    state = gibbs_state(spec, theta, 1.0)
    half = (state.vectors * np.sqrt(state.weights)) @ state.vectors.conj().T
    r = np.random.default_rng(24)
    count = 20000
    g = r.normal(size=(16, count)) + 1j * r.normal(size=(16, count))
    psi = half @ g
    psi /= np.linalg.norm(psi, axis=0)
    vals = spec.table.state_expectations(psi)
    haar_mean, haar_se = vals.mean(axis=1), vals.std(axis=1, ddof=1) / np.sqrt(count)
    est = estimate_expectations(spec, theta, 1.0, None, count, 16, seed=8)
    z = (est.mean - haar_mean) / np.hypot(est.stderr, haar_se)
    assert np.abs(z).max() < 4.5
