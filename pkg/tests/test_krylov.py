import numpy as np
import pytest
import scipy.linalg

from qbmkit.hamiltonian import build_terms, random_parameters
from qbmkit.krylov import approx_gibbs_diag, expm_apply, lanczos, ritz_gibbs_diag
from qbmkit.thermal import gibbs_state, model_distribution
from qbmkit.topology import all_to_all


def random_vector(dim, rng):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


@pytest.fixture
def spec3():
    return build_terms("generic", all_to_all(3))


def test_lanczos_stops_on_eigenvector():
    h = np.diag([0.3, -1.0, 2.0, 0.5])
    res = lanczos(h, np.eye(4)[2], 4)
    assert res.dimension == 1
    assert res.alphas[0] == 2.0


def test_lanczos_full_space_recovers_spectrum(spec3, rng):
    h = spec3.matrix(random_parameters(spec3, rng))
    res = lanczos(h, random_vector(8, rng), 8)
    e, _ = res.ritz_pairs()
    np.testing.assert_allclose(e, np.linalg.eigvalsh(h), atol=1e-8)


def test_lanczos_basis_and_recurrence(spec3, rng):
    h = spec3.matrix(random_parameters(spec3, rng))
    res = lanczos(h, random_vector(8, rng), 6)
    q = res.basis
    np.testing.assert_allclose(q.conj().T @ q, np.eye(6), atol=1e-8)
    t = res.tridiagonal()
    # H Q = Q T up to the residual in the last column
    resid = h @ q - q @ t
    assert np.abs(resid[:, :-1]).max() < 1e-8


def test_ritz_values_lie_inside_spectrum(spec3, rng):
    h = spec3.matrix(random_parameters(spec3, rng))
    exact = np.linalg.eigvalsh(h)
    e, _ = lanczos(h, random_vector(8, rng), 4).ritz_pairs()
    assert exact[0] - 1e-10 <= e[0] and e[-1] <= exact[-1] + 1e-10


def test_lanczos_rejects_zero_start():
    with pytest.raises(ValueError):
        lanczos(np.eye(2), np.zeros(2), 2)
    with pytest.raises(ValueError):
        lanczos(np.eye(2), np.ones(2), 0)


def test_expm_apply_identity_at_zero_time(rng):
    v = random_vector(8, rng)
    np.testing.assert_array_equal(expm_apply(np.eye(8), v, 0.0, 4), v)
    with pytest.raises(ValueError):
        expm_apply(np.eye(8), v, -1.0, 4)
    with pytest.raises(ValueError):
        expm_apply(np.eye(8), np.zeros(8), 1.0, 4)


def test_expm_apply_diagonal_closed_form(rng):
    e = rng.uniform(-2, 2, 8)
    v = random_vector(8, rng)
    np.testing.assert_allclose(expm_apply(np.diag(e), v, 0.8, 8), np.exp(-0.8 * e) * v, atol=1e-10)


def test_expm_apply_full_space_matches_dense(spec3, rng):
    h = spec3.matrix(random_parameters(spec3, rng))
    v = random_vector(8, rng)
    want = scipy.linalg.expm(-0.5 * h) @ v
    np.testing.assert_allclose(expm_apply(h, v, 0.5, 8), want, atol=1e-8)
    block = np.stack([v, random_vector(8, rng)], axis=1)
    got = expm_apply(h, block, 0.5, 8, normalize=True)
    want = scipy.linalg.expm(-0.5 * h) @ block
    np.testing.assert_allclose(got, want / np.linalg.norm(want, axis=0), atol=1e-8)
    # a sparse operator and a callable give the same answer
    op = spec3.table.sparse_matrix(random_parameters(spec3, rng))
    np.testing.assert_allclose(expm_apply(op, v, 0.5, 8), expm_apply(lambda x: op @ x, v, 0.5, 8))


def test_expm_apply_block_handles_early_breakdown(rng):
    h = np.diag([0.0, 1.0, 2.0, 3.0])
    block = np.stack([np.eye(4)[1], random_vector(4, rng)], axis=1)
    got = expm_apply(h, block, 1.0, 4)
    np.testing.assert_allclose(got, np.exp(-np.diag(h))[:, None] * block, atol=1e-10)


def test_expm_apply_damping_after_shift(spec3, rng):
    h = spec3.matrix(random_parameters(spec3, rng))
    for tau in (0.1, 1.0, 5.0):
        v = random_vector(8, rng)
        e_min = lanczos(h, v, 5).ritz_pairs()[0][0]
        out = expm_apply(h, v, tau, 5)
        assert np.linalg.norm(out) * np.exp(tau * e_min) <= 1 + 1e-12


def test_approx_gibbs_full_space_is_exact(spec3, rng):
    theta = random_parameters(spec3, rng)
    q = approx_gibbs_diag(spec3, theta, 1.0, 8, n_probes=1, seed=3)
    np.testing.assert_allclose(q, model_distribution(gibbs_state(spec3, theta)), atol=1e-6)
    assert q.min() >= 0 and q.sum() == pytest.approx(1.0)


def test_approx_gibbs_ising_full_space(rng):
    spec = build_terms("ising", all_to_all(3))
    theta = random_parameters(spec, rng)
    q = approx_gibbs_diag(spec, theta, 1.0, 8)
    np.testing.assert_allclose(q, model_distribution(gibbs_state(spec, theta)), atol=1e-8)


def test_approx_gibbs_low_temperature_concentrates_on_ground_state(spec3, rng):
    theta = random_parameters(spec3, rng)
    h = spec3.matrix(theta)
    e, u = np.linalg.eigh(h)
    assert e[1] - e[0] > 1e-3
    q = approx_gibbs_diag(spec3, theta, 200.0, 8)
    np.testing.assert_allclose(q, np.abs(u[:, 0]) ** 2, atol=1e-6)


def test_approx_gibbs_small_subspace_is_normalized_and_seeded(spec3, rng):
    theta = random_parameters(spec3, rng)
    a = ritz_gibbs_diag(spec3.matrix(theta), 8, 1.0, 3, n_probes=3, seed=11)
    b = ritz_gibbs_diag(spec3.matrix(theta), 8, 1.0, 3, n_probes=3, seed=11)
    np.testing.assert_array_equal(a, b)
    assert a.min() >= 0 and a.sum() == pytest.approx(1.0)
