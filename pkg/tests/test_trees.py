import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from gog.errors import InvalidDegreesOfFreedom
from gog.params import HyperParams, TreeHyper
from gog.trees import (
    WeightedLaplacian, arborescence_parts, edge_posteriors, log_arborescence_activation,
    log_matrix_t_similarity, log_rooted_tree_sums, log_similarity, log_similarity_coarsened,
    log_single_marginals, log_tree_sum, log_weight, log_weights, map_tree,
)

from oracles import (
    all_trees, brute_arborescence, brute_log_tree_sum, brute_tree_posterior, quad_log_norm_2node,
)


def random_log_w(m, rng, spread=2.0):
    A = rng.normal(scale=spread, size=(m, m))
    A = (A + A.T) / 2
    np.fill_diagonal(A, 0)
    return A


def standardized(n, pk, rng):
    x = rng.normal(size=(n, pk)) @ rng.normal(size=(pk, pk))
    x -= x.mean(axis=0)
    return x * np.sqrt(n) / np.linalg.norm(x, axis=0)


def test_empty_data_gives_unit_weight():
    assert log_weight(0, 1, np.zeros((0, 2)), TreeHyper(3, np.eye(2))) == pytest.approx(0)


def test_orthogonal_columns_weight():
    x = np.array([[1.0, 1.0], [1.0, -1.0]])
    expected = (
        special.gammaln(3) - special.gammaln(2.5) + 5 * np.log(3) - 3 * np.log(9)
    ) - (special.gammaln(2) - special.gammaln(1.5))
    assert log_weight(0, 1, x) == pytest.approx(expected, rel=1e-12)


def test_two_node_similarity_matches_quadrature():
    # With one possible tree the similarity is the complete-graph marginal,
    # a ratio of G-Wishart normalizing integrals computed here by quadrature.
    x = standardized(3, 2, np.random.default_rng(0))
    delta, n = 3.0, 3
    D = np.eye(2)
    joint = (
        quad_log_norm_2node(delta + n, D + x.T @ x, True)
        - quad_log_norm_2node(delta, D, True)
        - n * np.log(2 * np.pi)
    )
    assert log_similarity_coarsened(x, TreeHyper(delta), 1.0) == pytest.approx(joint, abs=1e-5)
    singles = (
        quad_log_norm_2node(delta + n, D + x.T @ x, False)
        - quad_log_norm_2node(delta, D, False)
        - n * np.log(2 * np.pi)
    )
    assert log_single_marginals(x, TreeHyper(delta)).sum() == pytest.approx(singles, abs=1e-7)


def test_weight_increases_with_correlation():
    n = 30
    rng = np.random.default_rng(1)
    z = rng.normal(size=(n, 2))
    z -= z.mean(axis=0)
    q, _ = np.linalg.qr(z)
    vals = []
    for r in (0.0, 0.2, 0.5, 0.8, 0.95):
        x = np.sqrt(n) * np.column_stack([q[:, 0], r * q[:, 0] + np.sqrt(1 - r * r) * q[:, 1]])
        vals.append(log_weights(x)[0, 1])
    assert np.all(np.diff(vals) > 0)
    # The weight depends on |r| only.
    x = np.sqrt(n) * np.column_stack([q[:, 0], -0.5 * q[:, 0] + np.sqrt(0.75) * q[:, 1]])
    assert log_weights(x)[0, 1] == pytest.approx(vals[2], rel=1e-12)


def test_cayley_and_single_tree():
    assert log_tree_sum(np.zeros((4, 4))) == pytest.approx(np.log(16))
    w = np.zeros((2, 2))
    w[0, 1] = w[1, 0] = np.log(3)
    assert log_tree_sum(w) == pytest.approx(np.log(3))
    assert log_tree_sum(np.zeros((1, 1))) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10**6))
def test_tree_sum_matches_prufer(m, seed):
    lw = random_log_w(m, np.random.default_rng(seed))
    assert log_tree_sum(lw) == pytest.approx(brute_log_tree_sum(lw), rel=1e-9, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10**6))
def test_tree_sum_root_invariance_and_scaling(m, seed):
    rng = np.random.default_rng(seed)
    lw = random_log_w(m, rng)
    ref = log_tree_sum(lw)
    for u in range(m):
        assert log_tree_sum(lw, u) == pytest.approx(ref, rel=1e-9, abs=1e-12)
    c = rng.normal()
    shifted = lw + c
    np.fill_diagonal(shifted, 0)
    assert log_tree_sum(shifted) == pytest.approx(ref + (m - 1) * c, rel=1e-9, abs=1e-9)


def test_laplacian_rows_sum_to_zero():
    L = WeightedLaplacian(random_log_w(5, np.random.default_rng(2))).matrix()
    assert np.max(np.abs(L.sum(axis=1))) < 1e-12
    assert np.linalg.eigvalsh(L)[0] > -1e-12


def test_extreme_weights_stay_finite():
    lw = random_log_w(6, np.random.default_rng(3), spread=300)
    assert np.isfinite(log_tree_sum(lw))
    assert log_tree_sum(lw) == pytest.approx(brute_log_tree_sum(lw), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10**6))
def test_log_elimination_matches_cholesky(m, seed):
    from gog.trees import _log_elimination

    lw = random_log_w(m, np.random.default_rng(seed))
    for u in (0, m - 1):
        assert _log_elimination(lw, u) == pytest.approx(log_tree_sum(lw), rel=1e-9, abs=1e-10)


def _brute_similarity(x, hyper, zeta):
    pk = x.shape[1]
    lw = log_weights(x, hyper)
    single = log_single_marginals(x, hyper).sum()
    terms = [zeta * (single + sum(lw[e] for e in t)) for t in all_trees(pk)]
    return special.logsumexp(terms) - (pk - 2) * np.log(pk)


@pytest.mark.parametrize("pk", [1, 2, 3, 4, 5])
def test_coarsened_similarity_matches_enumeration(pk):
    rng = np.random.default_rng(pk)
    x = standardized(12, pk, rng)
    got = log_similarity_coarsened(x, TreeHyper(), 0.37)
    assert got == pytest.approx(_brute_similarity(x, TreeHyper(), 0.37), rel=1e-8)


def test_two_node_similarity_reduction():
    x = standardized(10, 2, np.random.default_rng(4))
    z = 0.4
    h = TreeHyper()
    expected = z * log_single_marginals(x, h).sum() + z * log_weights(x, h)[0, 1]
    assert log_similarity_coarsened(x, h, z) == pytest.approx(expected, rel=1e-12)


def test_similarity_monotone_in_weights():
    rng = np.random.default_rng(5)
    lw = random_log_w(5, rng)
    base = log_tree_sum(lw)
    for i, j in [(0, 1), (2, 4), (1, 3)]:
        up = lw.copy()
        up[i, j] += 0.1
        up[j, i] += 0.1
        assert log_tree_sum(up) > base


@pytest.mark.parametrize("pk", [2, 3, 4, 5])
def test_edge_posteriors_match_enumeration(pk):
    rng = np.random.default_rng(10 + pk)
    x = standardized(15, pk, rng)
    P = edge_posteriors(x)
    _, _, Q = brute_tree_posterior(log_weights(x))
    assert np.max(np.abs(P - Q)) < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6), st.floats(0.05, 1.0))
def test_edge_posteriors_sum(pk, seed, zeta):
    x = standardized(pk + 5, pk, np.random.default_rng(seed))
    P = edge_posteriors(x, TreeHyper(), zeta)
    assert P[np.triu_indices(pk, 1)].sum() == pytest.approx(pk - 1, abs=1e-9)
    assert np.all((P >= 0) & (P <= 1))


def test_edge_posterior_monotone_in_own_weight():
    from oracles import brute_tree_posterior as btp

    rng = np.random.default_rng(6)
    lw = random_log_w(5, rng)
    _, _, P0 = btp(lw)
    lw2 = lw.copy()
    lw2[1, 3] += 0.2
    lw2[3, 1] += 0.2
    _, _, P1 = btp(lw2)
    assert P1[1, 3] > P0[1, 3]


def test_map_tree():
    rng = np.random.default_rng(7)
    for pk in (2, 4, 6):
        x = standardized(20, pk, rng)
        lw = log_weights(x)
        best = max(all_trees(pk), key=lambda t: sum(lw[e] for e in t))
        assert sorted(map_tree(x)) == sorted(best)
    from gog.trees import max_spanning_tree

    assert sorted(max_spanning_tree(np.zeros((4, 4)))) == [(0, 1), (0, 2), (0, 3)]
    assert map_tree(np.ones((3, 1))) == []


@pytest.mark.parametrize("pk", [1, 2, 3, 4])
def test_arborescence_matches_enumeration(pk):
    x = standardized(9, pk, np.random.default_rng(20 + pk))
    delta = pk + 1.5
    assert log_arborescence_activation(x, delta) == pytest.approx(
        brute_arborescence(x, delta), rel=1e-8
    )


def test_arborescence_single_node_reduces():
    x = standardized(9, 1, np.random.default_rng(8))
    assert log_arborescence_activation(x, 3.0) == pytest.approx(
        log_single_marginals(x, TreeHyper(3.0))[0], rel=1e-12
    )


def test_arborescence_root_exchangeable():
    rng = np.random.default_rng(9)
    A = rng.normal(size=(6, 6))
    lw = (A + A.T) / 2
    np.fill_diagonal(lw, 0)
    sums = log_rooted_tree_sums(lw)
    assert np.max(np.abs(sums - sums[0])) < 1e-9 * max(1, abs(sums[0]))
    x = standardized(20, 4, rng)
    _, lw_x = arborescence_parts(x, 5.0)
    # Standardized data with identity rate: w_ij = w_ji.
    assert np.allclose(lw_x, lw_x.T, atol=1e-10)


def test_arborescence_root_fixed_option():
    x = standardized(9, 3, np.random.default_rng(11))
    vals = [log_arborescence_activation(x, 4.0, root=r) for r in range(3)]
    total = log_arborescence_activation(x, 4.0)
    # Averaging the root-fixed versions over a uniform root recovers the mixture.
    assert special.logsumexp(vals) - np.log(3) == pytest.approx(total, rel=1e-10)


def test_arborescence_needs_enough_degrees_of_freedom():
    with pytest.raises(InvalidDegreesOfFreedom):
        log_arborescence_activation(np.ones((3, 4)), 3.0)


def test_matrix_t_single_node_and_empty_data():
    x = standardized(10, 1, np.random.default_rng(12))
    assert log_matrix_t_similarity(x, TreeHyper(), 0.3) == pytest.approx(
        0.3 * log_single_marginals(x, TreeHyper())[0], rel=1e-12
    )
    assert log_matrix_t_similarity(np.zeros((0, 3)), TreeHyper(), 1.0) == pytest.approx(0, abs=1e-12)


def test_matrix_t_against_determinant_identity():
    rng = np.random.default_rng(13)
    n, pk, delta = 8, 3, 3.0
    x = standardized(n, pk, rng)
    D = np.eye(pk)
    # Matrix-t density written with |I_n + x D^{-1} x'| in place of |D*| / |D|.
    a = (delta + pk - 1) / 2
    direct = (
        special.multigammaln(a + n / 2, pk) - special.multigammaln(a, pk)
        - (n * pk / 2) * np.log(np.pi)
        - (a + n / 2) * np.linalg.slogdet(np.eye(n) + x @ np.linalg.inv(D) @ x.T)[1]
        - (n / 2) * np.linalg.slogdet(D)[1]
    )
    assert log_matrix_t_similarity(x, TreeHyper(delta), 1.0) == pytest.approx(direct, rel=1e-10)


def test_similarity_dispatch():
    x = standardized(10, 3, np.random.default_rng(14))
    hp = HyperParams(zeta=0.5)
    assert log_similarity(x, hp.replace(similarity="none")) == 0.0
    assert log_similarity(x, hp) == pytest.approx(log_similarity_coarsened(x, TreeHyper(), 0.5))
    assert log_similarity(x, hp.replace(similarity="matrix_t")) == pytest.approx(
        log_matrix_t_similarity(x, TreeHyper(), 0.5)
    )
