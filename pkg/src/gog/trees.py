"""
Tree-structured GGM marginal likelihoods within a supernode.

The tree activation function mixes the marginal likelihoods of all spanning
trees on the supernode's variables.  Each tree likelihood factorizes into
per-variable terms and per-edge weights, so sums over trees reduce to
matrix-tree determinants of a weighted Laplacian.  Everything is computed in
the log domain with the largest log weight factored out before taking
determinants.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .errors import (
    InvalidDegreesOfFreedom,
    NonPositiveDefinite,
    NonPositiveDeterminant,
    SingularLaplacian,
)
from .params import TreeHyper

LOG_PI = np.log(np.pi)


def _rates(x, hyper):
    pk = x.shape[1]
    D = np.eye(pk) if hyper.D is None else np.asarray(hyper.D, dtype=float)
    if D.ndim == 0:
        D = float(D) * np.eye(pk)
    return D, D + x.T @ x


def _log_g_pairs(delta, D):
    d = np.diag(D)
    det2 = np.outer(d, d) - D**2
    np.fill_diagonal(det2, 1.0)
    if np.any(det2 <= 0):
        raise NonPositiveDeterminant("a 2 x 2 rate submatrix is not positive definite")
    logd = np.log(d)
    return (
        special.gammaln((delta + 1) / 2) - special.gammaln(delta / 2)
        + (delta / 2) * np.add.outer(logd, logd)
        - ((delta + 1) / 2) * np.log(det2)
    )


def log_weights(x, hyper=TreeHyper()):
    """Matrix of log edge weights log w_ij; the diagonal is zero and unused."""
    n = x.shape[0]
    D, Dstar = _rates(x, hyper)
    lw = _log_g_pairs(hyper.delta + n, Dstar) - _log_g_pairs(hyper.delta, D)
    np.fill_diagonal(lw, 0.0)
    return lw


def log_weight(i, j, x, hyper=TreeHyper()):
    if i == j:
        raise ValueError("an edge needs two distinct nodes")
    return float(log_weights(x[:, [i, j]], _sub_hyper(hyper, [i, j]))[0, 1])


def _sub_hyper(hyper, idx):
    if hyper.D is None or np.ndim(hyper.D) == 0:
        return hyper
    return TreeHyper(hyper.delta, np.asarray(hyper.D)[np.ix_(idx, idx)])


def log_single_marginals(x, hyper=TreeHyper()):
    """log p(X_i) for each column under the one-node model."""
    n = x.shape[0]
    delta = hyper.delta
    D, Dstar = _rates(x, hyper)
    return (
        special.gammaln((delta + n) / 2) - special.gammaln(delta / 2)
        + (delta / 2) * np.log(np.diag(D))
        - ((delta + n) / 2) * np.log(np.diag(Dstar))
        - (n / 2) * LOG_PI
    )


@dataclass(frozen=True)
class WeightedLaplacian:
    """Laplacian of a complete graph given by log weights, rescaled by exp(-scale)."""

    log_w: np.ndarray

    @property
    def scale(self):
        pk = self.log_w.shape[0]
        if pk < 2:
            return 0.0
        return float(self.log_w[~np.eye(pk, dtype=bool)].max())

    def matrix(self):
        pk = self.log_w.shape[0]
        if not np.all(np.isfinite(self.log_w[~np.eye(pk, dtype=bool)])):
            raise SingularLaplacian("non-finite log weight")
        w = np.exp(self.log_w - self.scale)
        np.fill_diagonal(w, 0.0)
        return np.diag(w.sum(axis=1)) - w


def _reduced_logdet(L, u):
    keep = [i for i in range(L.shape[0]) if i != u]
    try:
        chol = linalg.cholesky(L[np.ix_(keep, keep)], lower=True)
    except linalg.LinAlgError:
        raise SingularLaplacian("reduced Laplacian is not positive definite") from None
    return 2.0 * np.log(np.diag(chol)).sum()


# Beyond this spread of log weights exp() underflows and the rescaled
# Laplacian loses edges; switch to elimination in the log domain.
MAX_LOG_SPREAD = 600.0


def _log_elimination(log_w, u):
    """
    Reduced-Laplacian log determinant by eliminating nodes in the log domain.

    Removing node v from a Laplacian leaves the Laplacian with weights
    w_ij + w_iv w_jv / d_v, so every step adds positive terms and the pivots
    d_v multiply to the determinant.
    """
    lw = np.array(log_w, dtype=float)
    np.fill_diagonal(lw, -np.inf)
    alive = [i for i in range(lw.shape[0])]
    total = 0.0
    for v in [i for i in alive if i != u]:
        alive.remove(v)
        row = lw[v, alive]
        log_d = special.logsumexp(row)
        if not np.isfinite(log_d):
            raise SingularLaplacian("node is disconnected from the rest")
        total += log_d
        sub = np.ix_(alive, alive)
        lw[sub] = np.logaddexp(lw[sub], row[:, None] + row[None, :] - log_d)
        np.fill_diagonal(lw, -np.inf)
    return total


def log_tree_sum(log_w, u=0):
    """log of the sum over spanning trees of the product of edge weights."""
    lap = log_w if isinstance(log_w, WeightedLaplacian) else WeightedLaplacian(np.asarray(log_w))
    pk = lap.log_w.shape[0]
    if pk == 1:
        return 0.0
    off = lap.log_w[~np.eye(pk, dtype=bool)]
    if np.all(np.isfinite(off)) and off.max() - off.min() > MAX_LOG_SPREAD:
        return float(_log_elimination(lap.log_w, u))
    return float(_reduced_logdet(lap.matrix(), u) + (pk - 1) * lap.scale)


def log_similarity_coarsened(x, hyper=TreeHyper(), zeta=1.0):
    """log of sum_T p(x | T)^zeta p(T) with the uniform prior on trees."""
    pk = x.shape[1]
    single = zeta * log_single_marginals(x, hyper).sum()
    if pk == 1:
        return float(single)
    return float(
        (2 - pk) * np.log(pk) + single + log_tree_sum(zeta * log_weights(x, hyper))
    )


def log_tree_activation(x, hyper=TreeHyper()):
    return log_similarity_coarsened(x, hyper, 1.0)


def edge_posteriors(x, hyper=TreeHyper(), zeta=1.0):
    """Posterior probability that each pair is an edge of the supernode's tree."""
    pk = x.shape[1]
    if pk < 2:
        raise ValueError("edge posteriors need at least two variables")
    lap = WeightedLaplacian(zeta * log_weights(x, hyper))
    L = lap.matrix()
    try:
        chol = linalg.cho_factor(L[1:, 1:], lower=True)
    except linalg.LinAlgError:
        raise SingularLaplacian("reduced Laplacian is not positive definite") from None
    Q = np.zeros((pk, pk))
    Q[1:, 1:] = linalg.cho_solve(chol, np.eye(pk - 1))
    dq = np.diag(Q)
    resistance = dq[:, None] + dq[None, :] - 2 * Q
    w = np.exp(lap.log_w - lap.scale)
    P = np.clip(w * resistance, 0.0, 1.0)
    np.fill_diagonal(P, 0.0)
    return (P + P.T) / 2


def map_tree(x, hyper=TreeHyper()):
    """Maximum-weight spanning tree under log w_ij (Kruskal, lexicographic ties)."""
    pk = x.shape[1]
    if pk == 1:
        return []
    return max_spanning_tree(log_weights(x, hyper))


def max_spanning_tree(log_w):
    from scipy.cluster.hierarchy import DisjointSet

    pk = log_w.shape[0]
    edges = sorted(
        ((i, j) for i in range(pk) for j in range(i + 1, pk)),
        key=lambda e: -log_w[e],
    )
    forest = DisjointSet(range(pk))
    tree = []
    for i, j in edges:
        if forest.merge(i, j):
            tree.append((i, j))
            if len(tree) == pk - 1:
                break
    return tree


def _log_gbar(nu, d, pk):
    a = (nu - pk + 1) / 2
    return -a * np.log(d) + special.gammaln(a)


def arborescence_parts(x, delta_bar, D_bar=None):
    """Per-root log factors and the log weight matrix of the directed model."""
    n, pk = x.shape
    if delta_bar <= pk - 1:
        raise InvalidDegreesOfFreedom(f"need delta_bar > {pk - 1}, got {delta_bar}")
    D, Dstar = _rates(x, TreeHyper(delta_bar, D_bar))
    ds, dd = np.diag(Dstar), np.diag(D)
    log_root = (
        _log_gbar(delta_bar + n, ds, pk) - _log_gbar(delta_bar, dd, pk) - (n / 2) * LOG_PI
    )
    cond_star = ds[None, :] - Dstar**2 / ds[:, None]
    cond = dd[None, :] - D**2 / dd[:, None]
    np.fill_diagonal(cond_star, 1.0)
    np.fill_diagonal(cond, 1.0)
    log_w = (
        0.5 * np.log(dd)[:, None]
        + _log_gbar(delta_bar + n + 1, cond_star, pk)
        - (n / 2) * LOG_PI
        - 0.5 * np.log(ds)[:, None]
        - _log_gbar(delta_bar + 1, cond, pk)
    )
    np.fill_diagonal(log_w, 0.0)
    return log_root, log_w


def log_rooted_tree_sums(log_w):
    """log of sum over arborescences rooted at r of prod w_ij, for every root r."""
    pk = log_w.shape[0]
    if pk == 1:
        return np.zeros(1)
    off = ~np.eye(pk, dtype=bool)
    scale = log_w[off].max()
    w = np.exp(log_w - scale)
    np.fill_diagonal(w, 0.0)
    # In-degree Laplacian: column sums of incoming weights on the diagonal.
    L = np.diag(w.sum(axis=0)) - w
    out = np.empty(pk)
    for r in range(pk):
        keep = [i for i in range(pk) if i != r]
        sign, logdet = np.linalg.slogdet(L[np.ix_(keep, keep)])
        if sign <= 0:
            raise SingularLaplacian("reduced in-degree Laplacian has non-positive determinant")
        out[r] = logdet + (pk - 1) * scale
    return out


def log_arborescence_activation(x, delta_bar=3.0, D_bar=None, root=None):
    """
    Log marginal likelihood of `x` under a uniform mixture of arborescences.

    With `root` given, the mixture runs over arborescences rooted at that node
    only (root fixed, e.g. at the supernode center).
    """
    pk = x.shape[1]
    log_root, log_w = arborescence_parts(x, delta_bar, D_bar)
    sums = log_rooted_tree_sums(log_w)
    if root is not None:
        return float((2 - pk) * np.log(pk) + log_root[root] + sums[root])
    return float((1 - pk) * np.log(pk) + special.logsumexp(log_root + sums))


def log_matrix_t_similarity(x, hyper=TreeHyper(), zeta=1.0):
    """zeta times the log marginal of `x` under a Wishart prior on a full precision."""
    n, pk = x.shape
    delta = hyper.delta
    D, Dstar = _rates(x, hyper)

    def logdet(M):
        try:
            return 2.0 * np.log(np.diag(linalg.cholesky(M, lower=True))).sum()
        except linalg.LinAlgError:
            raise NonPositiveDefinite("rate matrix is not positive definite") from None

    a, a_star = (delta + pk - 1) / 2, (delta + n + pk - 1) / 2
    val = (
        special.multigammaln(a_star, pk) - special.multigammaln(a, pk)
        + a * logdet(D) - a_star * logdet(Dstar) - (n * pk / 2) * LOG_PI
    )
    return float(zeta * val)


def log_similarity(x, hp, members=None):
    """Coarsened log similarity of a supernode under the kind selected in `hp`."""
    if hp.similarity == "none":
        return 0.0
    tree = hp.tree
    if members is not None and tree.D is not None:
        tree = TreeHyper(tree.delta, tree.rate(members))
    if hp.similarity == "matrix_t":
        return log_matrix_t_similarity(x, tree, hp.zeta)
    return log_similarity_coarsened(x, tree, hp.zeta)
