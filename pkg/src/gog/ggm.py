"""
G-Wishart machinery for the supergraph.

Graphs are given as a node count `m` plus an iterable of pairs (i, j) with
i < j.  The G-Wishart density is parameterized by degrees of freedom `delta`
and rate `D`:  p(K) proportional to |K|^{(delta - 2) / 2} exp(-tr(K D) / 2).
"""

import logging
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy import linalg, special, stats

from .errors import GoGError, ModeNotFound, NotDecomposable

LOG_2PI = math.log(2 * math.pi)
IPS_TOL = 1e-10
IPS_MAX_SWEEPS = 500

log = logging.getLogger(__name__)


def _norm_edges(edges):
    return frozenset((min(i, j), max(i, j)) for i, j in edges if i != j)


def maximal_cliques(m, edges):
    g = nx.Graph()
    g.add_nodes_from(range(m))
    g.add_edges_from(edges)
    return [tuple(sorted(c)) for c in nx.find_cliques(g)]


def gwishart_mode(m, edges, delta, D, tol=IPS_TOL, max_sweeps=IPS_MAX_SWEEPS):
    """
    Mode of the G-Wishart density by iterative proportional scaling.

    The mode K solves (K^{-1})_ij = D_ij / (delta - 2) on the diagonal and on
    the edges of G, with K_ij = 0 elsewhere.
    """
    if delta <= 2:
        raise ModeNotFound("the G-Wishart mode requires delta > 2")
    S = np.asarray(D, dtype=float) / (delta - 2)
    K = np.diag(1.0 / np.diag(S))
    cliques = [c for c in maximal_cliques(m, edges) if len(c) > 1]
    if not cliques:
        return K
    if len(cliques) == 1 and len(cliques[0]) == m:
        return np.linalg.inv(S)
    S_inv = {c: np.linalg.inv(S[np.ix_(c, c)]) for c in cliques}
    for _ in range(max_sweeps):
        K_prev = K.copy()
        for c in cliques:
            ix = np.ix_(c, c)
            Sigma_cc = np.linalg.inv(K)[ix]
            K[ix] += S_inv[c] - np.linalg.inv(Sigma_cc)
            K = (K + K.T) / 2
        # Tolerance relative to the scale of K; entries grow like 1 / (1 - rho^2).
        if np.max(np.abs(K - K_prev)) < tol * max(1.0, np.max(np.abs(K))):
            return K
    # IPS is linear and crawls on near-collinear S; finish with Newton steps.
    return _newton_mode(K, S, edges, tol)


def _newton_mode(K, S, edges, tol, max_iter=100):
    """
    Damped Newton on f(K) = tr(K S) - log|K| over matrices with zeros off G.

    The free parameters are the diagonal and the edges of G; the Hessian of
    -log|K| along symmetric basis matrices E_a, E_b is tr(W E_a W E_b).
    """
    m = K.shape[0]
    params = [(i, i) for i in range(m)] + sorted(_norm_edges(edges))
    # Each parameter contributes one (diagonal) or two ordered index pairs.
    terms = [(a, i, j) for a, (i, j) in enumerate(params)]
    terms += [(a, j, i) for a, (i, j) in enumerate(params) if i != j]
    idx = np.array([t[0] for t in terms])
    ti = np.array([t[1] for t in terms])
    tj = np.array([t[2] for t in terms])
    P = np.zeros((len(terms), len(params)))
    P[np.arange(len(terms)), idx] = 1.0

    def objective(K):
        try:
            L = np.linalg.cholesky(K)
        except np.linalg.LinAlgError:
            return np.inf
        return float(np.sum(K * S) - 2 * np.log(np.diag(L)).sum())

    f = objective(K)
    for _ in range(max_iter):
        W = np.linalg.inv(K)
        g = P.T @ (S - W)[ti, tj]
        H = P.T @ (W[np.ix_(tj, ti)] * W[np.ix_(tj, ti)].T) @ P
        step = np.linalg.solve(H, g)
        t = 1.0
        while t > 1e-12:
            dK = np.zeros_like(K)
            dK[ti, tj] = (P @ step) * t
            f_new = objective(K - dK)
            if f_new <= f:
                break
            t /= 2
        else:
            break
        K, f = K - dK, f_new
        if np.max(np.abs(dK)) < tol * max(1.0, np.max(np.abs(K))):
            return (K + K.T) / 2
    raise ModeNotFound("mode search did not converge")


def log_norm_laplace(m, edges, delta, D):
    """
    Diagonal-Laplace approximation of log I_G(delta, D).

    The curvature of the diagonal entries uses (delta - 2) (K^{-1})_ii^2 so an
    isolated node gives (2 pi)^{1/2} e^{1 - delta/2} (delta - 2)^{(delta-1)/2}
    D_ii^{-delta/2}.  Any per-node constant cancels in likelihood ratios
    because both constants in the marginal likelihood have the same nodes.
    """
    edges = _norm_edges(edges)
    D = np.asarray(D, dtype=float)
    K = gwishart_mode(m, edges, delta, D)
    W = np.linalg.inv(K)
    sign, logdet = np.linalg.slogdet(K)
    if sign <= 0:
        raise ModeNotFound("mode is not positive definite")
    log_h = 0.5 * (delta - 2) * logdet - 0.5 * np.sum(K * D)
    log_H = m * math.log(delta - 2) + 2 * np.log(np.diag(W)).sum()
    for i, j in edges:
        log_H += math.log(delta - 2) + math.log(W[i, i] * W[j, j] + W[i, j] ** 2)
    n_par = m + len(edges)
    return float(log_h + 0.5 * n_par * LOG_2PI - 0.5 * log_H)


def log_norm_single_laplace(delta, d):
    """Closed form of log_norm_laplace for a graph with one node."""
    return (
        0.5 * LOG_2PI + 1 - delta / 2
        + 0.5 * (delta - 1) * np.log(delta - 2) - 0.5 * delta * np.log(d)
    )


def log_norm_single_exact(delta, d):
    return special.gammaln(delta / 2) - (delta / 2) * np.log(d / 2)


def log_norm_complete(delta, D):
    """Exact log normalizing constant of the Wishart on a complete graph."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    m = D.shape[0]
    a = (delta + m - 1) / 2
    sign, logdet = np.linalg.slogdet(D)
    return float(a * m * math.log(2) + special.multigammaln(a, m) - a * logdet)


def cliques_and_separators(m, edges):
    g = nx.Graph()
    g.add_nodes_from(range(m))
    g.add_edges_from(edges)
    if not nx.is_chordal(g):
        raise NotDecomposable("graph is not decomposable")
    cliques = [tuple(sorted(c)) for c in nx.chordal_graph_cliques(g)]
    cliques.sort()
    jt = nx.Graph()
    jt.add_nodes_from(range(len(cliques)))
    for a in range(len(cliques)):
        for b in range(a + 1, len(cliques)):
            jt.add_edge(a, b, weight=len(set(cliques[a]) & set(cliques[b])))
    separators = []
    for a, b in nx.maximum_spanning_tree(jt).edges():
        sep = tuple(sorted(set(cliques[a]) & set(cliques[b])))
        if sep:
            separators.append(sep)
    return cliques, separators


def log_norm_exact_decomposable(m, edges, delta, D):
    """Exact log I_G(delta, D) for decomposable G via its junction tree."""
    D = np.asarray(D, dtype=float)
    cliques, separators = cliques_and_separators(m, _norm_edges(edges))
    out = sum(log_norm_complete(delta, D[np.ix_(c, c)]) for c in cliques)
    out -= sum(log_norm_complete(delta, D[np.ix_(s, s)]) for s in separators)
    return float(out)


@dataclass(frozen=True)
class Supergraph:
    """Superedges among K supernodes; `first_slots[k]` is k's first-PC slot."""

    K: int
    edges: frozenset = frozenset()
    first_slots: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "edges", _norm_edges(self.edges))
        for k, l in self.edges:
            if not 0 <= k < l < self.K:
                raise ValueError(f"superedge {(k, l)} out of range for K={self.K}")

    def augmented_edges(self):
        s = self.first_slots
        return frozenset((min(s[k], s[l]), max(s[k], s[l])) for k, l in self.edges)


class GGMPosterior:
    """
    Marginal likelihood of graphs on m nodes for data with cross-product U.

    log_lik(G) = log I_G(delta + n, D + U) - (n m / 2) log 2 pi - log I_G(delta, D),
    with results memoized by edge set.
    """

    def __init__(self, U, n, delta=3.0, D=None):
        U = np.asarray(U, dtype=float)
        self.m = U.shape[0]
        self.n = n
        self.delta = delta
        self.D = np.eye(self.m) if D is None else np.asarray(D, dtype=float)
        self.Dstar = self.D + U
        self._memo = {}

    @classmethod
    def from_data(cls, Y, delta=3.0, D=None):
        Y = np.asarray(Y, dtype=float)
        return cls(Y.T @ Y, Y.shape[0], delta, D)

    def log_lik(self, edges):
        edges = _norm_edges(edges)
        val = self._memo.get(edges)
        if val is None:
            val = (
                log_norm_laplace(self.m, edges, self.delta + self.n, self.Dstar)
                - 0.5 * self.n * self.m * LOG_2PI
                - log_norm_laplace(self.m, edges, self.delta, self.D)
            )
            self._memo[edges] = val
        return val


def log_single_node_lik(n, delta, d, d_star):
    return (
        log_norm_single_laplace(delta + n, d_star) - 0.5 * n * LOG_2PI
        - log_norm_single_laplace(delta, d)
    )


def log_marginal_likelihood(pcs, G, hp):
    """
    log p(Y | T, G, X) assembled from the first-PC block and single nodes.

    `pcs` is a PCViews and `G` a Supergraph over its supernodes; `hp` holds
    the G-Wishart hyperparameters (`hp.gw` or a GWishartHyper itself).
    """
    gw = getattr(hp, "gw", hp)
    Y = pcs.Y
    n, p = Y.shape
    first = list(pcs.first_slots)
    post = GGMPosterior(Y[:, first].T @ Y[:, first], n, gw.delta_G, gw.rate(first))
    out = post.log_lik(G.edges)
    lower = [i for i in range(p) if i not in set(first)]
    if lower:
        d = np.diag(gw.rate(lower))
        d_star = d + (Y[:, lower] ** 2).sum(axis=0)
        out += float(np.sum(log_single_node_lik(n, gw.delta_G, d, d_star)))
    return float(out)


def log_marginal_likelihood_full(pcs, G, hp):
    """Unfactorized evaluation on the augmented p-node graph (for checking)."""
    gw = getattr(hp, "gw", hp)
    Y = pcs.Y
    n, p = Y.shape
    D = gw.rate(range(p))
    edges = G.augmented_edges()
    return float(
        log_norm_laplace(p, edges, gw.delta_G + n, D + Y.T @ Y)
        - 0.5 * n * p * LOG_2PI
        - log_norm_laplace(p, edges, gw.delta_G, D)
    )


def _xlogy(count, prob):
    # count * log(prob) with 0 * log(0) = 0, so xi in {0, 1} is allowed.
    if count == 0:
        return 0.0
    return count * math.log(prob) if prob > 0 else -math.inf


def log_er_prior(n_edges, K, xi):
    return _xlogy(n_edges, xi) + _xlogy(K * (K - 1) // 2 - n_edges, 1.0 - xi)


def pair_from_index(idx, K):
    """Map 0 <= idx < C(K, 2) to the pair (k, l), k < l, in lexicographic order."""
    k = 0
    while idx >= K - 1 - k:
        idx -= K - 1 - k
        k += 1
    return k, k + 1 + idx


@dataclass
class GraphChainState:
    """Single-edge-flip chain over graphs on K nodes with cached log likelihood."""

    posterior: GGMPosterior
    edges: frozenset = frozenset()
    log_lik: float = field(default=None)
    accepted: int = 0
    proposed: int = 0

    def __post_init__(self):
        self.edges = _norm_edges(self.edges)
        if self.log_lik is None:
            self.log_lik = self.posterior.log_lik(self.edges)

    @property
    def K(self):
        return self.posterior.m


def graph_flip_step(state, xi_se, rng, zeta=1.0):
    """
    One Metropolis-Hastings flip of a uniformly chosen pair.

    The acceptance ratio is the Erdos-Renyi prior ratio times the marginal
    likelihood ratio raised to `zeta`.  Returns the proposed pair.
    """
    K = state.K
    if K < 2:
        return None
    pair = pair_from_index(int(rng.integers(K * (K - 1) // 2)), K)
    log_odds = _xlogy(1, xi_se) - _xlogy(1, 1.0 - xi_se)
    if pair in state.edges:
        new_edges = state.edges - {pair}
        log_prior_ratio = -log_odds
    else:
        new_edges = state.edges | {pair}
        log_prior_ratio = log_odds
    state.proposed += 1
    try:
        new_lik = state.posterior.log_lik(new_edges)
    except GoGError as exc:
        log.warning("rejecting superedge flip after failed evaluation: %s", exc)
        return pair
    log_ratio = log_prior_ratio + zeta * (new_lik - state.log_lik)
    if log_ratio >= 0 or rng.random() < math.exp(log_ratio):
        state.edges = new_edges
        state.log_lik = new_lik
        state.accepted += 1
    return pair


def run_graph_chain(posterior, n_iter, xi_se, rng, edges=(), zeta=1.0, burnin=0):
    """Run the flip chain; returns (edge inclusion frequencies, final state)."""
    state = GraphChainState(posterior, frozenset(edges))
    K = posterior.m
    counts = np.zeros((K, K))
    for it in range(n_iter):
        graph_flip_step(state, xi_se, rng, zeta)
        if it >= burnin:
            for i, j in state.edges:
                counts[i, j] += 1
    kept = max(n_iter - burnin, 1)
    freq = (counts + counts.T) / kept
    return freq, state


def sample_gwishart(m, edges, delta, D=None, sweeps=100, rng=None):
    """
    Approximate G-Wishart draw by block Gibbs over the maximal cliques.

    Each clique block K_cc is redrawn from its full conditional, a Wishart
    with delta + |c| - 1 degrees of freedom and scale D_cc^{-1} shifted by
    K_cr K_rr^{-1} K_rc.  Non-edges stay exactly zero.
    """
    rng = np.random.default_rng(rng)
    D = np.eye(m) if D is None else np.asarray(D, dtype=float)
    edges = _norm_edges(edges)
    cliques = sorted(maximal_cliques(m, edges))
    K = np.diag(delta / np.diag(D))
    for _ in range(sweeps):
        for c in cliques:
            rest = [i for i in range(m) if i not in c]
            ix = np.ix_(c, c)
            A = stats.wishart(df=delta + len(c) - 1, scale=np.linalg.inv(D[ix])).rvs(
                random_state=rng
            )
            A = np.atleast_2d(A)
            if rest:
                K_cr = K[np.ix_(c, rest)]
                B = K_cr @ linalg.solve(K[np.ix_(rest, rest)], K_cr.T, assume_a="pos")
                A = A + B
            K[ix] = (A + A.T) / 2
    return K
