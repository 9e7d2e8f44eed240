"""
Synthetic data generators and the exhaustive-enumeration posterior oracle.

Generators return raw (unstandardized) values; `DataMatrix` standardizes.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .data import DataMatrix
from .errors import NonPositiveDefinite, TooLarge
from .ggm import GGMPosterior, log_er_prior, run_graph_chain, sample_gwishart
from .target import Evaluator

FOUR_BLOCKS = (3, 5, 5, 6)
LATENT_BLOCKS = (5, 10, 20)


def n_edges_for_density(p, density):
    # Python's round() is round-half-even.
    return int(round(density * p * (p - 1) / 2))


def random_graph(p, density, rng):
    """Uniformly random graph on p nodes with round(density * C(p, 2)) edges."""
    if not 0 < density < 1:
        raise ValueError("density must lie in (0, 1)")
    pairs = list(itertools.combinations(range(p), 2))
    m = n_edges_for_density(p, density)
    pick = rng.choice(len(pairs), size=m, replace=False)
    return frozenset(pairs[i] for i in sorted(pick))


def gaussian_from_precision(Psi, n, rng):
    """n i.i.d. rows from N(0, Psi^{-1}) via the Cholesky factor of Psi."""
    Psi = np.asarray(Psi, dtype=float)
    try:
        L = linalg.cholesky(Psi, lower=True)
    except linalg.LinAlgError:
        raise NonPositiveDefinite("precision matrix is not positive definite") from None
    Z = rng.standard_normal((n, Psi.shape[0]))
    # Psi = L L', so x = L'^{-1} z has covariance Psi^{-1}.
    return linalg.solve_triangular(L, Z.T, lower=True, trans="T").T


def block_labels(sizes):
    return np.repeat(np.arange(len(sizes)), sizes)


def four_block_graph():
    """Latent edges of the 19-node example (0-based), within and across blocks."""
    within = [(i, j) for i in range(3) for j in range(i + 1, 3)]
    within += [(3, i) for i in range(4, 8)]
    within += [(8, i) for i in range(9, 13)]
    within += [(13, i) for i in range(14, 19)]
    across = [(0, 18)] + [(i, i + 5) for i in range(3, 6)] + [(8, i) for i in range(13, 17)]
    return within, across


def four_block_precision(min_eig=0.1):
    """
    Precision matrix of the 19-node four-block example.

    With unit diagonal the listed entries do not give a positive definite
    matrix (node 9 carries five -0.6 entries), so the diagonal is raised by
    the smallest common amount that makes the least eigenvalue `min_eig`.
    Pass min_eig=None for the literal unit-diagonal matrix.
    """
    P = np.eye(19)

    def put(i, j, v):
        P[i, j] = P[j, i] = v

    within, across = four_block_graph()
    # Within-block value by the block's first node.
    value = {0: 0.1 / math.sqrt(2), 3: 0.1 / 2, 8: 0.1 / 2, 13: 0.1 / math.sqrt(5)}
    first = {i: s for s, size in zip((0, 3, 8, 13), FOUR_BLOCKS) for i in range(s, s + size)}
    for i, j in within:
        put(i, j, value[first[i]])
    put(0, 18, -0.2)
    for i, j in across[1:]:
        put(i, j, -0.6)
    if min_eig is not None:
        lo = np.linalg.eigvalsh(P)[0]
        if lo < min_eig:
            P += (min_eig - lo) * np.eye(19)
    return P


def four_block_data(n, rng, min_eig=0.1):
    return gaussian_from_precision(four_block_precision(min_eig), n, rng)


def block_tridiagonal_precision():
    P = np.eye(6)
    for i, j in ((0, 1), (1, 2), (3, 4), (4, 5)):
        P[i, j] = P[j, i] = 0.4
    return P


def block_tridiagonal_data(n, rng):
    """p = 6 data from two tridiagonal 3-blocks with off-diagonal 0.4."""
    return gaussian_from_precision(block_tridiagonal_precision(), n, rng)


def factor_precision(superedge):
    P = np.eye(3)
    if superedge:
        P[0, 2] = P[2, 0] = 0.9
    return P


@dataclass(frozen=True)
class LatentFactor:
    block_sizes: tuple = LATENT_BLOCKS
    sigma_eps2: float = 0.01
    superedge: bool = False
    n: int = 1000


def latent_factor_data(design, rng):
    """X_ij = Z_{i, b(j)} + eps_ij with one Gaussian factor per block."""
    K = len(design.block_sizes)
    P = np.eye(K)
    if design.superedge:
        if K < 3:
            raise ValueError("the superedge variant needs at least three blocks")
        P[:3, :3] = factor_precision(True)
    Z = gaussian_from_precision(P, design.n, rng)
    labels = block_labels(design.block_sizes)
    eps = rng.standard_normal((design.n, len(labels))) * math.sqrt(design.sigma_eps2)
    return Z[:, labels] + eps


# Single-level GGM edge recovery --------------------------------------------

def edge_recovery_replicate(p, n, density, rng, iters=20000, burnin=2000, delta=3.0):
    """
    One replicate of the edge-recovery study.

    Draws a random graph, a G-Wishart(delta, I) precision and n observations,
    then estimates edge inclusion probabilities with the flip sampler under a
    uniform graph prior.  Returns (scores, truth) over the C(p, 2) pairs.
    """
    G = random_graph(p, density, rng)
    Psi = sample_gwishart(p, G, delta, np.eye(p), rng=rng)
    X = DataMatrix(gaussian_from_precision(Psi, n, rng))
    post = GGMPosterior.from_data(X.values, delta, np.eye(p))
    freq, _ = run_graph_chain(post, iters, 0.5, rng, burnin=burnin)
    iu = np.triu_indices(p, 1)
    truth = np.array([(i, j) in G for i, j in zip(*iu)])
    return freq[iu], truth


# Exhaustive enumeration ----------------------------------------------------

TARGETS = ("posterior", "coarsened", "cut", "flat")


@dataclass
class Enumeration:
    """Normalized distribution over (centers, supergraph) atoms."""

    centers: list
    assignments: np.ndarray
    edges: list
    log_weights: np.ndarray
    probs: np.ndarray

    @property
    def p(self):
        return self.assignments.shape[1]

    def coclustering(self):
        P = np.zeros((self.p, self.p))
        for a, w in zip(self.assignments, self.probs):
            P += w * (a[:, None] == a[None, :])
        return P

    def superedge_matrix(self):
        S = np.zeros((self.p, self.p))
        for a, E, w in zip(self.assignments, self.edges, self.probs):
            for k, l in E:
                mask = np.outer(a == k, a == l)
                S += w * (mask | mask.T)
        return S

    def k_marginal(self):
        out = np.zeros(self.p + 1)
        for C, w in zip(self.centers, self.probs):
            out[len(C)] += w
        return out


def _graphs(K):
    pairs = list(itertools.combinations(range(K), 2))
    for mask in range(2 ** len(pairs)):
        yield frozenset(pairs[b] for b in range(len(pairs)) if mask >> b & 1)


def enumerate_posterior(X, hp, target="coarsened", p_max=6):
    """
    Exact distribution over all (C, G) by enumeration.

    target: "posterior" (zeta = 1 in both similarity and likelihood),
    "coarsened" (hp.zeta as given), "cut" (coarsened prior on C times the
    exact conditional posterior of G given C) or "flat" (all log terms 0).
    """
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}")
    X = X if isinstance(X, DataMatrix) else DataMatrix(X)
    if X.p > p_max:
        raise TooLarge(f"p = {X.p} exceeds p_max = {p_max}")
    if target == "posterior":
        hp = hp.replace(zeta=1.0)
    ev = Evaluator(X, hp)
    centers, assigns, edges, logw = [], [], [], []
    for K in range(1, X.p + 1):
        for C in itertools.combinations(range(X.p), K):
            T = ev.tessellation(C)
            block = []
            for E in _graphs(K):
                if target == "flat":
                    lw = 0.0
                elif target == "cut":
                    lw = log_er_prior(len(E), K, hp.xi_se) + ev.log_lik(T, E)
                else:
                    lw = ev.log_target(T, E)
                centers.append(C)
                assigns.append(T.assignment)
                edges.append(E)
                block.append(lw)
            block = np.array(block)
            if target == "cut":
                block = block - special.logsumexp(block) + ev.log_prior(T)
            logw.extend(block)
    logw = np.array(logw)
    probs = np.exp(logw - special.logsumexp(logw))
    return Enumeration(centers, np.array(assigns), edges, logw, probs)
