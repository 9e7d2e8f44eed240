"""Voronoi assignment of nodes to centers and the size-biased prior on centers."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import EmptyCenters


@dataclass(frozen=True)
class Tessellation:
    centers: tuple
    assignment: tuple
    members: tuple

    @property
    def K(self):
        return len(self.centers)

    @property
    def p(self):
        return len(self.assignment)

    @property
    def sizes(self):
        return tuple(len(m) for m in self.members)


def assign_nodes(centers, cache):
    """
    Assign every node to its closest center under the correlation distance.

    Ties go to the center with the smallest node index; a center always
    belongs to its own supernode.
    """
    centers = tuple(sorted(int(c) for c in set(centers)))
    if not centers:
        raise EmptyCenters("at least one center is required")
    p = cache.dist.shape[0]
    if centers[0] < 0 or centers[-1] >= p:
        raise EmptyCenters(f"centers must lie in 0..{p - 1}")
    # argmin returns the first minimum, i.e. the smallest center index.
    assignment = np.argmin(cache.dist[:, centers], axis=1)
    assignment[list(centers)] = np.arange(len(centers))
    members = tuple(
        tuple(int(i) for i in np.flatnonzero(assignment == k))
        for k in range(len(centers))
    )
    return Tessellation(centers, tuple(int(a) for a in assignment), members)


def tessellation_from_labels(labels):
    """Tessellation-like object for a fixed partition; centers are block minima."""
    labels = np.asarray(labels)
    uniq = []
    for lab in labels:
        if lab not in uniq:
            uniq.append(lab)
    members = [tuple(int(i) for i in np.flatnonzero(labels == lab)) for lab in uniq]
    members.sort(key=lambda m: m[0])
    assignment = np.empty(len(labels), dtype=int)
    for k, m in enumerate(members):
        assignment[list(m)] = k
    return Tessellation(
        tuple(m[0] for m in members), tuple(int(a) for a in assignment), tuple(members)
    )


@dataclass(frozen=True)
class Geometric:
    pi: float

    def __post_init__(self):
        if not 0 < self.pi < 1:
            raise ValueError("pi must lie in (0, 1)")

    def logpmf(self, size):
        return (size - 1) * math.log1p(-self.pi) + math.log(self.pi)

    def mean(self):
        return 1.0 / self.pi


@dataclass(frozen=True)
class ShiftedNegBinomial:
    """Negative binomial on {1, 2, ...}: `size - 1` failures before `r` successes."""

    r: float
    pi: float

    def __post_init__(self):
        if self.r <= 0 or not 0 < self.pi < 1:
            raise ValueError("need r > 0 and pi in (0, 1)")

    def logpmf(self, size):
        return float(stats.nbinom.logpmf(size - 1, self.r, self.pi))

    def mean(self):
        return 1.0 + self.r * (1 - self.pi) / self.pi


def log_cohesion(size, cohesion):
    if size < 1:
        raise ValueError("supernode sizes are positive")
    return cohesion.logpmf(size)


def log_binom(p, K):
    return special.gammaln(p + 1) - special.gammaln(K + 1) - special.gammaln(p - K + 1)


def log_prior_from_parts(p, sizes, log_sims, cohesion):
    """-log C(p, K) + sum_k [log f_coh(p_k) + log f_sim(x_k)]."""
    out = -log_binom(p, len(sizes))
    for size, log_sim in zip(sizes, log_sims):
        out += log_cohesion(size, cohesion) + log_sim
    return float(out)


def log_prior_centers(centers, X, cache, hp, similarity=None):
    """
    Unnormalized log prior of a center set.

    `similarity` maps a supernode's member tuple to its log similarity; by
    default the coarsened similarity selected by `hp` is evaluated (without
    memoization; the MCMC evaluator memoizes).
    """
    from .trees import log_similarity

    T = assign_nodes(centers, cache)
    if similarity is None:
        def similarity(members):
            return log_similarity(X.values[:, list(members)], hp, members)
    return log_prior_from_parts(
        T.p, T.sizes, [similarity(m) for m in T.members], hp.cohesion
    )
