"""Memoized evaluation of the prior, supergraph prior and likelihood terms."""

import numpy as np

from .data import DataMatrix, correlations, first_pc
from .ggm import GGMPosterior, log_er_prior, log_single_node_lik
from .tessellation import assign_nodes, log_prior_from_parts
from .trees import log_similarity

MEMO_LIMIT = 200_000


class _Memo(dict):
    def put(self, key, value):
        if len(self) >= MEMO_LIMIT:
            self.clear()
        self[key] = value
        return value


class Evaluator:
    """
    Evaluates the pieces of the (coarsened) target for fixed data.

    Supernodes are identified by their sorted member tuples, tessellations by
    the tuple of those, so repeated states cost a dictionary lookup.
    """

    def __init__(self, X, hp):
        self.X = X if isinstance(X, DataMatrix) else DataMatrix(X)
        self.hp = hp
        self.cache = correlations(self.X)
        self._tess = _Memo()
        self._sim = _Memo()
        self._pc1 = _Memo()
        self._prior = _Memo()
        self._post = _Memo()
        self._lower = _Memo()

    @property
    def n(self):
        return self.X.n

    @property
    def p(self):
        return self.X.p

    def tessellation(self, centers):
        key = tuple(sorted(centers))
        T = self._tess.get(key)
        return T if T is not None else self._tess.put(key, assign_nodes(key, self.cache))

    def log_similarity(self, members):
        val = self._sim.get(members)
        if val is None:
            x = self.X.values[:, list(members)]
            val = self._sim.put(members, log_similarity(x, self.hp, members))
        return val

    def first_pc(self, members):
        y = self._pc1.get(members)
        if y is None:
            y = self._pc1.put(members, first_pc(self.X.values[:, list(members)]))
        return y

    def log_prior(self, T):
        """log p^(zeta)(C) up to a constant; depends on C only through T."""
        val = self._prior.get(T.members)
        if val is None:
            sims = [self.log_similarity(m) for m in T.members]
            val = self._prior.put(
                T.members, log_prior_from_parts(T.p, T.sizes, sims, self.hp.cohesion)
            )
        return val

    def first_slots(self, T):
        starts = np.cumsum([0] + [len(m) for m in T.members[:-1]])
        return tuple(int(s) for s in starts)

    def posterior(self, T):
        """GGMPosterior of the first-PC block of tessellation T."""
        post = self._post.get(T.members)
        if post is None:
            Ystar = np.column_stack([self.first_pc(m) for m in T.members])
            gw = self.hp.gw
            post = self._post.put(
                T.members,
                GGMPosterior(Ystar.T @ Ystar, self.n, gw.delta_G, gw.rate(self.first_slots(T))),
            )
        return post

    def log_lik_lower(self, T):
        """Sum of the single-node terms of all lower-ranked PCs of T."""
        val = self._lower.get(T.members)
        if val is None:
            first = set(self.first_slots(T))
            lower = [i for i in range(self.p) if i not in first]
            if lower:
                d = np.diag(self.hp.gw.rate(lower))
                terms = log_single_node_lik(self.n, self.hp.gw.delta_G, d, d + self.n)
                val = float(np.sum(terms))
            else:
                val = 0.0
            self._lower.put(T.members, val)
        return val

    def log_lik(self, T, edges):
        return self.posterior(T).log_lik(edges) + self.log_lik_lower(T)

    def log_graph_prior(self, T, edges):
        return log_er_prior(len(edges), T.K, self.hp.xi_se)

    def log_target(self, T, edges):
        """log pi^(zeta)(C, G, Y) up to a constant."""
        return (
            self.log_prior(T) + self.log_graph_prior(T, edges)
            + self.hp.zeta * self.log_lik(T, edges)
        )
