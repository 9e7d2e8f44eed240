"""Brute-force reference computations used to check the closed forms."""

import heapq
import itertools
import math

import numpy as np
from scipy import integrate, special


def prufer_to_tree(seq, m):
    """Decode a Prufer sequence into the edge list of a labelled tree on m nodes."""
    degree = [1] * m
    for v in seq:
        degree[v] += 1
    leaves = [i for i in range(m) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, v), max(leaf, v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    a, b = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((min(a, b), max(a, b)))
    return edges


def all_trees(m):
    if m == 1:
        yield []
        return
    if m == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(m), repeat=m - 2):
        yield prufer_to_tree(seq, m)


def brute_log_tree_sum(log_w):
    m = log_w.shape[0]
    terms = [sum(log_w[e] for e in tree) for tree in all_trees(m)]
    return special.logsumexp(terms)


def brute_tree_posterior(log_w):
    """Tree posterior probabilities (proportional to products of weights) and edge marginals."""
    m = log_w.shape[0]
    trees = list(all_trees(m))
    lp = np.array([sum(log_w[e] for e in t) for t in trees])
    prob = np.exp(lp - special.logsumexp(lp))
    P = np.zeros((m, m))
    for t, w in zip(trees, prob):
        for i, j in t:
            P[i, j] += w
            P[j, i] += w
    return trees, prob, P


def all_arborescences(m):
    """Every directed spanning tree as (root, parent map), edges oriented parent -> child."""
    for root in range(m):
        others = [v for v in range(m) if v != root]
        for parents in itertools.product(range(m), repeat=len(others)):
            par = dict(zip(others, parents))
            if any(par[v] == v for v in others):
                continue
            ok = True
            for v in others:
                seen, u = set(), v
                while u != root:
                    if u in seen:
                        ok = False
                        break
                    seen.add(u)
                    u = par[u]
                if not ok:
                    break
            if ok:
                yield root, par


def log_gbar(nu, d, pk):
    a = (nu - pk + 1) / 2
    return -a * math.log(d) + special.gammaln(a)


def brute_arborescence(x, delta, D=None):
    """
    log of p_k^{1-p_k} sum over arborescences of the directed tree likelihood.

    Each arborescence contributes the root factor times, for every arc
    i -> j, the conditional factor of j given its parent i, evaluated
    directly from the 2 x 2 blocks of the rate matrices.
    """
    n, pk = x.shape
    D = np.eye(pk) if D is None else D
    Ds = D + x.T @ x
    total = []
    for root, par in all_arborescences(pk):
        v = log_gbar(delta + n, Ds[root, root], pk) - log_gbar(delta, D[root, root], pk)
        v -= (n / 2) * math.log(math.pi)
        for j, i in par.items():
            cs = Ds[j, j] - Ds[i, j] ** 2 / Ds[i, i]
            c = D[j, j] - D[i, j] ** 2 / D[i, i]
            v += (
                0.5 * math.log(D[i, i]) - 0.5 * math.log(Ds[i, i])
                + log_gbar(delta + n + 1, cs, pk) - log_gbar(delta + 1, c, pk)
                - (n / 2) * math.log(math.pi)
            )
        total.append(v)
    return (1 - pk) * math.log(pk) + special.logsumexp(total)


def quad_log_norm_2node(delta, D, complete):
    """
    log of the integral of |K|^{(delta-2)/2} exp(-tr(K D)/2) over 2 x 2 precision
    matrices, either complete or diagonal, by numerical quadrature.
    """
    if not complete:
        out = 0.0
        for i in range(2):
            f = lambda k: k ** ((delta - 2) / 2) * math.exp(-k * D[i, i] / 2)
            out += math.log(integrate.quad(f, 0, np.inf)[0])
        return out

    # Parameterize K = [[a, c], [c, b]] with c in (-sqrt(ab), sqrt(ab)).
    def inner(a, b):
        r = math.sqrt(a * b)
        g = lambda c: (a * b - c * c) ** ((delta - 2) / 2) * math.exp(
            -(a * D[0, 0] + b * D[1, 1] + 2 * c * D[0, 1]) / 2
        )
        return integrate.quad(g, -r, r)[0]

    val = integrate.dblquad(lambda b, a: inner(a, b), 0, 60, 0, 60, epsabs=1e-10)[0]
    return math.log(val)

