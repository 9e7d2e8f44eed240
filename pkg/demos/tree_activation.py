"""
Tree activation on one supernode.

Draws a small block of correlated variables, scores every pair with the
tree edge weight, and checks the matrix-tree determinant against a brute
force sum over all labelled trees.  Then prints the posterior probability
of each tree edge and the MAP tree.

    python3 demos/tree_activation.py [--p 5] [--n 40] [--seed 0]
"""

import argparse
import itertools

import numpy as np

from gog.data import DataMatrix
from gog.trees import edge_posteriors, log_tree_sum, log_weights, map_tree


def prufer_trees(m):
    # Every labelled tree on m nodes, decoded from its Prufer sequence.
    for seq in itertools.product(range(m), repeat=m - 2):
        degree = [1] * m
        for v in seq:
            degree[v] += 1
        edges = []
        for v in seq:
            leaf = min(i for i in range(m) if degree[i] == 1)
            edges.append((min(leaf, v), max(leaf, v)))
            degree[leaf] -= 1
            degree[v] -= 1
        a, b = [i for i in range(m) if degree[i] == 1]
        edges.append((a, b))
        yield edges


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, default=5)
    ap.add_argument("--n", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    # A chain of dependencies: each variable leans on the previous one.
    z = rng.normal(size=(args.n, args.p))
    for j in range(1, args.p):
        z[:, j] += 0.8 * z[:, j - 1]
    X = DataMatrix(z)
    lw = log_weights(X.values)

    brute = np.logaddexp.reduce([sum(lw[e] for e in t) for t in prufer_trees(args.p)])
    print(f"log tree sum: determinant {log_tree_sum(lw):.10f}, enumeration {brute:.10f}")

    P = edge_posteriors(X.values)
    print("\nedge posterior probabilities")
    with np.printoptions(precision=3, suppress=True):
        print(P)
    print(f"row sums / 2 = {P.sum() / 2:.6f} (a tree has {args.p - 1} edges)")
    print("MAP tree:", map_tree(X.values))


if __name__ == "__main__":
    main()
