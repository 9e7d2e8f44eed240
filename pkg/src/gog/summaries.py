"""Posterior summaries: co-clustering, VI point estimates, superedges and ROC curves."""

import csv
import json
from dataclasses import dataclass

import numpy as np
from sklearn import metrics

from .errors import DegenerateTruth, EmptySamples, LengthMismatch


def _check(samples):
    if not samples:
        raise EmptySamples("no samples to summarize")


def _labels(samples):
    return np.array([s.assignment for s in samples], dtype=int)


def coclustering(samples):
    """P_ij = fraction of samples placing nodes i and j in the same supernode."""
    _check(samples)
    A = _labels(samples)
    P = np.zeros((A.shape[1], A.shape[1]))
    for a in A:
        P += a[:, None] == a[None, :]
    return P / len(A)


def vi_lower_bound(labels, P):
    """Jensen lower bound (in bits) on the posterior expected variation of information."""
    labels = np.asarray(labels)
    same = (labels[:, None] == labels[None, :]).astype(float)
    return float(np.mean(
        np.log2(same.sum(axis=1)) + np.log2(P.sum(axis=1)) - 2 * np.log2((same * P).sum(axis=1))
    ))


def vi_point_estimate(samples, P=None):
    """
    Sampled partition minimizing the VI lower bound; earliest sample on ties.

    Returns (labels, value).  Labels are renumbered by first appearance.
    """
    _check(samples)
    if P is None:
        P = coclustering(samples)
    best, best_val, seen = None, np.inf, set()
    for s in samples:
        key = canonical_labels(s.assignment)
        if key in seen:
            continue
        seen.add(key)
        val = vi_lower_bound(key, P)
        if val < best_val - 1e-12:
            best, best_val = key, val
    return list(best), best_val


def canonical_labels(labels):
    relabel = {}
    return tuple(relabel.setdefault(a, len(relabel)) for a in labels)


def rand_index(a, b):
    if len(a) != len(b):
        raise LengthMismatch(f"partitions of length {len(a)} and {len(b)}")
    if len(a) < 2:
        return 1.0
    return float(metrics.rand_score(a, b))


def superedge_probabilities(samples):
    """Fraction of samples in which i and j sit in distinct supernodes joined by a superedge."""
    _check(samples)
    p = len(samples[0].assignment)
    S = np.zeros((p, p))
    for s in samples:
        a = np.asarray(s.assignment)
        pos = {c: k for k, c in enumerate(s.centers)}
        for c1, c2 in s.superedges:
            k, l = pos[c1], pos[c2]
            mask = np.outer(a == k, a == l)
            S += mask | mask.T
    return S / len(samples)


def supernode_edge_probabilities(samples, K):
    """K x K superedge frequencies for samples sharing one tessellation."""
    _check(samples)
    F = np.zeros((K, K))
    for s in samples:
        for k, l in s.superedge_indices():
            F[k, l] += 1
            F[l, k] += 1
    return F / len(samples)


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float
    operating_point: tuple

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def roc_curve(scores, truth, threshold=0.5):
    """
    ROC over all distinct score thresholds with trapezoidal AUC.

    The operating point selects edges whose score exceeds `threshold`.
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    if truth.all() or not truth.any():
        raise DegenerateTruth("truth needs at least one positive and one negative")
    fpr, tpr, thr = metrics.roc_curve(truth, scores, drop_intermediate=False)
    sel = scores > threshold
    op = (float(np.mean(sel[~truth])), float(np.mean(sel[truth])))
    return RocCurve(fpr, tpr, thr, float(metrics.auc(fpr, tpr)), op)


def upper_pairs(M):
    return M[np.triu_indices(M.shape[0], 1)]


def assemble_graph_of_graphs(partition, X, hp, edge_probs=None, threshold=0.5, names=None):
    """
    Point estimate of the graph of graphs for a fixed partition.

    Each supernode gets its maximum a posteriori tree; superedges are the
    supernode pairs whose posterior probability in `edge_probs` (K x K,
    supernodes ordered by smallest member) exceeds `threshold`.
    """
    from .tessellation import tessellation_from_labels
    from .trees import map_tree

    T = tessellation_from_labels(partition)
    values = X.values
    names = list(names if names is not None else X.names)
    supernodes = []
    for k, members in enumerate(T.members):
        x = values[:, list(members)]
        tree = map_tree(x, hp.tree.__class__(hp.tree.delta, hp.tree.rate(members)))
        supernodes.append({
            "index": k,
            "members": [names[i] for i in members],
            "tree": [[names[members[i]], names[members[j]]] for i, j in tree],
        })
    superedges = []
    if edge_probs is not None:
        E = np.asarray(edge_probs)
        for k in range(T.K):
            for l in range(k + 1, T.K):
                if E[k, l] > threshold:
                    superedges.append({"pair": [k, l], "probability": float(E[k, l])})
    return {"threshold": threshold, "supernodes": supernodes, "superedges": superedges}


def write_matrix_csv(path, M, names):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + list(names))
        for name, row in zip(names, M):
            w.writerow([name] + [repr(float(v)) for v in row])


def write_roc_csv(path, roc):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "fpr", "tpr"])
        for t, f, r in zip(roc.thresholds, roc.fpr, roc.tpr):
            w.writerow([repr(float(t)), repr(float(f)), repr(float(r))])


def write_report(path, report):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def heatmap_svg(path, M, names=None, title=None):
    """Render a symmetric matrix in [0, 1] as an SVG heatmap."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # Fixed metadata keeps the SVG byte-stable across runs.
    plt.rcParams["svg.hashsalt"] = "gog"
    fig, ax = plt.subplots(figsize=(5, 4.5))
    im = ax.imshow(M, vmin=0, vmax=1, cmap="viridis")
    if names is not None and len(names) <= 40:
        ax.set_xticks(range(len(names)), names, rotation=90, fontsize=6)
        ax.set_yticks(range(len(names)), names, fontsize=6)
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
