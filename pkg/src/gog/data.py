"""Data ingestion, standardization, correlation caching and per-supernode PCA."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSpectrum, DimensionError, ParseError, ZeroVarianceColumn

STANDARDIZE_TOL = 1e-8


@dataclass(frozen=True)
class DataMatrix:
    """Standardized n x p data: zero column means and squared column norms n."""

    values: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DimensionError("data must be a 2-D matrix")
        if not is_standardized(values):
            values = _standardize_array(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        names = tuple(self.names) if len(self.names) else tuple(
            f"V{j + 1}" for j in range(values.shape[1])
        )
        if len(names) != values.shape[1]:
            raise DimensionError("need one name per column")
        object.__setattr__(self, "names", names)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def rows(self, m):
        """The first `m` observations, re-standardized."""
        return standardize(self.values[:m], self.names)


def is_standardized(values, tol=STANDARDIZE_TOL):
    n = values.shape[0]
    if n < 2:
        return False
    means_ok = np.all(np.abs(values.sum(axis=0)) <= tol * n)
    norms = (values**2).sum(axis=0)
    return bool(means_ok and np.all(np.abs(norms - n) <= tol * n))


def _standardize_array(raw):
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2:
        raise DimensionError("data must be a 2-D matrix")
    n = raw.shape[0]
    if n < 2:
        raise DimensionError(f"need at least two observations, got {n}")
    if not np.all(np.isfinite(raw)):
        raise DimensionError("data contain non-finite values")
    centered = raw - raw.mean(axis=0)
    scale = np.sqrt((centered**2).sum(axis=0) / n)
    ref = np.abs(raw).max(axis=0)
    for j in np.flatnonzero(scale <= 1e-12 * np.maximum(ref, 1e-300)):
        raise ZeroVarianceColumn(int(j))
    return centered / scale


def standardize(raw, names=()):
    """Center each column and scale it to squared norm n."""
    return DataMatrix(_standardize_array(raw), tuple(names))


def read_csv(path):
    """Read a CSV file with a header row of variable names."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            names = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise ParseError(f"{path}:{lineno}: expected {len(names)} fields")
            try:
                vals = [float(v) for v in row]
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric or empty cell") from None
            if not all(np.isfinite(vals)):
                raise ParseError(f"{path}:{lineno}: NaN or infinite cell")
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no observations")
    return np.array(rows), [name.strip() for name in names]


def write_csv(path, values, names):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in np.asarray(values):
            writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class CorrelationCache:
    rho: np.ndarray
    dist: np.ndarray


def correlations(X):
    """Sample correlations and the distance sqrt(2 (1 - |rho|))."""
    values = X.values
    rho = values.T @ values / X.n
    rho = np.clip((rho + rho.T) / 2, -1.0, 1.0)
    np.fill_diagonal(rho, 1.0)
    dist = np.sqrt(2.0 * (1.0 - np.abs(rho)))
    np.fill_diagonal(dist, 0.0)
    rho.setflags(write=False)
    dist.setflags(write=False)
    return CorrelationCache(rho, dist)


def supernode_pca(x):
    """
    PCA of the columns of `x` (an n x p_k block of standardized data).

    Returns eigenvalues of the correlation matrix in descending order, the
    sign-fixed loadings (columns), and scores rescaled to squared norm n.
    """
    n, pk = x.shape
    R = x.T @ x / n
    lam, vecs = np.linalg.eigh((R + R.T) / 2)
    if not np.all(np.isfinite(lam)):
        raise DegenerateSpectrum("non-finite eigenvalue")
    order = np.argsort(-lam, kind="stable")
    lam = np.maximum(lam[order], 0.0)
    vecs = vecs[:, order]
    # Largest-magnitude loading positive; first such index on ties.
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(pk)])
    signs[signs == 0] = 1.0
    vecs = vecs * signs
    scores = x @ vecs
    norms = np.sqrt((scores**2).sum(axis=0))
    ok = norms > 1e-10 * np.sqrt(n)
    scores[:, ok] *= np.sqrt(n) / norms[ok]
    # Null directions carry no data; the model treats them as norm-n columns.
    scores[:, ~ok] = 0.0
    return lam, vecs, scores


def first_pc(x):
    """Standardized first principal component score vector of block `x`."""
    if x.shape[1] == 1:
        return np.array(x[:, 0])
    return supernode_pca(x)[2][:, 0]


@dataclass(frozen=True)
class PCViews:
    """Principal-component scores grouped contiguously by supernode."""

    Y: np.ndarray
    first_slots: tuple
    pc_rank: tuple
    explained: tuple
    block_starts: tuple = field(default=())

    @property
    def Ystar(self):
        return self.Y[:, list(self.first_slots)]


def compute_pc_views(X, T):
    blocks, pc_rank, explained, starts, first = [], [], [], [], []
    offset = 0
    for k, members in enumerate(T.members):
        x = X.values[:, list(members)]
        lam, _, scores = supernode_pca(x)
        if x.shape[1] == 1:
            scores = np.array(x)
        blocks.append(scores)
        explained.append(tuple(lam / len(members)))
        starts.append(offset)
        first.append(offset)
        pc_rank.extend((k, r) for r in range(len(members)))
        offset += len(members)
    Y = np.hstack(blocks)
    Y.setflags(write=False)
    return PCViews(Y, tuple(first), tuple(pc_rank), tuple(explained), tuple(starts))


def _h(pk, t):
    return 1.0 / pk + (1.0 - 1.0 / pk) * t


def _h_star(t):
    return 0.5 * (1.0 + np.sqrt(2.0 * t - 1.0)) if t >= 0.5 else t


def explained_bounds(R):
    """
    Lower and upper bounds on the first-PC variance fraction of correlation R.

    Built from the mean correlation, the root mean squared correlation and
    the per-variable mean absolute correlations.
    """
    R = np.asarray(R, dtype=float)
    pk = R.shape[0]
    if pk < 2:
        return 1.0, 1.0
    iu = np.triu_indices(pk, 1)
    rho = R[iu].mean()
    s2 = (R[iu] ** 2).mean()
    rho_i = (np.abs(R).sum(axis=1) - np.abs(np.diag(R))) / (pk - 1)
    lower = max(_h(pk, rho), _h_star(_h(pk, s2)))
    upper = min(_h(pk, np.sqrt(s2)), _h(pk, rho_i.max()))
    return float(lower), float(upper)


def explained_fraction(R):
    """Largest eigenvalue of correlation matrix R divided by its dimension."""
    R = np.asarray(R, dtype=float)
    return float(np.linalg.eigvalsh((R + R.T) / 2)[-1] / R.shape[0])
