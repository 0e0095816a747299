"""Candidate selection by k-means on normalized columns.

The reduced problem replaces the d x d self-representation ``X ~ X T`` by
``Y T ~ Xs`` where ``Y`` holds a few hundred distinct data columns.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .data import as_matrix, drop_small_columns

DEFAULT_H = 1.0 - np.cos(4.0 * np.pi / 180.0)


@dataclass(frozen=True)
class ReducedProblem:
    """Candidate dictionary, fit target and weights for the convex model.

    Attributes
    ----------
    Y : ndarray, shape (m, n_c)
        Unit-norm candidate endmembers, each a column of the data.
    Xs : ndarray, shape (m, d_s)
        Columns to be represented.
    col_weights : ndarray, shape (d_s,)
        Diagonal of the column weight matrix.
    row_weights : ndarray, shape (n_c,)
        Diagonal of the row weight matrix.
    sigma : ndarray or None
        Similarity weights. ``None`` means "compute from the solver's nu and h".
    cluster_sizes, diameters, source_index : ndarray, shape (n_c,)
        Cluster bookkeeping from the reduction step.
    """

    Y: np.ndarray
    Xs: np.ndarray
    col_weights: np.ndarray
    row_weights: np.ndarray = None
    sigma: np.ndarray = None
    cluster_sizes: np.ndarray = None
    diameters: np.ndarray = None
    source_index: np.ndarray = None
    labels: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        Y = as_matrix(self.Y, "Y")
        Xs = as_matrix(self.Xs, "Xs")
        if Y.shape[0] != Xs.shape[0]:
            raise ValueError(f"Y has {Y.shape[0]} rows but Xs has {Xs.shape[0]}")
        n_c, d_s = Y.shape[1], Xs.shape[1]
        cw = np.asarray(self.col_weights, dtype=np.float64)
        if cw.shape != (d_s,) or np.any(cw <= 0):
            raise ValueError("col_weights must be positive with one entry per column of Xs")
        rw = np.ones(n_c) if self.row_weights is None else np.asarray(self.row_weights, dtype=np.float64)
        if rw.shape != (n_c,) or np.any(rw <= 0):
            raise ValueError("row_weights must be positive with one entry per column of Y")
        if self.sigma is not None:
            sigma = np.asarray(self.sigma, dtype=np.float64)
            if sigma.shape != (n_c, d_s) or np.any(sigma < 0):
                raise ValueError("sigma must be a nonnegative n_c x d_s matrix")
            object.__setattr__(self, "sigma", sigma)
        for name in ("cluster_sizes", "diameters", "source_index"):
            val = getattr(self, name)
            if val is not None:
                val = np.asarray(val)
                if val.shape != (n_c,):
                    raise ValueError(f"{name} must have one entry per candidate")
                object.__setattr__(self, name, val)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Xs", Xs)
        object.__setattr__(self, "col_weights", cw)
        object.__setattr__(self, "row_weights", rw)

    @property
    def n_c(self):
        return self.Y.shape[1]

    @property
    def d_s(self):
        return self.Xs.shape[1]

    def weights_sigma(self, nu, h):
        """``R_w sigma C_w`` with sigma taken from the problem or computed from (nu, h)."""
        sigma = self.sigma if self.sigma is not None else similarity_weights(self.Y, self.Xs, nu, h)
        return self.row_weights[:, None] * sigma * self.col_weights[None, :]

    def with_sigma(self, sigma):
        return replace(self, sigma=sigma)

    def report(self):
        """Cluster summary suitable for JSON export."""
        return {
            "n_c": int(self.n_c),
            "cluster_sizes": _tolist(self.cluster_sizes, int),
            "diameters": _tolist(self.diameters, float),
            "source_index": _tolist(self.source_index, int),
        }


def _tolist(a, kind):
    return None if a is None else [kind(v) for v in a]


def self_representation(X, col_weights=None):
    """Problem with ``Y = Xs = X``: every column is its own candidate.

    Column weights default to ones, i.e. an unweighted fit.
    """
    X = as_matrix(X, "X")
    cw = np.ones(X.shape[1]) if col_weights is None else col_weights
    return ReducedProblem(Y=X, Xs=X, col_weights=cw, cluster_sizes=np.ones(X.shape[1], dtype=int),
                          diameters=np.zeros(X.shape[1]), source_index=np.arange(X.shape[1]))


def _sq_dists(X, C):
    """Squared Euclidean distances between columns of X (rows of result) and columns of C."""
    d2 = (X * X).sum(axis=0)[:, None] - 2.0 * X.T @ C + (C * C).sum(axis=0)[None, :]
    return np.maximum(d2, 0.0)


def farthest_first_seeds(X, k, start=0):
    """Greedy farthest-first traversal over the columns of `X`.

    Each new seed maximizes the minimum Euclidean distance to the seeds
    already chosen. Ties go to the lowest column index, and a column is
    never chosen twice.
    """
    X = as_matrix(X, "X")
    d = X.shape[1]
    if k > d:
        raise ValueError(f"cannot pick {k} seeds from {d} columns")
    if not 0 <= start < d:
        raise ValueError("start index out of range")
    seeds = [int(start)]
    mind = _sq_dists(X, X[:, [start]])[:, 0]
    mind[start] = -1.0
    for _ in range(1, k):
        nxt = int(np.argmax(mind))
        seeds.append(nxt)
        mind = np.minimum(mind, _sq_dists(X, X[:, [nxt]])[:, 0])
        mind[seeds] = -1.0
    return np.array(seeds, dtype=int)


def _kmeans(X, seeds, iters):
    C = X[:, seeds].copy()
    labels = None
    for _ in range(iters):
        new = np.argmin(_sq_dists(X, C), axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        used = np.unique(labels)
        # empty clusters are dropped and labels compacted
        C = np.stack([X[:, labels == c].mean(axis=1) for c in used], axis=1)
        labels = np.searchsorted(used, labels)
    return C, labels


def _merge_close(Y, sizes, cos_threshold):
    """Merge the most similar pair violating the cosine bound until none remain.

    Returns the surviving candidate positions and, for every original
    candidate, the position of the survivor that absorbed it.
    """
    n = Y.shape[1]
    alive = np.ones(n, dtype=bool)
    owner = np.arange(n)
    sizes = sizes.astype(int).copy()
    G = Y.T @ Y
    np.fill_diagonal(G, -np.inf)
    while True:
        Ga = np.where(alive[:, None] & alive[None, :], G, -np.inf)
        i, j = np.unravel_index(np.argmax(Ga), Ga.shape)
        if Ga[i, j] < cos_threshold:
            break
        i, j = min(i, j), max(i, j)
        keep, drop = (i, j) if sizes[i] >= sizes[j] else (j, i)
        sizes[keep] += sizes[drop]
        sizes[drop] = 0
        alive[drop] = False
        owner[owner == drop] = keep
    return np.flatnonzero(alive), owner


def kmeans_reduce(X, max_clusters=150, cos_threshold=0.995, iters=100, seed_start=0):
    """Reduce unit-column data to a set of distinct candidate columns.

    Runs k-means from farthest-first seeds, snaps each centroid to its
    nearest data column, then merges candidates whose inner product is at
    least `cos_threshold` (the larger cluster survives). ``Xs`` is set to
    ``Y`` and the column weights to the cluster mass fractions.
    """
    X = as_matrix(X, "X")
    if not 0 < cos_threshold <= 1:
        raise ValueError("cos_threshold must lie in (0, 1]")
    if max_clusters < 1:
        raise ValueError("max_clusters must be at least 1")
    d = X.shape[1]
    k = min(max_clusters, d)
    seeds = farthest_first_seeds(X, k, seed_start)
    C, labels = _kmeans(X, seeds, iters)

    snap = np.argmin(_sq_dists(C, X), axis=1)
    Y = X[:, snap]
    Y = Y / np.linalg.norm(Y, axis=0)
    sizes = np.bincount(labels, minlength=Y.shape[1])

    survivors, owner = _merge_close(Y, sizes, cos_threshold)
    remap = -np.ones(Y.shape[1], dtype=int)
    remap[survivors] = np.arange(len(survivors))
    labels = remap[owner[labels]]
    Y = Y[:, survivors]
    snap = snap[survivors]
    sizes = np.bincount(labels, minlength=len(survivors))

    dist = np.sqrt(np.maximum((X - Y[:, labels]) ** 2, 0).sum(axis=0))
    diameters = np.zeros(len(survivors))
    np.maximum.at(diameters, labels, dist)

    return ReducedProblem(Y=Y, Xs=Y.copy(), col_weights=sizes / d, row_weights=np.ones(len(survivors)),
                          cluster_sizes=sizes, diameters=diameters, source_index=snap, labels=labels)


def reduce_data(X0, max_clusters=150, cos_threshold=0.995, iters=100, drop_threshold=0.0):
    """Normalize raw data and run `kmeans_reduce` from the column of largest raw norm.

    Returns the reduced problem and the `NormalizedData` it was built from;
    ``source_index`` refers to columns of the normalized (kept) data.
    """
    nd = drop_small_columns(X0, drop_threshold)
    start = int(np.argmax(nd.norms))
    rp = kmeans_reduce(nd.X, max_clusters, cos_threshold, iters, start)
    return rp, nd


def similarity_weights(Y, Xs, nu, h):
    """``nu * (1 - exp(-(1 - <Y_i, Xs_j>)**2 / (2 h**2)))`` for every pair of columns."""
    if h <= 0:
        raise ValueError("h must be positive")
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    G = np.asarray(Y, dtype=np.float64).T @ np.asarray(Xs, dtype=np.float64)
    return nu * -np.expm1(-((1.0 - G) ** 2) / (2.0 * h * h))
