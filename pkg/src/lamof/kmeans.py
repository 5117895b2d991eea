"""Deterministic mini-batch K-means over per-frame velocity vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidArgument, TooFewSamples

_CHUNK = 8192
_EXACT_BUDGET = 1 << 21  # float64 entries per explicit-difference block
_F32_SAFE = 1e15


@dataclass(frozen=True)
class KMeansConfig:
    seed: int = 0
    batch_size: int = 1024
    max_iters: int = 100
    tol: float = 1e-8
    refine_iters: int = 10


@dataclass(frozen=True, eq=False)
class ClusterModel:
    centroids: np.ndarray
    seed: int = 0
    inertia: float = 0.0
    iterations_run: int = 0

    def __post_init__(self) -> None:
        c = np.array(self.centroids, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise DimensionMismatch("centroids must be a non-empty K x D matrix", got=list(c.shape))
        if not np.all(np.isfinite(c)):
            raise InvalidArgument("centroids contain non-finite values")
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.centroids.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClusterModel):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.iterations_run == other.iterations_run
            and self.inertia == other.inertia
            and np.array_equal(self.centroids, other.centroids)
        )


def _exact_sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _pick_candidates(xb, centroids, rows, cols):
    """Exact argmin (lowest index on ties) over candidate pairs sorted by row then column."""
    step = max(1, _EXACT_BUDGET // xb.shape[1])
    dist = np.empty(rows.shape[0])
    for i in range(0, rows.shape[0], step):
        diff = xb[rows[i : i + step]] - centroids[cols[i : i + step]]
        dist[i : i + step] = np.einsum("pd,pd->p", diff, diff)
    starts = np.flatnonzero(np.r_[True, rows[1:] != rows[:-1]])
    row_min = np.minimum.reduceat(dist, starts)
    hits = np.flatnonzero(dist == row_min[rows])
    _, first = np.unique(rows[hits], return_index=True)
    return cols[hits[first]], row_min


def nearest_centroids(x: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of and squared distance to the nearest centroid for each row.

    Distances are screened in float32 with the expanded ``|c|^2 - 2 x.c``
    form.  Every centroid whose screened value lies within a bound on the
    float32 rounding error of the row minimum is then compared using exact
    float64 differences, so the result (ties to the lowest index included)
    matches an exhaustive float64 scan.
    """
    x = np.asarray(x, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    n, dim = x.shape
    k = centroids.shape[0]
    labels = np.empty(n, dtype=np.int64)
    best = np.empty(n)
    if n == 0:
        return labels, best
    if k == 1 or max(np.abs(x).max(), np.abs(centroids).max()) > _F32_SAFE:
        step = max(1, _EXACT_BUDGET // (k * dim))
        for lo in range(0, n, step):
            d = _exact_sq_dists(x[lo : lo + step], centroids)
            labels[lo : lo + step] = np.argmin(d, axis=1)
            best[lo : lo + step] = d[np.arange(d.shape[0]), labels[lo : lo + step]]
        return labels, best
    c_sq = np.einsum("kd,kd->k", centroids, centroids)
    # scaling by -2 is exact, so it can be folded into the operand
    c32_m2 = (-2.0 * centroids).astype(np.float32).T.copy()
    c_sq32 = c_sq.astype(np.float32)
    # screened values differ from exact ones by at most tol * (|x|^2 + |c|^2)
    tol = (dim + 8) * float(np.finfo(np.float32).eps)
    for lo in range(0, n, _CHUNK):
        xb = x[lo : lo + _CHUNK]
        d = xb.astype(np.float32) @ c32_m2
        d += c_sq32
        low = d.min(axis=1).astype(np.float64)
        band = 2.0 * tol * (np.einsum("nd,nd->n", xb, xb) + c_sq.max())
        flat = np.flatnonzero(d <= (low + band * 1.01 + 1e-30).astype(np.float32)[:, None])
        rows, cols = np.divmod(flat, k)
        lab, dist = _pick_candidates(xb, centroids, rows, cols)
        labels[lo : lo + xb.shape[0]] = lab
        best[lo : lo + xb.shape[0]] = dist
    return labels, best


def kmeans_plus_plus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding.  Returns the indices of the chosen rows.

    When every remaining point coincides with a chosen center the rest are
    drawn uniformly among unchosen rows.
    """
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    closest = np.einsum("nd,nd->n", x - x[chosen[0]], x - x[chosen[0]])
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            u = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(closest), u, side="right"))
            idx = min(idx, n - 1)
            while closest[idx] == 0:  # float edge at the cumsum boundary
                idx -= 1
        else:
            mask = np.ones(n, dtype=bool)
            mask[chosen] = False
            pool = np.flatnonzero(mask)
            idx = int(pool[rng.integers(pool.size)])
        chosen.append(idx)
        d = x - x[idx]
        closest = np.minimum(closest, np.einsum("nd,nd->n", d, d))
    return np.array(chosen, dtype=np.int64)


def reseed_empty_clusters(
    x: np.ndarray, centroids: np.ndarray, labels: np.ndarray, sq_dist: np.ndarray
) -> bool:
    """Move each empty centroid onto the farthest member of the largest cluster.

    Mutates ``centroids``, ``labels`` and ``sq_dist`` in place; empties are
    handled in index order, ties go to the lowest index.  Returns whether
    anything moved.
    """
    k = centroids.shape[0]
    moved = False
    for c in range(k):
        counts = np.bincount(labels, minlength=k)
        if counts[c] > 0:
            continue
        donor = int(np.argmax(counts))
        if counts[donor] < 2:
            break
        members = np.flatnonzero(labels == donor)
        far = int(members[np.argmax(sq_dist[members])])
        centroids[c] = x[far]
        labels[far] = c
        sq_dist[far] = 0.0
        moved = True
    return moved


def _cluster_sums(x: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    return np.stack([np.bincount(labels, weights=x[:, j], minlength=k) for j in range(x.shape[1])], axis=1)


def _lloyd(x, centroids, max_iters: int) -> int:
    labels, sq = nearest_centroids(x, centroids)
    it = 0
    k = centroids.shape[0]
    while it < max_iters:
        it += 1
        reseed_empty_clusters(x, centroids, labels, sq)
        counts = np.bincount(labels, minlength=k)
        sums = _cluster_sums(x, labels, k)
        nonempty = counts > 0
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        new_labels, sq = nearest_centroids(x, centroids)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return it


def _minibatch(x, centroids, config: KMeansConfig, rng: np.random.Generator) -> int:
    n, k = x.shape[0], centroids.shape[0]
    counts = np.zeros(k)
    it = 0
    while it < config.max_iters:
        it += 1
        batch = x[rng.choice(n, size=config.batch_size, replace=False)]
        lab, _ = nearest_centroids(batch, centroids)
        b_counts = np.bincount(lab, minlength=k).astype(np.float64)
        b_sums = _cluster_sums(batch, lab, k)
        hit = b_counts > 0
        counts[hit] += b_counts[hit]
        old = centroids[hit].copy()
        centroids[hit] += (b_sums[hit] - b_counts[hit, None] * centroids[hit]) / counts[hit, None]
        shift = np.max(np.sum((centroids[hit] - old) ** 2, axis=1), initial=0.0)
        if shift <= config.tol:
            break
    return it + _lloyd(x, centroids, config.refine_iters)


def fit_kmeans(x: np.ndarray, k: int, config: KMeansConfig = KMeansConfig()) -> ClusterModel:
    """Fit ``k`` centroids to the rows of ``x``.

    Seeding is k-means++ from ``config.seed``.  When the batch covers the
    whole data set every step is an exact Lloyd update and iteration stops
    once assignments are stable; otherwise rows are sampled without
    replacement per step with per-centroid learning rates, followed by up
    to ``config.refine_iters`` full-data Lloyd steps.  ``iterations_run``
    counts both phases.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch("samples must form a 2-D matrix", got=list(x.shape))
    if int(k) != k or k < 1:
        raise InvalidArgument("k must be a positive integer", k=k)
    if x.shape[0] < k:
        raise TooFewSamples(f"need at least k={k} frames, got {x.shape[0]}", k=int(k), frames=int(x.shape[0]))
    if config.batch_size < 1 or config.max_iters < 0:
        raise InvalidArgument("batch_size must be >= 1 and max_iters >= 0")
    if not np.all(np.isfinite(x)):
        raise InvalidArgument("samples contain non-finite values")
    rng = np.random.default_rng(config.seed)
    centroids = x[kmeans_plus_plus(x, int(k), rng)].copy()
    if config.batch_size >= x.shape[0]:
        iters = _lloyd(x, centroids, config.max_iters)
    else:
        iters = _minibatch(x, centroids, config, rng)
    _, sq = nearest_centroids(x, centroids)
    inertia = float(sq.sum())
    return ClusterModel(centroids, seed=int(config.seed), inertia=inertia, iterations_run=iters)
