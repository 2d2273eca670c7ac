"""Reference loading matrix from item embeddings.

Items are grouped by bottom-up agglomerative clustering of a precomputed
low-dimensional embedding matrix (Lance-Williams updates, deterministic
index-order tie-breaking).  Known item types can be respected softly by
multiplying cross-type distances with a large penalty factor, and the
dendrogram is pruned so every cluster reaches a minimum size.  Each final
cluster becomes one attribute, giving a one-hot reference matrix.

Also hosts the response-matrix preprocessing filter that drops items and
models with near-zero accuracy before any estimation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConfigError, DimensionError, DomainError
from .model import ResponseMatrix
from .prior import ReferenceQ

LINKAGES = ("ward", "average", "complete")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """J x M numeric item embeddings (already dimension-reduced upstream)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"embeddings must be 2-D, got shape {arr.shape}")
        if arr.shape[1] < 2:
            raise DimensionError("embedding dimension must be >= 2")
        if not np.isfinite(arr).all():
            raise DomainError("embeddings must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_items(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass
class ClusterSpec:
    min_cluster_size: int = 10
    target_clusters: int | None = None
    type_labels: list[str] | None = None
    penalty_factor: float = 1000.0
    linkage: str = "ward"

    def validate(self, n_items: int | None = None) -> None:
        if self.min_cluster_size < 1:
            raise ConfigError("min_cluster_size must be >= 1")
        if self.penalty_factor < 1.0:
            raise ConfigError("penalty_factor must be >= 1")
        if self.linkage not in LINKAGES:
            raise ConfigError(f"linkage must be one of {LINKAGES}")
        if self.target_clusters is not None and self.target_clusters < 1:
            raise ConfigError("target_clusters must be >= 1")
        if n_items is not None and self.type_labels is not None:
            if len(self.type_labels) != n_items:
                raise DimensionError(
                    f"{len(self.type_labels)} type labels for {n_items} items"
                )


@dataclass
class Dendrogram:
    """Merge history: step s joins the clusters in slots merges[s] = (i, j),
    i < j, with the surviving cluster kept in slot i.  Slots are original
    item indices of cluster representatives.  Heights are in the working
    metric of the linkage (squared distances for ward)."""

    n_leaves: int
    merges: np.ndarray
    heights: np.ndarray

    def cut(self, n_clusters: int) -> np.ndarray:
        """Assignments in [0, n_clusters), labels ordered by smallest member."""
        if not 1 <= n_clusters <= self.n_leaves:
            raise ConfigError(
                f"cannot cut {self.n_leaves} leaves into {n_clusters} clusters"
            )
        parent = np.arange(self.n_leaves)

        def find(v: int) -> int:
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for i, j in self.merges[: self.n_leaves - n_clusters]:
            parent[find(int(j))] = find(int(i))
        roots = np.array([find(v) for v in range(self.n_leaves)])
        labels = {r: rank for rank, r in enumerate(np.unique(roots))}
        return np.array([labels[r] for r in roots], dtype=np.int64)


def penalized_distances(embeddings, spec: ClusterSpec) -> np.ndarray:
    """Pairwise Euclidean distances; cross-type pairs scaled by the penalty."""
    emb = embeddings if isinstance(embeddings, EmbeddingMatrix) else EmbeddingMatrix(embeddings)
    spec.validate(emb.n_items)
    dist = cdist(emb.values, emb.values)
    if spec.type_labels is not None:
        labels = np.asarray(spec.type_labels)
        cross = labels[:, None] != labels[None, :]
        dist = np.where(cross, dist * spec.penalty_factor, dist)
    np.fill_diagonal(dist, 0.0)
    return dist


def agglomerate(distances: np.ndarray, spec: ClusterSpec) -> Dendrogram:
    """Bottom-up merging under the configured linkage.

    At every step the closest active pair merges; equal merge heights are
    broken by ascending slot order (smallest first index, then smallest
    second), so the procedure is fully deterministic.
    """
    spec.validate()
    dist = np.asarray(distances, dtype=np.float64)
    n = dist.shape[0]
    if dist.ndim != 2 or dist.shape[1] != n:
        raise DimensionError(f"distance matrix must be square, got {dist.shape}")
    if n < 2:
        raise ConfigError("need at least two items to cluster")
    if not np.isfinite(dist).all():
        raise DomainError("distances must be finite")

    # ward operates on squared distances via Lance-Williams
    work = dist**2 if spec.linkage == "ward" else dist.copy()
    np.fill_diagonal(work, np.inf)
    active = np.ones(n, dtype=bool)
    sizes = np.ones(n, dtype=np.int64)
    merges = np.empty((n - 1, 2), dtype=np.int64)
    heights = np.empty(n - 1)

    for step in range(n - 1):
        flat = int(np.argmin(work))  # first minimum in row-major order
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        merges[step] = (i, j)
        heights[step] = work[i, j]

        others = active.copy()
        others[i] = others[j] = False
        d_ih = work[i, others]
        d_jh = work[j, others]
        if spec.linkage == "ward":
            s_i, s_j, s_h = sizes[i], sizes[j], sizes[others]
            updated = (
                (s_i + s_h) * d_ih + (s_j + s_h) * d_jh - s_h * work[i, j]
            ) / (s_i + s_j + s_h)
        elif spec.linkage == "average":
            updated = (sizes[i] * d_ih + sizes[j] * d_jh) / (sizes[i] + sizes[j])
        else:  # complete
            updated = np.maximum(d_ih, d_jh)
        work[i, others] = updated
        work[others, i] = updated
        work[j, :] = np.inf
        work[:, j] = np.inf
        sizes[i] += sizes[j]
        active[j] = False

    return Dendrogram(n_leaves=n, merges=merges, heights=heights)


def _merge_small_clusters(
    assignments: np.ndarray, min_size: int, embeddings: np.ndarray | None
) -> np.ndarray:
    """Fold clusters below the minimum into their nearest (centroid) cluster."""
    assign = assignments.copy()
    while True:
        labels, counts = np.unique(assign, return_counts=True)
        small = labels[counts < min_size]
        if small.size == 0 or labels.size == 1:
            break
        if embeddings is None:
            raise ConfigError(
                "pruning below the minimum cluster size needs the embeddings"
            )
        # absorb the smallest offender first; ties by label
        order = np.lexsort((small, counts[np.searchsorted(labels, small)]))
        victim = small[order[0]]
        centroids = {
            lab: embeddings[assign == lab].mean(axis=0) for lab in labels
        }
        others = [lab for lab in labels if lab != victim]
        gaps = [float(np.linalg.norm(centroids[victim] - centroids[o])) for o in others]
        target = others[int(np.argmin(gaps))]
        assign[assign == victim] = target
    # canonical labels, ordered by smallest member index
    out = np.empty_like(assign)
    for rank, lab in enumerate(dict.fromkeys(assign.tolist())):
        out[assign == lab] = rank
    return out


def prune_to_q(
    dendrogram: Dendrogram,
    spec: ClusterSpec,
    embeddings=None,
) -> tuple[ReferenceQ, np.ndarray]:
    """Cut the dendrogram and emit a one-hot reference matrix.

    With ``target_clusters`` set, cut there; otherwise use the largest
    cluster count at which every cluster already meets the minimum size.
    Any remaining undersized clusters are absorbed into their nearest
    cluster by centroid distance (requires the embeddings).
    """
    spec.validate()
    emb = None
    if embeddings is not None:
        emb = (
            embeddings.values
            if isinstance(embeddings, EmbeddingMatrix)
            else np.asarray(embeddings, dtype=np.float64)
        )
    n = dendrogram.n_leaves
    if spec.target_clusters is not None:
        if spec.target_clusters * spec.min_cluster_size > n:
            raise ConfigError(
                f"{spec.target_clusters} clusters of >= {spec.min_cluster_size} "
                f"items cannot fit in {n} items"
            )
        assignments = dendrogram.cut(spec.target_clusters)
    else:
        assignments = None
        for m in range(n // spec.min_cluster_size, 0, -1):
            cand = dendrogram.cut(m)
            if np.bincount(cand).min() >= spec.min_cluster_size:
                assignments = cand
                break
        if assignments is None:
            raise ConfigError(
                f"no cut of {n} items satisfies minimum size {spec.min_cluster_size}"
            )
    assignments = _merge_small_clusters(assignments, spec.min_cluster_size, emb)
    n_attrs = int(assignments.max()) + 1
    entries = np.zeros((n, n_attrs), dtype=np.int8)
    entries[np.arange(n), assignments] = 1
    labels = None
    if spec.type_labels is not None:
        # label each attribute by the type of its members (diagnostic only)
        labels = []
        types = np.asarray(spec.type_labels)
        for k in range(n_attrs):
            members = np.unique(types[assignments == k])
            labels.append("/".join(str(t) for t in members))
    return ReferenceQ(entries, attribute_labels=labels), assignments


def preprocess_filter(
    x: ResponseMatrix, threshold: float
) -> tuple[ResponseMatrix, np.ndarray, np.ndarray]:
    """Iteratively drop models then items with mean correctness below the
    threshold until the surviving submatrix is stable.

    Returns the filtered matrix plus surviving row and column indices.
    Rows or columns with no observed cells count as mean 0.
    """
    if not 0.0 <= threshold < 1.0:
        raise DomainError(f"threshold must lie in [0, 1), got {threshold}")
    values = x.values.astype(np.float64)
    observed = np.ones_like(values, dtype=bool) if x.mask is None else x.mask.copy()
    rows = np.arange(x.n_models)
    cols = np.arange(x.n_items)

    def means(v, o, axis):
        counts = o.sum(axis=axis)
        sums = (v * o).sum(axis=axis)
        return np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)

    while True:
        changed = False
        keep_rows = means(values, observed, axis=1) >= threshold
        if not keep_rows.all():
            values, observed, rows = values[keep_rows], observed[keep_rows], rows[keep_rows]
            changed = True
        if rows.size == 0:
            raise ConfigError("preprocessing filtered out every model")
        keep_cols = means(values, observed, axis=0) >= threshold
        if not keep_cols.all():
            values = values[:, keep_cols]
            observed = observed[:, keep_cols]
            cols = cols[keep_cols]
            changed = True
        if cols.size == 0:
            raise ConfigError("preprocessing filtered out every item")
        if not changed:
            break
    mask = None if x.mask is None else observed
    return ResponseMatrix(values.astype(np.int8), mask=mask), rows, cols
