"""Exact cosine kNN graph over post embeddings and its symmetrization."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import KnnError
from .vectorize import EmbeddingMatrix, l2_normalize

# bytes of similarity scratch per block
_BLOCK_BYTES = 64 * 2**20


def default_k(n: int) -> int:
    """floor(log2 n), at least 1."""
    n = int(n)
    if n < 1:
        raise KnnError("k rule needs at least one post")
    return max(1, n.bit_length() - 1)


@dataclass(frozen=True, eq=False)
class KnnAdjacency:
    """Directed kNN adjacency: row i holds edges to i's k nearest posts."""

    post_ids: tuple[str, ...]
    matrix: sp.csr_matrix
    k: int


def knn_search(
    vectors: np.ndarray,
    k: int,
    threads: int | None = None,
    backend: str | None = None,
    block_rows: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact top-k cosine neighbours of every row (self excluded).

    Returns ``(indices, similarities)``, each N x k, sorted by similarity
    descending with ties going to the smaller index.
    """
    x = l2_normalize(np.asarray(vectors, dtype=np.float64))
    n = x.shape[0]
    idx = np.empty((n, k), dtype=np.intp)
    val = np.empty((n, k), dtype=np.float64)
    if block_rows is None:
        block_rows = max(1, min(n, _BLOCK_BYTES // (8 * max(n, 1))))
    xt = np.ascontiguousarray(x.T)
    impl = kernels.get_backend(backend)

    def run(start: int) -> None:
        stop = min(n, start + block_rows)
        sims = x[start:stop] @ xt
        impl.topk_rows(sims, start, k, idx[start:stop], val[start:stop])

    starts = range(0, n, block_rows)
    workers = max(1, int(threads or 1))
    if workers == 1 or len(starts) == 1:
        for s in starts:
            run(s)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, starts))
    return idx, val


def build_knn(
    emb: EmbeddingMatrix,
    k: int | None = None,
    threads: int | None = None,
    backend: str | None = None,
) -> KnnAdjacency:
    """Directed kNN graph weighted by cosine similarity clamped to [0, 1].

    Neighbours with non-positive similarity are selected but carry weight 0,
    so they do not appear as edges.
    """
    n = emb.shape[0]
    if n < 2:
        raise KnnError("need at least 2 posts")
    if k is None:
        k = default_k(n)
    k = int(k)
    if k < 1:
        raise KnnError("k must be >= 1")
    if k >= n:
        raise KnnError("k must be < N")
    idx, val = knn_search(emb.vectors, k, threads=threads, backend=backend)
    weights = np.clip(val, 0.0, 1.0)
    rows = np.repeat(np.arange(n), k)
    keep = weights.ravel() > 0.0
    mat = sp.csr_matrix(
        (weights.ravel()[keep], (rows[keep], idx.ravel()[keep])), shape=(n, n)
    )
    mat.sort_indices()
    return KnnAdjacency(emb.post_ids, mat, k)


@dataclass(frozen=True, eq=False)
class SimilarityGraph:
    """Symmetric post-to-post graph with weights in [0, 1] and zero diagonal."""

    post_ids: tuple[str, ...]
    matrix: sp.csr_matrix
    k_used: int | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_edges(self) -> int:
        return int(sp.triu(self.matrix, k=1).nnz)

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Undirected edges (i < j) in row-major order."""
        upper = sp.triu(self.matrix, k=1).tocsr()
        upper.sort_indices()
        for i in range(upper.shape[0]):
            lo, hi = upper.indptr[i], upper.indptr[i + 1]
            for j, w in zip(upper.indices[lo:hi], upper.data[lo:hi]):
                yield i, int(j), float(w)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("src_post_id,dst_post_id,weight\n")
            ids = self.post_ids
            for i, j, w in self.edges():
                fh.write(f"{_csv_field(ids[i])},{_csv_field(ids[j])},{w:.6f}\n")

    @classmethod
    def read_csv(cls, path: str | Path, post_ids: Sequence[str], k_used: int | None = None) -> "SimilarityGraph":
        index = {pid: i for i, pid in enumerate(post_ids)}
        rows, cols, data = [], [], []
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["src_post_id", "dst_post_id", "weight"]:
                raise KnnError(f"{path}: unexpected header {header}")
            for line in reader:
                try:
                    i, j = index[line[0]], index[line[1]]
                except KeyError as exc:
                    raise KnnError(f"{path}: unknown post id {exc.args[0]!r}") from None
                rows.append(i)
                cols.append(j)
                data.append(float(line[2]))
        n = len(post_ids)
        upper = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        return cls(tuple(post_ids), _mirror(upper), k_used)


def _csv_field(value: str) -> str:
    if any(c in value for c in ',"\n\r'):
        return '"' + value.replace('"', '""') + '"'
    return value


def _mirror(upper: sp.spmatrix) -> sp.csr_matrix:
    upper = sp.triu(upper, k=1).tocsr()
    full = (upper + upper.T).tocsr()
    full.eliminate_zeros()
    full.sort_indices()
    return full


def symmetrize(adj: KnnAdjacency | sp.spmatrix, post_ids: Sequence[str] | None = None) -> SimilarityGraph:
    """S = (A + A^T) / 2.

    Mutual neighbours keep their similarity; one-directional pairs get half.
    """
    if isinstance(adj, KnnAdjacency):
        mat, ids, k = adj.matrix, adj.post_ids, adj.k
    else:
        mat, k = sp.csr_matrix(adj, dtype=np.float64), None
        ids = tuple(post_ids) if post_ids is not None else tuple(str(i) for i in range(mat.shape[0]))
    if mat.shape[0] != mat.shape[1]:
        raise KnnError("adjacency must be square")
    if mat.diagonal().any():
        raise KnnError("adjacency must have a zero diagonal")
    s = ((mat + mat.T) * 0.5).tocsr()
    s.eliminate_zeros()
    s.sort_indices()
    return SimilarityGraph(tuple(ids), s, k)
