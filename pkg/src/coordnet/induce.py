"""User-to-user coordination graph induced from post similarity, and its pruned core."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus
from .errors import EmptyCoreWarning, InductionError, PruneError
from .knn import SimilarityGraph, _csv_field, _mirror


@dataclass(frozen=True, eq=False)
class IncidenceMatrix:
    """Binary users x posts authorship matrix; one nonzero per post column."""

    user_ids: tuple[str, ...]
    post_ids: tuple[str, ...]
    matrix: sp.csr_matrix


@dataclass(frozen=True, eq=False)
class CoordinationGraph:
    user_ids: tuple[str, ...]
    matrix: sp.csr_matrix
    pruned: bool = False
    threshold: float | None = None
    mu: float | None = None
    sigma: float | None = None
    n_edges_before: int | None = None

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_edges(self) -> int:
        return int(sp.triu(self.matrix, k=1).nnz)

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Undirected edges (i < j) as parallel arrays, row-major order."""
        upper = sp.triu(self.matrix, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return upper.row[order], upper.col[order], upper.data[order]

    def edges(self) -> Iterator[tuple[str, str, float]]:
        rows, cols, data = self.edge_arrays()
        for i, j, w in zip(rows, cols, data):
            yield self.user_ids[i], self.user_ids[j], float(w)

    def non_isolated(self) -> list[int]:
        deg = np.diff(self.matrix.indptr)
        return [int(i) for i in np.flatnonzero(deg)]

    def report(self) -> dict:
        return {
            "n_users": self.n_users,
            "n_edges_before": self.n_edges_before if self.pruned else self.n_edges,
            "mu": self.mu,
            "sigma": self.sigma,
            "threshold": self.threshold,
            "n_edges_after": self.n_edges if self.pruned else None,
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("src_user,dst_user,weight\n")
            for a, b, w in self.edges():
                fh.write(f"{_csv_field(a)},{_csv_field(b)},{w!r}\n")

    @classmethod
    def read_csv(cls, path: str | Path, user_ids: Sequence[str] | None = None) -> "CoordinationGraph":
        """Read an edge list; users absent from ``user_ids`` are appended in file order."""
        ids = list(user_ids or [])
        index = {u: i for i, u in enumerate(ids)}
        rows, cols, data = [], [], []
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["src_user", "dst_user", "weight"]:
                raise InductionError(f"{path}: unexpected header {header}")
            for line in reader:
                a, b, w = line[0], line[1], float(line[2])
                for u in (a, b):
                    if u not in index:
                        index[u] = len(ids)
                        ids.append(u)
                i, j = sorted((index[a], index[b]))
                rows.append(i)
                cols.append(j)
                data.append(w)
        m = len(ids)
        upper = sp.csr_matrix((data, (rows, cols)), shape=(m, m))
        return cls(tuple(ids), _mirror(upper))


def build_incidence(corpus: Corpus) -> IncidenceMatrix:
    echoes = [p.post_id for p in corpus if p.is_echo]
    if echoes:
        raise InductionError(
            f"incidence needs original posts only; found {len(echoes)} echo(es), e.g. {echoes[0]!r}"
        )
    users = list(corpus.users)
    posts = list(corpus.posts)
    uidx = {u: i for i, u in enumerate(users)}
    rows = np.array([uidx[p.author_username] for p in corpus], dtype=np.intp)
    cols = np.arange(len(posts), dtype=np.intp)
    mat = sp.csr_matrix((np.ones(len(posts)), (rows, cols)), shape=(len(users), len(posts)))
    return IncidenceMatrix(tuple(users), tuple(posts), mat)


def induce(inc: IncidenceMatrix, sim: SimilarityGraph) -> CoordinationGraph:
    """U = B S B^T with the diagonal dropped.

    U[u, v] sums S over all pairs of a post by u and a post by v. Only the
    upper triangle of the product is kept and mirrored, so U is exactly
    symmetric.
    """
    if inc.matrix.shape[1] != sim.matrix.shape[0]:
        raise InductionError(
            f"dimension mismatch: {inc.matrix.shape[1]} posts in incidence, {sim.n} in similarity graph"
        )
    if tuple(inc.post_ids) != tuple(sim.post_ids):
        raise InductionError("incidence and similarity graph disagree on post order")
    b = inc.matrix.tocsr()
    u = (b @ sim.matrix.tocsr() @ b.T).tocsr()
    return CoordinationGraph(inc.user_ids, _mirror(u))


def edge_statistics(weights: np.ndarray, ddof: int = 0) -> tuple[float, float]:
    """Mean and standard deviation of edge weights, exact for constant input."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.min() == weights.max():
        return float(weights[0]), 0.0
    mu = float(np.mean(weights))
    sigma = float(np.sqrt(np.sum((weights - mu) ** 2) / (len(weights) - ddof)))
    return mu, sigma


def prune(graph: CoordinationGraph, std_mult: float = 1.0, ddof: int = 0) -> CoordinationGraph:
    """Keep edges with weight strictly above mean + std_mult * std.

    Statistics are taken over distinct nonzero undirected edges. Isolated users
    stay in the returned graph.
    """
    if graph.pruned:
        raise PruneError("graph is already pruned")
    if std_mult <= 0:
        raise PruneError("std multiplier must be > 0")
    rows, cols, data = graph.edge_arrays()
    if len(data) == 0:
        raise PruneError("cannot prune a graph with no edges")
    if len(data) - ddof <= 0:
        raise PruneError(f"need more than {ddof} edge(s) for ddof={ddof}")
    mu, sigma = edge_statistics(data, ddof=ddof)
    threshold = mu + std_mult * sigma
    keep = data > threshold
    m = graph.n_users
    upper = sp.csr_matrix((data[keep], (rows[keep], cols[keep])), shape=(m, m))
    if not keep.any():
        warnings.warn(
            f"pruning kept no edges (threshold {threshold!r}, {len(data)} edge(s))",
            EmptyCoreWarning,
            stacklevel=2,
        )
    return replace(
        graph,
        matrix=_mirror(upper),
        pruned=True,
        threshold=threshold,
        mu=mu,
        sigma=sigma,
        n_edges_before=int(len(data)),
    )
