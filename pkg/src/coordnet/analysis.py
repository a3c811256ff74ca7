"""Cluster extraction, degree centrality, engagement statistics and top terms."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .corpus import Corpus, Post
from .errors import AnalysisError
from .induce import CoordinationGraph
from .knn import SimilarityGraph
from .vectorize import text_tokens

ALL_USERS = "all"
N_REPRESENTATIVE = 3

# (key, row label, per-user or per-post)
ENGAGEMENT_ROWS = (
    ("echoes_made", "Echo posts made per user", "user"),
    ("times_echoed", "Echoes received per user", "user"),
    ("posts_with_mention", "Posts with a mention per user", "user"),
    ("posts_with_hashtag", "Posts with a hashtag per user", "user"),
    ("posts_with_url", "Posts with a URL per user", "user"),
    ("posts_with_media", "Posts with media per user", "user"),
    ("comments_per_post", "Comments received per post", "post"),
    ("upvotes_per_post", "Upvotes received per post", "post"),
    ("impressions_per_post", "Impressions received per post", "post"),
)
MODE_ROW = ("impressions_mode", "Most common impressions per post")


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    text = resources.files("coordnet").joinpath("data/stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.split() if w.strip())


def top_terms(
    posts: Iterable[Post | str], n: int = 10, stopwords: Iterable[str] | None = None
) -> list[tuple[str, int]]:
    """Most frequent non-stopword tokens, count ties broken alphabetically."""
    if n < 1:
        raise AnalysisError("n must be >= 1")
    stop = default_stopwords() if stopwords is None else frozenset(stopwords)
    counts: Counter = Counter()
    for p in posts:
        body = p if isinstance(p, str) else p.body
        counts.update(t for t in text_tokens(body) if t not in stop)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:n]


# -- centrality ------------------------------------------------------------


def weighted_degree(graph: CoordinationGraph) -> dict[str, float]:
    """Sum of incident edge weights per user (0.0 when isolated)."""
    deg = np.asarray(graph.matrix.sum(axis=1)).ravel()
    return {u: float(d) for u, d in zip(graph.user_ids, deg)}


def edge_counts(graph: CoordinationGraph) -> dict[str, int]:
    deg = np.diff(graph.matrix.tocsr().indptr)
    return {u: int(d) for u, d in zip(graph.user_ids, deg)}


# -- clusters --------------------------------------------------------------


@dataclass
class ClusterReport:
    cluster_id: int
    member_user_ids: list[str]
    class_composition: dict[str, int] = field(default_factory=dict)
    top_terms: list[tuple[str, int]] = field(default_factory=list)
    representative_posts: list[str] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.member_user_ids)

    def to_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "size": self.size,
            "member_user_ids": list(self.member_user_ids),
            "class_composition": dict(self.class_composition),
            "top_terms": [[t, c] for t, c in self.top_terms],
            "representative_posts": list(self.representative_posts),
        }


def _component_groups(graph: CoordinationGraph) -> list[list[int]]:
    nodes = graph.non_isolated()
    if not nodes:
        return []
    _, labels = csgraph.connected_components(graph.matrix, directed=False)
    groups: dict[int, list[int]] = {}
    for i in nodes:
        groups.setdefault(int(labels[i]), []).append(i)
    return list(groups.values())


def _modularity_groups(graph: CoordinationGraph, seed: int) -> list[list[int]]:
    import networkx as nx

    g = nx.Graph()
    rows, cols, data = graph.edge_arrays()
    g.add_nodes_from(graph.non_isolated())
    g.add_weighted_edges_from((int(i), int(j), float(w)) for i, j, w in zip(rows, cols, data))
    if g.number_of_edges() == 0:
        return []
    parts = nx.community.louvain_communities(g, weight="weight", seed=seed)
    return [sorted(p) for p in parts]


def connected_components(
    graph: CoordinationGraph,
    corpus: Corpus | None = None,
    similarity: SimilarityGraph | None = None,
    assignments: Mapping[str, Iterable[str]] | None = None,
    class_labels: Sequence[str] | None = None,
    n_terms: int = 10,
    method: str = "components",
    seed: int = 0,
) -> list[ClusterReport]:
    """Clusters of the (pruned) coordination graph, largest first.

    ``method="modularity"`` further splits components with Louvain
    communities; the default is plain connected components. Term, class and
    representative-post fields are filled when the corresponding inputs are
    given.
    """
    if method == "components":
        groups = _component_groups(graph)
    elif method == "modularity":
        groups = _modularity_groups(graph, seed)
    else:
        raise AnalysisError(f"unknown cluster method {method!r}")
    groups = sorted((sorted(g) for g in groups), key=lambda g: (-len(g), g[0]))

    author_posts: dict[str, list[int]] = {}
    if similarity is not None:
        if corpus is None:
            raise AnalysisError("representative posts need the corpus for authorship")
        for i, pid in enumerate(similarity.post_ids):
            author_posts.setdefault(corpus.posts[pid].author_username, []).append(i)
    sim_csr = similarity.matrix.tocsr() if similarity is not None else None

    reports = []
    for cid, members in enumerate(groups):
        users = [graph.user_ids[i] for i in members]
        rep = ClusterReport(cid, users)
        if assignments is not None:
            labels = class_labels or sorted({c for cs in assignments.values() for c in cs})
            rep.class_composition = {
                lab: sum(1 for u in users if lab in assignments.get(u, ())) for lab in labels
            }
        if corpus is not None:
            posts = [p for u in users if u in corpus.users for p in corpus.posts_of(u) if not p.is_echo]
            rep.top_terms = top_terms(posts, n_terms) if n_terms > 0 else []
        if sim_csr is not None:
            idx = np.array(sorted(i for u in users for i in author_posts.get(u, ())), dtype=np.intp)
            if len(idx):
                mass = np.asarray(sim_csr[idx][:, idx].sum(axis=1)).ravel()
                order = np.lexsort((idx, -mass))[:N_REPRESENTATIVE]
                rep.representative_posts = [similarity.post_ids[idx[o]] for o in order]
        reports.append(rep)
    return reports


# -- engagement ------------------------------------------------------------


def _mean_std(values: Sequence[float]) -> dict | None:
    if len(values) == 0:
        return None
    arr = np.asarray(values, dtype=np.float64)
    return {"mean": float(arr.mean()), "std": float(arr.std())}


def _mode(values: Sequence[int]) -> int | None:
    if len(values) == 0:
        return None
    counts = Counter(values)
    top = max(counts.values())
    return min(v for v, c in counts.items() if c == top)


@dataclass
class EngagementStats:
    """Per-group usage statistics; ``groups[label][metric]`` is mean/std, a mode, or None."""

    groups: dict[str, dict]
    n_users: dict[str, int]
    n_posts: dict[str, int]

    def to_dict(self, decimals: int = 2) -> dict:
        out = {}
        for label, metrics in self.groups.items():
            row = {"n_users": self.n_users[label], "n_posts": self.n_posts[label]}
            for key, value in metrics.items():
                if isinstance(value, dict):
                    value = {k: round(v, decimals) for k, v in value.items()}
                row[key] = value
            out[label] = row
        return out

    def render_table(self) -> str:
        labels = list(self.groups)
        headers = ["", *("All users" if lab == ALL_USERS else lab for lab in labels)]
        body = []
        for key, title, _ in ENGAGEMENT_ROWS:
            cells = []
            for lab in labels:
                v = self.groups[lab][key]
                cells.append("n/a" if v is None else f"{v['mean']:.2f}+/-{v['std']:.2f}")
            body.append([title, *cells])
        key, title = MODE_ROW
        body.append([title, *("n/a" if self.groups[l][key] is None else str(self.groups[l][key]) for l in labels)])
        widths = [max(len(r[c]) for r in [headers, *body]) for c in range(len(headers))]
        fmt = lambda r: " | ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
        sep = "-+-".join("-" * w for w in widths)
        return "\n".join([fmt(headers), sep, *map(fmt, body)]) + "\n"


def engagement_stats(
    corpus: Corpus,
    assignments: Mapping[str, Iterable[str]],
    class_labels: Sequence[str] | None = None,
) -> EngagementStats:
    """Usage statistics for all users and for each class.

    Per-user rows average over users (echo posts made, total echo_count
    received, number of posts carrying a mention/hashtag/URL/media). Per-post
    rows average over every post by the group's users. Standard deviations
    are population deviations. Empty groups yield None entries.
    """
    labels = list(class_labels) if class_labels is not None else sorted(
        {c for cs in assignments.values() for c in cs}
    )
    members = {ALL_USERS: list(corpus.users)}
    for lab in labels:
        members[lab] = [u for u in corpus.users if lab in assignments.get(u, ())]

    groups, n_users, n_posts = {}, {}, {}
    for label, users in members.items():
        per_user: dict[str, list[int]] = {k: [] for k, _, kind in ENGAGEMENT_ROWS if kind == "user"}
        comments, upvotes, impressions = [], [], []
        for u in users:
            posts = corpus.posts_of(u)
            per_user["echoes_made"].append(sum(p.is_echo for p in posts))
            per_user["times_echoed"].append(sum(p.echo_count for p in posts))
            per_user["posts_with_mention"].append(sum(bool(p.mentions) for p in posts))
            per_user["posts_with_hashtag"].append(sum(bool(p.hashtags) for p in posts))
            per_user["posts_with_url"].append(sum(bool(p.urls) for p in posts))
            per_user["posts_with_media"].append(sum(p.has_media for p in posts))
            for p in posts:
                comments.append(p.comment_count)
                upvotes.append(p.upvote_count)
                impressions.append(p.impression_count)
        stats = {k: _mean_std(v) for k, v in per_user.items()}
        stats["comments_per_post"] = _mean_std(comments)
        stats["upvotes_per_post"] = _mean_std(upvotes)
        stats["impressions_per_post"] = _mean_std(impressions)
        stats[MODE_ROW[0]] = _mode(impressions)
        groups[label] = stats
        n_users[label] = len(users)
        n_posts[label] = len(impressions)
    return EngagementStats(groups, n_users, n_posts)
