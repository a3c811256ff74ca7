import statistics

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from coordnet.analysis import (
    ALL_USERS,
    ENGAGEMENT_ROWS,
    connected_components,
    default_stopwords,
    edge_counts,
    engagement_stats,
    top_terms,
    weighted_degree,
)
from coordnet.classify import MILITARY, PATRIOT, QANON, classify_corpus
from coordnet.corpus import Corpus, Post, filter_originals, load_corpus
from coordnet.errors import AnalysisError
from coordnet.induce import CoordinationGraph, build_incidence, induce, prune
from coordnet.knn import build_knn, symmetrize
from coordnet.synth import ScenarioConfig, generate_scenario
from coordnet.vectorize import embed_corpus

LABELS = (MILITARY, PATRIOT, QANON)


def graph(n, edges):
    m = np.zeros((n, n))
    for (i, j), w in edges.items():
        m[i, j] = m[j, i] = w
    return CoordinationGraph(tuple(f"u{i}" for i in range(n)), sp.csr_matrix(m))


# -- clusters --------------------------------------------------------------


def test_two_disjoint_edges():
    reps = connected_components(graph(5, {(0, 1): 1.0, (2, 3): 2.0}))
    assert [r.member_user_ids for r in reps] == [["u0", "u1"], ["u2", "u3"]]
    assert [r.cluster_id for r in reps] == [0, 1]


def test_cluster_order_largest_first():
    reps = connected_components(graph(6, {(0, 1): 1.0, (2, 3): 1.0, (3, 4): 1.0}))
    assert [r.size for r in reps] == [3, 2]


def test_empty_graph_has_no_clusters():
    assert connected_components(graph(3, {})) == []


def test_unknown_method():
    with pytest.raises(AnalysisError):
        connected_components(graph(2, {(0, 1): 1.0}), method="spectral")


def test_modularity_splits_barbell():
    edges = {(i, j): 1.0 for i in range(4) for j in range(i + 1, 4)}
    edges.update({(i, j): 1.0 for i in range(4, 8) for j in range(i + 1, 8)})
    edges[(3, 4)] = 0.1
    g = graph(8, edges)
    assert [r.size for r in connected_components(g)] == [8]
    reps = connected_components(g, method="modularity", seed=0)
    assert sorted(tuple(r.member_user_ids) for r in reps) == [
        ("u0", "u1", "u2", "u3"), ("u4", "u5", "u6", "u7")]


@settings(max_examples=30, deadline=None)
@given(st.dictionaries(
    st.tuples(st.integers(0, 11), st.integers(0, 11)).filter(lambda e: e[0] < e[1]),
    st.floats(0.01, 5.0), max_size=20,
))
def test_clusters_partition_non_isolated(edges):
    g = graph(12, edges)
    reps = connected_components(g)
    members = [u for r in reps for u in r.member_user_ids]
    assert len(members) == len(set(members))
    assert set(members) == {g.user_ids[i] for i in g.non_isolated()}
    # no edge crosses two clusters
    where = {u: r.cluster_id for r in reps for u in r.member_user_ids}
    assert all(where[a] == where[b] for a, b, _ in g.edges())


# -- centrality ------------------------------------------------------------


def test_star_degrees():
    g = graph(5, {(0, 1): 1.0, (0, 2): 1.0, (0, 3): 1.0})
    assert weighted_degree(g) == {"u0": 3.0, "u1": 1.0, "u2": 1.0, "u3": 1.0, "u4": 0.0}
    assert edge_counts(g)["u0"] == 3 and edge_counts(g)["u4"] == 0


def test_degree_oracle_five_nodes():
    edges = {(0, 1): 0.5, (1, 2): 1.25, (0, 2): 2.0, (3, 4): 0.75}
    expected = {f"u{i}": 0.0 for i in range(5)}
    for (a, b), w in edges.items():
        expected[f"u{a}"] += w
        expected[f"u{b}"] += w
    assert weighted_degree(graph(5, edges)) == pytest.approx(expected)


@settings(max_examples=30, deadline=None)
@given(st.dictionaries(
    st.tuples(st.integers(0, 9), st.integers(0, 9)).filter(lambda e: e[0] < e[1]),
    st.floats(0.01, 100.0), max_size=30,
))
def test_handshake(edges):
    deg = weighted_degree(graph(10, edges))
    assert sum(deg.values()) == pytest.approx(2 * sum(edges.values()))


# -- top terms -------------------------------------------------------------


def test_top_terms_example():
    assert top_terms(["Stop the steal", "stop the count"], n=3) == [
        ("stop", 2), ("count", 1), ("steal", 1)]


def test_top_terms_custom_stopwords_and_posts():
    posts = [Post("p1", "a", body="the the cat"), Post("p2", "a", body="cat")]
    assert top_terms(posts, 5, stopwords=()) == [("cat", 2), ("the", 2)]
    assert "the" in default_stopwords() and len(default_stopwords()) > 100
    with pytest.raises(AnalysisError):
        top_terms(posts, 0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.text(alphabet="abc xyz", max_size=30), max_size=10), st.integers(1, 8))
def test_top_terms_prefix(texts, n):
    full = top_terms(texts, 50, stopwords=())
    assert top_terms(texts, n, stopwords=()) == full[:n]
    counts = [c for _, c in full]
    assert counts == sorted(counts, reverse=True)


# -- engagement ------------------------------------------------------------


def test_engagement_fixture(fixture5_path):
    corpus = load_corpus(fixture5_path)
    stats = engagement_stats(corpus, classify_corpus(corpus), LABELS)
    pat = stats.groups[PATRIOT]  # PatriotMike: impressions 10, 10, 3
    mil = stats.groups[MILITARY]  # NavyVet_1985: impressions 40, 25
    assert mil["impressions_per_post"]["mean"] == pytest.approx(32.5)
    assert pat["impressions_per_post"]["mean"] == pytest.approx(23 / 3)
    assert pat["impressions_mode"] == 10
    assert stats.groups[ALL_USERS]["impressions_per_post"]["mean"] == pytest.approx(88 / 5)
    assert stats.groups[QANON]["impressions_per_post"] is None
    assert stats.groups[QANON]["impressions_mode"] is None
    assert stats.n_users == {ALL_USERS: 2, MILITARY: 1, PATRIOT: 1, QANON: 0}
    assert pat["posts_with_url"]["mean"] == 1.0
    assert pat["times_echoed"]["mean"] == 3.0
    table = stats.render_table()
    assert "n/a" in table and len(table.splitlines()) == 2 + len(ENGAGEMENT_ROWS) + 1


def test_engagement_three_posts_avg_20():
    posts = [Post(f"p{i}", "a", impression_count=v) for i, v in enumerate((10, 10, 40))]
    s = engagement_stats(Corpus.from_posts(posts), {"a": frozenset({"x"})}, ["x"])
    assert s.groups["x"]["impressions_per_post"]["mean"] == 20.0
    assert s.groups["x"]["impressions_mode"] == 10


def test_mode_tie_takes_smallest():
    posts = [Post(f"p{i}", "a", impression_count=v) for i, v in enumerate((7, 3, 7, 3))]
    s = engagement_stats(Corpus.from_posts(posts), {}, [])
    assert s.groups[ALL_USERS]["impressions_mode"] == 3


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 1000), st.booleans()), min_size=1, max_size=30))
def test_engagement_mean_oracle(rows):
    posts = [Post(f"p{i}", f"u{u}", impression_count=imp, is_echo=echo)
             for i, (u, imp, echo) in enumerate(rows)]
    corpus = Corpus.from_posts(posts)
    cls = {u: frozenset({"odd"}) for u in corpus.users if int(u[1:]) % 2}
    s = engagement_stats(corpus, cls, ["odd"])
    imps = [imp for _, imp, _ in rows]
    got = s.groups[ALL_USERS]["impressions_per_post"]
    assert got["mean"] == pytest.approx(statistics.fmean(imps))
    assert got["std"] == pytest.approx(statistics.pstdev(imps), abs=1e-9)
    echoes = [sum(e for uu, _, e in rows if f"u{uu}" == u) for u in corpus.users]
    assert s.groups[ALL_USERS]["echoes_made"]["mean"] == pytest.approx(statistics.fmean(echoes))
    odd = [imp for u, imp, _ in rows if u % 2]
    if odd:
        assert s.groups["odd"]["impressions_per_post"]["mean"] == pytest.approx(statistics.fmean(odd))
    else:
        assert s.groups["odd"]["impressions_per_post"] is None


# -- end to end on planted groups -------------------------------------------


def test_synthetic_clusters_recover_planted_groups():
    corpus, truth = generate_scenario(ScenarioConfig(seed=1))
    orig = filter_originals(corpus)
    s = symmetrize(build_knn(embed_corpus(orig)))
    core = prune(induce(build_incidence(orig), s))
    reps = connected_components(core, orig, s, classify_corpus(orig), LABELS)
    planted = [set(m) for m in truth.groups().values()]
    big = [set(r.member_user_ids) for r in reps if r.size >= 5]
    assert len(big) == 3
    for members in planted:
        assert any(members <= c for c in big)
    for r in reps[:3]:
        assert len(r.representative_posts) == 3
        assert all(orig.posts[p].author_username in r.member_user_ids for p in r.representative_posts)
        assert r.top_terms and sum(r.class_composition.values()) >= 1
