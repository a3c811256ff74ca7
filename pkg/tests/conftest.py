import os

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import settings

# fixed example sequence by default; HYPOTHESIS_PROFILE=explore draws fresh ones
settings.register_profile("default", derandomize=True)
settings.register_profile("explore", derandomize=False)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from coordnet.corpus import Corpus, Post

DATA = __import__("pathlib").Path(__file__).parent / "data"

WORDS = (
    "stop steal count vote march capitol patriot storm freedom truth fight win "
    "election fraud trump pence antifa country president today need people"
).split()


@pytest.fixture
def fixture5_path():
    return DATA / "fixture5.jsonl"


def random_corpus(seed, n_posts, n_users, words=WORDS, dup_rate=0.2):
    """Random short texts by random authors; some posts copy an earlier text."""
    rng = np.random.default_rng(seed)
    owners = rng.integers(0, n_users, size=n_posts)
    owners[:n_users] = np.arange(min(n_users, n_posts))  # every user posts
    posts, texts = [], []
    for i in range(n_posts):
        if texts and rng.random() < dup_rate:
            body = texts[rng.integers(len(texts))]
        else:
            body = " ".join(rng.choice(words, size=rng.integers(3, 10)))
        texts.append(body)
        posts.append(Post(post_id=f"p{i}", author_username=f"u{owners[i]}", body=body))
    return Corpus.from_posts(posts)


def assert_symmetric_graph(mat, unit_weights=False):
    mat = sp.csr_matrix(mat)
    diff = mat - mat.T
    assert diff.nnz == 0 or not np.any(diff.data), "matrix is not exactly symmetric"
    assert not np.any(mat.diagonal()), "nonzero diagonal"
    assert np.all(mat.data >= 0)
    if unit_weights:
        assert np.all(mat.data <= 1.0)


# -- acceptance summary ------------------------------------------------------

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        key = (number, title)
        ok = rep.outcome == "passed" and _ACCEPTANCE.get(key, True)
        _ACCEPTANCE[key] = ok


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), ok in sorted(_ACCEPTANCE.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title}")
