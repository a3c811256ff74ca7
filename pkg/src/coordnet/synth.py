"""Synthetic corpora with planted coordinated groups, and recovery scoring."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields
from itertools import combinations
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.sparse import csgraph

from .classify import load_mapping
from .corpus import Corpus, Post
from .errors import ConfigError
from .induce import CoordinationGraph

_ONSETS = ("b", "br", "c", "ch", "d", "dr", "f", "g", "gr", "h", "j", "k", "l", "m",
           "n", "p", "pl", "r", "s", "sh", "st", "t", "tr", "v", "w", "z")
_VOWELS = ("a", "e", "i", "o", "u", "ai", "ea", "ou")
_GROUP_FLAVOR = ("Patriot", "WWG1WGA", "Army Veteran")


@dataclass(frozen=True)
class ScenarioConfig:
    n_background_users: int = 500
    posts_per_user: tuple[int, int] = (1, 5)
    n_groups: int = 3
    users_per_group: int = 10
    posts_per_group_user: int = 5
    template_perturbation_rate: float = 0.1
    vocabulary_size: int = 5000
    seed: int = 1
    message_length: tuple[int, int] = (8, 20)
    zipf_exponent: float = 1.1

    def __post_init__(self):
        object.__setattr__(self, "posts_per_user", tuple(self.posts_per_user))
        object.__setattr__(self, "message_length", tuple(self.message_length))
        for name in ("n_background_users", "n_groups", "users_per_group",
                     "posts_per_group_user", "vocabulary_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("posts_per_user", "message_length"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise ConfigError(f"{name} must be a range 1 <= lo <= hi")
        if not 0.0 <= self.template_perturbation_rate <= 1.0:
            raise ConfigError("template_perturbation_rate must lie in [0, 1]")
        if self.zipf_exponent <= 0:
            raise ConfigError("zipf_exponent must be > 0")

    @classmethod
    def from_mapping(cls, data: Mapping) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown scenario field(s): {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        return cls.from_mapping(load_mapping(Path(path)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["posts_per_user"] = list(self.posts_per_user)
        d["message_length"] = list(self.message_length)
        return d


class GroundTruth(dict):
    """username -> group id (None for background users)."""

    def groups(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for user, gid in self.items():
            if gid is not None:
                out.setdefault(gid, []).append(user)
        return dict(sorted(out.items()))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("username,group_id\n")
            for user, gid in self.items():
                fh.write(f"{user},{'' if gid is None else gid}\n")

    @classmethod
    def read_csv(cls, path: str | Path) -> "GroundTruth":
        truth = cls()
        with open(path, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                gid = row["group_id"]
                truth[row["username"]] = int(gid) if gid else None
        return truth


def _vocabulary(rng: np.random.Generator, size: int) -> list[str]:
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < size:
        n_syl = int(rng.integers(1, 4))
        w = "".join(_ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
                    for _ in range(n_syl))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def generate_scenario(cfg: ScenarioConfig) -> tuple[Corpus, GroundTruth]:
    """Background users post independent Zipf-sampled messages; each planted
    group shares one template that its members repost with a fraction of the
    tokens replaced."""
    rng = np.random.default_rng(cfg.seed)
    vocab = _vocabulary(rng, cfg.vocabulary_size)
    ranks = np.arange(1, cfg.vocabulary_size + 1, dtype=np.float64)
    probs = ranks ** -cfg.zipf_exponent
    probs /= probs.sum()

    def draw(n: int) -> list[str]:
        return [vocab[i] for i in rng.choice(cfg.vocabulary_size, size=n, p=probs)]

    def length() -> int:
        lo, hi = cfg.message_length
        return int(rng.integers(lo, hi + 1))

    def display_name(group: int | None) -> str:
        first, last = (vocab[i].capitalize() for i in rng.integers(0, cfg.vocabulary_size, size=2))
        if group is not None:
            return f"{first} {_GROUP_FLAVOR[group % len(_GROUP_FLAVOR)]}"
        return f"{first} {last}"

    # slots: background users (None) and group members, in shuffled order
    slots: list[int | None] = [None] * cfg.n_background_users
    for g in range(cfg.n_groups):
        slots += [g] * cfg.users_per_group
    order = rng.permutation(len(slots))
    slots = [slots[i] for i in order]

    templates = [draw(length()) for _ in range(cfg.n_groups)]
    n_replace = [int(round(cfg.template_perturbation_rate * len(t))) for t in templates]

    posts: list[Post] = []
    truth = GroundTruth()
    width = len(str(len(slots)))
    for u, group in enumerate(slots):
        username = f"user{u:0{width}d}"
        name = display_name(group)
        truth[username] = group
        if group is None:
            lo, hi = cfg.posts_per_user
            bodies = [" ".join(draw(length())) for _ in range(int(rng.integers(lo, hi + 1)))]
        else:
            bodies = []
            template = templates[group]
            for _ in range(cfg.posts_per_group_user):
                toks = list(template)
                if n_replace[group]:
                    for pos in rng.choice(len(toks), size=n_replace[group], replace=False):
                        toks[pos] = draw(1)[0]
                bodies.append(" ".join(toks))
        for body in bodies:
            posts.append(
                Post(
                    post_id=f"p{len(posts):07d}",
                    author_username=username,
                    author_name=name,
                    body=body,
                    echo_count=int(rng.geometric(0.3)) - 1,
                    impression_count=int(rng.geometric(0.01)),
                    upvote_count=int(rng.geometric(0.1)) - 1,
                    comment_count=int(rng.geometric(0.5)) - 1,
                )
            )
    return Corpus.from_posts(posts), truth


def score_detection(core: CoordinationGraph, truth: Mapping[str, int | None]) -> dict:
    """Edge precision, same-group pair recall via components, and group recovery.

    Precision is None when the graph has no edges. A group is recovered when
    strictly more than half of its members share one component.
    """
    index = {u: i for i, u in enumerate(core.user_ids)}
    rows, cols, _ = core.edge_arrays()
    if len(rows):
        hits = sum(
            1 for i, j in zip(rows, cols)
            if truth.get(core.user_ids[i]) is not None
            and truth.get(core.user_ids[i]) == truth.get(core.user_ids[j])
        )
        precision = hits / len(rows)
    else:
        precision = None

    _, labels = csgraph.connected_components(core.matrix, directed=False)
    groups: dict[int, list[str]] = {}
    for user, gid in truth.items():
        if gid is not None:
            groups.setdefault(gid, []).append(user)

    def comp(user: str):
        # users missing from the graph are their own singleton component
        return int(labels[index[user]]) if user in index else ("missing", user)

    n_pairs = connected = recovered = 0
    for members in groups.values():
        comps = [comp(u) for u in members]
        for a, b in combinations(comps, 2):
            n_pairs += 1
            connected += a == b
        biggest = max(comps.count(c) for c in set(comps))
        recovered += biggest * 2 > len(members)
    return {
        "edge_precision": precision,
        "edge_recall": connected / n_pairs if n_pairs else None,
        "group_recovery_rate": recovered / len(groups) if groups else None,
    }
