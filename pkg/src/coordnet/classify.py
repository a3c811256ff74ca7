"""Term-based user classes (military/veteran, patriot, QAnon).

Names are split into *words* on non-alphanumeric characters, and each word
into *tokens* at camel-case boundaries and before a trailing digit run. A
term matches when a run of consecutive tokens spells it exactly, so "army"
matches "ArmyWife" but not "harmony". Single-character terms ("q") must equal
a whole word, so "QPatriot" or "Q2021" do not count.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import Corpus, User
from .errors import ConfigError

MILITARY = "military/veteran"
PATRIOT = "patriot"
QANON = "qanon"

DEFAULT_TERMS: dict[str, tuple[str, ...]] = {
    MILITARY: (
        "army", "navy", "air force", "airforce", "marine", "veteran", "military",
        "servicemember", "coastguard", "coast guard", "soldier", "infantry",
        "sergeant",
    ),
    PATRIOT: ("patriot",),
    QANON: ("qanon", "wwg1wga", "q", "thegreatawakening", "thestorm", "theplan"),
}

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)
# aB | ABc (acronym end) | letters followed by a trailing digit run
_CAMEL_RE = re.compile(r"(?<=[a-z])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])|(?<=[^\W\d_])(?=\d+$)")


def words(name: str) -> list[str]:
    return _WORD_RE.findall(name)


def tokens(name: str) -> list[list[str]]:
    """Lowercased camel-case tokens, grouped per word."""
    return [[t.lower() for t in _CAMEL_RE.split(w) if t] for w in words(name)]


@dataclass(frozen=True)
class UserClassTable:
    classes: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        clean = {}
        for label, terms in self.classes.items():
            if label in clean:
                raise ConfigError(f"duplicate class label {label!r}")
            terms = tuple(str(t).lower().strip() for t in terms)
            if not terms or any(not t for t in terms):
                raise ConfigError(f"class {label!r} needs a nonempty list of terms")
            clean[str(label)] = terms
        object.__setattr__(self, "classes", clean)

    @classmethod
    def default(cls) -> "UserClassTable":
        return cls(DEFAULT_TERMS)

    @classmethod
    def load(cls, path: str | Path) -> "UserClassTable":
        """Load ``{label: [terms...]}`` from a JSON or TOML file."""
        path = Path(path)
        data = load_mapping(path)
        if not isinstance(data, dict) or not all(isinstance(v, list) for v in data.values()):
            raise ConfigError(f"{path}: expected a mapping of class label to term list")
        return cls(data)

    @property
    def labels(self) -> list[str]:
        return list(self.classes)


@dataclass(frozen=True)
class ClassAssignment:
    username: str
    classes: frozenset[str]


def load_mapping(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from exc


def _term_matches(term: str, name_tokens: list[list[str]]) -> bool:
    if len(term) == 1:
        return any(len(ws) == 1 and ws[0] == term for ws in name_tokens)
    # a run of consecutive tokens whose concatenation spells the term, so
    # "TheGreatAwakening" and "Air Force" match "thegreatawakening"/"air force"
    target = "".join(t for ws in tokens(term) for t in ws)
    flat = [t for ws in name_tokens for t in ws]
    for i in range(len(flat)):
        joined = ""
        for tok in flat[i:]:
            joined += tok
            if joined == target:
                return True
            if not target.startswith(joined):
                break
    return False


def classify_names(names: Iterable[str], table: UserClassTable) -> frozenset[str]:
    toks = [tokens(n) for n in names if n]
    found = set()
    for label, terms in table.classes.items():
        if any(_term_matches(term, nt) for term in terms for nt in toks):
            found.add(label)
    return frozenset(found)


def classify_user(user: User, table: UserClassTable | None = None) -> ClassAssignment:
    table = table or UserClassTable.default()
    return ClassAssignment(user.username, classify_names((user.username, user.display_name), table))


def classify_corpus(corpus: Corpus, table: UserClassTable | None = None) -> dict[str, frozenset[str]]:
    table = table or UserClassTable.default()
    return {u.username: classify_user(u, table).classes for u in corpus.users.values()}


def class_census(
    corpus: Corpus,
    table: UserClassTable | None = None,
    assignments: Mapping[str, frozenset[str]] | None = None,
) -> dict[str, dict]:
    """Per-class account and post counts with shares of the corpus totals.

    Multi-class users count toward each of their classes.
    """
    if len(corpus.users) == 0:
        raise ConfigError("class census needs a nonempty corpus")
    table = table or UserClassTable.default()
    if assignments is None:
        assignments = classify_corpus(corpus, table)
    n_users, n_posts = len(corpus.users), len(corpus.posts)
    census = {}
    for label in table.labels:
        members = [u for u in corpus.users if label in assignments.get(u, ())]
        posts = sum(len(corpus.users[u].post_ids) for u in members)
        census[label] = {
            "account_count": len(members),
            "account_share": round(len(members) / n_users, 4),
            "post_count": posts,
            "post_share": round(posts / n_posts, 4),
        }
    return census
