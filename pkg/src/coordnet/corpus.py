"""Post/user data model and structured corpus loading.

A corpus file is either JSONL (one post object per line) or CSV with the
same column names, list fields joined with ``;``.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import CorpusError, LongBodyWarning

MAX_BODY_CHARS = 1000

FIELDS = (
    "post_id",
    "author_username",
    "author_name",
    "body",
    "is_echo",
    "hashtags",
    "mentions",
    "urls",
    "has_media",
    "echo_count",
    "impression_count",
    "upvote_count",
    "comment_count",
    "timestamp",
)
COUNT_FIELDS = ("echo_count", "impression_count", "upvote_count", "comment_count")
LIST_FIELDS = ("hashtags", "mentions", "urls")
BOOL_FIELDS = ("is_echo", "has_media")
OPTIONAL_FIELDS = frozenset({"timestamp"})


@dataclass(frozen=True)
class Post:
    post_id: str
    author_username: str
    author_name: str = ""
    body: str = ""
    is_echo: bool = False
    hashtags: tuple[str, ...] = ()
    mentions: tuple[str, ...] = ()
    urls: tuple[str, ...] = ()
    has_media: bool = False
    echo_count: int = 0
    impression_count: int = 0
    upvote_count: int = 0
    comment_count: int = 0
    timestamp: datetime | None = None

    def __post_init__(self):
        for name in COUNT_FIELDS:
            if getattr(self, name) < 0:
                raise CorpusError(f"post {self.post_id!r}: {name} must be >= 0")
        tags = tuple(normalize_hashtag(t) for t in self.hashtags)
        object.__setattr__(self, "hashtags", tags)
        object.__setattr__(self, "mentions", tuple(self.mentions))
        object.__setattr__(self, "urls", tuple(self.urls))

    def to_record(self) -> dict:
        rec = {name: getattr(self, name) for name in FIELDS}
        for name in LIST_FIELDS:
            rec[name] = list(rec[name])
        rec["timestamp"] = _format_timestamp(self.timestamp)
        return rec


@dataclass(frozen=True)
class User:
    username: str
    display_name: str
    post_ids: tuple[str, ...]


@dataclass(frozen=True)
class Corpus:
    """Immutable collection of posts with users derived by author_username.

    ``posts`` and ``users`` preserve first-seen order; that order defines the
    row/column order of every matrix built downstream.
    """

    posts: Mapping[str, Post] = field(default_factory=dict)
    users: Mapping[str, User] = field(default_factory=dict)

    @classmethod
    def from_posts(cls, posts: Iterable[Post]) -> "Corpus":
        by_id: dict[str, Post] = {}
        grouped: dict[str, list[str]] = {}
        names: dict[str, str] = {}
        for post in posts:
            if post.post_id in by_id:
                raise CorpusError(f"duplicate post_id {post.post_id!r}")
            by_id[post.post_id] = post
            grouped.setdefault(post.author_username, []).append(post.post_id)
            names.setdefault(post.author_username, post.author_name)
        users = {u: User(u, names[u], tuple(ids)) for u, ids in grouped.items()}
        return cls(posts=by_id, users=users)

    def __len__(self) -> int:
        return len(self.posts)

    def __iter__(self) -> Iterator[Post]:
        return iter(self.posts.values())

    @property
    def post_ids(self) -> list[str]:
        return list(self.posts)

    @property
    def usernames(self) -> list[str]:
        return list(self.users)

    def posts_of(self, username: str) -> list[Post]:
        return [self.posts[pid] for pid in self.users[username].post_ids]


def normalize_hashtag(tag: str) -> str:
    return tag.lstrip("#").lower()


def filter_originals(corpus: Corpus) -> Corpus:
    """Drop echoed posts, and any user left with no posts."""
    return Corpus.from_posts(p for p in corpus if not p.is_echo)


# -- parsing ---------------------------------------------------------------


def _parse_timestamp(value) -> datetime | None:
    if value is None or value == "":
        return None
    if isinstance(value, datetime):
        ts = value
    else:
        text = str(value).strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _format_timestamp(ts: datetime | None) -> str | None:
    if ts is None:
        return None
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _parse_bool(value, name: str) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)) and value in (0, 1):
        return bool(value)
    text = str(value).strip().lower()
    if text in ("true", "1", "yes", "t"):
        return True
    if text in ("false", "0", "no", "f", ""):
        return False
    raise ValueError(f"{name}: not a boolean: {value!r}")


def _parse_count(value, name: str) -> int:
    if isinstance(value, bool):
        raise ValueError(f"{name}: expected integer, got boolean")
    if isinstance(value, float) and not value.is_integer():
        raise ValueError(f"{name}: expected integer, got {value!r}")
    n = int(value)
    if n < 0:
        raise ValueError(f"{name}: must be >= 0, got {n}")
    return n


def _parse_list(value, name: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return tuple(v for v in value.split(";") if v)
    if isinstance(value, list):
        return tuple(str(v) for v in value)
    raise ValueError(f"{name}: expected list, got {type(value).__name__}")


def post_from_record(rec: Mapping) -> Post:
    """Validate one raw record and build a Post; raises ValueError on problems."""
    keys = set(rec)
    missing = [f for f in FIELDS if f not in keys and f not in OPTIONAL_FIELDS]
    if missing:
        raise ValueError(f"missing required field(s): {', '.join(missing)}")
    unknown = sorted(keys - set(FIELDS))
    if unknown:
        raise ValueError(f"unknown field(s): {', '.join(unknown)}")
    post_id = rec["post_id"]
    if post_id is None or str(post_id) == "":
        raise ValueError("post_id is empty")
    author = rec["author_username"]
    if author is None or str(author) == "":
        raise ValueError("author_username is empty")
    body = "" if rec["body"] is None else str(rec["body"])
    kwargs = dict(
        post_id=str(post_id),
        author_username=str(author),
        author_name="" if rec["author_name"] is None else str(rec["author_name"]),
        body=body,
        timestamp=_parse_timestamp(rec.get("timestamp")),
    )
    for name in BOOL_FIELDS:
        kwargs[name] = _parse_bool(rec[name], name)
    for name in COUNT_FIELDS:
        kwargs[name] = _parse_count(rec[name], name)
    for name in LIST_FIELDS:
        kwargs[name] = _parse_list(rec[name], name)
    return Post(**kwargs)


def _iter_jsonl(fh) -> Iterator[tuple[int, Mapping]]:
    for lineno, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(rec, dict):
            raise CorpusError(f"line {lineno}: expected a JSON object")
        yield lineno, rec


def _iter_csv(fh) -> Iterator[tuple[int, Mapping]]:
    reader = csv.DictReader(fh)
    if reader.fieldnames is None:
        return
    for rec in reader:
        if None in rec:
            raise CorpusError(f"line {reader.line_num}: too many columns")
        yield reader.line_num, rec


def load_corpus(path: str | Path, format: str | None = None) -> Corpus:
    """Load a corpus from a JSONL or CSV file.

    ``format`` defaults to the file extension. Errors carry the offending
    line number; duplicate ids name the repeated post_id.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt not in ("jsonl", "csv"):
        raise CorpusError(f"unsupported corpus format {fmt!r} (expected jsonl or csv)")
    with open(path, encoding="utf-8", newline="") as fh:
        records = _iter_jsonl(fh) if fmt == "jsonl" else _iter_csv(fh)
        return _build(records)


def loads_corpus(text: str, format: str = "jsonl") -> Corpus:
    fh = io.StringIO(text, newline="")
    return _build(_iter_jsonl(fh) if format == "jsonl" else _iter_csv(fh))


def _build(records: Iterable[tuple[int, Mapping]]) -> Corpus:
    posts: list[Post] = []
    seen: set[str] = set()
    for lineno, rec in records:
        try:
            post = post_from_record(rec)
        except ValueError as exc:
            raise CorpusError(f"line {lineno}: {exc}") from exc
        if post.post_id in seen:
            raise CorpusError(f"line {lineno}: duplicate post_id {post.post_id!r}")
        seen.add(post.post_id)
        if len(post.body) > MAX_BODY_CHARS:
            warnings.warn(
                f"post {post.post_id!r}: body has {len(post.body)} characters "
                f"(platform limit {MAX_BODY_CHARS})",
                LongBodyWarning,
                stacklevel=3,
            )
        posts.append(post)
    return Corpus.from_posts(posts)


def dump_corpus(corpus: Corpus, path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if fmt == "jsonl":
            for post in corpus:
                fh.write(json.dumps(post.to_record(), ensure_ascii=False) + "\n")
        elif fmt == "csv":
            writer = csv.DictWriter(fh, fieldnames=FIELDS, lineterminator="\n")
            writer.writeheader()
            for post in corpus:
                rec = post.to_record()
                for name in LIST_FIELDS:
                    rec[name] = ";".join(rec[name])
                for name in BOOL_FIELDS:
                    rec[name] = "true" if rec[name] else "false"
                rec["timestamp"] = rec["timestamp"] or ""
                writer.writerow(rec)
        else:
            raise CorpusError(f"unsupported corpus format {fmt!r}")
