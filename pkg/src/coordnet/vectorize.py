"""Post embeddings: a deterministic hashed TF-IDF vectorizer and embedding file I/O.

Two on-disk formats are supported. The text form is a header line ``N d``
followed by ``post_id v1 ... vd`` lines. The binary form starts with the magic
``EMB1``, then little-endian u64 N and u64 d, then N post ids (u32 byte length
+ UTF-8 bytes each), then N*d little-endian float32 values row by row.
"""
from __future__ import annotations

import hashlib
import math
import re
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Corpus
from .errors import EmbeddingError

MAGIC = b"EMB1"
DEFAULT_DIM = 256
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def text_tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def text_features(text: str) -> list[str]:
    """Word unigrams followed by adjacent-word bigrams ("a b")."""
    toks = text_tokens(text)
    return toks + [f"{a} {b}" for a, b in zip(toks, toks[1:])]


def feature_hash(feature: str, seed: int) -> int:
    """Seeded 64-bit hash, stable across processes (unlike ``hash``)."""
    digest = hashlib.blake2b(
        feature.encode("utf-8"), digest_size=8, key=str(int(seed)).encode("ascii")
    ).digest()
    return int.from_bytes(digest, "little")


def bucket_and_sign(feature: str, dim: int, seed: int) -> tuple[int, float]:
    h = feature_hash(feature, seed)
    return h % dim, (-1.0 if h >> 63 else 1.0)


def smooth_idf(n_docs: int, doc_freq: int) -> float:
    return math.log((1 + n_docs) / (1 + doc_freq)) + 1.0


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    post_ids: tuple[str, ...]
    vectors: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        vecs = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if vecs.ndim != 2 or vecs.shape[0] != len(self.post_ids):
            raise EmbeddingError(
                f"expected {len(self.post_ids)} rows, got array of shape {vecs.shape}"
            )
        bad = np.argwhere(~np.isfinite(vecs))
        if len(bad):
            raise EmbeddingError(f"non-finite value at row {int(bad[0][0])}")
        object.__setattr__(self, "post_ids", tuple(self.post_ids))
        object.__setattr__(self, "vectors", vecs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.vectors.shape

    @property
    def zero_rows(self) -> np.ndarray:
        """Boolean mask of all-zero rows (empty or non-lexical texts)."""
        return ~np.any(self.vectors != 0.0, axis=1)

    def normalize(self) -> "EmbeddingMatrix":
        return EmbeddingMatrix(self.post_ids, l2_normalize(self.vectors), normalized=True)


def l2_normalize(x: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    out = np.zeros_like(x, dtype=np.float64)
    nz = norms > 0
    out[nz] = x[nz] / norms[nz, None]
    return out


def embed_builtin(
    texts: Sequence[str],
    dim: int = DEFAULT_DIM,
    seed: int = 0,
    post_ids: Sequence[str] | None = None,
) -> EmbeddingMatrix:
    """Hashed TF-IDF over word unigrams and bigrams, L2-normalized.

    IDF is computed over ``texts`` as ln((1+n)/(1+df)) + 1 and TF is the raw
    count. Each feature adds sign * tf * idf to its hashed column.
    """
    if dim < 2:
        raise EmbeddingError("dim must be >= 2")
    n = len(texts)
    feats = [Counter(text_features(t)) for t in texts]
    df: Counter = Counter()
    for f in feats:
        df.update(f.keys())
    idf = {f: smooth_idf(n, c) for f, c in df.items()}
    slots = {f: bucket_and_sign(f, dim, seed) for f in sorted(df)}

    vecs = np.zeros((n, dim), dtype=np.float64)
    for i, counts in enumerate(feats):
        row = vecs[i]
        for f, tf in counts.items():
            col, sign = slots[f]
            row[col] += sign * tf * idf[f]
    ids = tuple(post_ids) if post_ids is not None else tuple(str(i) for i in range(n))
    return EmbeddingMatrix(ids, l2_normalize(vecs), normalized=True)


def embed_corpus(corpus: Corpus, dim: int = DEFAULT_DIM, seed: int = 0) -> EmbeddingMatrix:
    return embed_builtin([p.body for p in corpus], dim=dim, seed=seed, post_ids=corpus.post_ids)


# -- file formats ----------------------------------------------------------


def _read_text(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingError(f"{path}: header must be 'N d'")
        n, d = int(header[0]), int(header[1])
        ids: list[str] = []
        rows = np.empty((n, d), dtype=np.float64)
        for i, line in enumerate(fh):
            parts = line.split()
            if not parts:
                continue
            if len(ids) >= n:
                raise EmbeddingError(f"{path}: more than {n} rows")
            if len(parts) - 1 != d:
                raise EmbeddingError(
                    f"{path}: row {len(ids)} ({parts[0]!r}) has dimension {len(parts) - 1}, expected {d}"
                )
            try:
                rows[len(ids)] = [float(v) for v in parts[1:]]
            except ValueError as exc:
                raise EmbeddingError(f"{path}: row {len(ids)}: {exc}") from exc
            ids.append(parts[0])
    if len(ids) != n:
        raise EmbeddingError(f"{path}: header says {n} rows, found {len(ids)}")
    return ids, rows


def _read_binary(path: Path) -> tuple[list[str], np.ndarray]:
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise EmbeddingError(f"{path}: bad magic bytes")
    n, d = struct.unpack_from("<QQ", data, 4)
    pos = 20
    ids = []
    for _ in range(n):
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        ids.append(data[pos:pos + length].decode("utf-8"))
        pos += length
    expected = pos + 4 * n * d
    if len(data) != expected:
        raise EmbeddingError(f"{path}: expected {expected} bytes, found {len(data)}")
    rows = np.frombuffer(data, dtype="<f4", count=n * d, offset=pos).reshape(n, d)
    return ids, rows.astype(np.float64)


def read_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with open(path, "rb") as fh:
        binary = fh.read(4) == MAGIC
    return _read_binary(path) if binary else _read_text(path)


def import_embeddings(
    path: str | Path, corpus: Corpus, normalize: bool = True
) -> EmbeddingMatrix:
    """Load externally computed vectors and align them to the corpus post order."""
    ids, rows = read_embeddings(path)
    bad = np.argwhere(~np.isfinite(rows))
    if len(bad):
        raise EmbeddingError(f"{path}: non-finite value at row {int(bad[0][0])}")
    index: dict[str, int] = {}
    for i, pid in enumerate(ids):
        if pid in index:
            raise EmbeddingError(f"{path}: duplicate post_id {pid!r}")
        index[pid] = i
    missing = [pid for pid in corpus.posts if pid not in index]
    if missing:
        raise EmbeddingError(f"{path}: no vector for post_id {missing[0]!r}")
    order = [index[pid] for pid in corpus.posts]
    emb = EmbeddingMatrix(tuple(corpus.posts), rows[order] if order else rows[:0])
    return emb.normalize() if normalize else emb


def write_embeddings(emb: EmbeddingMatrix, path: str | Path, binary: bool = False) -> None:
    path = Path(path)
    n, d = emb.shape
    if binary:
        with open(path, "wb") as fh:
            fh.write(MAGIC + struct.pack("<QQ", n, d))
            for pid in emb.post_ids:
                raw = pid.encode("utf-8")
                fh.write(struct.pack("<I", len(raw)) + raw)
            fh.write(emb.vectors.astype("<f4").tobytes())
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n} {d}\n")
        for pid, row in zip(emb.post_ids, emb.vectors):
            if any(c.isspace() for c in pid):
                raise EmbeddingError(f"post_id {pid!r} contains whitespace")
            fh.write(pid + " " + " ".join(repr(float(v)) for v in row) + "\n")
