"""Session corpus, inverted session index, embeddings and topic catalog.

Everything built here is immutable after construction and may be shared
freely between readers (threads or forked workers).
"""

from __future__ import annotations

import csv
import heapq
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateItemError,
    EmptyCorpusError,
    IngestError,
    MissingEmbeddingError,
    ZeroVectorError,
)

EVENT_HEADER = ("session_id", "item_id", "timestamp")


@dataclass(frozen=True)
class Event:
    session_id: str
    item_id: str
    timestamp: int

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError(f"negative timestamp {self.timestamp}")


@dataclass(frozen=True)
class Session:
    """Ordered, timestamped click sequence.

    Items may repeat. ``position(i)`` is 1-based and refers to the most
    recent occurrence of ``i``.
    """

    session_id: str
    items: tuple
    timestamps: tuple
    positions: Mapping[str, int] = field(init=False, repr=False, compare=False)
    item_set: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        items = tuple(self.items)
        stamps = tuple(int(t) for t in self.timestamps)
        if not items:
            raise ValueError(f"session {self.session_id!r} has no items")
        if len(items) != len(stamps):
            raise ValueError(f"session {self.session_id!r}: items/timestamps length differ")
        if any(b < a for a, b in zip(stamps, stamps[1:])):
            raise ValueError(f"session {self.session_id!r}: timestamps decrease")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "timestamps", stamps)
        # later occurrences overwrite earlier ones
        object.__setattr__(self, "positions", MappingProxyType({it: r for r, it in enumerate(items, 1)}))
        object.__setattr__(self, "item_set", frozenset(items))

    @property
    def end_time(self) -> int:
        return self.timestamps[-1]

    def __len__(self):
        return len(self.items)

    def __contains__(self, item):
        return item in self.positions

    def position(self, item) -> int:
        return self.positions[item]

    def head(self, n: int) -> "Session":
        """First ``n`` events as a new session with the same id."""
        return Session(self.session_id, self.items[:n], self.timestamps[:n])

    @classmethod
    def from_items(cls, items: Sequence, session_id="active", end_time=0) -> "Session":
        """Session with all clicks at ``end_time``; convenient for queries."""
        return cls(session_id, tuple(items), (int(end_time),) * len(items))


class SessionCorpus:
    """Immutable collection of training sessions keyed by id."""

    def __init__(self, sessions: Iterable[Session]):
        by_id = {}
        for s in sessions:
            if s.session_id in by_id:
                raise ValueError(f"duplicate session id {s.session_id!r}")
            by_id[s.session_id] = s
        counts = defaultdict(int)
        for s in by_id.values():
            for it in s.item_set:
                counts[it] += 1
        self.sessions: Mapping[str, Session] = MappingProxyType(by_id)
        self.session_count_per_item: Mapping[str, int] = MappingProxyType(dict(counts))
        self.item_vocabulary = frozenset(counts)

    def __len__(self):
        return len(self.sessions)

    def __iter__(self):
        return iter(self.sessions.values())

    def __getitem__(self, session_id) -> Session:
        return self.sessions[session_id]

    def subset(self, session_ids: Iterable[str]) -> "SessionCorpus":
        return SessionCorpus(self.sessions[sid] for sid in session_ids)


def ingest_events(events: Iterable[Event], min_session_length: int = 3) -> SessionCorpus:
    """Group events into sessions.

    Within a session events are ordered by timestamp; equal timestamps keep
    input order. Sessions shorter than ``min_session_length`` are dropped.
    """
    if min_session_length < 2:
        raise ValueError("min_session_length must be >= 2")
    grouped: dict[str, list] = {}
    for seq, ev in enumerate(events):
        grouped.setdefault(ev.session_id, []).append((ev.timestamp, seq, ev.item_id))
    sessions = []
    for sid, rows in grouped.items():
        if len(rows) < min_session_length:
            continue
        rows.sort()
        sessions.append(Session(sid, tuple(r[2] for r in rows), tuple(r[0] for r in rows)))
    if not sessions:
        raise EmptyCorpusError(f"no session has at least {min_session_length} events")
    return SessionCorpus(sessions)


def parse_events(text_or_lines) -> list[Event]:
    """Parse the event-log CSV format (header ``session_id,item_id,timestamp``)."""
    if isinstance(text_or_lines, str):
        text_or_lines = io.StringIO(text_or_lines)
    reader = csv.reader(text_or_lines)
    events = []
    for line_no, row in enumerate(reader, 1):
        if line_no == 1:
            if tuple(c.strip() for c in row) != EVENT_HEADER:
                raise IngestError(1, f"expected header {','.join(EVENT_HEADER)}, got {','.join(row)}")
            continue
        if not row:
            continue
        if len(row) != 3:
            raise IngestError(line_no, f"expected 3 columns, got {len(row)}")
        sid, item, ts = (c.strip() for c in row)
        try:
            t = int(ts)
        except ValueError:
            raise IngestError(line_no, f"timestamp {ts!r} is not an integer") from None
        if t < 0:
            raise IngestError(line_no, f"negative timestamp {t}")
        events.append(Event(sid, item, t))
    return events


def read_events(path) -> list[Event]:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_events(fh)


def load_corpus(path, min_session_length: int = 3) -> SessionCorpus:
    return ingest_events(read_events(path), min_session_length)


def write_events(path, events: Iterable[Event]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_HEADER)
        for ev in events:
            w.writerow((ev.session_id, ev.item_id, ev.timestamp))


class SessionIndex:
    """Inverted index item -> sessions, newest first.

    Sessions are ranked once by (end_time, session_id) descending; every
    postings list is a subsequence of that ranking, so candidate sampling is
    a k-way merge of rank lists.
    """

    def __init__(self, corpus: SessionCorpus):
        if len(corpus) == 0:
            raise EmptyCorpusError("cannot index an empty corpus")
        order = sorted(corpus, key=lambda s: (s.end_time, s.session_id), reverse=True)
        self._ranked_ids = tuple(s.session_id for s in order)
        self._rank = {sid: r for r, sid in enumerate(self._ranked_ids)}
        self.end_time = MappingProxyType({s.session_id: s.end_time for s in order})
        ranks = defaultdict(list)
        for r, s in enumerate(order):
            for it in s.item_set:
                ranks[it].append(r)
        self._posting_ranks = {it: tuple(rs) for it, rs in ranks.items()}
        self.postings = MappingProxyType(
            {it: tuple(self._ranked_ids[r] for r in rs) for it, rs in self._posting_ranks.items()}
        )
        # end_time of the newest session holding each item; used for tie-breaks
        self.item_last_seen = MappingProxyType(
            {it: order[rs[0]].end_time for it, rs in self._posting_ranks.items()}
        )

    def __contains__(self, item):
        return item in self._posting_ranks

    def sample(self, active: Session, m: int) -> list[str]:
        if m < 1:
            raise ValueError("sample size m must be >= 1")
        lists = [self._posting_ranks[it] for it in active.item_set if it in self._posting_ranks]
        if not lists:
            return []
        own = self._rank.get(active.session_id)
        out = []
        last = -1
        for r in heapq.merge(*lists):
            if r == last or r == own:
                continue
            last = r
            out.append(self._ranked_ids[r])
            if len(out) == m:
                break
        return out


def build_index(corpus: SessionCorpus) -> SessionIndex:
    return SessionIndex(corpus)


def sample_candidate_sessions(index: SessionIndex, active: Session, m: int) -> list[str]:
    """Up to ``m`` most recent sessions sharing an item with ``active``.

    Returned newest first. An active session with only unseen items yields
    an empty list. The active session's own id is never returned.
    """
    return index.sample(active, m)


class EmbeddingStore:
    """Item id -> dense vector, all of one dimension, none all-zero."""

    def __init__(self, vectors: Mapping[str, Sequence[float]], dimension: int | None = None):
        vecs = {}
        for item, v in vectors.items():
            arr = np.asarray(v, dtype=float)
            if arr.ndim != 1:
                raise DimensionMismatchError(f"item {item!r}: vector must be 1-d")
            if dimension is None:
                dimension = arr.shape[0]
            if arr.shape[0] != dimension:
                raise DimensionMismatchError(f"item {item!r}: dimension {arr.shape[0]} != {dimension}")
            norm = float(np.linalg.norm(arr))
            if norm == 0.0 or not math.isfinite(norm):
                raise ZeroVectorError(f"item {item!r}: zero or non-finite vector")
            arr.setflags(write=False)
            vecs[item] = arr
        if dimension is None or dimension < 1:
            raise DimensionMismatchError("embedding dimension must be positive")
        self.dimension = int(dimension)
        self.vectors: Mapping[str, np.ndarray] = MappingProxyType(vecs)
        self._row = {item: r for r, item in enumerate(vecs)}
        units = np.empty((len(vecs), self.dimension))
        for r, v in enumerate(vecs.values()):
            units[r] = v / np.linalg.norm(v)
        units.setflags(write=False)
        self._units = units

    def __len__(self):
        return len(self.vectors)

    def __contains__(self, item):
        return item in self._row

    def rows(self, items: Iterable[str]) -> np.ndarray:
        try:
            return np.fromiter((self._row[i] for i in items), dtype=np.intp)
        except KeyError as exc:
            raise MissingEmbeddingError(exc.args[0]) from None

    def units(self, items: Iterable[str]) -> np.ndarray:
        """Unit-normalised vectors for ``items`` stacked as rows."""
        return self._units[self.rows(items)]

    def distance(self, i: str, j: str) -> float:
        """Cosine dissimilarity ``1 - cos``; in [0, 2]."""
        u = self.units((i, j))
        return float(np.clip(1.0 - u[0] @ u[1], 0.0, 2.0))

    def distance_matrix(self, items: Sequence[str]) -> np.ndarray:
        u = self.units(items)
        d = np.clip(1.0 - u @ u.T, 0.0, 2.0)
        np.fill_diagonal(d, 0.0)
        return d


def load_embeddings(path) -> EmbeddingStore:
    """Read the TSV embedding format (``#dim <d>`` header, then one row per item)."""
    dim = None
    vectors = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if line_no == 1 and len(parts) == 2 and parts[0] == "dim":
                    try:
                        dim = int(parts[1])
                    except ValueError:
                        raise IngestError(line_no, f"bad dimension header {line!r}") from None
                continue
            cols = line.split("\t")
            item, values = cols[0], cols[1:]
            if dim is None:
                dim = len(values)
            if len(values) != dim:
                raise DimensionMismatchError(
                    f"line {line_no}: item {item!r} has {len(values)} values, expected {dim}")
            if item in vectors:
                raise DuplicateItemError(item)
            try:
                vectors[item] = [float(v) for v in values]
            except ValueError:
                raise IngestError(line_no, "non-numeric embedding value") from None
    return EmbeddingStore(vectors, dim)


def write_embeddings(path, vectors: Mapping[str, Sequence[float]]):
    items = list(vectors)
    dim = len(vectors[items[0]]) if items else 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#dim {dim}\n")
        for item in items:
            fh.write(item + "\t" + "\t".join(repr(float(x)) for x in vectors[item]) + "\n")


def validate_coverage(corpus: SessionCorpus, store: EmbeddingStore):
    """Raise MissingEmbeddingError naming every corpus item without a vector."""
    missing = [it for it in corpus.item_vocabulary if it not in store]
    if missing:
        raise MissingEmbeddingError(missing)


class ItemCatalog:
    """Item id -> set of topic strings."""

    def __init__(self, topics: Mapping[str, Iterable[str]]):
        self.topics: Mapping[str, frozenset] = MappingProxyType(
            {it: frozenset(ts) for it, ts in topics.items()})

    def __getitem__(self, item) -> frozenset:
        return self.topics.get(item, frozenset())

    def __len__(self):
        return len(self.topics)

    @property
    def has_topics(self) -> bool:
        return any(self.topics.values())


def load_catalog(path) -> ItemCatalog:
    topics = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            item, _, rest = line.partition("\t")
            if item in topics:
                raise DuplicateItemError(item)
            topics[item] = [t for t in rest.split(";") if t]
    return ItemCatalog(topics)


def write_catalog(path, topics: Mapping[str, Iterable[str]]):
    with open(path, "w", encoding="utf-8") as fh:
        for item, ts in topics.items():
            fh.write(f"{item}\t{';'.join(ts)}\n")


__all__ = [
    "Event", "Session", "SessionCorpus", "SessionIndex", "EmbeddingStore", "ItemCatalog",
    "ingest_events", "parse_events", "read_events", "load_corpus", "write_events",
    "build_index", "sample_candidate_sessions", "load_embeddings", "write_embeddings",
    "validate_coverage", "load_catalog", "write_catalog",
]
