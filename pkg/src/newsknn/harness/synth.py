"""Seeded synthetic click logs with topic structure.

Items belong to one topic each. Embeddings are the topic's one-hot vector
plus Gaussian noise, renormalised. Sessions walk over topics: stay with
probability ``stickiness``, otherwise jump to a different topic chosen
uniformly. Items are uniform within a topic.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ..sessions import Event, write_catalog, write_embeddings, write_events

# 2020-09-14 00:00:00 UTC
DEFAULT_EPOCH = 1_600_041_600


@dataclass(frozen=True)
class SynthParams:
    n_topics: int = 8
    items_per_topic: int = 20
    n_sessions: int = 2000
    mean_session_length: float = 5.0
    stickiness: float = 0.9
    embedding_noise: float = 0.05
    timespan_days: int = 20
    seed: int = 0
    start_epoch: int = DEFAULT_EPOCH

    def __post_init__(self):
        if min(self.n_topics, self.items_per_topic, self.n_sessions, self.timespan_days) < 1:
            raise ValueError("counts must be positive")
        if not 0.0 <= self.stickiness <= 1.0:
            raise ValueError("stickiness must be in [0, 1]")
        if self.embedding_noise < 0:
            raise ValueError("embedding_noise must be >= 0")
        if self.mean_session_length <= 2:
            raise ValueError("mean_session_length must exceed 2")

    @classmethod
    def from_mapping(cls, raw: dict) -> "SynthParams":
        kinds = {f.name: f.type for f in fields(cls)}
        unknown = set(raw) - set(kinds)
        if unknown:
            raise ValueError(f"unknown synth parameter(s): {', '.join(sorted(unknown))}")
        conv = {"int": int, "float": float}
        return cls(**{k: conv[kinds[k]](v) for k, v in raw.items()})


@dataclass
class SyntheticData:
    events: list
    embeddings: dict
    topics: dict
    item_topic: dict


def item_id(topic: int, j: int) -> str:
    return f"t{topic:02d}i{j:03d}"


def generate_synthetic(params: SynthParams) -> SyntheticData:
    rng = np.random.default_rng(params.seed)
    nt, ipt = params.n_topics, params.items_per_topic

    embeddings, topics, item_topic = {}, {}, {}
    for t in range(nt):
        for j in range(ipt):
            v = np.zeros(nt)
            v[t] = 1.0
            if params.embedding_noise > 0:
                v = v + rng.normal(0.0, params.embedding_noise, nt)
            norm = np.linalg.norm(v)
            if norm == 0.0:
                v, norm = np.eye(nt)[t], 1.0
            it = item_id(t, j)
            embeddings[it] = (v / norm).tolist()
            topics[it] = [f"topic{t:02d}"]
            item_topic[it] = t

    # lengths: 1 + geometric (support >= 2) with mean mean_session_length
    p = 1.0 / (params.mean_session_length - 1.0)
    lengths = 1 + rng.geometric(p, params.n_sessions)
    span = params.timespan_days * 86400
    events = []
    width = len(str(params.n_sessions))
    for s in range(params.n_sessions):
        length = int(lengths[s])
        gaps = rng.integers(10, 300, size=length - 1, endpoint=True)
        duration = int(gaps.sum())
        start = params.start_epoch + 1 + int(rng.integers(0, max(1, span - duration - 1)))
        topic = int(rng.integers(nt))
        t = start
        sid = f"s{s:0{width}d}"
        for pos in range(length):
            if pos > 0:
                t += int(gaps[pos - 1])
                if nt > 1 and rng.random() >= params.stickiness:
                    topic = (topic + 1 + int(rng.integers(nt - 1))) % nt
            events.append(Event(sid, item_id(topic, int(rng.integers(ipt))), t))
    return SyntheticData(events, embeddings, topics, item_topic)


def write_synthetic(data: SyntheticData, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "events": out / "events.csv",
        "embeddings": out / "embeddings.tsv",
        "catalog": out / "catalog.tsv",
    }
    write_events(paths["events"], data.events)
    write_embeddings(paths["embeddings"], data.embeddings)
    write_catalog(paths["catalog"], data.topics)
    return paths
