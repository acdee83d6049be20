"""Temporal five-window split with last-day test sessions.

Days are UTC days with closed-right boundaries: day ``d`` covers the
seconds ``(d * 86400, (d + 1) * 86400]``, so a session ending exactly at
midnight belongs to the day before.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from ..errors import LeakageError, ProtocolError, ShortTimespanError
from ..metrics import TestCase
from ..sessions import SessionCorpus

DAY = 86400
N_PARTITIONS = 5


def day_of(t: int) -> int:
    return (t - 1) // DAY


def is_test_eligible(session) -> bool:
    """At least one prefix click and two distinct held-out items."""
    return len(session) >= 3 and session.items[-1] != session.items[-2]


@dataclass(frozen=True)
class Partition:
    index: int
    first_day: int
    n_days: int
    train_ids: tuple
    test_ids: tuple
    excluded_test: int = 0

    @property
    def test_day(self) -> int:
        return self.first_day + self.n_days - 1

    @property
    def train_start(self) -> int:
        """Exclusive lower bound (seconds) of the training window."""
        return self.first_day * DAY

    @property
    def train_end(self) -> int:
        """Inclusive upper bound (seconds) of the training window."""
        return self.test_day * DAY


@dataclass(frozen=True)
class SplitPlan:
    partitions: tuple
    days_per_partition: int
    first_day: int
    dropped_sessions: int = 0
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SplitPlan":
        raw = json.loads(text)
        parts = tuple(
            Partition(p["index"], p["first_day"], p["n_days"], tuple(p["train_ids"]),
                      tuple(p["test_ids"]), p["excluded_test"])
            for p in raw["partitions"])
        return cls(parts, raw["days_per_partition"], raw["first_day"], raw["dropped_sessions"], raw["meta"])


def partition_split(corpus: SessionCorpus, n_partitions: int = N_PARTITIONS) -> SplitPlan:
    """Cut the corpus timespan into equal whole-day windows.

    When the number of days is not a multiple of ``n_partitions`` the
    oldest leftover days are dropped. Within a window the last day holds
    the test sessions, every earlier day the training sessions.
    """
    ends = [s.end_time for s in corpus]
    d0, d1 = day_of(min(ends)), day_of(max(ends))
    total = d1 - d0 + 1
    if total < n_partitions:
        raise ShortTimespanError(f"corpus spans {total} day(s); need at least {n_partitions}")
    per = total // n_partitions
    start = d0 + (total - per * n_partitions)

    buckets = [([], []) for _ in range(n_partitions)]
    dropped = 0
    excluded = [0] * n_partitions
    for s in sorted(corpus, key=lambda s: (s.end_time, s.session_id)):
        d = day_of(s.end_time)
        if d < start:
            dropped += 1
            continue
        w = (d - start) // per
        train, test = buckets[w]
        if d == start + w * per + per - 1:
            if is_test_eligible(s):
                test.append(s.session_id)
            else:
                excluded[w] += 1
        else:
            train.append(s.session_id)
    parts = tuple(
        Partition(w, start + w * per, per, tuple(tr), tuple(te), excluded[w])
        for w, (tr, te) in enumerate(buckets))
    meta = {"total_days": total, "excluded_test_sessions": sum(excluded)}
    return SplitPlan(parts, per, start, dropped, meta)


def test_cases(corpus: SessionCorpus, session_ids) -> list[TestCase]:
    return [TestCase.from_session(corpus[sid]) for sid in session_ids]


test_cases.__test__ = False  # not a pytest function


def make_validation_split(plan: SplitPlan, corpus: SessionCorpus) -> tuple[tuple, list[TestCase]]:
    """Hold out the last training day of the first partition.

    Returns the ids of the remaining (tuning) training sessions and the
    validation test cases.
    """
    first = plan.partitions[0]
    train_days = first.n_days - 1
    if train_days < 2:
        raise ProtocolError(f"first partition has {train_days} training day(s); need 2 for validation")
    val_day = first.test_day - 1
    train_ids, val_ids = [], []
    for sid in first.train_ids:
        s = corpus[sid]
        if day_of(s.end_time) == val_day:
            if is_test_eligible(s):
                val_ids.append(sid)
        else:
            train_ids.append(sid)
    return tuple(train_ids), test_cases(corpus, val_ids)


def check_no_leakage(plan: SplitPlan, corpus: SessionCorpus):
    """Every training session must end inside its partition's training days."""
    for p in plan.partitions:
        for sid in p.train_ids:
            t = corpus[sid].end_time
            if not p.train_start < t <= p.train_end:
                raise LeakageError(f"partition {p.index}: training session {sid!r} ends at {t}, "
                                   f"outside ({p.train_start}, {p.train_end}]")
        for sid in p.test_ids:
            if day_of(corpus[sid].end_time) != p.test_day:
                raise LeakageError(f"partition {p.index}: test session {sid!r} not on the test day")
