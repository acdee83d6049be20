"""Accuracy and diversity metrics for top-k lists, and their aggregation."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .errors import ZeroVarianceError
from .sessions import EmbeddingStore, ItemCatalog, Session

REPORT_HEADER = ("method", "variant", "k", "P", "R", "ILD", "RR_ILD", "CT", "n_cases", "n_empty")
DEFAULT_RR_DISCOUNT = 0.85


@dataclass(frozen=True)
class TestCase:
    """Prefix of a test session plus its two held-out items."""

    __test__ = False  # not a pytest class

    prefix: Session
    held_out: tuple

    def __post_init__(self):
        if len(set(self.held_out)) != 2:
            raise ValueError("a test case holds out exactly two distinct items")

    @property
    def end_time(self) -> int:
        return self.prefix.end_time

    @classmethod
    def from_session(cls, session: Session) -> "TestCase":
        if len(session) < 3:
            raise ValueError(f"session {session.session_id!r} too short for a test case")
        return cls(session.head(len(session) - 2), (session.items[-2], session.items[-1]))


def _top(rec, k):
    items = rec.items if hasattr(rec, "items") else rec
    return [getattr(e, "item_id", e) for e in list(items)[:k]]


def precision_recall_at_k(rec, relevant, k: int) -> tuple[float, float]:
    if k < 1:
        raise ValueError("k must be >= 1")
    relevant = set(relevant)
    hits = sum(1 for it in _top(rec, k) if it in relevant)
    return hits / k, (hits / len(relevant) if relevant else 0.0)


def ild_at_k(rec, embeddings: EmbeddingStore, k: int) -> float:
    """Mean pairwise cosine dissimilarity of the top-k items (0 for < 2 items)."""
    top = _top(rec, k)
    n = len(top)
    if n < 2:
        return 0.0
    d = embeddings.distance_matrix(top)
    return float(d.sum() / (n * (n - 1)))


def rr_ild_at_k(rec, relevant, embeddings: EmbeddingStore, k: int,
                discount: float = DEFAULT_RR_DISCOUNT) -> float:
    """Rank- and relevance-discounted intra-list diversity.

    Each relevant item at rank r contributes ``disc(r)`` times its
    discount-weighted mean distance to the other listed items; the sum is
    normalised by the total discount mass of the list. ``disc(r) =
    discount ** (r - 1)``.
    """
    top = _top(rec, k)
    n = len(top)
    if n < 2:
        return 0.0
    relevant = set(relevant)
    rel = np.array([it in relevant for it in top], dtype=float)
    if not rel.any():
        return 0.0
    disc = discount ** np.arange(n, dtype=float)
    d = embeddings.distance_matrix(top)
    np.fill_diagonal(d, 0.0)
    others = disc.sum() - disc
    per_rank = (d @ disc) / others
    return float((disc * rel * per_rank).sum() / disc.sum())


def ct_at_k(rec, catalog: ItemCatalog, k: int) -> int:
    topics = set()
    for it in _top(rec, k):
        topics |= catalog[it]
    return len(topics)


@dataclass(frozen=True)
class PearsonResult:
    r: float
    t: float
    p: float
    n: int


def pearson(xs: Sequence[float], ys: Sequence[float]) -> PearsonResult:
    """Sample Pearson correlation with a two-tailed t-test.

    For n > 30 the t distribution is approximated by the standard normal;
    smaller samples use the exact Student-t tail.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-d and equally long")
    n = len(x)
    if n < 3:
        raise ValueError("need at least 3 points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVarianceError("correlation undefined for a constant series")
    r = max(-1.0, min(1.0, float(dx @ dy) / math.sqrt(sxx * syy)))
    if abs(r) == 1.0:
        return PearsonResult(r, math.copysign(math.inf, r), 0.0, n)
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    if n > 30:
        p = math.erfc(abs(t) / math.sqrt(2.0))
    else:
        p = float(2.0 * stats.t.sf(abs(t), n - 2))
    return PearsonResult(r, t, p, n)


@dataclass(frozen=True)
class MetricsRow:
    method: str
    variant: str
    k: int
    P: float
    R: float
    ILD: float
    RR_ILD: float
    CT: float
    n_cases: int
    n_empty: int

    def csv_fields(self) -> list[str]:
        out = []
        for f, v in zip(fields(self), astuple(self)):
            out.append(f"{v:.6f}" if isinstance(v, float) else str(v))
        return out


class _Accumulator:
    def __init__(self):
        self.parts = {"P": [], "R": [], "ILD": [], "RR_ILD": [], "CT": []}
        self.n_empty = 0

    def add(self, rec, case: TestCase, k, embeddings, catalog, discount):
        if not rec.items:
            self.n_empty += 1
        p, r = precision_recall_at_k(rec, case.held_out, k)
        self.parts["P"].append(p)
        self.parts["R"].append(r)
        self.parts["ILD"].append(ild_at_k(rec, embeddings, k))
        self.parts["RR_ILD"].append(rr_ild_at_k(rec, case.held_out, embeddings, k, discount))
        self.parts["CT"].append(float(ct_at_k(rec, catalog, k)) if catalog is not None else 0.0)

    def row(self, method, variant, k) -> MetricsRow:
        n = len(self.parts["P"])
        means = {m: (math.fsum(v) / n if n else 0.0) for m, v in self.parts.items()}
        return MetricsRow(method, variant, k, n_cases=n, n_empty=self.n_empty, **means)


def evaluate_variants(recommender, model, test_cases: Iterable[TestCase], k: int = 10,
                      variants: Sequence[str] = ("base",), catalog: ItemCatalog | None = None,
                      rr_discount: float = DEFAULT_RR_DISCOUNT) -> dict[str, MetricsRow]:
    """Per-variant mean metrics over ``test_cases`` for one base model.

    Empty recommendation lists count as all-zero cases.
    """
    if recommender.ctx is None:
        raise ValueError("evaluation needs item embeddings for the diversity metrics")
    embeddings = recommender.ctx.embeddings
    acc = {v: _Accumulator() for v in variants}
    for case in test_cases:
        lists = recommender.recommend_variants(model, case.prefix, k, variants)
        for v in variants:
            acc[v].add(lists[v], case, k, embeddings, catalog, rr_discount)
    return {v: acc[v].row(model.method, v, k) for v in variants}


def evaluate_run(recommender, model, test_cases, k: int = 10, catalog=None,
                 rr_discount: float = DEFAULT_RR_DISCOUNT) -> MetricsRow:
    return evaluate_variants(recommender, model, test_cases, k, (model.variant,), catalog, rr_discount)[model.variant]


def macro_average(rows: Sequence[MetricsRow]) -> MetricsRow:
    """Equal-weight mean of per-partition rows; case counts are summed."""
    first = rows[0]
    n = len(rows)
    means = {m: math.fsum(getattr(r, m) for r in rows) / n for m in ("P", "R", "ILD", "RR_ILD", "CT")}
    return MetricsRow(first.method, first.variant, first.k, n_cases=sum(r.n_cases for r in rows),
                      n_empty=sum(r.n_empty for r in rows), **means)


def write_report(path, rows: Iterable[MetricsRow]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for row in rows:
            w.writerow(row.csv_fields())


def read_report(path) -> list[MetricsRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(MetricsRow(
                rec["method"], rec["variant"], int(rec["k"]),
                *(float(rec[m]) for m in ("P", "R", "ILD", "RR_ILD", "CT")),
                int(rec["n_cases"]), int(rec["n_empty"])))
    return rows
