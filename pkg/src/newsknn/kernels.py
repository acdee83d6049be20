"""Scalar weighting functions shared by the neighbourhood recommenders.

Sparse session vectors are plain ``dict`` objects mapping item id to weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, UnknownItemError, ZeroVectorError

SECONDS_PER_DAY = 86400

DECAY_KINDS = ("binary", "inverse", "linear", "quadratic", "logarithmic", "stan_exponential")


@dataclass(frozen=True)
class DecayScheme:
    """Position weighting for the active session vector.

    ``lambda1`` is only read by ``stan_exponential``.
    """

    kind: str = "binary"
    lambda1: float = 1.0

    def __post_init__(self):
        if self.kind not in DECAY_KINDS:
            raise ValueError(f"unknown decay {self.kind!r}; expected one of {DECAY_KINDS}")
        if self.kind == "stan_exponential" and not self.lambda1 > 0:
            raise ValueError("stan_exponential needs lambda1 > 0")

    def weight(self, rank: int, length: int) -> float:
        """Weight of the item at 1-based ``rank`` in a session of ``length``."""
        gap = length - rank
        kind = self.kind
        if kind == "binary":
            return 1.0
        if kind == "inverse":
            return 1.0 / (gap + 1)
        if kind == "linear":
            return max(0.1, 1.0 - 0.1 * gap)
        if kind == "quadratic":
            return 1.0 / (gap + 1) ** 2
        if kind == "logarithmic":
            return 1.0 / math.log2(gap + 2)
        return math.exp(-gap / self.lambda1)


BINARY = DecayScheme("binary")


def session_vector(session, scheme: DecayScheme = BINARY) -> dict:
    """Sparse weight vector of a session.

    A repeated item takes the weight of its most recent position.
    """
    n = len(session)
    if scheme.kind == "binary":
        return dict.fromkeys(session.items, 1.0)
    return {item: scheme.weight(rank, n) for item, rank in session.positions.items()}


def cosine(u: dict, v: dict) -> float:
    if len(u) > len(v):
        u, v = v, u
    dot = sum(w * v[k] for k, w in u.items() if k in v)
    nu = math.sqrt(sum(w * w for w in u.values()))
    nv = math.sqrt(sum(w * w for w in v.values()))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("cosine of a zero-norm vector")
    return dot / (nu * nv)


def recency_weight(t_s: int, t_n: int, lambda2_days: float) -> float:
    """exp(-(t_s - t_n) / lambda2) with lambda2 in days; a newer neighbour gets 1."""
    if not lambda2_days > 0:
        raise ValueError("lambda2 must be > 0")
    return math.exp(-max(0, t_s - t_n) / (lambda2_days * SECONDS_PER_DAY))


def neighbor_position_weight(item, anchor, neighbor, lambda3: float) -> float:
    """Decay by position gap between ``item`` and ``anchor`` inside ``neighbor``.

    ``anchor`` is the most recent active-session item present in the
    neighbour; returns 0 when ``item`` is not in the neighbour.
    """
    p_anchor = neighbor.positions.get(anchor)
    if p_anchor is None:
        raise ValueError(f"anchor item {anchor!r} not in neighbour session")
    p_item = neighbor.positions.get(item)
    if p_item is None:
        return 0.0
    return math.exp(-abs(p_item - p_anchor) / lambda3)


def last_shared_position_weight(anchor, session, lambda4: float) -> float:
    """exp((p(anchor) - l(s)) / lambda4); 1 when ``anchor`` is the last click."""
    p = session.positions.get(anchor)
    if p is None:
        raise ValueError(f"anchor item {anchor!r} not in active session")
    return math.exp((p - len(session)) / lambda4)


def idf_weight(item, corpus, lambda_idf: float = 1.0) -> float:
    count = corpus.session_count_per_item.get(item)
    if count is None:
        raise UnknownItemError(item)
    return math.log(len(corpus) / count) * lambda_idf


def cosine_dissimilarity(ei, ej) -> float:
    """1 - cos(ei, ej), in [0, 2]. Not clamped at 1."""
    a = np.asarray(ei, dtype=float)
    b = np.asarray(ej, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes {a.shape} and {b.shape} differ")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("dissimilarity of a zero vector")
    return float(np.clip(1.0 - (a @ b) / (na * nb), 0.0, 2.0))
