"""Content-diversity weights for neighbours and candidates, and MMR re-ranking."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .sessions import EmbeddingStore

# MMR objective values closer than this are ties (input order decides)
MMR_TIE_EPS = 1e-12


class DiversityContext:
    """Embedding-backed diversity weights with a per-session memo for d_n.

    The memo is a plain dict; concurrent fills are benign because the
    value for a session id never changes.
    """

    def __init__(self, embeddings: EmbeddingStore):
        self.embeddings = embeddings
        self.cache: dict[str, float] = {}

    def session_diversity(self, session, use_cache: bool = True) -> float:
        if use_cache:
            hit = self.cache.get(session.session_id)
            if hit is not None:
                return hit
        value = _mean_pairwise_distance(self.embeddings, sorted(session.item_set), singleton=1.0)
        if use_cache:
            self.cache[session.session_id] = value
        return value

    def candidate_diversity(self, item, session) -> float:
        return float(self.candidate_diversities([item], session)[0])

    def candidate_diversities(self, items, session) -> np.ndarray:
        """Mean dissimilarity of each candidate to the distinct active items."""
        cand = self.embeddings.units(items)
        act = self.embeddings.units(sorted(session.item_set))
        dist = np.clip(1.0 - cand @ act.T, 0.0, 2.0)
        return dist.mean(axis=1)


def _mean_pairwise_distance(store, items, singleton):
    n = len(items)
    if n < 2:
        return singleton
    d = store.distance_matrix(items)
    return float(d.sum() / (n * (n - 1)))


def session_diversity(session, ctx: DiversityContext) -> float:
    """Average pairwise content dissimilarity among a session's distinct items.

    A single-item session gets 1.0, the multiplicative neutral weight.
    """
    return ctx.session_diversity(session)


def candidate_diversity(item, session, ctx: DiversityContext) -> float:
    return ctx.candidate_diversity(item, session)


def mmr_rerank(initial, ctx: DiversityContext, mmr_lambda: float, k: int):
    """Greedy maximal-marginal-relevance re-ranking of a recommendation list.

    Relevance is min-max normalised over ``initial``; the redundancy of a
    candidate is its highest similarity ``1 - dist/2`` to any item already
    picked. Ties go to the earlier position in ``initial``, so
    ``mmr_lambda=1`` reproduces the input order.

    Parameters
    ----------
    initial : RecommendationList
        Ranked window to re-rank (already ordered by the recommender).
    ctx : DiversityContext
    mmr_lambda : float
        Weight of relevance in [0, 1]; ``1 - mmr_lambda`` weighs redundancy.
    k : int
        Length of the returned list.

    Returns
    -------
    RecommendationList
        At most ``k`` items of ``initial``; each score is replaced by its
        MMR objective at selection time, shifted into [0, 1].
    """
    if not 0.0 <= mmr_lambda <= 1.0:
        raise ValueError("mmr_lambda must be in [0, 1]")
    entries = list(initial.items)
    if not entries or k < 1:
        return replace(initial, items=())
    scores = np.array([e.score for e in entries], dtype=float)
    lo, hi = scores.min(), scores.max()
    rel = (scores - lo) / (hi - lo) if hi > lo else np.ones_like(scores)
    sim = 1.0 - ctx.embeddings.distance_matrix([e.item_id for e in entries]) / 2.0

    n = len(entries)
    redundancy = np.zeros(n)
    available = np.ones(n, dtype=bool)
    out = []
    for _ in range(min(k, n)):
        objective = mmr_lambda * rel - (1.0 - mmr_lambda) * redundancy
        objective[~available] = -np.inf
        best = int(np.flatnonzero(objective >= objective.max() - MMR_TIE_EPS)[0])
        # shift into [0, 1]; picked objectives never increase
        out.append(replace(entries[best], score=float(objective[best] + 1.0 - mmr_lambda)))
        available[best] = False
        redundancy = np.maximum(redundancy, sim[best])
    return replace(initial, items=tuple(out))
