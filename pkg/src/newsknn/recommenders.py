"""Session-kNN family (SKNN, VSKNN, STAN, VSTAN) with diversity-aware variants.

Variants
--------
``base``  plain method
``I``     candidate score times its mean dissimilarity to the active session
``D``     neighbour contribution times the neighbour's internal diversity
``ID``    both
``Re``    base scores followed by MMR re-ranking of the top window
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .diversity import DiversityContext, mmr_rerank
from .kernels import DecayScheme, idf_weight, session_vector
from .sessions import EmbeddingStore, Session, SessionCorpus, SessionIndex, build_index

METHODS = ("SKNN", "VSKNN", "STAN", "VSTAN")
VARIANTS = ("base", "I", "D", "ID", "Re")
VSKNN_WEIGHTINGS = ("inverse", "linear", "quadratic", "logarithmic")

# scores within this relative gap of a group's leading score count as tied
TIE_RTOL = 1e-6


@dataclass(frozen=True)
class HyperParams:
    """One configured model.

    ``lambda_spw`` decays active-session positions (STAN/VSTAN),
    ``lambda_snh`` is the neighbour-recency decay in days, ``lambda_inh``
    decays position gaps inside a neighbour, ``lambda_ipw`` weights the
    position of the last shared item and ``lambda_idf`` scales idf (VSTAN).
    """

    method: str = "SKNN"
    sample_size: int = 500
    neighbors: int = 100
    weighting: str = "inverse"
    lambda_spw: float = 1.0
    lambda_snh: float = 2.0
    lambda_inh: float = 2.0
    lambda_ipw: float = 2.0
    lambda_idf: float = 1.0
    variant: str = "base"
    mmr_lambda: float = 0.5
    rerank_window: int = 50

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.weighting not in VSKNN_WEIGHTINGS:
            raise ValueError(f"unknown weighting {self.weighting!r}")
        if self.sample_size < 1 or self.neighbors < 1:
            raise ValueError("sample_size and neighbors must be >= 1")
        if self.neighbors > self.sample_size:
            raise ValueError("neighbors must not exceed sample_size")
        for name in ("lambda_spw", "lambda_snh", "lambda_inh", "lambda_ipw", "lambda_idf"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not 0.0 <= self.mmr_lambda <= 1.0:
            raise ValueError("mmr_lambda must be in [0, 1]")
        if self.rerank_window < 1:
            raise ValueError("rerank_window must be >= 1")

    @property
    def decay(self) -> DecayScheme:
        if self.method == "SKNN":
            return DecayScheme("binary")
        if self.method == "VSKNN":
            return DecayScheme(self.weighting)
        return DecayScheme("stan_exponential", self.lambda_spw)

    def with_variant(self, variant: str) -> "HyperParams":
        return replace(self, variant=variant)


@dataclass(frozen=True)
class ScoredItem:
    item_id: str
    score: float


@dataclass(frozen=True)
class RecommendationList:
    session_id: str
    items: tuple = ()
    reason: str | None = None

    @property
    def item_ids(self) -> list:
        return [e.item_id for e in self.items]

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class DiversityHooks:
    """Which diversity weights apply, and where they come from."""

    item: bool = False
    session: bool = False
    ctx: DiversityContext | None = field(default=None, compare=False)

    @classmethod
    def for_variant(cls, variant: str, ctx: DiversityContext | None) -> "DiversityHooks":
        hooks = cls(item=variant in ("I", "ID"), session=variant in ("D", "ID"), ctx=ctx)
        if (hooks.item or hooks.session) and ctx is None:
            raise ValueError(f"variant {variant!r} needs item embeddings")
        return hooks


NO_HOOKS = DiversityHooks()


def tie_grouped(entries: Sequence, score_of, tiebreak_key) -> list:
    """Sort by score descending; near-equal scores fall back to ``tiebreak_key``.

    Returns ``(entry, group_score)`` pairs where ``group_score`` is the
    leading score of the entry's tie group.
    """
    ordered = sorted(entries, key=lambda e: (-score_of(e), tiebreak_key(e)))
    out = []
    i, n = 0, len(ordered)
    while i < n:
        lead = score_of(ordered[i])
        j = i + 1
        while j < n and lead - score_of(ordered[j]) <= TIE_RTOL * abs(lead):
            j += 1
        group = ordered[i:j]
        if j - i > 1:
            group.sort(key=tiebreak_key)
        out.extend((e, lead) for e in group)
        i = j
    return out


def find_neighbors(active: Session, candidates: Iterable[str], corpus: SessionCorpus,
                   k_nn: int, scheme: DecayScheme) -> list[tuple[str, float]]:
    """Top ``k_nn`` candidate sessions by cosine to the decayed active vector.

    Neighbour sessions are binary vectors. Ties go to the newer session,
    then the larger session id.
    """
    vec = session_vector(active, scheme)
    norm = math.sqrt(sum(w * w for w in vec.values()))
    scored = []
    for sid in candidates:
        n = corpus.sessions[sid]
        dot = sum(w for it, w in vec.items() if it in n.positions)
        if dot > 0.0:
            scored.append((sid, dot / (norm * math.sqrt(len(n.item_set))), n.end_time))
    # rank newest-first, then larger id first
    scored.sort(key=lambda e: (e[2], e[0]), reverse=True)
    recency = {e[0]: r for r, e in enumerate(scored)}
    ranked = tie_grouped(scored, lambda e: e[1], lambda e: recency[e[0]])
    return [(e[0], e[1]) for e, _ in ranked[:k_nn]]


def _accumulate(active, neighbors, corpus, hooks, neighbor_factor, item_factor):
    """Sum neighbour evidence per candidate in a fixed (session id) order."""
    scores: dict = {}
    ctx = hooks.ctx
    for sid, w in sorted(neighbors):
        n = corpus.sessions[sid]
        base = w * neighbor_factor(n)
        if hooks.session:
            base *= ctx.session_diversity(n)
        if base == 0.0:
            continue
        for it in n.positions:
            if it in active.positions:
                continue
            scores[it] = scores.get(it, 0.0) + base * item_factor(it, n)
    if hooks.item and scores:
        items = sorted(scores)
        weights = ctx.candidate_diversities(items, active)
        for it, d in zip(items, weights):
            scores[it] *= float(d)
    return scores


def _shared_anchor(active: Session, n: Session):
    """Most recent active item that also occurs in ``n`` (highest active position)."""
    best, best_pos = None, 0
    pos = active.positions
    for it in n.positions:
        p = pos.get(it)
        if p is not None and (p > best_pos or (p == best_pos and it < best)):
            best, best_pos = it, p
    return best, best_pos


def score_sknn(active: Session, neighbors, corpus: SessionCorpus, hooks: DiversityHooks = NO_HOOKS) -> dict:
    return _accumulate(active, neighbors, corpus, hooks, lambda n: 1.0, lambda it, n: 1.0)


def score_vsknn(active: Session, neighbors, corpus: SessionCorpus, hooks: DiversityHooks = NO_HOOKS) -> dict:
    """Same aggregation as SKNN; the decay only enters via the neighbour weights."""
    return score_sknn(active, neighbors, corpus, hooks)


def _stan_parts(active, hp):
    t_s = active.end_time
    recency_scale = hp.lambda_snh * 86400.0
    anchors = {}

    def neighbor_factor(n):
        anchor, _ = _shared_anchor(active, n)
        anchors[n.session_id] = n.positions[anchor]
        return math.exp(-max(0, t_s - n.end_time) / recency_scale)

    def item_factor(it, n):
        return math.exp(-abs(n.positions[it] - anchors[n.session_id]) / hp.lambda_inh)

    return neighbor_factor, item_factor


def score_stan(active: Session, neighbors, corpus: SessionCorpus, hp: HyperParams,
               hooks: DiversityHooks = NO_HOOKS) -> dict:
    """Neighbour weight x neighbour recency x in-neighbour position proximity."""
    neighbor_factor, item_factor = _stan_parts(active, hp)
    return _accumulate(active, neighbors, corpus, hooks, neighbor_factor, item_factor)


def score_vstan(active: Session, neighbors, corpus: SessionCorpus, hp: HyperParams,
                hooks: DiversityHooks = NO_HOOKS) -> dict:
    """STAN further weighted by the last shared item's active position and by idf."""
    stan_neighbor, stan_item = _stan_parts(active, hp)
    length = len(active)

    def neighbor_factor(n):
        w = stan_neighbor(n)
        _, p_anchor = _shared_anchor(active, n)
        return w * math.exp((p_anchor - length) / hp.lambda_ipw)

    idf_cache = {}

    def item_factor(it, n):
        idf = idf_cache.get(it)
        if idf is None:
            idf = idf_cache[it] = idf_weight(it, corpus, hp.lambda_idf)
        return stan_item(it, n) * idf

    return _accumulate(active, neighbors, corpus, hooks, neighbor_factor, item_factor)


class NeighborhoodRecommender:
    """Binds a training corpus, its index and optional embeddings.

    Read-only after construction apart from the d_n memo, so one instance
    can serve concurrent queries.
    """

    def __init__(self, corpus: SessionCorpus, index: SessionIndex | None = None,
                 embeddings: EmbeddingStore | DiversityContext | None = None):
        self.corpus = corpus
        self.index = index if index is not None else build_index(corpus)
        if isinstance(embeddings, EmbeddingStore):
            embeddings = DiversityContext(embeddings)
        self.ctx = embeddings

    def neighbors(self, hp: HyperParams, active: Session) -> list[tuple[str, float]]:
        candidates = self.index.sample(active, hp.sample_size)
        return find_neighbors(active, candidates, self.corpus, hp.neighbors, hp.decay)

    def scores(self, hp: HyperParams, active: Session, neighbors=None, variant: str | None = None) -> dict:
        """Raw candidate scores for ``variant`` (``Re`` scores like ``base``)."""
        if neighbors is None:
            neighbors = self.neighbors(hp, active)
        variant = hp.variant if variant is None else variant
        hooks = DiversityHooks.for_variant(variant, self.ctx) if variant != "Re" else NO_HOOKS
        if not neighbors:
            return {}
        if hp.method in ("SKNN", "VSKNN"):
            return score_sknn(active, neighbors, self.corpus, hooks)
        if hp.method == "STAN":
            return score_stan(active, neighbors, self.corpus, hp, hooks)
        return score_vstan(active, neighbors, self.corpus, hp, hooks)

    def rank(self, session_id: str, scores: dict, k: int) -> RecommendationList:
        last_seen = self.index.item_last_seen
        ranked = tie_grouped(list(scores.items()), lambda e: e[1], lambda e: (-last_seen[e[0]], e[0]))
        items = tuple(ScoredItem(it, lead) for (it, _), lead in ranked[:k])
        return RecommendationList(session_id, items, None if items else "no-candidates")

    def recommend(self, hp: HyperParams, active: Session, k: int = 10) -> RecommendationList:
        return self.recommend_variants(hp, active, k, (hp.variant,))[hp.variant]

    def recommend_variants(self, hp: HyperParams, active: Session, k: int,
                           variants: Iterable[str]) -> dict[str, RecommendationList]:
        """Lists for several variants sharing one neighbourhood search."""
        if k < 1:
            raise ValueError("k must be >= 1")
        variants = list(variants)
        neighbors = self.neighbors(hp, active)
        if not neighbors:
            return {v: RecommendationList(active.session_id, (), "cold-session") for v in variants}
        out = {}
        base_scores = None
        for v in variants:
            if v == "Re":
                if self.ctx is None:
                    raise ValueError("variant 'Re' needs item embeddings")
                if base_scores is None:
                    base_scores = self.scores(hp, active, neighbors, "base")
                window = self.rank(active.session_id, base_scores, max(k, hp.rerank_window))
                out[v] = mmr_rerank(window, self.ctx, hp.mmr_lambda, k) if window.items else window
            else:
                s = self.scores(hp, active, neighbors, v)
                if v == "base":
                    base_scores = s
                out[v] = self.rank(active.session_id, s, k)
        return out


def recommend(model: HyperParams, corpus: SessionCorpus, index: SessionIndex | None,
              embeddings: EmbeddingStore | DiversityContext | None, active: Session, k: int = 10) -> RecommendationList:
    """Top-``k`` recommendations for ``active`` (one-shot convenience wrapper)."""
    return NeighborhoodRecommender(corpus, index, embeddings).recommend(model, active, k)


__all__ = [
    "METHODS", "VARIANTS", "HyperParams", "ScoredItem", "RecommendationList", "DiversityHooks",
    "find_neighbors", "score_sknn", "score_vsknn", "score_stan", "score_vstan",
    "NeighborhoodRecommender", "recommend", "tie_grouped",
]
