import math
import random
from dataclasses import replace

import numpy as np
import pytest

from newsknn import (
    DecayScheme,
    EmbeddingStore,
    HyperParams,
    NeighborhoodRecommender,
    Session,
    SessionCorpus,
    find_neighbors,
    recommend,
    score_sknn,
    score_stan,
    score_vsknn,
    score_vstan,
)
from newsknn.recommenders import DiversityHooks

from . import oracle

# frozen from the independent hand oracle (plain math on the F1/F2 fixtures)
SKNN_C = 0.5
VSKNN_W_N1 = 0.9486832980505138
VSKNN_C = 0.6324555320336759
STAN_C = 0.2441341045635754
VSTAN_C = 0.09898786109976


@pytest.fixture
def active():
    return Session.from_items(["a", "b"], "active", 200)


@pytest.fixture
def model(f1, f2):
    return NeighborhoodRecommender(f1, embeddings=f2)


LAMBDA_ONE = HyperParams(lambda_spw=1, lambda_snh=1, lambda_inh=1, lambda_ipw=1, lambda_idf=1)


def test_find_neighbors_f1(f1, active):
    cands = ["n1", "n2", "n3"]
    got = find_neighbors(active, cands, f1, 2, DecayScheme())
    assert [s for s, _ in got] == ["n1", "n2"]
    assert [w for _, w in got] == pytest.approx([1.0, 0.5])
    assert [s for s, _ in find_neighbors(active, cands, f1, 1, DecayScheme())] == ["n1"]
    assert find_neighbors(Session.from_items(["zz"]), cands, f1, 5, DecayScheme()) == []
    assert find_neighbors(active, [], f1, 5, DecayScheme()) == []


def test_neighbor_ties_prefer_newer_session():
    corpus = SessionCorpus([Session("old", ("a", "x"), (1, 2)), Session("new", ("a", "y"), (5, 6)),
                            Session("mid", ("a", "z"), (3, 4))])
    got = find_neighbors(Session.from_items(["a"]), ["old", "mid", "new"], corpus, 2, DecayScheme())
    assert [s for s, _ in got] == ["new", "mid"]


def test_sknn_f1(model, f1, active):
    nb = model.neighbors(HyperParams(), active)
    scores = score_sknn(active, nb, f1)
    assert scores == pytest.approx({"c": SKNN_C})
    assert "d" not in scores


def test_sknn_d_variant_f1(model, f1, active):
    nb = model.neighbors(HyperParams(), active)
    scores = score_sknn(active, nb, f1, DiversityHooks.for_variant("D", model.ctx))
    assert scores["c"] == pytest.approx(0.5)


def test_i_variant_annihilates_identical_candidate():
    corpus = SessionCorpus([Session("n", ("a", "c"), (1, 2))])
    store = EmbeddingStore({"a": [1.0, 0.0], "c": [2.0, 0.0]})
    rec = NeighborhoodRecommender(corpus, embeddings=store)
    hp = HyperParams(variant="I")
    assert rec.scores(hp, Session.from_items(["a"]))["c"] == pytest.approx(0.0, abs=1e-15)


def test_vsknn_f1(model, f1, active):
    hp = HyperParams(method="VSKNN", weighting="inverse")
    nb = dict(model.neighbors(hp, active))
    assert nb["n1"] == pytest.approx(VSKNN_W_N1, abs=1e-12)
    assert score_vsknn(active, list(nb.items()), f1)["c"] == pytest.approx(VSKNN_C, abs=1e-12)


def test_vsknn_single_item_equals_binary(model):
    s = Session.from_items(["b"], "x", 200)
    vs = model.scores(HyperParams(method="VSKNN"), s)
    assert vs == pytest.approx(model.scores(HyperParams(), s))


def test_stan_f1(model, f1, active):
    hp = replace(LAMBDA_ONE, method="STAN")
    assert score_stan(active, model.neighbors(hp, active), f1, hp)["c"] == pytest.approx(STAN_C, abs=1e-12)


def test_vstan_f1(model, f1, active):
    hp = replace(LAMBDA_ONE, method="VSTAN")
    scores = score_vstan(active, model.neighbors(hp, active), f1, hp)
    assert scores["c"] == pytest.approx(VSTAN_C, abs=1e-12)
    assert scores["c"] == pytest.approx(STAN_C * math.log(1.5), abs=1e-12)


def test_stan_large_lambdas_match_sknn(model, active):
    big = replace(HyperParams(), lambda_spw=1e9, lambda_snh=1e9, lambda_inh=1e9)
    stan = model.scores(replace(big, method="STAN"), active)
    sknn = model.scores(big, active)
    assert stan.keys() == sknn.keys()
    for k in stan:
        assert stan[k] == pytest.approx(sknn[k], rel=1e-6)


def test_vstan_uniform_frequency_is_scaled_stan():
    corpus = SessionCorpus([Session.from_items(p, f"s{k}", k) for k, p in
                            enumerate([["a", "b"], ["c", "d"], ["a", "c"], ["b", "d"]])])
    rec = NeighborhoodRecommender(corpus)
    act = Session.from_items(["a"], "act", 10)
    hp = HyperParams(lambda_ipw=1e9, lambda_idf=0.7)
    stan = rec.scores(replace(hp, method="STAN"), act)
    vstan = rec.scores(replace(hp, method="VSTAN"), act)
    for k in stan:
        assert vstan[k] == pytest.approx(stan[k] * 0.7 * math.log(2), rel=1e-6)


def test_recommend_f1(f1, f2, active):
    out = recommend(HyperParams(), f1, None, f2, active, 10)
    assert out.item_ids == ["c"]
    assert out.reason is None


def test_recommend_cold_and_k_zero(model):
    out = model.recommend(HyperParams(), Session.from_items(["zz"]), 5)
    assert out.items == () and out.reason == "cold-session"
    with pytest.raises(ValueError):
        model.recommend(HyperParams(), Session.from_items(["a"]), 0)


def test_variant_needs_embeddings(f1, active):
    with pytest.raises(ValueError):
        NeighborhoodRecommender(f1).recommend(HyperParams(variant="D"), active, 5)


@pytest.mark.parametrize("bad", [
    dict(method="XKNN"), dict(variant="Z"), dict(neighbors=600), dict(sample_size=0),
    dict(lambda_snh=0), dict(mmr_lambda=1.5), dict(rerank_window=0), dict(weighting="cubic"),
])
def test_hyperparams_validation(bad):
    with pytest.raises(ValueError):
        HyperParams(**bad)


def _random_world(seed, n_sessions=None, n_items=None, dim=4):
    rng = random.Random(seed)
    n_sessions = n_sessions or rng.randint(5, 120)
    n_items = n_items or rng.randint(4, 40)
    sessions = []
    for k in range(n_sessions):
        length = rng.randint(1, 7)
        items = tuple(f"i{rng.randrange(n_items)}" for _ in range(length))
        end = rng.randint(0, 10 * 86400)
        sessions.append(Session(f"s{k:03d}", items, (end,) * length))
    nrng = np.random.default_rng(seed)
    store = EmbeddingStore({f"i{k}": nrng.normal(size=dim) + 0.05 for k in range(n_items)})
    return rng, SessionCorpus(sessions), store


def _random_hp(rng, method, variant):
    return HyperParams(method=method, variant=variant, sample_size=10_000, neighbors=rng.randint(1, 30),
                       weighting=rng.choice(["inverse", "linear", "quadratic", "logarithmic"]),
                       lambda_spw=rng.uniform(0.1, 5), lambda_snh=rng.uniform(0.1, 5),
                       lambda_inh=rng.uniform(0.1, 5), lambda_ipw=rng.uniform(0.1, 5),
                       lambda_idf=rng.uniform(0.1, 5))


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("method", ["SKNN", "VSKNN", "STAN", "VSTAN"])
def test_pipeline_matches_naive_oracle(seed, method):
    rng, corpus, store = _random_world(seed)
    rec = NeighborhoodRecommender(corpus, embeddings=store)
    train = [(s.session_id, list(s.items), s.end_time) for s in corpus]
    for variant in ("base", "I", "D", "ID"):
        hp = _random_hp(rng, method, variant)
        act_items = [f"i{rng.randrange(len(store))}" for _ in range(rng.randint(1, 5))]
        act = Session.from_items(act_items, "q", rng.randint(0, 12 * 86400))
        got = rec.scores(hp, act)
        want = oracle.naive_scores(train, "q", act_items, act.end_time, method, variant, hp, store.vectors)
        assert got.keys() == want.keys()
        for k in want:
            assert got[k] == pytest.approx(want[k], abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_list_invariants(seed):
    rng, corpus, store = _random_world(seed)
    rec = NeighborhoodRecommender(corpus, embeddings=store)
    for method in ("SKNN", "VSKNN", "STAN", "VSTAN"):
        hp = _random_hp(rng, method, "base")
        act = Session.from_items([f"i{rng.randrange(len(store))}" for _ in range(3)], "q", 5 * 86400)
        k = rng.randint(1, 15)
        lists = rec.recommend_variants(hp, act, k, ("base", "I", "D", "ID", "Re"))
        again = rec.recommend_variants(hp, act, k, ("base", "I", "D", "ID", "Re"))
        for v, out in lists.items():
            ids = out.item_ids
            assert len(ids) <= k and len(set(ids)) == len(ids)
            assert not set(ids) & act.item_set
            scores = [e.score for e in out.items]
            assert all(a >= b for a, b in zip(scores, scores[1:]))
            assert all(math.isfinite(s) and s >= 0 for s in scores)
            assert out == again[v]


@pytest.mark.parametrize("seed", range(5))
def test_re_with_lambda_one_equals_base(seed):
    rng, corpus, store = _random_world(seed, 100, 30)
    rec = NeighborhoodRecommender(corpus, embeddings=store)
    hp = replace(_random_hp(rng, "STAN", "base"), mmr_lambda=1.0, rerank_window=rng.randint(1, 40))
    for _ in range(10):
        act = Session.from_items([f"i{rng.randrange(30)}"], "q", 86400)
        lists = rec.recommend_variants(hp, act, 10, ("base", "Re"))
        assert lists["Re"].item_ids == lists["base"].item_ids


def test_constant_d_n_keeps_base_ranking():
    # every session's items share one embedding, so every d_n is 0 except singletons
    rng, corpus, _ = _random_world(3, 80, 20)
    store = EmbeddingStore({f"i{k}": [1.0, 0.0] for k in range(20)})
    multi = SessionCorpus([s for s in corpus if len(s.item_set) == 1])
    rec = NeighborhoodRecommender(multi, embeddings=store)
    act = Session.from_items(["i1", "i2"], "q", 86400)
    lists = rec.recommend_variants(HyperParams(), act, 10, ("base", "D"))
    assert lists["D"].item_ids == lists["base"].item_ids


def test_scaling_scores_keeps_ranking(model, active):
    scores = model.scores(HyperParams(), active)
    a = model.rank("x", scores, 10).item_ids
    b = model.rank("x", {k: 3.7 * v for k, v in scores.items()}, 10).item_ids
    assert a == b


def test_rank_tiebreak_recency_then_id():
    corpus = SessionCorpus([Session("s1", ("x", "p"), (1, 2)), Session("s2", ("x", "q", "r"), (3, 4, 4))])
    rec = NeighborhoodRecommender(corpus)
    out = rec.rank("a", {"p": 1.0, "q": 1.0, "r": 1.0 - 1e-9}, 3)
    assert out.item_ids == ["q", "r", "p"]
