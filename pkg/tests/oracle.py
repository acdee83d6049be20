"""Naive full-scan reference scorer.

Written straight from the scoring formulas with dense numpy vectors over
the item vocabulary: no inverted index, no sampling, no shared code with
the package's kernels. Used only to cross-check the indexed pipeline.
"""

import math

import numpy as np

TIE_RTOL = 1e-6


def position_weight(kind, r, length, lam):
    g = length - r
    return {
        "binary": lambda: 1.0,
        "inverse": lambda: 1.0 / (1 + g),
        "linear": lambda: max(0.1, 1 - 0.1 * g),
        "quadratic": lambda: 1.0 / (1 + g) ** 2,
        "logarithmic": lambda: 1.0 / math.log2(g + 2),
        "stan_exponential": lambda: math.exp((r - length) / lam),
    }[kind]()


def last_pos(items, it):
    return max(r for r, x in enumerate(items, 1) if x == it)


def dist(emb, i, j):
    a, b = np.asarray(emb[i], float), np.asarray(emb[j], float)
    return 1.0 - float(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))


def neighbour_diversity(emb, items):
    u = sorted(set(items))
    if len(u) < 2:
        return 1.0
    tot = sum(dist(emb, i, j) for i in u for j in u if i != j)
    return tot / (len(u) * (len(u) - 1))


def group_ranked(rows):
    """rows: (score, tiebreak) -> ordered rows, near-equal scores by tiebreak."""
    rows = sorted(rows, key=lambda r: (-r[0], r[1]))
    out, i = [], 0
    while i < len(rows):
        j = i + 1
        while j < len(rows) and rows[i][0] - rows[j][0] <= TIE_RTOL * abs(rows[i][0]):
            j += 1
        out += sorted(rows[i:j], key=lambda r: r[1])
        i = j
    return out


def naive_scores(train, active_id, active_items, active_time, method, variant, hp, emb=None):
    """Scores of every candidate item.

    ``train``: list of ``(session_id, items, end_time)``.
    ``hp``: object with neighbors, weighting and the lambda_* attributes.
    """
    vocab = sorted({x for _, items, _ in train for x in items} | set(active_items))
    col = {x: c for c, x in enumerate(vocab)}
    kind = {"SKNN": "binary", "VSKNN": hp.weighting}.get(method, "stan_exponential")
    L = len(active_items)
    s_vec = np.zeros(len(vocab))
    for r, it in enumerate(active_items, 1):
        s_vec[col[it]] = position_weight(kind, r, L, hp.lambda_spw)

    # recency tiebreak: newer first, then larger id first
    order = sorted(train, key=lambda t: (t[2], t[0]), reverse=True)
    rank = {t[0]: r for r, t in enumerate(order)}
    sims = []
    for sid, items, end in train:
        if sid == active_id:
            continue
        n_vec = np.zeros(len(vocab))
        for it in items:
            n_vec[col[it]] = 1.0
        sim = float(s_vec @ n_vec) / (np.linalg.norm(s_vec) * np.linalg.norm(n_vec))
        if sim > 0:
            sims.append((sim, rank[sid]))
    kept = group_ranked(sims)[: hp.neighbors]
    by_rank = {rank[t[0]]: t for t in train}

    use_d = variant in ("D", "ID")
    use_i = variant in ("I", "ID")
    n_sessions = len(train)
    scores = {}
    for sim, r in kept:
        sid, items, end = by_rank[r]
        shared = [x for x in set(items) if x in active_items]
        anchor = max(shared, key=lambda x: last_pos(active_items, x))
        w = sim
        if method in ("STAN", "VSTAN"):
            w *= math.exp(-max(0, active_time - end) / (hp.lambda_snh * 86400))
        if method == "VSTAN":
            w *= math.exp((last_pos(active_items, anchor) - L) / hp.lambda_ipw)
        if use_d:
            w *= neighbour_diversity(emb, items)
        for it in set(items):
            if it in active_items:
                continue
            c = w
            if method in ("STAN", "VSTAN"):
                c *= math.exp(-abs(last_pos(items, it) - last_pos(items, anchor)) / hp.lambda_inh)
            if method == "VSTAN":
                cnt = sum(1 for _, its, _ in train if it in its)
                c *= math.log(n_sessions / cnt) * hp.lambda_idf
            scores[it] = scores.get(it, 0.0) + c
    if use_i:
        act = sorted(set(active_items))
        for it in scores:
            scores[it] *= sum(dist(emb, it, j) for j in act) / len(act)
    return scores
