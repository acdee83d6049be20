"""Random-search hyperparameter tuning and validation-based variant choice."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..metrics import evaluate_variants
from ..recommenders import METHODS, VSKNN_WEIGHTINGS, HyperParams

APPROACH_ORDER = ("I", "D", "ID", "Re")
MMR_LAMBDA_GRID = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass(frozen=True)
class SearchSpace:
    """Ranges for random search.

    Integer ranges are ``(low, high, step)`` grids, real ranges ``(low,
    high)`` sampled uniformly.
    """

    sample_size: tuple = (500, 3000, 100)
    neighbors: tuple = (50, 500, 50)
    weightings: tuple = VSKNN_WEIGHTINGS
    lambda_spw: tuple = (0.1, 5.0)
    lambda_snh: tuple = (1.0, 5.0)
    lambda_inh: tuple = (0.5, 5.0)
    lambda_ipw: tuple = (0.1, 5.0)
    lambda_idf: tuple = (0.1, 5.0)
    budget: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        for name in ("sample_size", "neighbors"):
            lo, hi, step = getattr(self, name)
            if lo > hi or step < 1:
                raise ValueError(f"empty range for {name}")
        if not self.weightings:
            raise ValueError("no weightings to search")

    def draw(self, rng: np.random.Generator, base: HyperParams) -> HyperParams:
        def grid(lo, hi, step):
            return int(lo + step * rng.integers(0, (hi - lo) // step + 1))

        def real(lo, hi):
            return round(float(rng.uniform(lo, hi)), 2)

        neighbors = grid(*self.neighbors)
        sample_size = max(grid(*self.sample_size), neighbors)
        return replace(
            base,
            sample_size=sample_size,
            neighbors=neighbors,
            weighting=self.weightings[int(rng.integers(len(self.weightings)))],
            lambda_spw=real(*self.lambda_spw),
            lambda_snh=real(*self.lambda_snh),
            lambda_inh=real(*self.lambda_inh),
            lambda_ipw=real(*self.lambda_ipw),
            lambda_idf=real(*self.lambda_idf),
            variant="base",
        )


@dataclass(frozen=True)
class Trial:
    params: HyperParams
    precision: float


def tune(space: SearchSpace, recommender, validation, method: str, k: int = 10,
         base: HyperParams | None = None) -> tuple[HyperParams, list[Trial]]:
    """Seeded random search maximising validation P@k of the base variant.

    ``recommender`` is built on the tuning-train sessions. Earlier trials win
    ties.
    """
    base = replace(base or HyperParams(), method=method, variant="base")
    rng = np.random.default_rng([space.seed, METHODS.index(method)])
    trials = []
    best = None
    for _ in range(space.budget):
        hp = space.draw(rng, base)
        row = evaluate_variants(recommender, hp, validation, k, ("base",))["base"]
        trials.append(Trial(hp, row.P))
        if best is None or row.P > best.precision:
            best = trials[-1]
    return best.params, trials


def select_approach(tuned: HyperParams, recommender, validation, k: int = 10,
                    enable_mmr: bool = False, catalog=None, rr_discount: float = 0.85):
    """Variant with the highest validation RR-ILD@k; ties follow I < D < ID < Re.

    Returns ``(variant, rows)`` with the per-variant validation rows.
    """
    candidates = [v for v in APPROACH_ORDER if enable_mmr or v != "Re"]
    rows = evaluate_variants(recommender, tuned, validation, k, candidates, catalog, rr_discount)
    best = candidates[0]
    for v in candidates[1:]:
        if rows[v].RR_ILD > rows[best].RR_ILD:
            best = v
    return best, rows


def tune_mmr_lambda(tuned: HyperParams, recommender, validation, k: int = 10,
                    grid=MMR_LAMBDA_GRID, rr_discount: float = 0.85) -> float:
    """MMR trade-off with the highest validation RR-ILD@k; earlier grid values win ties."""
    best_lam, best_val = None, None
    for lam in grid:
        hp = replace(tuned, mmr_lambda=lam)
        row = evaluate_variants(recommender, hp, validation, k, ("Re",), rr_discount=rr_discount)["Re"]
        if best_val is None or row.RR_ILD > best_val:
            best_lam, best_val = lam, row.RR_ILD
    return best_lam
