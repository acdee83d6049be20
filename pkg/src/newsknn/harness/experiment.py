"""End-to-end offline protocol: split, tune, select, evaluate, report."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from ..diversity import DiversityContext
from ..errors import NewsKNNError, StageError, ZeroVarianceError
from ..metrics import MetricsRow, evaluate_variants, macro_average, pearson, write_report
from ..recommenders import HyperParams, NeighborhoodRecommender
from ..sessions import EmbeddingStore, ItemCatalog, load_catalog, load_corpus, load_embeddings, validate_coverage
from .config import ExperimentConfig
from .split import SplitPlan, check_no_leakage, make_validation_split, partition_split, test_cases
from .tuning import SearchSpace, select_approach, tune, tune_mmr_lambda

log = logging.getLogger("newsknn")


@dataclass
class Inputs:
    corpus: object
    embeddings: EmbeddingStore
    catalog: ItemCatalog | None


@dataclass
class MethodOutcome:
    method: str
    params: HyperParams
    selected: str | None = None
    validation: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    rows: list
    outcomes: dict
    plan: SplitPlan
    correlation: object = None

    def summary(self) -> dict:
        corr = None
        if self.correlation is not None:
            corr = {"r": self.correlation.r, "t": self.correlation.t, "p": self.correlation.p,
                    "n": self.correlation.n}
        return {
            "correlation_ILD_CT": corr,
            "methods": {
                m: {"selected": o.selected, "params": asdict(o.params),
                    "validation_RR_ILD": {v: r.RR_ILD for v, r in o.validation.items()}}
                for m, o in self.outcomes.items()
            },
            "plan": {"days_per_partition": self.plan.days_per_partition,
                     "dropped_sessions": self.plan.dropped_sessions, **self.plan.meta},
        }


def _stage(name, fn, *args, partition=None, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except (NewsKNNError, ValueError, KeyError) as exc:
        raise StageError(name, partition, exc) from exc


def load_inputs(cfg: ExperimentConfig) -> Inputs:
    corpus = _stage("ingest", load_corpus, cfg.events, cfg.min_session_length)
    store = _stage("ingest", load_embeddings, cfg.embeddings)
    _stage("ingest", validate_coverage, corpus, store)
    catalog = _stage("ingest", load_catalog, cfg.catalog) if cfg.catalog else None
    log.info("ingested %d sessions, %d items", len(corpus), len(corpus.item_vocabulary))
    return Inputs(corpus, store, catalog)


def tune_and_select(cfg: ExperimentConfig, inputs: Inputs, plan: SplitPlan, do_tune=True,
                    do_select=True) -> dict[str, MethodOutcome]:
    """Tune each method on the first partition's validation day, then pick its variant."""
    train_ids, validation = _stage("validation-split", make_validation_split, plan, inputs.corpus, partition=0)
    if not validation:
        raise StageError("validation-split", 0, "no eligible validation sessions")
    rec = NeighborhoodRecommender(inputs.corpus.subset(train_ids), embeddings=DiversityContext(inputs.embeddings))
    space = SearchSpace(budget=max(cfg.budget, 1), seed=cfg.seed)
    outcomes = {}
    for method in cfg.methods:
        hp = replace(cfg.hyperparams, method=method, variant="base")
        if do_tune and cfg.budget > 0:
            t0 = time.perf_counter()
            hp, trials = _stage("tune", tune, space, rec, validation, method, cfg.k, hp, partition=0)
            log.info("%s tuned in %.1fs over %d trials: P@%d=%.4f", method, time.perf_counter() - t0,
                     len(trials), cfg.k, max(t.precision for t in trials))
        if do_tune and do_select and cfg.enable_mmr:
            lam = _stage("tune", tune_mmr_lambda, hp, rec, validation, cfg.k, rr_discount=cfg.rr_discount,
                         partition=0)
            hp = replace(hp, mmr_lambda=lam)
            log.info("%s MMR lambda %.1f", method, lam)
        out = MethodOutcome(method, hp)
        if do_select:
            out.selected, out.validation = _stage(
                "select", select_approach, hp, rec, validation, cfg.k, cfg.enable_mmr,
                inputs.catalog, cfg.rr_discount, partition=0)
            log.info("%s selected approach %s", method, out.selected)
        outcomes[method] = out
    return outcomes


_WORKER = {}


def _init_worker(inputs, plan, cfg):
    _WORKER.update(inputs=inputs, plan=plan, cfg=cfg)


def _evaluate_partition(index: int, params: dict) -> dict:
    inputs, plan, cfg = _WORKER["inputs"], _WORKER["plan"], _WORKER["cfg"]
    part = plan.partitions[index]
    try:
        rec = NeighborhoodRecommender(inputs.corpus.subset(part.train_ids),
                                      embeddings=DiversityContext(inputs.embeddings))
        cases = test_cases(inputs.corpus, part.test_ids)
        return {m: evaluate_variants(rec, hp, cases, cfg.k, cfg.variants, inputs.catalog, cfg.rr_discount)
                for m, hp in params.items()}
    except StageError:
        raise
    except (NewsKNNError, ValueError, KeyError) as exc:
        raise StageError("evaluate", index, exc) from exc


def evaluate_partitions(cfg: ExperimentConfig, inputs: Inputs, plan: SplitPlan, params: dict) -> list[MetricsRow]:
    """Macro-averaged rows (method x variant) over all partitions' test days."""
    n = len(plan.partitions)
    for p in plan.partitions:
        if not p.train_ids or not p.test_ids:
            raise StageError("evaluate", p.index, "partition has no training or no test sessions")
    if cfg.workers > 1:
        with ProcessPoolExecutor(min(cfg.workers, n), initializer=_init_worker,
                                 initargs=(inputs, plan, cfg)) as pool:
            per_part = list(pool.map(_evaluate_partition, range(n), [params] * n))
    else:
        _init_worker(inputs, plan, cfg)
        per_part = [_evaluate_partition(i, params) for i in range(n)]
    rows = []
    for m in params:
        for v in cfg.variants:
            rows.append(macro_average([pp[m][v] for pp in per_part]))
    return rows


def correlate(rows: list[MetricsRow]):
    """Pearson correlation of ILD and CT across report rows, or None if undefined."""
    if len(rows) < 3:
        return None
    try:
        return pearson([r.ILD for r in rows], [r.CT for r in rows])
    except ZeroVarianceError:
        return None


def run_experiment(cfg: ExperimentConfig, do_tune=True, do_select=True) -> ExperimentResult:
    inputs = load_inputs(cfg)
    plan = _stage("split", partition_split, inputs.corpus)
    _stage("split", check_no_leakage, plan, inputs.corpus)
    log.info("split into %d partitions of %d days", len(plan.partitions), plan.days_per_partition)
    if do_tune or do_select:
        outcomes = tune_and_select(cfg, inputs, plan, do_tune, do_select)
    else:
        outcomes = {m: MethodOutcome(m, replace(cfg.hyperparams, method=m, variant="base")) for m in cfg.methods}
    t0 = time.perf_counter()
    rows = evaluate_partitions(cfg, inputs, plan, {m: o.params for m, o in outcomes.items()})
    log.info("evaluated %d configurations in %.1fs", len(rows), time.perf_counter() - t0)
    corr = correlate(rows) if inputs.catalog is not None else None
    if corr is not None:
        log.info("Pearson(ILD@%d, CT@%d) r=%.4f t=%.3f p=%.3g n=%d", cfg.k, cfg.k, corr.r, corr.t, corr.p, corr.n)
    return ExperimentResult(rows, outcomes, plan, corr)


def write_outputs(result: ExperimentResult, report_path) -> Path:
    """Write the report CSV and a JSON summary next to it; returns the summary path."""
    report_path = Path(report_path)
    write_report(report_path, result.rows)
    summary_path = report_path.with_name(report_path.name + ".summary.json")
    summary_path.write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary_path
