"""Command-line entry point (``newsknn``).

Exit codes: 0 success, 2 input error, 3 protocol error, 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

from .errors import ConfigError, InputError, NewsKNNError
from .harness.config import ExperimentConfig, read_key_values
from .harness.experiment import load_inputs, run_experiment, tune_and_select, write_outputs
from .harness.split import check_no_leakage, partition_split
from .harness.synth import SynthParams, generate_synthetic, write_synthetic
from .recommenders import METHODS, VARIANTS, HyperParams, NeighborhoodRecommender
from .sessions import Session, load_corpus, load_embeddings

log = logging.getLogger("newsknn")


def _setup_logging(log_path=None, verbose=False):
    root = logging.getLogger("newsknn")
    root.handlers.clear()
    root.setLevel(logging.INFO)
    fmt = logging.Formatter("%(asctime)s %(levelname)s %(message)s")
    err = logging.StreamHandler(sys.stderr)
    err.setLevel(logging.INFO if verbose else logging.WARNING)
    err.setFormatter(fmt)
    root.addHandler(err)
    if log_path is not None:
        fh = logging.FileHandler(log_path, mode="w", encoding="utf-8")
        fh.setFormatter(fmt)
        root.addHandler(fh)


def cmd_synth(args):
    try:
        params = SynthParams.from_mapping(read_key_values(args.params))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    paths = write_synthetic(generate_synthetic(params), args.out)
    for name, p in paths.items():
        print(f"{name}\t{p}")


def cmd_split(args):
    corpus = load_corpus(args.events, args.min_session_length)
    plan = partition_split(corpus)
    check_no_leakage(plan, corpus)
    Path(args.out).write_text(plan.to_json() + "\n", encoding="utf-8")
    for p in plan.partitions:
        print(f"partition {p.index}: {len(p.train_ids)} train, {len(p.test_ids)} test sessions")


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    _setup_logging(cfg.log, args.verbose)
    return cfg


def cmd_tune(args):
    cfg = _config(args)
    inputs = load_inputs(cfg)
    plan = partition_split(inputs.corpus)
    check_no_leakage(plan, inputs.corpus)
    outcomes = tune_and_select(cfg, inputs, plan)
    out = {m: {"selected": o.selected, "params": asdict(o.params)} for m, o in outcomes.items()}
    print(json.dumps(out, indent=2, sort_keys=True))


def cmd_evaluate(args):
    cfg = _config(args)
    result = run_experiment(cfg, do_tune=False, do_select=False)
    write_outputs(result, args.report)
    print(f"wrote {len(result.rows)} rows to {args.report}")


def cmd_run(args):
    cfg = _config(args)
    report = args.report or cfg.report or Path("report.csv")
    if cfg.log is None:
        _setup_logging(Path(str(report) + ".log"), args.verbose)
    result = run_experiment(cfg)
    summary = write_outputs(result, report)
    print(f"wrote {len(result.rows)} rows to {report} (summary: {summary})")
    if result.correlation is not None:
        c = result.correlation
        print(f"pearson ILD~CT: r={c.r:.4f} t={c.t:.3f} p={c.p:.3g} n={c.n}")


def cmd_recommend(args):
    corpus = load_corpus(args.events, args.min_session_length)
    store = load_embeddings(args.embeddings) if args.embeddings else None
    items = [x.strip() for x in args.session.split(",") if x.strip()]
    if not items:
        raise InputError("--session needs at least one item id")
    end = max(s.end_time for s in corpus) if args.time is None else args.time
    hp = replace(HyperParams(), method=args.method, variant=args.variant)
    if args.sample_size:
        hp = replace(hp, sample_size=args.sample_size, neighbors=min(hp.neighbors, args.sample_size))
    if args.neighbors:
        hp = replace(hp, neighbors=args.neighbors)
    rec = NeighborhoodRecommender(corpus, embeddings=store)
    result = rec.recommend(hp, Session.from_items(items, "cli-active", end), args.k)
    if not result.items:
        print(f"# empty: {result.reason}", file=sys.stderr)
    for e in result.items:
        print(f"{e.item_id}\t{e.score:.6f}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="newsknn", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="write the temporal split plan as JSON")
    p.add_argument("--events", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-session-length", type=int, default=3)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("tune", help="tune and select approaches, print JSON")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("evaluate", help="evaluate configured models without tuning")
    p.add_argument("--config", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("recommend", help="recommend for one session")
    p.add_argument("--events", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--session", required=True, help="comma-separated item ids, oldest first")
    p.add_argument("--method", choices=METHODS, default="SKNN")
    p.add_argument("--variant", choices=VARIANTS, default="base")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--time", type=int, help="timestamp of the active session (default: newest event)")
    p.add_argument("--sample-size", type=int)
    p.add_argument("--neighbors", type=int)
    p.add_argument("--min-session-length", type=int, default=3)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("run", help="full protocol: split, tune, select, evaluate")
    p.add_argument("--config", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not logging.getLogger("newsknn").handlers:
        _setup_logging(None, args.verbose)
    try:
        args.func(args)
    except NewsKNNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
