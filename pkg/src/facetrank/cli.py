"""Command-line front end: ``facetrank <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from pathlib import Path

from . import gbt
from .corpus import CorpusError, load_corpus, load_topics, topic_to_json
from .evaluation.crossval import (DEFAULT_FOLDS, DEFAULT_VAL_FRAC, cross_validate, rank_keys,
                                  split_train_validation, stack_instances)
from .evaluation.metrics import evaluate_rankings, relevant_sets
from .evaluation.ttest import DegenerateComparison, paired_t_test
from .facets import DEFAULT_POOL_SIZE
from .features import BASELINE_FEATURES
from .fileio import (atomic_output, atomic_write_text, read_candidates, read_features, read_qrels, read_run,
                     write_candidates, write_features, write_qrels, write_run)
from .pipeline import Workspace, candidate_pools, extract_instances, feature_rows, instances_from_rows, pools_from_keys
from .synth import SynthConfig, generate_synthetic

log = logging.getLogger("facetrank")

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _gbt_config(args) -> gbt.GbtConfig:
    return gbt.GbtConfig(
        max_trees=args.max_trees,
        interaction_depth=args.interaction_depth,
        min_obs_per_node=args.min_obs,
        shrinkage=args.shrinkage,
        seed=args.seed,
    )


def _dump_json(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_build_index(args) -> None:
    docs, _ = load_corpus(args.corpus)
    ws = Workspace.from_documents(docs)
    ws.save(args.out)
    log.info("indexed %d documents, %d terms, %d facet-value pairs",
             ws.index.num_docs, len(ws.index.postings), len(ws.fvps))


def cmd_candidates(args) -> None:
    ws = Workspace.load(args.index)
    pools = candidate_pools(load_topics(args.topics), ws, args.k)
    with atomic_output(args.out) as handle:
        write_candidates(pools, handle)


def cmd_extract(args) -> None:
    ws = Workspace.load(args.index)
    topics = load_topics(args.topics)
    pools = pools_from_keys(read_candidates(args.candidates), ws)
    qrels = read_qrels(args.qrels) if args.qrels else {}
    instances = extract_instances(topics, pools, ws)
    with atomic_output(args.out) as handle:
        write_features(ws.feature_names(), feature_rows(instances, qrels), handle)


def cmd_train(args) -> None:
    names, rows = read_features(args.features)
    instances, qrels = instances_from_rows(rows)
    rel = relevant_sets(qrels)
    qualifying = sorted(q for q in (i.qid for i in instances) if q in rel)
    random.Random(args.seed).shuffle(qualifying)
    _, val_qids = split_train_validation(qualifying, args.val_frac)
    val = set(val_qids)

    train_set = stack_instances([i for i in instances if i.qid not in val], qrels)
    val_set = stack_instances([i for i in instances if i.qid in val], qrels)
    model = gbt.train(train_set.X, train_set.y, val_set, _gbt_config(args), names)
    log.info("trained %d trees, best iteration %d", len(model.trees), model.best_iteration)
    atomic_write_text(args.out, model.to_json())


def cmd_rank(args) -> None:
    model = gbt.GbtModel.from_json(Path(args.model).read_text(encoding="utf-8"))
    names, rows = read_features(args.features)
    if names != model.feature_names:
        raise ValueError("feature columns do not match the model's feature names")
    instances, _ = instances_from_rows(rows)
    rankings = {}
    for inst in instances:
        probs = gbt.predict_proba(model, inst.X)
        score_of = dict(zip(inst.keys, probs.tolist()))
        rankings[inst.qid] = [(k, score_of[k]) for k in rank_keys(inst, probs)]
    with atomic_output(args.out) as handle:
        write_run(rankings, handle, args.tag)


def cmd_eval(args) -> None:
    metrics = evaluate_rankings(read_run(args.run), read_qrels(args.qrels))
    report = metrics.to_json()
    report["folds"] = []
    _dump_json(report, args.out)


def cmd_cv(args) -> None:
    ws = Workspace.load(args.index)
    topics = load_topics(args.topics)
    qrels = read_qrels(args.qrels)
    pools = {p.qid: p.candidates for p in candidate_pools(topics, ws, args.k)}
    instances = extract_instances(topics, pools, ws)
    config = _gbt_config(args)
    result = cross_validate(instances, qrels, ws.feature_names(), config, args.folds, args.seed,
                            args.val_frac, BASELINE_FEATURES)
    report = result.gbt.to_json(result.fold_qids)
    for entry, model in zip(report["folds"], result.models):
        entry["best_iteration"] = model.best_iteration
    report["config"] = {**gbt.config_dict(config), "folds": args.folds, "k": args.k, "val_frac": args.val_frac}
    report["baselines"] = {name: {**fm.mean(), "per_query": fm.per_query_ap}
                           for name, fm in result.baselines.items()}
    best = max(BASELINE_FEATURES, key=lambda b: (result.baselines[b].mean()["map"], b))
    report["best_baseline"] = best
    try:
        t, p = paired_t_test(result.gbt.per_query_ap, result.baselines[best].per_query_ap)
        report["ttest"] = {"baseline": best, "t": t, "p": p}
    except DegenerateComparison as exc:
        report["ttest"] = {"baseline": best, "t": None, "p": None, "error": str(exc)}
    influence = sorted(result.mean_relative_influence().items(), key=lambda kv: (-kv[1], kv[0]))
    report["relative_influence"] = dict(influence[:10])
    _dump_json(report, args.out)


def _per_query_file(path) -> dict[str, float]:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        obj = json.loads(text)
        return {q: float(v) for q, v in obj.get("per_query", obj).items()}
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            qid, value = line.split("\t")
            out[qid] = float(value)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: expected 'qid TAB value'") from None
    return out


def cmd_ttest(args) -> None:
    t, p = paired_t_test(_per_query_file(args.per_query_a), _per_query_file(args.per_query_b))
    _dump_json({"t": t, "p": p}, None)


def cmd_synth(args) -> None:
    cfg = SynthConfig(num_docs=args.docs, num_queries=args.queries, noise=args.noise, seed=args.seed)
    docs, topics, qrels = generate_synthetic(cfg)
    out = Path(args.out_dir)
    with atomic_output(out / "corpus.jsonl") as handle:
        for doc in docs:
            handle.write(json.dumps(doc.to_json(), ensure_ascii=False) + "\n")
    with atomic_output(out / "topics.jsonl") as handle:
        for topic in topics:
            handle.write(json.dumps(topic_to_json(topic), ensure_ascii=False) + "\n")
    with atomic_output(out / "qrels.tsv") as handle:
        write_qrels(qrels, handle)


def cmd_config(args) -> None:
    _dump_json({
        "gbt": gbt.config_dict(gbt.GbtConfig()),
        "pool_size": DEFAULT_POOL_SIZE,
        "folds": DEFAULT_FOLDS,
        "val_frac": DEFAULT_VAL_FRAC,
    }, None)


def _add_gbt_flags(p: argparse.ArgumentParser) -> None:
    defaults = gbt.GbtConfig()
    p.add_argument("--max-trees", type=int, default=defaults.max_trees)
    p.add_argument("--interaction-depth", type=int, default=defaults.interaction_depth)
    p.add_argument("--min-obs", type=int, default=defaults.min_obs_per_node)
    p.add_argument("--shrinkage", type=float, default=defaults.shrinkage)
    p.add_argument("--val-frac", type=float, default=DEFAULT_VAL_FRAC)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="facetrank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-index", help="index a corpus.jsonl into a directory")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("candidates", help="top-k FVPs per topic by QV.BM25")
    p.add_argument("--index", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--k", type=int, default=DEFAULT_POOL_SIZE)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_candidates)

    p = sub.add_parser("extract", help="feature vectors for candidate pools")
    p.add_argument("--index", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--qrels")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit the boosted ranker on a features file")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    _add_gbt_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rank", help="score a features file with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tag", default="gbt")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="MAP, R-Prec, P@5 and P@R=1 of a run")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cv", help="query-grouped cross-validation against single-feature baselines")
    p.add_argument("--index", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    p.add_argument("--k", type=int, default=DEFAULT_POOL_SIZE)
    p.add_argument("--out")
    _add_gbt_flags(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("ttest", help="paired t-test of two per-query score files")
    p.add_argument("--per-query-a", required=True)
    p.add_argument("--per-query-b", required=True)
    p.set_defaults(func=cmd_ttest)

    p = sub.add_parser("synth", help="generate a synthetic corpus, topics and qrels")
    p.add_argument("--docs", type=int, default=5000)
    p.add_argument("--queries", type=int, default=30)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("config", help="print the default protocol settings")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("FACETRANK_LOG", "error").lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.ERROR),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CorpusError, ValueError, KeyError, OSError, ArithmeticError) as exc:
        print(f"facetrank: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
