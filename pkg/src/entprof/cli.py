"""Command-line front end: seeded, reproducible pipeline runs with file outputs."""

from __future__ import annotations

import argparse
import csv
import json
import random
import sys
from pathlib import Path

from entprof import classify, corrupt, evaluate, profiling, sources
from entprof.model import (
    ParseError,
    ValidationError,
    format_value,
    load_dataset,
    load_queries,
    load_schema,
    load_truth,
    validate,
    write_records_csv,
)
from entprof.similarity import DEFAULT_CONFIG, EmbeddingStore, TextSimilarityCache


def _add_data_flags(parser, queries=False, truth=False):
    parser.add_argument("--records", required=True, help="records CSV")
    parser.add_argument("--schema", required=True, help="schema spec file (name:kind lines)")
    if queries:
        parser.add_argument("--queries", required=True, help="queries CSV")
    if truth:
        parser.add_argument("--truth", required=True, help="ground-truth CSV")
    parser.add_argument("--embeddings", help="word-vector store (optional)")


def _add_classifier_flags(parser):
    parser.add_argument("--classifier", default="forest", choices=classify.CLASSIFIER_KINDS)
    parser.add_argument("--trees", type=int, default=10, help="forest size")
    parser.add_argument("--k", type=int, default=5, help="k-NN neighbourhood size")
    parser.add_argument("--classifier-split", type=float, default=0.8)
    parser.add_argument("--query-split", type=float, default=0.7)


def _add_rating_flags(parser):
    parser.add_argument("--biased-source", help="source id to anchor ratings on")
    parser.add_argument("--bias-value", type=float, default=1.0)
    parser.add_argument("--uniform-ratings", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="entprof",
        description="Complete entity profiles from multi-source records.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("validate", help="check dataset invariants")
    _add_data_flags(p)
    p.add_argument("--queries")
    p.add_argument("--truth")
    p.set_defaults(func=_cmd_validate)

    p = commands.add_parser("simmatrix", help="write the source-similarity matrix")
    _add_data_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simmatrix)

    p = commands.add_parser("rate", help="write trustworthiness and source ratings")
    _add_data_flags(p)
    _add_rating_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rate)

    p = commands.add_parser("train", help="train one classifier and report metrics")
    _add_data_flags(p, queries=True)
    _add_classifier_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = commands.add_parser("select-model", help="compare classifier kinds and keep the best")
    _add_data_flags(p, queries=True)
    _add_classifier_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_select_model)

    p = commands.add_parser("profile", help="complete all queries")
    _add_data_flags(p, queries=True)
    _add_classifier_flags(p)
    _add_rating_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_profile)

    p = commands.add_parser("evaluate", help="run the pipeline and score held-out queries")
    _add_data_flags(p, queries=True, truth=True)
    _add_classifier_flags(p)
    _add_rating_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = commands.add_parser("corrupt", help="write an error/ambiguity-injected copy of the records")
    _add_data_flags(p)
    p.add_argument("--error-rate", type=float, default=0.0)
    p.add_argument("--ambiguity-rate", type=float, default=0.0)
    p.add_argument("--name-attribute", default=None, help="attribute name for ambiguity transforms")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_corrupt)

    p = commands.add_parser("ttest", help="paired significance test between two report files")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ttest)

    return parser


def _load_store(args):
    if getattr(args, "embeddings", None):
        return EmbeddingStore.load(args.embeddings)
    return None


def _load_inputs(args, queries=False, truth=False):
    schema = load_schema(args.schema)
    dataset = load_dataset(args.records, schema)
    if queries:
        dataset.queries = load_queries(args.queries, schema)
    if truth:
        dataset.truth = load_truth(args.truth, schema)
    violations = validate(dataset)
    if violations:
        raise ValidationError("; ".join(violations))
    return dataset, _load_store(args)


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _ratings_for(args, matrix):
    if args.biased_source and not args.uniform_ratings:
        return sources.source_ratings(matrix, args.biased_source, args.bias_value)
    return sources.uniform_ratings(matrix.source_order)


def _hyperparameters(args):
    return {"forest": {"n_trees": args.trees}, "knn": {"k": args.k}}


def _write_json(path, payload):
    path.write_text(evaluate.render_report(payload), encoding="utf-8")


def _write_profiles_csv(profiles, schema, path):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["query_id", *schema.names, "complete_flag"])
        for profile in profiles:
            writer.writerow(
                [profile.query_id]
                + [format_value(v) for v in profile.values]
                + ["true" if profile.complete else "false"]
            )


def _write_traces(profiles, schema, path):
    lines = []
    for profile in profiles:
        lines.append(f"query {profile.query_id}")
        lines.append(f"  associated: {','.join(profile.associated_record_ids) or '-'}")
        for trace in profile.traces:
            name = schema.names[trace.attribute]
            lines.append(f"  attribute {name}: rule={trace.rule} value={format_value(trace.chosen)}")
            for c in trace.candidates:
                lines.append(
                    f"    candidate value={format_value(c.value)} source={c.source_id} "
                    f"S={c.query_similarity!r} F={c.frequency} T={c.sibling_similarity!r} "
                    f"V1={c.source_link!r} V2={c.sim_freq_product!r} V3={c.score!r}"
                )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_validate(args):
    schema = load_schema(args.schema)
    dataset = load_dataset(args.records, schema)
    if args.queries:
        dataset.queries = load_queries(args.queries, schema)
    if args.truth:
        dataset.truth = load_truth(args.truth, schema)
    violations = validate(dataset)
    for violation in violations:
        print(violation)
    if violations:
        return 1
    print(f"ok: {len(dataset.records)} records, {len(dataset.sources)} sources, "
          f"{len(dataset.queries)} queries")
    return 0


def _cmd_simmatrix(args):
    dataset, store = _load_inputs(args)
    matrix = sources.build_source_similarity_matrix(dataset, DEFAULT_CONFIG, store)
    out = _out_dir(args)
    matrix.write_csv(out / "source_similarity.csv")
    return 0


def _cmd_rate(args):
    dataset, store = _load_inputs(args)
    matrix = sources.build_source_similarity_matrix(dataset, DEFAULT_CONFIG, store)
    trust = sources.trustworthiness_scores(matrix)
    ratings = _ratings_for(args, matrix)
    out = _out_dir(args)
    _write_json(out / "ratings.json", {
        "source_order": matrix.source_order,
        "row_sums": trust.row_sums,
        "most_trustworthy": trust.mts_source,
        "trust": trust.trust_map(),
        "biased_source": ratings.biased_source,
        "bias_value": ratings.bias_value,
        "ratings": ratings.rating_map(),
        "top_rated": ratings.source_order[ratings.index_of_maximum],
    })
    return 0


def _trained_examples(args, dataset, store):
    matrix = sources.build_source_similarity_matrix(dataset, DEFAULT_CONFIG, store)
    trust = sources.trustworthiness_scores(matrix).trust_map()
    examples, _ = classify.build_training_set(
        dataset, trust, query_split=1.0, seed=args.seed, config=DEFAULT_CONFIG, store=store
    )
    return examples


def _cmd_train(args):
    dataset, store = _load_inputs(args, queries=True)
    examples = _trained_examples(args, dataset, store)
    kind = args.classifier
    shuffled = list(examples)
    random.Random(args.seed).shuffle(shuffled)
    n_train = int(round(len(shuffled) * args.classifier_split))
    train_examples, test_examples = shuffled[:n_train], shuffled[n_train:]
    params = _hyperparameters(args).get(kind)
    model = classify.train(kind, train_examples, params, args.seed)
    out = _out_dir(args)
    classify.save_model(model, out / "model.json")

    metrics = {}
    if test_examples:
        labels = [e.label for e in test_examples]
        predictions = [classify.predict(model, e.features)[0] for e in test_examples]
        counts = classify.confusion_counts(labels, predictions)
        metrics = {
            "f1": classify.f1_score(counts),
            "mcc": classify.mcc(counts),
            "confusion": {"tp": counts.tp, "fp": counts.fp, "tn": counts.tn, "fn": counts.fn},
            "examples": {"train": len(train_examples), "test": len(test_examples)},
        }
    _write_json(out / "train_metrics.json", {"classifier": kind, "seed": args.seed, "metrics": metrics})
    return 0


def _cmd_select_model(args):
    dataset, store = _load_inputs(args, queries=True)
    examples = _trained_examples(args, dataset, store)
    best, table = classify.select_model(
        examples,
        kinds=classify.CLASSIFIER_KINDS,
        seed=args.seed,
        split=args.classifier_split,
        hyperparameters=_hyperparameters(args),
    )
    out = _out_dir(args)
    _write_json(out / "model_selection.json", {
        "best": best,
        "seed": args.seed,
        "metrics": {
            kind: {
                "f1": m.f1,
                "cv_error_pct": m.cv_error_pct,
                "roc_auc": m.roc_auc,
                "mcc": m.mcc,
            }
            for kind, m in table.items()
        },
    })
    model = classify.train(best, examples, _hyperparameters(args).get(best), args.seed)
    classify.save_model(model, out / "model.json")
    return 0


def _pipeline(args, dataset, store):
    """Shared resolution/selection pipeline: returns profiling context."""
    matrix = sources.build_source_similarity_matrix(dataset, DEFAULT_CONFIG, store)
    trust_report = sources.trustworthiness_scores(matrix)
    trust = trust_report.trust_map()
    ratings = _ratings_for(args, matrix)
    examples, test_queries = classify.build_training_set(
        dataset, trust, query_split=args.query_split, seed=args.seed,
        config=DEFAULT_CONFIG, store=store,
    )
    params = _hyperparameters(args).get(args.classifier)
    model = classify.train(args.classifier, examples, params, args.seed)
    return matrix, trust_report, trust, ratings, model, test_queries


def _cmd_profile(args):
    dataset, store = _load_inputs(args, queries=True)
    matrix, _, trust, ratings, model, _ = _pipeline(args, dataset, store)
    cache = TextSimilarityCache(DEFAULT_CONFIG, store)
    profiles = [
        profiling.complete_profile(q, dataset, model, ratings, matrix, trust, DEFAULT_CONFIG, store, cache)
        for q in dataset.queries
    ]
    out = _out_dir(args)
    _write_profiles_csv(profiles, dataset.schema, out / "profiles.csv")
    _write_traces(profiles, dataset.schema, out / "traces.txt")
    return 0


def _run_config(args):
    keys = (
        "records", "queries", "truth", "schema", "embeddings", "classifier", "trees",
        "k", "classifier_split", "query_split", "biased_source", "bias_value",
        "uniform_ratings", "seed", "out",
    )
    return {key: getattr(args, key, None) for key in keys}


def _cmd_evaluate(args):
    dataset, store = _load_inputs(args, queries=True, truth=True)
    matrix, trust_report, trust, ratings, model, test_queries = _pipeline(args, dataset, store)
    if not test_queries:
        raise ValidationError("query split leaves no held-out queries to evaluate")
    cache = TextSimilarityCache(DEFAULT_CONFIG, store)
    profiles = [
        profiling.complete_profile(q, dataset, model, ratings, matrix, trust, DEFAULT_CONFIG, store, cache)
        for q in test_queries
    ]

    true_sets = {
        q.query_id: [r.record_id for r in dataset.records if r.entity_id == q.entity_id]
        for q in test_queries
    }
    precision, recall = {}, {}
    for profile in profiles:
        p, r = evaluate.precision_recall(true_sets[profile.query_id], profile.associated_record_ids)
        precision[profile.query_id] = p
        recall[profile.query_id] = r
    acc = evaluate.per_query_accuracy(profiles, dataset.truth, dataset.schema)
    metrics = evaluate.RunMetrics(precision, recall, acc)

    out = _out_dir(args)
    _write_profiles_csv(profiles, dataset.schema, out / "profiles.csv")
    _write_traces(profiles, dataset.schema, out / "traces.txt")
    per_query = {
        qid: {"precision": precision[qid], "recall": recall[qid], "accuracy": acc[qid]}
        for qid in sorted(acc)
    }
    _write_json(out / "report.json", {
        "config": _run_config(args),
        "aggregates": metrics.aggregates_pct(),
        "per_query": per_query,
        "sources": {
            "order": matrix.source_order,
            "trust": trust_report.trust_map(),
            "most_trustworthy": trust_report.mts_source,
            "ratings": ratings.rating_map(),
            "top_rated": ratings.source_order[ratings.index_of_maximum],
        },
        "model": {"kind": args.classifier, "test_queries": len(test_queries)},
    })
    return 0


def _cmd_corrupt(args):
    schema = load_schema(args.schema)
    dataset = load_dataset(args.records, schema)
    name_attribute = 0
    if args.name_attribute is not None:
        name_attribute = schema.index(args.name_attribute)
    else:
        for i, kind in enumerate(schema.kinds):
            if kind == "text":
                name_attribute = i
                break
    plan = corrupt.CorruptionPlan(
        error_rate=args.error_rate,
        ambiguity_rate=args.ambiguity_rate,
        seed=args.seed,
        name_attribute=name_attribute,
    )
    result = dataset
    if args.error_rate > 0:
        result = corrupt.inject_errors(result, plan)
    if args.ambiguity_rate > 0:
        result = corrupt.inject_ambiguities(result, plan)
    out = _out_dir(args)
    write_records_csv(result, out / "records.csv")
    return 0


def _cmd_ttest(args):
    report_a = json.loads(Path(args.report_a).read_text(encoding="utf-8"))
    report_b = json.loads(Path(args.report_b).read_text(encoding="utf-8"))
    queries = sorted(set(report_a["per_query"]) & set(report_b["per_query"]))
    if len(queries) < 2:
        raise ValidationError("reports share fewer than 2 queries; nothing to pair")
    results = {}
    for metric in ("precision", "recall", "accuracy"):
        a = [report_a["per_query"][q][metric] for q in queries]
        b = [report_b["per_query"][q][metric] for q in queries]
        try:
            outcome = evaluate.paired_t_test(a, b)
            results[metric] = {
                "t_value": outcome.t_value,
                "p_value": outcome.p_value,
                "effect_size": outcome.effect_size,
                "df": outcome.df,
            }
        except ValidationError as exc:
            results[metric] = {"error": str(exc)}
    out = _out_dir(args)
    _write_json(out / "ttest.json", {
        "report_a": args.report_a,
        "report_b": args.report_b,
        "paired_queries": len(queries),
        "results": results,
    })
    for metric, row in results.items():
        if "error" in row:
            print(f"{metric}: {row['error']}")
        else:
            print(f"{metric}: t={row['t_value']:.4f} p={row['p_value']:.5f} "
                  f"effect={row['effect_size']:.4f} df={row['df']}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
