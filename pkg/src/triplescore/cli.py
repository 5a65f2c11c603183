"""Command-line entry point wiring the whole pipeline.

Subcommands: index, dump-profile, extract, train, score, evaluate, cv,
importance. All randomness flows from --seed; identical invocations produce
byte-identical outputs. Exit codes: 0 success, 1 data/runtime error, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .corpus import (
    AbstractStore,
    default_stopwords,
    load_abstracts,
    load_kb,
    load_labeled_pairs,
    load_pairs_to_score,
    load_sentences,
    load_stopwords,
    normalize_entity_id,
)
from .embeddings import load_embeddings
from .errors import TripleScoreError
from .evaluation import cross_validate, evaluate_predictions, importance_report
from .features import (
    NATIONALITY,
    PROFESSION,
    FeatureContext,
    extract_features,
    schema_for,
)
from .fileio import atomic_write_text
from .index import build_index, load_index, save_index
from .model import ForestParams, load_forest, map_score, predict_batch, save_forest, train
from .profiles import PERSON
from .profiles import PROFESSION as PROFILE_PROFESSION

import numpy as np

logger = logging.getLogger(__name__)


class UsageError(Exception):
    """A missing or inconsistent flag combination; exits with code 2."""


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _emit(text: str, out_path) -> None:
    if out_path:
        atomic_write_text(out_path, text)
    else:
        sys.stdout.write(text)


def _require(args, *names):
    for name in names:
        if getattr(args, name.replace("-", "_"), None) is None:
            raise UsageError(f"missing required option --{name}")


def _check_input_paths(args, *names):
    for name in names:
        path = getattr(args, name.replace("-", "_"), None)
        if path is not None and not os.path.isfile(path):
            raise TripleScoreError(f"input file not found: {path} (--{name})")


_DATA_FLAGS = (
    "sentences",
    "index",
    "professions",
    "nationalities",
    "demonyms",
    "abstracts",
    "stopwords",
    "embeddings",
)


def _build_context(args, relation: str) -> FeatureContext:
    """Load every store a relation needs; validates paths up front."""
    _check_input_paths(args, *_DATA_FLAGS)
    if args.sentences is None and args.index is None:
        raise UsageError("need --sentences or --index")
    if relation == PROFESSION:
        if args.professions is None:
            raise UsageError("profession features require --professions")
        if args.embeddings is None:
            raise UsageError(
                "profession features require --embeddings (embedding-centroid features need word vectors)"
            )
    if relation == NATIONALITY:
        if args.nationalities is None or args.demonyms is None:
            raise UsageError("nationality features require --nationalities and --demonyms")

    kb = load_kb(args.professions, args.nationalities, args.demonyms)
    if args.index is not None:
        index = load_index(args.index, kb)
    else:
        index = build_index(load_sentences(args.sentences), kb)
    abstracts = load_abstracts(args.abstracts) if args.abstracts else AbstractStore()
    stopwords = load_stopwords(args.stopwords) if args.stopwords else default_stopwords()
    embeddings = load_embeddings(args.embeddings) if args.embeddings else None
    return FeatureContext.build(
        index=index,
        kb=kb,
        abstracts=abstracts,
        stopwords=stopwords,
        embeddings=embeddings,
        match_plural_s=args.plural_s,
    )


def _forest_params(args, relation: str) -> ForestParams:
    overrides = {"n_trees": args.trees, "min_samples_leaf": args.min_leaf, "rng_seed": args.seed}
    if args.max_features is not None:
        overrides["max_features"] = args.max_features
    return ForestParams.for_relation(relation, **overrides)


def cmd_index(args) -> int:
    _require(args, "sentences", "out")
    _check_input_paths(args, "sentences")
    index = build_index(load_sentences(args.sentences))
    save_index(index, args.out)
    print(f"indexed {index.total_sentences} sentences, {len(index.doc_freq)} terms -> {args.out}")
    return 0


def cmd_dump_profile(args) -> int:
    _require(args, "scope", "subject")
    ctx = _build_context_for_profiles(args)
    if args.scope == PERSON:
        subject = normalize_entity_id(args.subject)
    else:
        subject = args.subject.strip().lower()
    vector = ctx.profiles.profile(args.scope, subject)
    entries = vector.entries if args.top is None else vector.top(args.top)
    lines = ["term\tweight\n"]
    lines += [f"{term}\t{_fmt(weight)}\n" for term, weight in entries]
    _emit("".join(lines), args.out)
    return 0


def _build_context_for_profiles(args) -> FeatureContext:
    """Context for dump-profile: profession scope needs the professions KB."""
    _check_input_paths(args, *_DATA_FLAGS)
    if args.sentences is None and args.index is None:
        raise UsageError("need --sentences or --index")
    if args.scope == PROFILE_PROFESSION and args.professions is None:
        raise UsageError("profession profiles require --professions")
    kb = load_kb(args.professions, args.nationalities, args.demonyms)
    if args.index is not None:
        index = load_index(args.index, kb)
    else:
        index = build_index(load_sentences(args.sentences), kb)
    stopwords = load_stopwords(args.stopwords) if args.stopwords else default_stopwords()
    return FeatureContext.build(index=index, kb=kb, abstracts=AbstractStore(), stopwords=stopwords)


def cmd_extract(args) -> int:
    _require(args, "relation", "pairs")
    _check_input_paths(args, "pairs")
    ctx = _build_context(args, args.relation)
    pairs = load_pairs_to_score(args.pairs)
    schema = schema_for(args.relation)
    lines = ["subject\tobject\t" + "\t".join(schema) + "\n"]
    for subject, obj in pairs:
        fv = extract_features(ctx, args.relation, subject, obj)
        lines.append(f"{subject}\t{obj}\t" + "\t".join(_fmt(v) for v in fv.values) + "\n")
    _emit("".join(lines), args.out)
    return 0


def cmd_train(args) -> int:
    _require(args, "relation", "pairs", "model_out")
    _check_input_paths(args, "pairs")
    ctx = _build_context(args, args.relation)
    pairs = load_labeled_pairs(args.pairs)
    instances = [
        (extract_features(ctx, args.relation, p.subject, p.object), p.score) for p in pairs
    ]
    params = _forest_params(args, args.relation)
    forest = train(instances, params, jobs=args.jobs)
    save_forest(forest, args.model_out)
    print(
        f"trained {args.relation} model: {params.n_trees} trees, "
        f"{len(instances)} instances -> {args.model_out}"
    )
    return 0


def cmd_score(args) -> int:
    _require(args, "pairs", "model")
    _check_input_paths(args, "pairs", "model")
    forest = load_forest(args.model)
    if args.relation is not None and args.relation != forest.relation:
        raise TripleScoreError(
            f"--relation {args.relation} does not match model relation {forest.relation}"
        )
    relation = forest.relation
    ctx = _build_context(args, relation)
    pairs = load_pairs_to_score(args.pairs)
    X = np.array(
        [extract_features(ctx, relation, s, o).values for s, o in pairs], dtype=np.float64
    )
    lines = []
    if pairs:
        raw = predict_batch(forest, X)
        for (subject, obj), s_r in zip(pairs, raw):
            lines.append(f"{subject}\t{obj}\t{map_score(float(s_r))}\n")
    _emit("".join(lines), args.out)
    return 0


def cmd_evaluate(args) -> int:
    _require(args, "predictions", "truth")
    _check_input_paths(args, "predictions", "truth")
    predicted = load_labeled_pairs(args.predictions)
    truth = load_labeled_pairs(args.truth)
    by_pair = {}
    for p in predicted:
        key = (p.subject, p.object)
        if key in by_pair:
            raise TripleScoreError(f"duplicate prediction for {p.subject} / {p.object}")
        by_pair[key] = p.score
    rows = []
    for t in truth:
        key = (t.subject, t.object)
        if key not in by_pair:
            raise TripleScoreError(f"no prediction for {t.subject} / {t.object}")
        rows.append((t.subject, by_pair[key], t.score))
    report = evaluate_predictions(args.relation or "unspecified", rows, args.accuracy_threshold)
    _print_report(report, args)
    return 0


def cmd_cv(args) -> int:
    _require(args, "relation", "pairs")
    _check_input_paths(args, "pairs")
    ctx = _build_context(args, args.relation)
    pairs = load_labeled_pairs(args.pairs)
    params = _forest_params(args, args.relation)
    report = cross_validate(
        pairs,
        ctx,
        args.relation,
        params,
        folds=args.folds,
        seed=args.seed,
        accuracy_threshold=args.accuracy_threshold,
        jobs=args.jobs,
    )
    _print_report(report, args)
    return 0


def cmd_importance(args) -> int:
    _require(args, "model")
    _check_input_paths(args, "model")
    forest = load_forest(args.model)
    rows = importance_report(forest, collapse=args.collapse_families)
    lines = ["feature\timportance\n"]
    lines += [f"{name}\t{_fmt(weight)}\n" for name, weight in rows]
    _emit("".join(lines), args.out)
    return 0


def _print_report(report, args) -> None:
    kendall = "n/a" if report.kendall is None else f"{report.kendall:.6f}"
    print(f"relation\t{report.relation}")
    print(f"instances\t{report.instances}")
    print(f"accuracy\t{report.accuracy:.6f}")
    print(f"asd\t{report.asd:.6f}")
    print(f"kendall\t{kendall}")
    if getattr(args, "metrics_json", None):
        atomic_write_text(args.metrics_json, report.to_json())


def _add_data_flags(parser):
    g = parser.add_argument_group("data files")
    g.add_argument("--sentences", help="entity-annotated sentences, one per line, [[mid|surface]] markers")
    g.add_argument("--index", help="binary index snapshot written by the `index` subcommand")
    g.add_argument("--professions", help="TSV person_mid<TAB>profession, one fact per line")
    g.add_argument("--nationalities", help="TSV person_mid<TAB>nationality, one fact per line")
    g.add_argument(
        "--demonyms",
        help="TSV nationality<TAB>noun_forms<TAB>adjective_forms, forms comma-separated",
    )
    g.add_argument("--abstracts", help="TSV person_mid<TAB>first_sentence<TAB>first_paragraph")
    g.add_argument("--stopwords", help="stopword list, one token per line (default: packaged 127-word list)")
    g.add_argument("--embeddings", help="word vectors: `term v1 .. vD` per line, optional `count dim` header")
    g.add_argument(
        "--plural-s",
        action="store_true",
        help="tolerate a trailing -s on the final token when matching labels",
    )


def _add_model_flags(parser):
    g = parser.add_argument_group("model parameters")
    g.add_argument("--trees", type=int, default=1000, help="number of trees (default 1000)")
    g.add_argument(
        "--max-features",
        type=int,
        default=None,
        help="features sampled per split (default: 3 profession, 2 nationality)",
    )
    g.add_argument("--min-leaf", type=int, default=1, help="minimum samples per leaf (default 1)")
    g.add_argument("--seed", type=int, default=0, help="master RNG seed (default 0)")
    g.add_argument(
        "--jobs",
        type=int,
        default=os.cpu_count() or 1,
        help="parallel workers for tree training (default: available cores)",
    )


def _add_common(parser):
    parser.add_argument("--config", help="JSON file of option defaults; explicit flags override")
    parser.add_argument("--out", help="output file (default: stdout); written atomically")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress details")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="triplescore",
        description="Score knowledge-base triples for type-like relations on a 0..7 scale.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("index", help="build and save a binary sentence index snapshot")
    p.add_argument("--sentences", help="entity-annotated sentences file")
    _add_common(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("dump-profile", help="dump a ranked TF.IDF term profile as TSV")
    _add_data_flags(p)
    p.add_argument("--scope", choices=[PERSON, PROFILE_PROFESSION], help="profile owner kind")
    p.add_argument("--subject", help="person entity id or profession label")
    p.add_argument("--top", type=int, default=None, help="emit only the top N terms")
    _add_common(p)
    p.set_defaults(func=cmd_dump_profile)

    p = sub.add_parser("extract", help="write feature vectors for (subject, object) pairs as TSV")
    _add_data_flags(p)
    p.add_argument("--relation", choices=[PROFESSION, NATIONALITY])
    p.add_argument("--pairs", help="TSV subject<TAB>object (a third score column is ignored)")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train a Random Forest model on labeled pairs")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--relation", choices=[PROFESSION, NATIONALITY])
    p.add_argument("--pairs", help="TSV subject<TAB>object<TAB>score with scores 0..7")
    p.add_argument("--model-out", help="where to write the model file")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score pairs with a trained model")
    _add_data_flags(p)
    p.add_argument("--relation", choices=[PROFESSION, NATIONALITY], help="must match the model")
    p.add_argument("--pairs", help="TSV subject<TAB>object to score")
    p.add_argument("--model", help="model file written by `train`")
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="compare a predictions TSV against a truth TSV")
    p.add_argument("--predictions", help="TSV subject<TAB>object<TAB>score")
    p.add_argument("--truth", help="TSV subject<TAB>object<TAB>score")
    p.add_argument("--relation", choices=[PROFESSION, NATIONALITY], help="label for the report")
    p.add_argument(
        "--accuracy-threshold",
        type=int,
        default=2,
        help="|predicted - truth| <= threshold counts as accurate (default 2)",
    )
    p.add_argument("--metrics-json", help="also write metrics as JSON to this file")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cv", help="run seeded subject-level k-fold cross-validation")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--relation", choices=[PROFESSION, NATIONALITY])
    p.add_argument("--pairs", help="labeled pairs TSV")
    p.add_argument("--folds", type=int, default=5, help="number of folds (default 5)")
    p.add_argument(
        "--accuracy-threshold",
        type=int,
        default=2,
        help="|predicted - truth| <= threshold counts as accurate (default 2)",
    )
    p.add_argument("--metrics-json", help="also write metrics as JSON to this file")
    _add_common(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("importance", help="report per-feature importance of a trained model")
    p.add_argument("--model", help="model file written by `train`")
    p.add_argument(
        "--collapse-families",
        action="store_true",
        help="keep only the best variant of each k-parameterized feature family",
    )
    _add_common(p)
    p.set_defaults(func=cmd_importance)

    return parser, sub


def _find_config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser_map, argv):
    """Load --config JSON (if any) and install it as subcommand defaults."""
    path = _find_config_path(argv)
    if path is None:
        return
    command = next((tok for tok in argv if not tok.startswith("-")), None)
    subparser = parser_map.get(command)
    if subparser is None:
        return  # let argparse produce the usage error
    if not os.path.isfile(path):
        raise TripleScoreError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TripleScoreError(f"config file is not valid JSON: {exc}")
    if not isinstance(config, dict):
        raise TripleScoreError("config file must contain a JSON object")
    known = {action.dest for action in subparser._actions}
    unknown = sorted(set(config) - known)
    if unknown:
        raise UsageError(f"unknown config keys for `{command}`: {', '.join(unknown)}")
    subparser.set_defaults(**config)


def main(argv=None) -> int:
    """Run the CLI; returns the process exit code (raises SystemExit(2) on bad usage)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, sub = build_parser()
    parser_map = dict(sub.choices)
    try:
        _apply_config(parser_map, argv)
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            parser.print_usage(sys.stderr)
            return 2
        logging.basicConfig(
            level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except TripleScoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
