"""Command-line entry point.

Subcommands: gen-strings, grams, dist, train, knn-eval, bench.
Exit codes: 0 success, 1 usage error, 2 data/parse error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .datasets import gen_strings, load_tsv, save_tsv
from .grams import GramShape, Vocabulary, extract_grams, profile
from .knn import (
    TreeDistance,
    benchmark_inference,
    cross_validate,
    edit_distance_baseline,
    unweighted_gram_distance,
    weighted_gram_distance,
)
from .lmnn import TrainConfig, load_model, save_model, train
from .metric import WeightModel, pq_distance, weighted_distance
from .ted import tree_edit_distance
from .tree import parse_tree


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors, per the CLI contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_shape_flags(p: argparse.ArgumentParser, default: int | None = 2):
    p.add_argument("-p", type=int, default=default, help="stem length (default %(default)s)")
    p.add_argument("-q", type=int, default=default, help="base width (default %(default)s)")


def _add_train_flags(p: argparse.ArgumentParser):
    p.add_argument("-k", type=int, default=3, help="neighbor count (default %(default)s)")
    p.add_argument("--mu1", type=float, default=5.0, help="positive-pair margin")
    p.add_argument("--mu2", type=float, default=5.0, help="negative-pair margin")
    p.add_argument("--beta", type=float, default=1e-4, help="L2 coefficient")
    p.add_argument("--eta", type=float, default=1e-2, help="Adam step size")
    p.add_argument("--epochs", type=int, default=600, help="training epochs")
    p.add_argument("--refresh", type=int, default=50, help="impostor refresh period")
    p.add_argument("--cap", type=int, default=200, help="training subsample cap")
    p.add_argument("--seed", type=int, default=0, help="random seed")


def _config_from_args(args) -> TrainConfig:
    return TrainConfig(
        k=args.k,
        mu1=args.mu1,
        mu2=args.mu2,
        beta=args.beta,
        eta=args.eta,
        epochs=args.epochs,
        impostor_refresh_every=args.refresh,
        subsample_cap=args.cap,
        seed=args.seed,
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="pqgrams", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_gen = sub.add_parser("gen-strings", help="generate the two-class strings corpus")
    p_gen.add_argument("--n", type=int, default=100, help="strings per class")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True, help="output TSV path")
    p_gen.set_defaults(func=_cmd_gen_strings)

    p_grams = sub.add_parser("grams", help="print a tree's gram tuples with counts")
    p_grams.add_argument("--tree", required=True, help="tree in bracket notation")
    _add_shape_flags(p_grams)
    p_grams.set_defaults(func=_cmd_grams)

    p_dist = sub.add_parser("dist", help="distance between two trees")
    p_dist.add_argument("--algo", required=True, choices=["pq", "wpq", "ted"])
    p_dist.add_argument("--model", help="model file (wpq only)")
    p_dist.add_argument("--t1", required=True, help="first tree")
    p_dist.add_argument("--t2", required=True, help="second tree")
    _add_shape_flags(p_dist)
    p_dist.set_defaults(func=_cmd_dist)

    p_train = sub.add_parser("train", help="learn gram weights from a TSV corpus")
    p_train.add_argument("--data", required=True, help="TSV corpus path")
    _add_shape_flags(p_train)
    _add_train_flags(p_train)
    p_train.add_argument("--out", required=True, help="output model path")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("knn-eval", help="cross-validated k-NN error rates")
    p_eval.add_argument("--data", required=True, help="TSV corpus path")
    p_eval.add_argument(
        "--setting",
        required=True,
        choices=["E1", "E2"],
        help="E1: unweighted gram distance; E2: learned weighted distance",
    )
    p_eval.add_argument("--folds", type=int, default=5)
    p_eval.add_argument("--csv", help="write per-fold results as CSV")
    p_eval.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    _add_shape_flags(p_eval)
    _add_train_flags(p_eval)
    p_eval.set_defaults(func=_cmd_knn_eval)

    p_bench = sub.add_parser("bench", help="time full k-NN inference per distance")
    p_bench.add_argument("--data", required=True, help="TSV corpus path")
    p_bench.add_argument("--algos", default="pq,ted", help="comma list of pq,wpq,ted")
    p_bench.add_argument("-k", type=int, default=3)
    p_bench.add_argument("--model", help="model file for wpq (default: fresh weights)")
    p_bench.add_argument("--seed", type=int, default=0, help="train/test split seed")
    p_bench.add_argument("--repeats", type=int, default=3)
    p_bench.add_argument("--threads", type=int, default=1)
    _add_shape_flags(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def _cmd_gen_strings(args) -> int:
    corpus = gen_strings(args.n, args.seed)
    save_tsv(corpus, args.out)
    print(f"wrote {len(corpus)} trees to {args.out}")
    return 0


def _cmd_grams(args) -> int:
    t = parse_tree(args.tree)
    shape = GramShape(args.p, args.q)
    for tup, count in extract_grams(t, shape).items():
        print("\t".join(tup) + f"\t{count}")
    return 0


def _cmd_dist(args) -> int:
    t1 = parse_tree(args.t1)
    t2 = parse_tree(args.t2)
    if args.algo == "pq":
        shape = GramShape(args.p, args.q)
        vocab = Vocabulary.from_trees([t1, t2], shape)
        print(pq_distance(profile(t1, vocab), profile(t2, vocab)))
    elif args.algo == "wpq":
        if not args.model:
            raise UsageError("--algo wpq requires --model")
        trained = load_model(args.model)
        vocab = trained.vocab
        d = weighted_distance(trained.model, profile(t1, vocab), profile(t2, vocab))
        print(f"{d:.6f}")
    else:
        if args.model:
            raise UsageError("--model only applies to --algo wpq")
        print(f"{tree_edit_distance(t1, t2):.6f}")
    return 0


def _cmd_train(args) -> int:
    corpus = load_tsv(args.data)
    shape = GramShape(args.p, args.q)
    cfg = _config_from_args(args)
    trained = train(corpus.items, shape, cfg)
    save_model(trained, args.out)
    print(
        f"trained on {len(corpus)} trees ({len(corpus.label_names)} classes), "
        f"{trained.vocab.dim} weights"
    )
    print(f"loss: {trained.initial_loss:.6f} -> {trained.final_loss:.6f}")
    print(f"model written to {args.out}")
    return 0


def _cmd_knn_eval(args) -> int:
    corpus = load_tsv(args.data)
    shape = GramShape(args.p, args.q)
    if args.setting == "E1":
        def builder(train_items):
            return unweighted_gram_distance([it.tree for it in train_items], shape)
    else:
        cfg = _config_from_args(args)

        def builder(train_items):
            return weighted_gram_distance(train(train_items, shape, cfg))

    report = cross_validate(
        corpus.items, builder, args.k, folds=args.folds, seed=args.seed,
        threads=args.threads,
    )
    print(f"dataset: {args.data} ({len(corpus)} trees)  setting: {args.setting}")
    print(report.render_table())
    if args.csv:
        dataset = Path(args.data).stem
        rows = ["dataset,setting,fold,error,seconds"]
        rows += report.csv_rows(dataset, args.setting)
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(rows) + "\n")
        print(f"csv written to {args.csv}")
    return 0


def _split_train_test(items, seed: int, test_frac: float = 0.2):
    import random as _random

    rng = _random.Random(seed)
    by_label: dict[int, list[int]] = {}
    for i, item in enumerate(items):
        by_label.setdefault(item.label, []).append(i)
    test_idx: set[int] = set()
    for lab in sorted(by_label):
        members = by_label[lab][:]
        rng.shuffle(members)
        n_test = max(1, int(len(members) * test_frac))
        test_idx.update(members[:n_test])
    train_items = [item for i, item in enumerate(items) if i not in test_idx]
    test_trees = [items[i].tree for i in sorted(test_idx)]
    return train_items, test_trees


def _cmd_bench(args) -> int:
    corpus = load_tsv(args.data)
    shape = GramShape(args.p, args.q)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    bad = [a for a in algos if a not in ("pq", "wpq", "ted")]
    if bad:
        raise UsageError(f"unknown algo(s): {','.join(bad)}")
    train_items, test_trees = _split_train_test(corpus.items, args.seed)
    train_trees = [it.tree for it in train_items]
    print(
        f"bench: {len(train_items)} train / {len(test_trees)} test, "
        f"k={args.k}, repeats={args.repeats}, threads={args.threads}"
    )
    for algo in algos:
        if algo == "pq":
            dist = unweighted_gram_distance(train_trees, shape)
        elif algo == "wpq":
            if args.model:
                dist = weighted_gram_distance(load_model(args.model))
            else:
                vocab = Vocabulary.from_trees(train_trees, shape)
                dist = weighted_gram_distance(WeightModel.initial(vocab))
        else:
            dist = edit_distance_baseline()
        result = benchmark_inference(
            train_items, test_trees, dist, args.k,
            repeats=args.repeats, threads=args.threads,
        )
        print(result)
    return 0


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"pqgrams: error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # --help
        return int(e.code or 0)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"pqgrams: error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"pqgrams: error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
