#!/usr/bin/env python3
"""Compare k-NN error with plain vs learned gram weights on the synthetic
strings corpus: 5-fold cross-validation for both settings, plus the loss
trace of one full training run.

Example:
    python scripts/strings_experiment.py --n 100 --epochs 600 --seed 42
"""

from __future__ import annotations

import argparse
import time

from pqgrams import (
    GramShape,
    TrainConfig,
    cross_validate,
    gen_strings,
    train,
    unweighted_gram_distance,
    weighted_gram_distance,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100, help="strings per class")
    ap.add_argument("-p", type=int, default=2)
    ap.add_argument("-q", type=int, default=2)
    ap.add_argument("-k", type=int, default=1)
    ap.add_argument("--epochs", type=int, default=600)
    ap.add_argument("--folds", type=int, default=5)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    corpus = gen_strings(args.n, seed=args.seed)
    shape = GramShape(args.p, args.q)
    cfg = TrainConfig(k=args.k, epochs=args.epochs, seed=args.seed)
    print(f"corpus: {len(corpus)} trees, classes {corpus.class_counts()}")

    t0 = time.perf_counter()
    plain = cross_validate(
        corpus.items,
        lambda tr: unweighted_gram_distance([it.tree for it in tr], shape),
        args.k, folds=args.folds, seed=args.seed,
    )
    print(f"\n== unweighted gram distance ({time.perf_counter() - t0:.1f}s)")
    print(plain.render_table())

    t0 = time.perf_counter()
    learned = cross_validate(
        corpus.items,
        lambda tr: weighted_gram_distance(train(tr, shape, cfg)),
        args.k, folds=args.folds, seed=args.seed,
    )
    print(f"\n== learned weighted gram distance ({time.perf_counter() - t0:.1f}s)")
    print(learned.render_table())

    trained = train(corpus.items, shape, cfg)
    trace = trained.loss_trace
    marks = [0, len(trace) // 4, len(trace) // 2, 3 * len(trace) // 4, len(trace) - 1]
    print("\n== loss trace (full corpus)")
    for e in marks:
        print(f"  epoch {e:>4}: {trace[e]:.4f}")

    delta = plain.mean_error - learned.mean_error
    print(
        f"\nmean error: {plain.mean_error:.4f} (plain) vs "
        f"{learned.mean_error:.4f} (learned), improvement {delta:+.4f}"
    )


if __name__ == "__main__":
    main()
