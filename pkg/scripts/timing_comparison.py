#!/usr/bin/env python3
"""Time full k-NN inference (encoding + distances + votes) with the weighted
gram distance against the tree edit distance, on random trees of growing
size. Prints per-size means and the growth ratios when size doubles.

Example:
    python scripts/timing_comparison.py --sizes 20,40,80 --trees 30
"""

from __future__ import annotations

import argparse
import random

from pqgrams import (
    GramShape,
    LabeledTree,
    Vocabulary,
    WeightModel,
    benchmark_inference,
    edit_distance_baseline,
    random_tree,
    weighted_gram_distance,
)


def bench_at_size(n_nodes: int, n_trees: int, k: int, shape: GramShape,
                  rng: random.Random, deep: bool):
    window = 4 if deep else None
    n_train = max(k + 1, int(n_trees * 0.7))
    items = [
        LabeledTree(random_tree(n_nodes, rng, attach_window=window), i % 2)
        for i in range(n_train)
    ]
    tests = [
        random_tree(n_nodes, rng, attach_window=window)
        for _ in range(n_trees - n_train)
    ]
    vocab = Vocabulary.from_trees([it.tree for it in items], shape)
    wdist = weighted_gram_distance(WeightModel.initial(vocab))
    w = benchmark_inference(items, tests, wdist, k, repeats=5)
    t = benchmark_inference(items, tests, edit_distance_baseline(), k, repeats=3)
    return min(w.runs), min(t.runs)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="20,40,80", help="comma list of node counts")
    ap.add_argument("--trees", type=int, default=24, help="trees per size")
    ap.add_argument("-k", type=int, default=3)
    ap.add_argument("-p", type=int, default=2)
    ap.add_argument("-q", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--deep", action="store_true",
                    help="use deeper trees (stresses the edit distance)")
    args = ap.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    shape = GramShape(args.p, args.q)
    rng = random.Random(args.seed)

    rows = []
    print(f"{'nodes':>6}  {'weighted grams':>15}  {'edit distance':>14}  {'ratio':>8}")
    for n in sizes:
        tw, tt = bench_at_size(n, args.trees, args.k, shape, rng, args.deep)
        rows.append((n, tw, tt))
        print(f"{n:>6}  {tw:>14.5f}s  {tt:>13.5f}s  {tt / tw:>7.1f}x")

    print("\ngrowth between consecutive sizes:")
    for (n0, w0, t0), (n1, w1, t1) in zip(rows, rows[1:]):
        print(
            f"  {n0} -> {n1} nodes: weighted grams {w1 / w0:.2f}x, "
            f"edit distance {t1 / t0:.2f}x"
        )


if __name__ == "__main__":
    main()
