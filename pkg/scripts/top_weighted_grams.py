#!/usr/bin/env python3
"""Inspect a trained model: list the grams with the largest learned weights
and how often each occurs in every class of a corpus. High-weight grams that
concentrate in one class are the features the metric learned to exploit.

Example:
    pqgrams gen-strings --n 100 --seed 42 --out strings.tsv
    pqgrams train --data strings.tsv -k 1 --seed 7 --out model.txt
    python scripts/top_weighted_grams.py --model model.txt --data strings.tsv
"""

from __future__ import annotations

import argparse

import numpy as np

from pqgrams import extract_grams, load_model, load_tsv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", required=True)
    ap.add_argument("--data", required=True)
    ap.add_argument("--top", type=int, default=10)
    args = ap.parse_args()

    trained = load_model(args.model)
    corpus = load_tsv(args.data)
    vocab = trained.vocab
    eff = trained.model.effective_weights()

    occurrences = np.zeros((vocab.dim, len(corpus.label_names)), dtype=np.int64)
    for item in corpus.items:
        for tup, count in extract_grams(item.tree, vocab.shape).items():
            occurrences[vocab.id_of(tup), item.label] += count

    order = np.argsort(-eff[: len(vocab)])[: args.top]
    header = "weight    gram" + " " * 26 + "  ".join(
        f"{name:>10}" for name in corpus.label_names
    )
    print(header)
    for i in order:
        gram = "(" + ",".join(vocab.tuples[i]) + ")"
        counts = "  ".join(f"{occurrences[i, c]:>10}" for c in range(len(corpus.label_names)))
        print(f"{eff[i]:<8.4f}  {gram:<30}{counts}")


if __name__ == "__main__":
    main()
