#!/usr/bin/env python3
"""Fit the backoff n-gram generator on a gold-annotated documents file.

Every annotated event contributes one (generator input, filled template)
pair; the model is pickled for use with ``docarg extract --generator
ngram:MODEL``.
"""

import argparse
import sys

from docarg.corpus import load_documents
from docarg.generation import gold_training_pairs, train_ngram
from docarg.ontology import load_ontology


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ontology", required=True)
    ap.add_argument("--documents", required=True)
    ap.add_argument("--out", required=True, help="model pickle to write")
    ap.add_argument("--order", type=int, default=3)
    ap.add_argument("--lam", type=float, default=0.3,
                    help="copy-channel interpolation weight")
    ap.add_argument("--k", type=float, default=0.01, help="add-k smoothing")
    ap.add_argument("--unk-threshold", type=int, default=1,
                    help="target tokens seen this often or less become <unk>")
    ap.add_argument("--max-input-length", type=int, default=360)
    args = ap.parse_args()

    ontology = load_ontology(args.ontology)
    docs = load_documents(args.documents)
    pairs = gold_training_pairs(ontology, docs, args.max_input_length)
    model = train_ngram(pairs, order=args.order, lam=args.lam, k=args.k,
                        unk_threshold=args.unk_threshold)
    model.save(args.out)
    print(f"trained on {len(pairs)} events from {len(docs)} documents; "
          f"kept vocabulary {len(model.kept)} -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
