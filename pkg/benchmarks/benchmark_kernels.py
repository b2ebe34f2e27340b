#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the two hot loops (embedding SGD epochs and span scoring) on
synthetic workloads with both backends, checks the outputs are
bit-identical, and prints the timings. Usage:

    python benchmarks/benchmark_kernels.py [--dim 100] [--pairs 2000]
"""

import argparse
import time

import numpy as np

from knowdis._kernels import backends


def bench_transe(impl, dim, n_pairs, epochs, seed=0):
    rng = np.random.default_rng(seed)
    n_ent = 200
    ent = rng.uniform(-1, 1, (n_ent, dim))
    rel = rng.uniform(-1, 1, dim)
    pos = rng.integers(0, n_ent, (n_pairs, 2)).astype(np.int64)
    neg = rng.integers(0, n_ent, (n_pairs, 2)).astype(np.int64)
    started = time.perf_counter()
    loss = 0.0
    for _ in range(epochs):
        impl.renormalize_rows(ent)
        loss = impl.transe_epoch(ent, rel, pos, neg, 1.0, 0.01, True)
    elapsed = time.perf_counter() - started
    return elapsed, (loss, ent.copy(), rel.copy())


def bench_span(impl, n_sentences, span_len, seed=0):
    rng = np.random.default_rng(seed)
    vocab = 500
    n_keys = 4000
    keys = np.unique(rng.integers(0, vocab * vocab, n_keys)).astype(np.int64)
    counts = rng.integers(1, 20, len(keys)).astype(np.float64)
    row = np.zeros(vocab)
    col = np.zeros(vocab)
    for key, c in zip(keys, counts):
        row[key // vocab] += c
        col[key % vocab] += c
    m = float(counts.sum())
    spans = [(rng.integers(0, vocab, span_len).astype(np.int64),
              rng.integers(0, vocab, span_len).astype(np.int64))
             for _ in range(n_sentences)]
    started = time.perf_counter()
    total = 0.0
    for ids1, ids2 in spans:
        total += impl.span_score(ids1, ids2, vocab, keys, counts, row, col,
                                 m, 250.0, 0.5, 0.5, 0.0)
    elapsed = time.perf_counter() - started
    return elapsed, total


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dim", type=int, default=100)
    parser.add_argument("--pairs", type=int, default=2000)
    parser.add_argument("--epochs", type=int, default=20)
    parser.add_argument("--sentences", type=int, default=2000)
    parser.add_argument("--span-len", type=int, default=12)
    args = parser.parse_args()

    impls = backends()
    if "compiled" not in impls:
        print("compiled extension not built; benchmarking pure backend only")

    results = {}
    for name, impl in impls.items():
        t_emb, emb_state = bench_transe(impl, args.dim, args.pairs, args.epochs)
        t_span, span_total = bench_span(impl, args.sentences, args.span_len)
        results[name] = {
            "embedding_s": t_emb, "span_s": t_span,
            "emb_state": emb_state, "span_total": span_total,
        }
        print(f"{name:9s} embedding SGD: {t_emb:8.3f}s   "
              f"span scoring: {t_span:8.3f}s")

    if len(results) == 2:
        pure, comp = results["pure"], results["compiled"]
        loss_p, ent_p, rel_p = pure["emb_state"]
        loss_c, ent_c, rel_c = comp["emb_state"]
        identical = (loss_p == loss_c and (ent_p == ent_c).all()
                     and (rel_p == rel_c).all()
                     and pure["span_total"] == comp["span_total"])
        print(f"bitwise identical outputs: {identical}")
        print(f"speedup: embedding x{pure['embedding_s'] / comp['embedding_s']:.1f}, "
              f"span scoring x{pure['span_s'] / comp['span_s']:.1f}")
        if not identical:
            raise SystemExit("backend outputs diverged")


if __name__ == "__main__":
    main()
