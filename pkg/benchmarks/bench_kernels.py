"""Timing comparison of the compiled kernels against the pure-Python fallback.

Both backends are imported side by side, so one run covers both; setting
SOEPIPE_PURE_PYTHON=1 additionally proves the package works end to end
without the extension (python -c "import soepipe; ..." under that env).

Usage: python3 benchmarks/bench_kernels.py [--quick]
"""
from __future__ import annotations

import argparse
import random
import string
import time

import numpy as np

from soepipe._core import kernels_py

try:
    from soepipe._core import _kernels as compiled
except ImportError:
    compiled = None


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _token_corpus(n_docs: int, tokens_per_doc: int, seed: int = 7) -> list[list[bytes]]:
    rng = random.Random(seed)
    vocab = [
        "".join(rng.choices(string.ascii_lowercase, k=rng.randint(3, 10))).encode()
        for _ in range(2000)
    ]
    return [
        [rng.choice(vocab) for _ in range(tokens_per_doc)] for _ in range(n_docs)
    ]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller sizes, fewer repeats")
    args = parser.parse_args()

    if compiled is None:
        print("compiled extension not built; showing pure-Python timings only")
    backends = [("python", kernels_py)] + ([("compiled", compiled)] if compiled else [])

    n_docs = 500 if args.quick else 2000
    tokens = 120
    dim = 4096
    epochs = 30 if args.quick else 100
    repeats = 2 if args.quick else 3

    docs = _token_corpus(n_docs, tokens)
    flat = [tok for doc in docs for tok in doc]

    rows: list[tuple[str, dict[str, float]]] = []

    timings: dict[str, float] = {}
    for name, mod in backends:
        timings[name] = _time(lambda m=mod: [m.fnv1a64(t) for t in flat], repeats)
    rows.append((f"fnv1a64 x {len(flat)}", timings))

    timings = {}
    for name, mod in backends:
        timings[name] = _time(
            lambda m=mod: [m.featurize_counts(doc, dim) for doc in docs], repeats
        )
    rows.append((f"featurize_counts x {n_docs}", timings))

    timings = {}
    for name, mod in backends:
        timings[name] = _time(lambda m=mod: m.featurize_csr(docs, dim), repeats)
    rows.append((f"featurize_csr ({n_docs} rows)", timings))

    # dense training input: few hundred rows is already slow for the fallback
    n_dense = 200 if args.quick else 400
    X = np.zeros((n_dense, dim))
    reference = kernels_py
    for i, doc in enumerate(docs[:n_dense]):
        X[i] = reference.featurize_counts(doc, dim) / len(doc)
    y = np.array([float(i % 2) for i in range(n_dense)])
    timings = {}
    for name, mod in backends:
        def run(m=mod):
            w = np.zeros(dim + 1)
            m.logreg_train(X, y, w, epochs, 0.5, 1e-4)
        timings[name] = _time(run, repeats)
    rows.append((f"logreg_train dense ({n_dense}x{dim}, {epochs} epochs)", timings))

    indptr, indices, data = reference.featurize_csr(docs, dim)
    y_all = np.array([float(i % 2) for i in range(n_docs)])
    timings = {}
    for name, mod in backends:
        def run_csr(m=mod):
            w = np.zeros(dim + 1)
            m.logreg_train_csr(indptr, indices, data, y_all, w, epochs, 0.5, 1e-4)
        timings[name] = _time(run_csr, repeats)
    rows.append((f"logreg_train_csr ({n_docs} rows, {epochs} epochs)", timings))

    width = max(len(label) for label, _ in rows)
    header = f"{'kernel':<{width}}  {'python':>10}  {'compiled':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, t in rows:
        py = t.get("python")
        cc = t.get("compiled")
        if cc is not None:
            print(f"{label:<{width}}  {py:>9.3f}s  {cc:>9.3f}s  {py / cc:>7.1f}x")
        else:
            print(f"{label:<{width}}  {py:>9.3f}s  {'n/a':>10}  {'n/a':>8}")


if __name__ == "__main__":
    main()
