"""Pure-Python/numpy fallback for the hot kernels.

Mirrors the compiled extension in soepipe/_core/_kernels.pyx. The integer
kernels (hashing, uniform draws) are bit-identical to the extension; the
float kernels agree to rounding because numpy sums in a different order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def mix64(x: int) -> int:
    """splitmix64 finalizer; decorrelates structured hash inputs."""
    x &= _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def uniform_from_key(key: bytes) -> float:
    """Deterministic uniform in [0, 1) keyed by an arbitrary byte string."""
    return mix64(fnv1a64(key)) / 2.0**64


def featurize_counts(tokens: list[bytes], dim: int) -> np.ndarray:
    """Hash each token into one of `dim` buckets and count occurrences."""
    vec = np.zeros(dim, dtype=np.float64)
    cache: dict[bytes, int] = {}
    for tok in tokens:
        bucket = cache.get(tok)
        if bucket is None:
            bucket = fnv1a64(tok) % dim
            cache[tok] = bucket
        vec[bucket] += 1.0
    return vec


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logreg_scores(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Sigmoid scores for feature matrix X under weights w (bias last)."""
    return _sigmoid(X @ w[:-1] + w[-1])


def logreg_train(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, epochs: int, lr: float, l2: float
) -> np.ndarray:
    """Full-batch gradient descent on L2-regularized logistic loss.

    Updates w (bias last) in place; returns the per-epoch loss trace of
    length epochs + 1 (loss before each update, then the final loss).
    """
    n = X.shape[0]
    trace = np.empty(epochs + 1, dtype=np.float64)
    for epoch in range(epochs):
        z = X @ w[:-1] + w[-1]
        trace[epoch] = _loss(z, y, w, l2)
        resid = _sigmoid(z) - y
        grad_w = X.T @ resid / n + l2 * w[:-1]
        grad_b = resid.sum() / n
        w[:-1] -= lr * grad_w
        w[-1] -= lr * grad_b
    trace[epochs] = _loss(X @ w[:-1] + w[-1], y, w, l2)
    return trace


def _loss(z: np.ndarray, y: np.ndarray, w: np.ndarray, l2: float) -> float:
    # softplus(z) - y*z, computed stably
    softplus = np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0.0)
    data = float(np.mean(softplus - y * z))
    return data + 0.5 * l2 * float(np.dot(w[:-1], w[:-1]))


def featurize_csr(
    token_lists: list[list[bytes]], dim: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hash token lists into count-normalized CSR rows (indptr, indices, data)."""
    indptr = np.zeros(len(token_lists) + 1, dtype=np.int64)
    indices_out: list[np.ndarray] = []
    data_out: list[np.ndarray] = []
    cache: dict[bytes, int] = {}
    nnz = 0
    for i, tokens in enumerate(token_lists):
        buckets: dict[int, float] = {}
        for tok in tokens:
            b = cache.get(tok)
            if b is None:
                b = fnv1a64(tok) % dim
                cache[tok] = b
            buckets[b] = buckets.get(b, 0.0) + 1.0
        if tokens:
            cols = np.fromiter(sorted(buckets), dtype=np.int64, count=len(buckets))
            vals = np.array([buckets[c] / len(tokens) for c in cols], dtype=np.float64)
            indices_out.append(cols)
            data_out.append(vals)
            nnz += len(cols)
        indptr[i + 1] = nnz
    if nnz:
        indices = np.concatenate(indices_out)
        data = np.concatenate(data_out)
    else:
        indices = np.zeros(0, dtype=np.int64)
        data = np.zeros(0, dtype=np.float64)
    return indptr, indices, data


def _csr_row_ids(indptr: np.ndarray) -> np.ndarray:
    n = len(indptr) - 1
    return np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))


def logreg_scores_csr(
    indptr: np.ndarray, indices: np.ndarray, data: np.ndarray, w: np.ndarray
) -> np.ndarray:
    n = len(indptr) - 1
    row_ids = _csr_row_ids(indptr)
    z = np.bincount(row_ids, weights=data * w[indices], minlength=n) + w[-1]
    return _sigmoid(z)


def logreg_train_csr(
    indptr: np.ndarray,
    indices: np.ndarray,
    data: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    epochs: int,
    lr: float,
    l2: float,
) -> np.ndarray:
    """CSR twin of logreg_train: same math, skips the zero entries."""
    n = len(indptr) - 1
    dim = len(w) - 1
    row_ids = _csr_row_ids(indptr)
    trace = np.empty(epochs + 1, dtype=np.float64)
    for epoch in range(epochs):
        z = np.bincount(row_ids, weights=data * w[indices], minlength=n) + w[-1]
        trace[epoch] = _loss(z, y, w, l2)
        resid = _sigmoid(z) - y
        grad_w = np.bincount(indices, weights=resid[row_ids] * data, minlength=dim) / n
        grad_w += l2 * w[:-1]
        w[:-1] -= lr * grad_w
        w[-1] -= lr * resid.sum() / n
    z = np.bincount(row_ids, weights=data * w[indices], minlength=n) + w[-1]
    trace[epochs] = _loss(z, y, w, l2)
    return trace
