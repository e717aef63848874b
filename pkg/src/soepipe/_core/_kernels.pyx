# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: token hashing, deterministic draws, logistic GD.

Must stay semantically in lockstep with kernels_py.py; the integer kernels
are bit-identical, the float kernels agree to rounding.
"""

from libc.math cimport exp, log1p, fabs

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    """
    #include <stdint.h>
    static uint64_t fnv1a64_c(const unsigned char *data, Py_ssize_t n) {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (Py_ssize_t i = 0; i < n; i++) {
            h ^= (uint64_t)data[i];
            h *= 0x100000001b3ULL;
        }
        return h;
    }
    static uint64_t mix64_c(uint64_t x) {
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return x;
    }
    """
    unsigned long long fnv1a64_c(const unsigned char *data, Py_ssize_t n)
    unsigned long long mix64_c(unsigned long long x)


def fnv1a64(bytes data):
    """FNV-1a 64-bit hash of a byte string."""
    return int(fnv1a64_c(data, len(data)))


def mix64(x):
    """splitmix64 finalizer; decorrelates structured hash inputs."""
    return int(mix64_c(<unsigned long long> (x & 0xFFFFFFFFFFFFFFFF)))


def uniform_from_key(bytes key):
    """Deterministic uniform in [0, 1) keyed by an arbitrary byte string."""
    return mix64_c(fnv1a64_c(key, len(key))) / 18446744073709551616.0


def featurize_counts(list tokens, Py_ssize_t dim):
    """Hash each token into one of `dim` buckets and count occurrences."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vec = np.zeros(dim, dtype=np.float64)
    cdef double[:] v = vec
    cdef bytes tok
    for tok in tokens:
        v[<Py_ssize_t> (fnv1a64_c(tok, len(tok)) % <unsigned long long> dim)] += 1.0
    return vec


cdef inline double sigmoid(double z) nogil:
    cdef double e
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


def logreg_scores(cnp.ndarray[cnp.float64_t, ndim=2] X,
                  cnp.ndarray[cnp.float64_t, ndim=1] w):
    """Sigmoid scores for feature matrix X under weights w (bias last)."""
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[:, :] Xv = X
    cdef double[:] wv = w, ov = out
    cdef Py_ssize_t i, j
    cdef double z
    with nogil:
        for i in range(n):
            z = wv[d]
            for j in range(d):
                z += Xv[i, j] * wv[j]
            ov[i] = sigmoid(z)
    return out


def logreg_train(cnp.ndarray[cnp.float64_t, ndim=2] X,
                 cnp.ndarray[cnp.float64_t, ndim=1] y,
                 cnp.ndarray[cnp.float64_t, ndim=1] w,
                 int epochs, double lr, double l2):
    """Full-batch gradient descent on L2-regularized logistic loss.

    Updates w (bias last) in place; returns the per-epoch loss trace of
    length epochs + 1 (loss before each update, then the final loss).
    """
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] trace = np.empty(epochs + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad = np.zeros(d, dtype=np.float64)
    cdef double[:, :] Xv = X
    cdef double[:] yv = y, wv = w, gv = grad, tv = trace
    cdef Py_ssize_t i, j, epoch
    cdef double z, r, gb, loss, reg
    with nogil:
        for epoch in range(epochs + 1):
            loss = 0.0
            gb = 0.0
            for j in range(d):
                gv[j] = 0.0
            for i in range(n):
                z = wv[d]
                for j in range(d):
                    z += Xv[i, j] * wv[j]
                loss += log1p(exp(-fabs(z))) + (z if z > 0.0 else 0.0) - yv[i] * z
                r = sigmoid(z) - yv[i]
                gb += r
                for j in range(d):
                    gv[j] += Xv[i, j] * r
            reg = 0.0
            for j in range(d):
                reg += wv[j] * wv[j]
            tv[epoch] = loss / n + 0.5 * l2 * reg
            if epoch == epochs:
                break
            for j in range(d):
                wv[j] -= lr * (gv[j] / n + l2 * wv[j])
            wv[d] -= lr * (gb / n)
    return trace


def featurize_csr(list token_lists, Py_ssize_t dim):
    """Hash token lists into count-normalized CSR rows (indptr, indices, data)."""
    cdef Py_ssize_t n = len(token_lists)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] indptr = np.zeros(n + 1, dtype=np.int64)
    cdef list indices_parts = []
    cdef list data_parts = []
    cdef dict cache = {}
    cdef dict buckets
    cdef list tokens
    cdef bytes tok
    cdef object cached
    cdef Py_ssize_t i, b, nnz = 0
    for i in range(n):
        tokens = token_lists[i]
        buckets = {}
        for tok in tokens:
            cached = cache.get(tok)
            if cached is None:
                b = <Py_ssize_t> (fnv1a64_c(tok, len(tok)) % <unsigned long long> dim)
                cache[tok] = b
            else:
                b = <Py_ssize_t> cached
            buckets[b] = buckets.get(b, 0.0) + 1.0
        if tokens:
            cols = np.fromiter(sorted(buckets), dtype=np.int64, count=len(buckets))
            vals = np.array([buckets[c] / len(tokens) for c in cols], dtype=np.float64)
            indices_parts.append(cols)
            data_parts.append(vals)
            nnz += len(cols)
        indptr[i + 1] = nnz
    if nnz:
        indices = np.concatenate(indices_parts)
        data = np.concatenate(data_parts)
    else:
        indices = np.zeros(0, dtype=np.int64)
        data = np.zeros(0, dtype=np.float64)
    return indptr, indices, data


def logreg_scores_csr(cnp.ndarray[cnp.int64_t, ndim=1] indptr,
                      cnp.ndarray[cnp.int64_t, ndim=1] indices,
                      cnp.ndarray[cnp.float64_t, ndim=1] data,
                      cnp.ndarray[cnp.float64_t, ndim=1] w):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t d = w.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[:] pv = indptr, iv = indices
    cdef double[:] dv = data, wv = w, ov = out
    cdef Py_ssize_t i, k
    cdef double z
    with nogil:
        for i in range(n):
            z = wv[d]
            for k in range(pv[i], pv[i + 1]):
                z += dv[k] * wv[iv[k]]
            ov[i] = sigmoid(z)
    return out


def logreg_train_csr(cnp.ndarray[cnp.int64_t, ndim=1] indptr,
                     cnp.ndarray[cnp.int64_t, ndim=1] indices,
                     cnp.ndarray[cnp.float64_t, ndim=1] data,
                     cnp.ndarray[cnp.float64_t, ndim=1] y,
                     cnp.ndarray[cnp.float64_t, ndim=1] w,
                     int epochs, double lr, double l2):
    """CSR twin of logreg_train: same math, skips the zero entries."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t d = w.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] trace = np.empty(epochs + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad = np.zeros(d, dtype=np.float64)
    cdef cnp.int64_t[:] pv = indptr, iv = indices
    cdef double[:] dv = data, yv = y, wv = w, gv = grad, tv = trace
    cdef Py_ssize_t i, j, k, epoch
    cdef double z, r, gb, loss, reg
    with nogil:
        for epoch in range(epochs + 1):
            loss = 0.0
            gb = 0.0
            for j in range(d):
                gv[j] = 0.0
            for i in range(n):
                z = wv[d]
                for k in range(pv[i], pv[i + 1]):
                    z += dv[k] * wv[iv[k]]
                loss += log1p(exp(-fabs(z))) + (z if z > 0.0 else 0.0) - yv[i] * z
                r = sigmoid(z) - yv[i]
                gb += r
                for k in range(pv[i], pv[i + 1]):
                    gv[iv[k]] += dv[k] * r
            reg = 0.0
            for j in range(d):
                reg += wv[j] * wv[j]
            tv[epoch] = loss / n + 0.5 * l2 * reg
            if epoch == epochs:
                break
            for j in range(d):
                wv[j] -= lr * (gv[j] / n + l2 * wv[j])
            wv[d] -= lr * (gb / n)
    return trace
