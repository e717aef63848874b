"""Kernel backend selection: compiled extension if available, numpy fallback otherwise.

Set SOEPIPE_PURE_PYTHON=1 to force the fallback (used by the benchmark and
by CI to exercise both paths).
"""

from __future__ import annotations

import os

if os.environ.get("SOEPIPE_PURE_PYTHON") == "1":
    from soepipe._core import kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from soepipe._core import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from soepipe._core import kernels_py as _impl  # type: ignore[no-redef]

        BACKEND = "python"

fnv1a64 = _impl.fnv1a64
mix64 = _impl.mix64
uniform_from_key = _impl.uniform_from_key
featurize_counts = _impl.featurize_counts
featurize_csr = _impl.featurize_csr
logreg_scores = _impl.logreg_scores
logreg_scores_csr = _impl.logreg_scores_csr
logreg_train = _impl.logreg_train
logreg_train_csr = _impl.logreg_train_csr

__all__ = [
    "BACKEND",
    "fnv1a64",
    "mix64",
    "uniform_from_key",
    "featurize_counts",
    "featurize_csr",
    "logreg_scores",
    "logreg_scores_csr",
    "logreg_train",
    "logreg_train_csr",
]
