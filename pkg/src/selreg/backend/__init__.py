"""Hot-kernel backend: compiled extension when available, NumPy otherwise.

Contracts (identical for both implementations):

``pairwise_sq_dists(queries[nq,d], points[m,d]) -> [nq,m]``
    Squared Euclidean distances from explicit coordinate differences.

``knn_mean(queries, points, values[m], k) -> [nq]``
    Mean of ``values`` at the k nearest points per query; exact distance
    ties resolve to the lower point index.

``gaussian_nw(queries, centers, values[m], sigma) -> [nq]``
    Weighted average with weights exp(-||q-c||^2 / sigma); an all-zero
    weight row falls back to the value at the nearest center.

Set SELREG_BACKEND=numpy to force the fallback (useful for benchmarking and
debugging); SELREG_BACKEND=compiled makes a missing extension a hard error.
"""

from __future__ import annotations

import os

from . import _numpy

_forced = os.environ.get("SELREG_BACKEND", "").strip().lower()

if _forced == "numpy":
    _impl = _numpy
    BACKEND = "numpy"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        _impl = _numpy
        BACKEND = "numpy"

pairwise_sq_dists = _impl.pairwise_sq_dists
knn_mean = _impl.knn_mean
gaussian_nw = _impl.gaussian_nw

__all__ = ["BACKEND", "pairwise_sq_dists", "knn_mean", "gaussian_nw"]
