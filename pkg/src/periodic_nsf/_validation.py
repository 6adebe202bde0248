"""Input checks shared by the estimator wrappers."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, column_or_1d


def check_field_batch(X, N: int, components: int | None = None) -> np.ndarray:
    """Validate a batch of physical fields: ``(n, N, N, N)`` or ``(n, C, N, N, N)``, finite floats."""
    X = check_array(X, allow_nd=True, ensure_2d=False, dtype=np.float64)
    cube = (N, N, N)
    if X.ndim == 4 and X.shape[1:] == cube:
        X = X[:, None]
    if X.ndim != 5 or X.shape[2:] != cube:
        raise ValueError(f"expected fields of shape (n, [C,] {N}, {N}, {N}), got {X.shape}")
    if components is not None and X.shape[1] != components:
        raise ValueError(f"expected {components} components, got {X.shape[1]}")
    return X


def check_series(t, y=None):
    """Times as a 1-d float array (a single-column 2-d array is accepted); optional positive values."""
    t = np.asarray(t, dtype=float)
    if t.ndim == 2 and t.shape[1] == 1:
        t = t[:, 0]
    t = column_or_1d(check_array(t, ensure_2d=False, dtype=np.float64))
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    if y is None:
        return t
    y = column_or_1d(check_array(np.asarray(y, dtype=float), ensure_2d=False, dtype=np.float64))
    if y.shape != t.shape:
        raise ValueError(f"times and values differ in length ({t.size} vs {y.size})")
    return t, y
