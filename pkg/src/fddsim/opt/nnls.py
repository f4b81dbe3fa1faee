"""Active-set non-negative least squares (Lawson-Hanson)."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgumentError, NumericalError


def nnls(a: np.ndarray, b: np.ndarray, max_iter: int | None = None) -> np.ndarray:
    """Minimize ||A z - b|| over z >= 0.

    Returns a solution satisfying the KKT conditions: g = A^T (A z - b)
    has g >= -tol everywhere and |g_i| <= tol where z_i > 0, with
    tol = 1e-8 * ||A^T b||_inf.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[1] < 1:
        raise InvalidArgumentError("nnls: A must be a matrix with at least one column")
    if b.shape != (a.shape[0],):
        raise InvalidArgumentError("nnls: b length must match the rows of A")

    n = a.shape[1]
    if max_iter is None:
        max_iter = 10 * n
    tol = 1e-8 * max(np.max(np.abs(a.T @ b)), 1e-300)

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)

    for _ in range(max_iter):
        w = a.T @ (b - a @ x)
        w_masked = np.where(passive, -np.inf, w)
        j = int(np.argmax(w_masked))
        if passive.all() or w_masked[j] <= tol:
            return x
        passive[j] = True

        # Inner loop: retreat until the unconstrained solution on the
        # passive set is componentwise positive.
        while True:
            z = np.zeros(n)
            z[passive], *_ = np.linalg.lstsq(a[:, passive], b, rcond=None)
            if np.all(z[passive] > 0.0):
                x = z
                break
            mask = passive & (z <= 0.0)
            alpha = np.min(x[mask] / (x[mask] - z[mask]))
            x = x + alpha * (z - x)
            passive &= x > 0.0
            x[~passive] = 0.0

    raise NumericalError(f"nnls: iteration cap {max_iter} exceeded")
