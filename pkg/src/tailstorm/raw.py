"""Brute-force path sources used as independent oracles."""

from __future__ import annotations

import math

import numpy as np

from .core import check_alpha


def frechet(rng, size, alpha: float = 1.0) -> np.ndarray:
    """Standard Frechet(alpha) draws, ``P(F <= x) = exp(-x^(-alpha))``."""
    return rng.standard_exponential(size) ** (-1.0 / check_alpha(alpha))


def iid_frechet_paths(rng, n: int, t_min: int, t_max: int, alpha: float = 1.0, d: int = 1) -> np.ndarray:
    return frechet(rng, (n, t_max - t_min + 1, d), alpha)


def mma_lag_cutoff(phi: float, alpha: float, tol: float = 1e-12) -> int:
    """Number of moving-maxima coefficients kept: ``phi^(j alpha)`` summed past it is below ``tol``."""
    return int(math.ceil(math.log(tol * (1 - phi ** alpha)) / (alpha * math.log(phi))))


def mma_paths(rng, n: int, t_min: int, t_max: int, phi: float, alpha: float = 1.0,
              normalized: bool = True, chunk: int = 20_000) -> np.ndarray:
    """``X_t = c max_{j >= 0} phi^j F_{t-j}`` with i.i.d. standard Frechet ``F``.

    ``c = (1 - phi^alpha)^(1/alpha)`` gives standard Frechet margins; with
    ``normalized=False``, ``c = 1`` and ``P(X_t > x) ~ x^(-alpha) / (1 - phi^alpha)``.
    The infinite maximum is cut after :func:`mma_lag_cutoff` coefficients.
    """
    alpha = check_alpha(alpha)
    M = mma_lag_cutoff(phi, alpha)
    L = t_max - t_min + 1
    c = (1.0 - phi ** alpha) ** (1.0 / alpha) if normalized else 1.0
    coef = phi ** np.arange(M + 1)
    out = np.empty((n, L, 1))
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        F = frechet(rng, (m, L + M), alpha)
        # X at position t uses F at positions t, t-1, ..., t-M of the padded row
        X = np.zeros((m, L))
        for j in range(M + 1):
            np.maximum(X, coef[j] * F[:, M - j:M - j + L], out=X)
        out[start:start + m, :, 0] = c * X
    return out
