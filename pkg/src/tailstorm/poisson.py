"""Descending-mark Poisson engine shared by the two max-stable constructions.

Both constructions take a pointwise maximum over points ``(u, offset, Theta)``
of a Poisson process with intensity ``alpha u^(-alpha-1) du`` times counting
measure over a finite set of offsets times the law of ``Theta``. Each point
contributes ``u * pattern(offset, Theta)`` to the path, where ``pattern`` is
bounded componentwise by a per-offset envelope ``env[offset]``.

Writing ``v = u * env[offset]``, the superposition over offsets is a Poisson
process in ``v`` with rate ``sum(env^alpha) alpha v^(-alpha-1) dv``; marks are
generated in descending order as ``v_i = (Gamma_i / sum(env^alpha))^(-1/alpha)``
and each point picks its offset with probability proportional to
``env^alpha``. Offsets with a small envelope are visited rarely, which is
exactly the thinning their smaller contributions allow. Since every
contribution is at most ``v``, the path is final once ``v`` drops below its
smallest reachable entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# replicates per RNG chunk; fixed so results do not depend on threading
CHUNK = 512


class TruncationError(RuntimeError):
    """Point budget exhausted before the certificate met the requested tolerance."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class StopPolicy:
    """``eps``: relative sup-norm error accepted at the point cap ``n_max``.

    ``batch`` points are drawn per active replicate per round.
    """

    eps: float = 1e-3
    n_max: int = 100_000
    batch: int = 32

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.n_max < 1 or self.batch < 1:
            raise ValueError("n_max and batch must be >= 1")


@dataclass
class PathWindow:
    """One simulated path on lags ``t_min..t_max`` with its truncation certificate."""

    t_min: int
    values: np.ndarray
    construction: str
    certificate: float = 0.0

    @property
    def t_max(self) -> int:
        return self.t_min + self.values.shape[0] - 1


@dataclass
class PathBatch:
    """``values[r, t - t_min, i]`` for replicate ``r``.

    ``certificate[r]`` bounds the sup-norm error of replicate ``r`` (0 when the
    stopping rule was exact); ``model_bound`` bounds the extra error from
    model-side truncation (omitted shifts and alpha-mass outside windows).
    """

    t_min: int
    values: np.ndarray
    construction: str
    certificate: np.ndarray
    n_points: np.ndarray
    model_bound: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def t_max(self) -> int:
        return self.t_min + self.values.shape[1] - 1

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    def path(self, r: int) -> PathWindow:
        return PathWindow(self.t_min, self.values[r], self.construction, float(self.certificate[r]))

    def lag_slice(self, lo: int, hi: int) -> np.ndarray:
        if lo < self.t_min or hi > self.t_max:
            raise ValueError(f"lags [{lo}, {hi}] outside path bounds [{self.t_min}, {self.t_max}]")
        return self.values[:, lo - self.t_min:hi - self.t_min + 1]


def path_array(obj) -> tuple[int, np.ndarray]:
    """``(t_min, values)`` for a :class:`PathBatch` or a raw ``(n, T[, d])`` array (``t_min = 0``)."""
    if isinstance(obj, PathBatch):
        return obj.t_min, obj.values
    arr = np.asarray(obj, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError("paths must have shape (n, T) or (n, T, d)")
    return 0, arr


# pattern(rng, offset_index (m,)) -> (m, L, d) nonnegative array
PatternFn = Callable[[np.random.Generator, np.ndarray], np.ndarray]


def _run_chunk(rng, n_rep, L, d, env, pattern, reach, alpha, stop: StopPolicy):
    weights = env ** alpha
    total = float(weights.sum())
    probs = weights / total
    Z = np.zeros((n_rep, L, d))
    gamma = np.zeros(n_rep)
    count = np.zeros(n_rep, dtype=np.int64)
    cert = np.full(n_rep, np.inf)
    done = np.zeros(n_rep, dtype=bool)
    B = stop.batch
    slack = 1.0 + 1e-9
    while not done.all():
        act = np.nonzero(~done)[0]
        m = act.size
        g = gamma[act, None] + np.cumsum(rng.standard_exponential((m, B)), axis=1)
        gamma[act] = g[:, -1]
        v = (g / total) ** (-1.0 / alpha)
        off = rng.choice(env.size, size=m * B, p=probs)
        pat = pattern(rng, off)
        if np.any(pat > env[off, None, None] * slack):
            raise RuntimeError("pattern value exceeds its declared envelope; model envelope is wrong")
        u = v.ravel() / env[off]
        contrib = (u[:, None, None] * pat).reshape(m, B, L, d).max(axis=1)
        Z[act] = np.maximum(Z[act], contrib)
        count[act] += B
        v_last = v[:, -1]
        zmin = Z[act][:, reach].min(axis=1)
        zmax = Z[act].reshape(m, -1).max(axis=1)
        exact = v_last < zmin
        cert[act[exact]] = 0.0
        capped = (count[act] >= stop.n_max) & ~exact
        cert[act[capped]] = v_last[capped]
        done[act[exact | capped]] = True
        bad = capped & (v_last > stop.eps * zmax)
        if bad.any():
            return Z, cert, count, act[bad]
    return Z, cert, count, None


def run_engine(rng, n_rep: int, t_min: int, t_max: int, d: int, env, pattern: PatternFn,
               reach, alpha: float, stop: StopPolicy, construction: str,
               model_bound: float = 0.0, meta: dict | None = None, threads: int = 1) -> PathBatch:
    """Simulate ``n_rep`` independent paths on ``t_min..t_max``.

    Replicates are processed in fixed chunks, each with its own spawned
    stream, so the output depends only on ``rng``'s state and not on
    ``threads``. Raises :class:`TruncationError` (carrying every path produced
    so far) when a replicate reaches ``n_max`` with certificate above
    ``eps`` times its path maximum. ``reach`` is an ``(L, d)`` or ``(d,)``
    mask of the entries some offset can make positive; only those enter the
    stopping rule.
    """
    env = np.asarray(env, dtype=float)
    if env.ndim != 1 or env.size == 0 or np.any(env <= 0):
        raise ValueError("envelopes must be a nonempty vector of positive numbers")
    L = t_max - t_min + 1
    reach = np.broadcast_to(np.asarray(reach, dtype=bool), (L, d)).copy()
    if not reach.any():
        raise ValueError("no path entry is reachable")
    n_chunks = max(1, math.ceil(n_rep / CHUNK))
    streams = rng.spawn(n_chunks)
    sizes = [min(CHUNK, n_rep - k * CHUNK) for k in range(n_chunks)]

    def work(k):
        return _run_chunk(streams[k], sizes[k], L, d, env, pattern, reach, alpha, stop)

    if threads > 1 and n_chunks > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(n_chunks)))
    else:
        results = [work(k) for k in range(n_chunks)]

    Z = np.concatenate([r[0] for r in results])
    cert = np.concatenate([r[1] for r in results])
    count = np.concatenate([r[2] for r in results])
    batch = PathBatch(t_min, Z, construction, cert, count, model_bound, dict(meta or {}))
    failed = [k * CHUNK + r[3] for k, r in enumerate(results) if r[3] is not None]
    if failed:
        idx = np.concatenate(failed)
        raise TruncationError(
            f"{idx.size} replicate(s) reached n_max={stop.n_max} points with certificate above "
            f"eps={stop.eps} times the path maximum; first failing replicate {int(idx[0])}",
            partial=batch)
    return batch
