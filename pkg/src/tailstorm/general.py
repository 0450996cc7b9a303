"""Construction for time-change-formula processes without the summability condition.

Stream ``j`` places ``u * 1{Theta in Q_j} * Theta_{t+j}`` at time ``t``, where the
sets ``Q_j`` are exact-zero patterns:

* ``Q_0 = {theta_0 != 0}``
* ``Q_k = {theta_0 != 0, theta_1 = ... = theta_{2k} = 0}`` for ``k > 0``
* ``Q_{-k} = {theta_{-2k+1} = ... = theta_{-1} = 0, theta_0 != 0}``
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CoverageError, SpectralWindow, check_alpha
from .models import SpectralModel
from .poisson import PathBatch, StopPolicy, run_engine


def q_lags(j: int) -> tuple[int, int]:
    """Lags inspected by the ``Q_j`` predicate."""
    k = abs(int(j))
    if j > 0:
        return 0, 2 * k
    if j < 0:
        return -2 * k + 1, 0
    return 0, 0


def q_member_batch(values: np.ndarray, t_min: int, j: int, zero_tol: float = 0.0) -> np.ndarray:
    """Membership of each window in ``Q_j`` for an ``(n, n_lags, d)`` batch."""
    values = np.asarray(values, dtype=float)
    lo, hi = q_lags(j)
    t_max = t_min + values.shape[1] - 1
    if t_min > lo or t_max < hi:
        raise CoverageError(f"Q_{j} inspects lags [{lo}, {hi}], window covers [{t_min}, {t_max}]")
    a = np.abs(values)
    member = a[:, -t_min].max(axis=1) > zero_tol
    if j > 0:
        member &= (a[:, 1 - t_min:hi - t_min + 1] <= zero_tol).all(axis=(1, 2))
    elif j < 0:
        member &= (a[:, lo - t_min:-t_min] <= zero_tol).all(axis=(1, 2))
    return member


def q_membership(w: SpectralWindow, j: int, zero_tol: float = 0.0) -> bool:
    lo, hi = q_lags(j)
    vals = w.slice(min(lo, w.t_min), max(hi, w.t_max))
    return bool(q_member_batch(vals[None], min(lo, w.t_min), j, zero_tol)[0])


@dataclass
class QMass:
    """Per-``j`` estimates of ``P(Theta in Q_j)`` with binomial standard errors."""

    js: np.ndarray
    p: np.ndarray
    se: np.ndarray
    n: int

    @property
    def zero(self) -> np.ndarray:
        return self.p == 0

    def as_dict(self) -> dict:
        return {int(j): (float(p), float(s)) for j, p, s in zip(self.js, self.p, self.se)}


def estimate_qj_mass(model: SpectralModel, j_cap: int, n: int, rng, zero_tol: float = 0.0) -> QMass:
    if j_cap < 0:
        raise ValueError("j_cap must be >= 0")
    lo, hi = -2 * j_cap + 1 if j_cap > 0 else 0, 2 * j_cap
    vals = model.sample_batch(rng, n, lo, hi)
    js = np.arange(-j_cap, j_cap + 1)
    p = np.array([q_member_batch(vals, lo, int(j), zero_tol).mean() for j in js])
    return QMass(js, p, np.sqrt(p * (1 - p) / n), n)


def q_partition_counts(values: np.ndarray, t_min: int, ks, j_cap: int, zero_tol: float = 0.0) -> np.ndarray:
    """For each window and each ``k``, count the ``j`` in ``[-j_cap, j_cap]`` with
    ``theta_{k-j} != 0`` and ``(theta_{t+k-j})_t in Q_j``.

    These events are disjoint and exhaust the windows with a nonzero entry
    within reach of ``k``, so the count is 0 or 1.
    """
    values = np.asarray(values, dtype=float)
    ks = list(ks)
    out = np.zeros((values.shape[0], len(ks)), dtype=np.int64)
    for c, k in enumerate(ks):
        for j in range(-j_cap, j_cap + 1):
            m = k - j
            lo, hi = q_lags(j)
            if t_min - m > lo or t_min - m + values.shape[1] - 1 < hi:
                continue
            out[:, c] += q_member_batch(values, t_min - m, j, zero_tol)
    return out


def _envelopes(model, t_min, t_max, js):
    return np.array([model.q_envelope(t_min + j, t_max + j, j) for j in js])


def general_offsets(model: SpectralModel, t_min: int, t_max: int, j_cap: int):
    """Streams with a positive envelope and the probe that nothing beyond the cap is lost."""
    js = np.arange(-j_cap, j_cap + 1)
    env = _envelopes(model, t_min, t_max, js)
    reach = j_cap + (t_max - t_min) + 2 * j_cap + 2
    beyond = [sign * j for j in range(j_cap + 1, reach + 1) for sign in (1, -1)]
    leak = [j for j in beyond if model.q_envelope(t_min + j, t_max + j, j) > 0]
    if leak:
        raise ValueError(f"streams beyond j_cap={j_cap} can contribute (e.g. j={leak[0]}); raise j_cap")
    keep = env > 0
    return js[keep], env[keep]


def simulate_general(model: SpectralModel, alpha, bounds, n: int, rng, j_cap: int = 16,
                     stop: StopPolicy | None = None, zero_tol: float = 0.0, threads: int = 1) -> PathBatch:
    """Simulate ``n`` paths of the general construction on ``bounds``.

    Candidates are drawn from every stream; those outside ``Q_j`` are
    discarded after consuming their mark, which realizes the thinned
    intensity ``P(Theta in Q_j)``.
    """
    alpha = check_alpha(alpha)
    stop = stop or StopPolicy()
    t_min, t_max = int(bounds[0]), int(bounds[1])
    if t_min > t_max:
        raise ValueError("bounds must satisfy t_min <= t_max")
    js, env = general_offsets(model, t_min, t_max, j_cap)
    L, d = t_max - t_min + 1, model.dim
    spans = [q_lags(j) for j in js]
    w_lo = min(min(t_min + j, s[0], 0) for j, s in zip(js, spans))
    w_hi = max(max(t_max + j, s[1], 0) for j, s in zip(js, spans))

    def cut(vals, j):
        member = q_member_batch(vals, w_lo, j, zero_tol)
        seg = vals[:, t_min + j - w_lo:t_max + j - w_lo + 1]
        return np.where(member[:, None, None], seg, 0.0)

    notes = []
    if model.deterministic:
        base = model.sample_batch(np.random.default_rng(0), 1, w_lo, w_hi)
        table = np.concatenate([cut(base, int(j)) for j in js])
        top = table.reshape(len(js), -1).max(axis=1)
        live = top > 0
        # the exact pattern maxima are the tightest envelopes
        js, env, table = js[live], top[live], table[live]
        reach = table.max(axis=0) > 0
        notes.append(f"deterministic model: streams {js.tolist()} carry mass")

        def pattern(rng_, off):
            return table[off]
    else:
        lags = np.arange(t_min, t_max + 1)
        lag_reach = np.array([any(model.q_envelope(t + j, t + j, int(j)) > 0 for j in js) for t in lags])
        reach = lag_reach[:, None] & model.reachable_components()[None, :]

        def pattern(rng_, off):
            vals = model.sample_batch(rng_, off.size, w_lo, w_hi)
            out = np.empty((off.size, L, d))
            for k in np.unique(off):
                rows = np.nonzero(off == k)[0]
                out[rows] = cut(vals[rows], int(js[k]))
            return out

    if not model.claims_tcf:
        notes.append("model does not claim the time-change formula; output need not be stationary")
    meta = {"streams": [int(j) for j in js], "j_cap": j_cap, "zero_tol": zero_tol,
            "stop": {"eps": stop.eps, "n_max": stop.n_max, "batch": stop.batch}, "notes": notes}
    return run_engine(rng, n, t_min, t_max, d, env, pattern, reach, alpha,
                      stop, "general", 0.0, meta, threads)
