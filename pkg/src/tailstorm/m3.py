"""Mixed moving maxima built from a spectral tail model.

``Z_t = max_i U_i Theta^(i)_{t+T_i} / ||Theta^(i)||_alpha`` over a Poisson process
with intensity ``alpha u^(-alpha-1) du`` x counting measure x law of Theta.
Also the exact finite-dimensional distribution, a max-stability check and
the limit measure of the resulting process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .core import SpectralWindow, alpha_sums, check_alpha
from .models import SpectralModel
from .poisson import PathBatch, StopPolicy, path_array, run_engine
from .stats import TestReport


def _require_sc(model: SpectralModel):
    if not model.claims_sc or model.support is None:
        raise ValueError(f"model {model.name!r} does not satisfy the summability condition (SC); "
                         "the moving-maxima construction needs a finite alpha-norm")


def m3_offsets(model: SpectralModel, alpha: float, t_min: int, t_max: int):
    """Shifts whose window can overlap the support, with their envelopes."""
    _require_sc(model)
    a, b = model.support
    shifts = np.arange(a - t_max, b - t_min + 1)
    env = np.array([model.m3_envelope(t_min + T, t_max + T, alpha) for T in shifts])
    keep = env > 0
    return shifts[keep], env[keep]


def _gather(vals: np.ndarray, w_lo: int, lags: np.ndarray, shift: np.ndarray) -> np.ndarray:
    """``out[r, l] = vals[r, lags[l] + shift[r] - w_lo]`` with zeros off-window."""
    n, W, d = vals.shape
    idx = lags[None, :] + shift[:, None] - w_lo
    ok = (idx >= 0) & (idx < W)
    rows = np.broadcast_to(np.arange(n)[:, None], idx.shape)
    out = np.zeros((n, lags.size, d))
    out[ok] = vals[rows[ok], idx[ok]]
    return out


def simulate_m3(model: SpectralModel, alpha, bounds, n: int, rng, stop: StopPolicy | None = None,
                threads: int = 1) -> PathBatch:
    """Simulate ``n`` independent paths on ``bounds = (t_min, t_max)``."""
    alpha = check_alpha(alpha)
    stop = stop or StopPolicy()
    t_min, t_max = int(bounds[0]), int(bounds[1])
    if t_min > t_max:
        raise ValueError("bounds must satisfy t_min <= t_max")
    shifts, env = m3_offsets(model, alpha, t_min, t_max)
    a, b = model.support
    lags = np.arange(t_min, t_max + 1)
    spec = model.norm_spec

    def pattern(rng_, off):
        vals = model.sample_batch(rng_, off.size, a, b)
        scale = alpha_sums(vals, alpha, spec) ** (1.0 / alpha)
        return _gather(vals, a, lags, shifts[off]) / scale[:, None, None]

    lag_reach = np.array([any(model.m3_envelope(t + T, t + T, alpha) > 0 for T in shifts) for t in lags])
    reach = lag_reach[:, None] & model.reachable_components()[None, :]
    bound = model.truncation_bound(a, b, alpha)
    meta = {"shifts": [int(shifts[0]), int(shifts[-1])], "n_shifts": int(shifts.size),
            "support": [a, b], "alpha_mass_outside_windows": bound,
            "stop": {"eps": stop.eps, "n_max": stop.n_max, "batch": stop.batch}}
    return run_engine(rng, n, t_min, t_max, model.dim, env, pattern, reach, alpha, stop, "m3",
                      bound, meta, threads)


@dataclass(frozen=True)
class PoissonPoint:
    """``u`` is the radial mark, ``bound = u * envelope(shift)`` caps the
    point's contribution and decreases strictly along a realization."""

    u: float
    shift: int
    window: SpectralWindow
    bound: float


def generate_points(model: SpectralModel, alpha, bounds, rng) -> Iterator[PoissonPoint]:
    """Endless point-by-point generator for one path (reference implementation)."""
    alpha = check_alpha(alpha)
    t_min, t_max = int(bounds[0]), int(bounds[1])
    shifts, env = m3_offsets(model, alpha, t_min, t_max)
    a, b = model.support
    w = env ** alpha
    total, probs = w.sum(), w / w.sum()
    gamma = 0.0
    while True:
        gamma += rng.standard_exponential()
        v = (gamma / total) ** (-1.0 / alpha)
        k = int(rng.choice(shifts.size, p=probs))
        yield PoissonPoint(v / env[k], int(shifts[k]), model.sample(rng, a, b), v)


def path_from_points(points, alpha, bounds) -> np.ndarray:
    """Pointwise maximum over a finite list of points."""
    alpha = check_alpha(alpha)
    t_min, t_max = int(bounds[0]), int(bounds[1])
    z = None
    for p in points:
        w = p.window
        scale = alpha_sums(w.values[None], alpha, w.norm_spec)[0] ** (1.0 / alpha)
        part = p.u * w.slice(t_min + p.shift, t_max + p.shift) / scale
        z = part if z is None else np.maximum(z, part)
    return z


def _threshold_array(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.ndim == 1:
        x = np.repeat(x[:, None], dim, axis=1)
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"thresholds must have shape (n_lags,) or (n_lags, {dim})")
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise ValueError("thresholds must be nonnegative or +inf")
    return x


def exponent_samples(model: SpectralModel, alpha: float, x, s: int, n: int, rng) -> np.ndarray:
    """Per-sample ``sum_z max_{i, l} (Theta^i_{l+z} / x^i_l)^alpha / ||Theta||_alpha^alpha``."""
    _require_sc(model)
    x = _threshold_array(x, model.dim)
    L = x.shape[0]
    a, b = model.support
    vals = model.sample_batch(rng, n, a, b)
    asum = alpha_sums(vals, alpha, model.norm_spec)
    inv = np.where(np.isinf(x), 0.0, 1.0 / np.where(x == 0, 1.0, x))
    zero_x = x == 0
    lags = np.arange(s, s + L)
    total = np.zeros(n)
    for z in range(a - (s + L - 1), b - s + 1):
        seg = _gather(vals, a, lags, np.full(n, z))
        ratio = seg * inv[None]
        # a positive value against a zero threshold makes the exponent infinite
        ratio = np.where(zero_x[None] & (seg > 0), np.inf, ratio)
        total += ratio.reshape(n, -1).max(axis=1) ** alpha
    return total / asum


def fdd_cdf(model: SpectralModel, alpha, x, n: int, rng, s: int = 0) -> tuple[float, float]:
    """``P(Z_s <= x_0, ..., Z_{s+L-1} <= x_{L-1})`` and its Monte Carlo standard error.

    The inner expectation is estimated from ``n`` model draws; the standard
    error of the exponent is carried through ``exp`` by the delta method.
    """
    alpha = check_alpha(alpha)
    xa = _threshold_array(x, model.dim)
    if np.all(np.isinf(xa)):
        return 1.0, 0.0
    S = exponent_samples(model, alpha, xa, s, n, rng)
    if np.any(np.isinf(S)):
        return 0.0, 0.0
    mean = float(S.mean())
    se = float(S.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    p = math.exp(-mean)
    return p, p * se


PathSource = Callable[[np.random.Generator, int], "PathBatch | np.ndarray"]


def max_stability_check(source, alpha, k: int, thresholds, lags, n: int, rng, z: float = 3.0,
                        joint: bool = False, test_id: str = "max_stability") -> TestReport:
    """Compare ``P(Z <= x)^k`` with ``P(Z <= k^(-1/alpha) x)`` cell by cell.

    ``source`` is a callable ``(rng, n)`` returning paths, or an already
    simulated :class:`PathBatch`. Both sides come from the same sample, so
    ``k = 1`` agrees exactly. Cells are ``(threshold, lag)`` marginal events;
    with ``joint`` also ``{Z_l <= x for every probe lag}``. Each cell passes
    when the difference is within ``z`` times the quadrature sum of the two
    binomial standard errors, both evaluated at the pooled value
    ``(p^k + q) / 2`` that the null hypothesis makes common.
    """
    alpha = check_alpha(alpha)
    if k < 1:
        raise ValueError("k must be >= 1")
    paths = source if isinstance(source, (PathBatch, np.ndarray)) else source(rng, n)
    t0, vals = path_array(paths)
    n_used = vals.shape[0]
    lags = [int(l) for l in lags]
    for l in lags:
        if not 0 <= l - t0 < vals.shape[1]:
            raise ValueError(f"lag {l} outside the simulated bounds")
    top = vals.max(axis=2)  # Z_l <= x componentwise iff the max component is <= x
    scale = k ** (-1.0 / alpha)
    events = [(f"lag={l}", top[:, [l - t0]]) for l in lags]
    if joint:
        events.append(("joint", top[:, [l - t0 for l in lags]]))
    cells, worst = [], 0.0
    for x in thresholds:
        for name, block in events:
            p = float(np.mean((block <= x).all(axis=1)))
            q = float(np.mean((block <= scale * x).all(axis=1)))
            lhs = p ** k
            # binomial variances at the pooled null value, so empty cells keep an honest SE
            q0 = 0.5 * (lhs + q)
            p0 = q0 ** (1.0 / k)
            se = math.sqrt((k * p0 ** (k - 1)) ** 2 * p0 * (1 - p0) / n_used + q0 * (1 - q0) / n_used)
            diff = lhs - q
            zs = diff / se if se > 0 else (0.0 if diff == 0 else math.inf)
            worst = max(worst, abs(zs))
            cells.append({"x": float(x), "cell": name, "lhs": lhs, "rhs": q, "se": se,
                          "z": zs, "passed": abs(zs) <= z})
    return TestReport(test_id, worst, "binomial", z, all(c["passed"] for c in cells),
                      z_score=worst, n_used=[n_used], notes=[f"k={k}"], details=cells)


def limit_measure_probe(model: SpectralModel, alpha, lower, n: int, rng, s: int = 0,
                        upper=None, mode: str = "all") -> tuple[float, float]:
    """Monte Carlo value of the limit measure of a box-type set and its standard error.

    ``lower[l, i]`` (``+inf`` or ``nan`` for unconstrained entries) gives the
    exceedance ``x^i_{s+l} > lower[l, i]``. With ``mode="all"`` the set is the
    intersection of the constraints, optionally capped by ``upper`` (``x <= upper``);
    with ``mode="any"`` it is their union. The radial integral is closed form.
    """
    alpha = check_alpha(alpha)
    _require_sc(model)
    lo = np.asarray(lower, dtype=float)
    if lo.ndim == 1:
        lo = np.repeat(lo[:, None], model.dim, axis=1)
    active = np.isfinite(lo)
    if mode not in ("all", "any"):
        raise ValueError("mode must be 'all' or 'any'")
    if not active.any():
        raise ValueError("set has no constraint")
    if np.any(lo[active] <= 0) and (mode == "any" or not np.any(lo[active] > 0)):
        raise ValueError("set is not bounded away from 0")
    hi = None
    if upper is not None:
        if mode != "all":
            raise ValueError("upper caps are only supported with mode='all'")
        hi = np.asarray(upper, dtype=float)
        if hi.ndim == 1:
            hi = np.repeat(hi[:, None], model.dim, axis=1)
    L = lo.shape[0]
    a, b = model.support
    vals = model.sample_batch(rng, n, a, b)
    norm = alpha_sums(vals, alpha, model.norm_spec) ** (1.0 / alpha)
    lags = np.arange(s, s + L)
    total = np.zeros(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        for z in range(a - (s + L - 1), b - s + 1):
            th = _gather(vals, a, lags, np.full(n, z)) / norm[:, None, None]
            # v * th > lo  <=>  v > lo / th
            need = np.where(active[None], lo[None] / th, np.nan)
            need = np.where(active[None] & (th == 0), np.where(lo[None] > 0, np.inf, 0.0), need)
            flat = need.reshape(n, -1)[:, active.ravel()]
            if mode == "all":
                v_lo = np.maximum(flat.max(axis=1), 0.0)
                mass = v_lo ** (-alpha)
                if hi is not None:
                    cap = np.where(np.isfinite(hi)[None], hi[None] / th, np.inf)
                    v_hi = cap.reshape(n, -1).min(axis=1)
                    mass = np.where(v_hi > v_lo, mass - v_hi ** (-alpha), 0.0)
            else:
                mass = flat.min(axis=1) ** (-alpha)
            total += np.nan_to_num(mass, nan=0.0, posinf=np.inf)
    if np.any(np.isinf(total)):
        raise ValueError("set is not bounded away from 0")
    return float(total.mean()), float(total.std(ddof=1) / math.sqrt(n))
