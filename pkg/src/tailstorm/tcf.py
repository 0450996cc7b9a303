"""Monte Carlo checks of the time-change formula, the random-shift kernel and summability."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .core import SUP, NormSpec, Outside, SpectralWindow, alpha_sums, anchor_batch, check_alpha
from .models import SpectralModel
from .stats import TestReport, energy_test, ks_two_sample, normal_quantile


@dataclass(frozen=True)
class TestFunction:
    """Bounded map of ``(theta_s, ..., theta_t)`` vanishing whenever ``theta_0 = 0``.

    ``fn`` acts on arrays of shape ``(n, t - s + 1, d)`` and returns ``(n,)``.
    """

    __test__ = False

    id: str
    s: int
    t: int
    fn: Callable[[np.ndarray], np.ndarray]
    bound: float = 1.0

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            x = x[None]
        return self.fn(x)


def check_vanishing(f: TestFunction, d: int, rng, trials: int = 64) -> bool:
    """Probe ``f`` on random arguments with ``theta_0 = 0``."""
    L = f.t - f.s + 1
    x = rng.exponential(size=(trials, L, d)) * rng.choice([0.1, 1.0, 10.0, 1e3], size=(trials, 1, 1))
    x[:, -f.s, :] = 0.0
    return bool(np.all(f(x) == 0.0))


def default_f_family(s: int = -1, t: int = 1, d: int = 1, spec: NormSpec = SUP) -> list[TestFunction]:
    """Twelve bounded test functions on lags ``s..t``, each vanishing at ``theta_0 = 0``."""
    if not s <= 0 <= t:
        raise ValueError("need s <= 0 <= t")
    i0, last = -s, t - s

    def nrm(x, k):
        return spec(x[:, k])

    def g0(x):
        return np.minimum(nrm(x, i0), 1.0)

    def bump(center, width):
        return lambda x: np.maximum(0.0, 1.0 - np.abs(nrm(x, i0) - center) / width)

    members = [
        ("g0", g0),
        ("g0*clip_norm_t", lambda x: g0(x) * np.minimum(nrm(x, last), 1.0)),
        ("g0*clip_norm_s", lambda x: g0(x) * np.minimum(nrm(x, 0), 1.0)),
        ("g0*clip_coord_t^2", lambda x: g0(x) * np.minimum(x[:, last, 0], 1.0) ** 2),
        ("g0*clip_coord_s^2", lambda x: g0(x) * np.minimum(x[:, 0, 0], 1.0) ** 2),
        ("g0*halfspace(t>s)", lambda x: g0(x) * expit(8.0 * (x[:, last, 0] - x[:, 0, 0]))),
        ("g0*smooth(norm_t>0.5)", lambda x: g0(x) * expit(8.0 * (nrm(x, last) - 0.5))),
        ("g0*smooth(norm_s>0.5)", lambda x: g0(x) * expit(8.0 * (nrm(x, 0) - 0.5))),
        ("g0*smooth(norm_s>1.5)", lambda x: g0(x) * expit(8.0 * (nrm(x, 0) - 1.5))),
        ("g0*clip_total/3", lambda x: g0(x) * np.minimum(spec(x).sum(axis=1), 3.0) / 3.0),
        ("bump(norm_0~1)", bump(1.0, 0.5)),
        ("bump(norm_0~2)", bump(2.0, 1.0)),
    ]
    return [TestFunction(name, s, t, fn, 1.0) for name, fn in members]


def _cell(diff, se, z, bound_z=None):
    if se > 0:
        zs = diff / se
    else:
        zs = 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return zs, abs(zs) <= (z if bound_z is None else bound_z)


def _tcf_values(model: SpectralModel, fs, i: int, alpha: float, n: int, rng, spec: NormSpec):
    s, t = fs[0].s, fs[0].t
    lo, hi = min(s - i, s, i, 0), max(t - i, t, i, 0)
    rng_l, rng_r = rng.spawn(2)
    A = model.sample_batch(rng_l, n, lo, hi)
    B = model.sample_batch(rng_r, n, lo, hi)
    shifted = A[:, s - i - lo:t - i - lo + 1]
    ni = spec(B[:, i - lo])
    pos = ni > 0
    scaled = np.zeros_like(B[:, s - lo:t - lo + 1])
    scaled[pos] = B[pos, s - lo:t - lo + 1] / ni[pos, None, None]
    w = np.where(pos, ni, 0.0) ** alpha
    out = []
    for f in fs:
        lhs = f(shifted)
        rhs = np.where(pos, f(scaled) * w, 0.0)
        out.append((f, lhs, rhs))
    return out, w


def _residual_dict(f, i, lhs, rhs, n):
    diff = float(lhs.mean() - rhs.mean())
    se = float(math.sqrt(lhs.var(ddof=1) / n + rhs.var(ddof=1) / n))
    return {"f": f.id, "i": i, "lhs": float(lhs.mean()), "rhs": float(rhs.mean()), "diff": diff, "se": se}


def tcf_residual(model: SpectralModel, f: TestFunction, i: int, alpha, n: int, rng,
                 z: float = 3.0, spec: NormSpec = SUP) -> TestReport:
    """Compare both sides of the time-change formula for one ``f`` and shift ``i``."""
    alpha = check_alpha(alpha)
    if n < 100:
        raise ValueError("tcf_residual needs n >= 100")
    if not check_vanishing(f, model.dim, np.random.default_rng(0)):
        raise ValueError(f"test function {f.id!r} does not vanish at theta_0 = 0")
    (cell,), w = _tcf_values(model, [f], i, alpha, n, rng, spec)
    res = _residual_dict(*cell[:1], i, cell[1], cell[2], n)
    zs, ok = _cell(res["diff"], res["se"], z)
    notes = _weight_notes(w, n)
    return TestReport(f"tcf[{f.id}, i={i}]", res["diff"], "normal", z, ok, z_score=zs,
                      n_used=[n, n], notes=notes, details=[res])


def _weight_notes(w, n):
    notes = [f"max weight {float(w.max()):.6g}"]
    m = w.mean()
    if m > 0:
        rel = w.std(ddof=1) / (m * math.sqrt(n))
        if rel > 0.05:
            notes.append(f"weight mean has relative SE {rel:.3g}; residual SE may be unstable")
    return notes


def tcf_battery(model: SpectralModel, alpha, n: int, rng, s: int = -1, t: int = 1,
                shifts=(-3, -2, -1, 1, 2, 3), z: float = 3.0, family=None,
                spec: NormSpec = SUP) -> TestReport:
    """Run every (f, i) cell; the verdict uses a Bonferroni-adjusted z.

    ``z`` is the per-cell nominal level; with ``m`` cells each two-sided test
    is run at level ``2 (1 - Phi(z)) / m``.
    """
    alpha = check_alpha(alpha)
    if n < 100:
        raise ValueError("tcf_battery needs n >= 100")
    fs = family or default_f_family(s, t, model.dim, spec)
    probe = np.random.default_rng(0)
    for f in fs:
        if not check_vanishing(f, model.dim, probe):
            raise ValueError(f"test function {f.id!r} does not vanish at theta_0 = 0")
    m = len(fs) * len(shifts)
    level = 2.0 * (1.0 - 0.5 * math.erfc(-z / math.sqrt(2.0)))
    z_adj = normal_quantile(1.0 - level / (2.0 * m))
    cells, notes, worst = [], [], 0.0
    for i, sub in zip(shifts, rng.spawn(len(shifts))):
        vals, w = _tcf_values(model, fs, i, alpha, n, sub, spec)
        notes += [f"i={i}: {x}" for x in _weight_notes(w, n)]
        for f, lhs, rhs in vals:
            res = _residual_dict(f, i, lhs, rhs, n)
            res["z"], res["passed"] = _cell(res["diff"], res["se"], z, z_adj)
            worst = max(worst, abs(res["z"]))
            cells.append(res)
    notes.append(f"finite battery of {len(fs)} functions x {len(shifts)} shifts; not exhaustive")
    passed = all(c["passed"] for c in cells)
    return TestReport("tcf_battery", worst, "normal", z_adj, passed, z_score=worst,
                      n_used=[n, n], notes=notes, details=cells)


def _shift_weights(w: SpectralWindow, alpha, spec):
    if w.outside is not Outside.ZERO:
        raise ValueError("random shift needs a window with zero outside")
    weights = spec(w.values) ** alpha
    total = weights.sum()
    if total == 0:
        raise ValueError("random shift of a window with zero alpha-norm")
    return weights / total


def random_shift(w: SpectralWindow, alpha, rng, spec: NormSpec | None = None) -> SpectralWindow:
    """Draw ``K`` with ``P(K = k)`` proportional to ``||Theta_k||^alpha`` and return
    ``Theta_{t+K} / ||Theta_K||`` as a window re-indexed around the new lag 0."""
    alpha = check_alpha(alpha)
    spec = spec or w.norm_spec
    p = _shift_weights(w, alpha, spec)
    idx = int(rng.choice(p.size, p=p))
    k = w.t_min + idx
    scale = spec(w.values[idx])
    return SpectralWindow(w.t_min - k, w.values / scale, normalized=True, norm_spec=spec)


def shift_index_probabilities(w: SpectralWindow, alpha, spec: NormSpec | None = None) -> dict[int, float]:
    spec = spec or w.norm_spec
    p = _shift_weights(w, check_alpha(alpha), spec)
    return {int(t): float(q) for t, q in zip(w.lags, p) if q > 0}


def random_shift_lags(values: np.ndarray, t_min: int, alpha: float, lo: int, hi: int, rng,
                      spec: NormSpec = SUP):
    """Batched random shift evaluated on lags ``lo..hi`` (zero outside the windows).

    Returns ``(shifted, k)`` with ``shifted`` of shape ``(n, hi - lo + 1, d)``.
    """
    n, W, d = values.shape
    norms = spec(values)
    weights = norms ** alpha
    cum = np.cumsum(weights, axis=1)
    total = cum[:, -1]
    if np.any(total == 0):
        raise ValueError("random shift of a window with zero alpha-norm")
    u = rng.random(n) * total
    idx = np.minimum((cum <= u[:, None]).sum(axis=1), W - 1)
    # guard against landing on a zero-weight lag through rounding at the top end
    while np.any(weights[np.arange(n), idx] == 0):
        bad = weights[np.arange(n), idx] == 0
        idx[bad] -= 1
    scale = norms[np.arange(n), idx]
    lags = np.arange(lo, hi + 1)
    src = idx[:, None] + lags[None, :]
    ok = (src >= 0) & (src < W)
    out = np.zeros((n, lags.size, d))
    rows = np.broadcast_to(np.arange(n)[:, None], src.shape)
    out[ok] = values[rows[ok], src[ok]]
    out /= scale[:, None, None]
    return out, t_min + idx


def _log_norms(x, spec):
    return np.log1p(spec(x))


def rs_invariance_test(model: SpectralModel, alpha, s: int, t: int, n: int, rng,
                       p_threshold: float = 0.01, permutations: int = 999,
                       energy_max_n: int | None = 2000, spec: NormSpec = SUP) -> TestReport:
    """Two-sample comparison of ``Theta`` and its random shift on lags ``s..t``.

    Per-lag KS on the norms plus an energy test on the joint log1p-norm
    vector; the verdict is Bonferroni-combined over all tests.
    """
    alpha = check_alpha(alpha)
    if not model.claims_sc or model.support is None:
        raise ValueError(f"model {model.name!r} does not claim summability; random shift undefined")
    lo, hi = model.support
    wlo, whi = min(lo, s, 0), max(hi, t, 0)
    r_a, r_b, r_e = rng.spawn(3)
    direct = model.sample_batch(r_a, n, wlo, whi)[:, s - wlo:t - wlo + 1]
    base = model.sample_batch(r_b, n, wlo, whi)
    shifted, _ = random_shift_lags(base, wlo, alpha, s, t, r_e, spec)
    a, b = _log_norms(direct, spec), _log_norms(shifted, spec)
    reports = []
    for k, lag in enumerate(range(s, t + 1)):
        reports.append(ks_two_sample(a[:, k], b[:, k], p_threshold, test_id=f"ks[lag={lag}]"))
    reports.append(energy_test(a, b, permutations, r_e, p_threshold, max_n=energy_max_n,
                               test_id=f"energy[lags={s}..{t}]"))
    m = len(reports)
    p_adj = min(1.0, m * min(r.p_value for r in reports))
    return TestReport("rs_invariance", reports[-1].statistic, "permutation", p_threshold,
                      p_adj > p_threshold, p_value=p_adj, n_used=[n, n],
                      notes=[f"Bonferroni over {m} tests"], details=[r.to_dict() for r in reports])


def sc_diagnostic(model: SpectralModel, alpha, horizon: int, n: int, rng, tail_tol: float = 1e-3,
                  max_tail_fraction: float = 0.01, min_inside_fraction: float = 0.99,
                  spec: NormSpec = SUP) -> TestReport:
    """Finite-horizon evidence for or against summability.

    Three diagnostics on windows ``[-L, L]``: growth of the alpha-sum between
    horizons ``L/2`` and ``L``; the largest norm on ``L/2 <= |t| <= L``; and
    the fraction of anchors attained strictly inside ``[-L/2, L/2]``.
    """
    alpha = check_alpha(alpha)
    L = int(horizon)
    if L < 2:
        raise ValueError("horizon must be >= 2")
    h = L // 2
    vals = model.sample_batch(rng, n, -L, L)
    norms = spec(vals)
    lags = np.arange(-L, L + 1)
    terms = norms ** alpha
    sum_half = terms[:, np.abs(lags) <= h].sum(axis=1)
    sum_full = terms.sum(axis=1)
    growth = float((sum_full.mean() - sum_half.mean()) / sum_half.mean())
    fwd = norms[:, lags >= h].max(axis=1)
    bwd = norms[:, lags <= -h].max(axis=1)
    tail = np.maximum(fwd, bwd)
    frac_tail = float(np.mean(tail > tail_tol))
    _, t_star, valid = anchor_batch(vals, -L, spec)
    inside = valid & (np.abs(t_star) < h)
    frac_inside = float(inside.mean())
    thresholds = [2.0 ** k for k in range(1, 8)]
    exceed = {f"{c:g}": float(np.mean(sum_full > c)) for c in thresholds}
    consistent = frac_tail <= max_tail_fraction and frac_inside >= min_inside_fraction
    notes = [
        f"forward tail max {float(fwd.max()):.6g}",
        f"backward tail max {float(bwd.max()):.6g}",
        f"alpha-sum growth from L/2 to L: {growth:.6g}",
        f"anchors strictly inside [-L/2, L/2]: {frac_inside:.6g}",
    ]
    if model.outside is Outside.UNKNOWN:
        notes.append("model windows have unknown outside; claims restricted to in-window lags")
    details = [{
        "tail_max": float(tail.max()),
        "forward_tail_max": float(fwd.max()),
        "backward_tail_max": float(bwd.max()),
        "tail_fraction": frac_tail,
        "inside_fraction": frac_inside,
        "alpha_sum_growth": growth,
        "alpha_sum_exceedance": exceed,
        "mean_alpha_sum": float(sum_full.mean()),
    }]
    return TestReport("sc_diagnostic", frac_tail, "diagnostic", max_tail_fraction, consistent,
                      n_used=[n], notes=notes, details=details)
