"""Estimating spectral and tail processes from paths, and cluster anchoring/resampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SUP, NormSpec, Outside, SpectralWindow, anchor, check_alpha
from .poisson import path_array
from .stats import (
    TestReport, distance_correlation_test, energy_test, frechet_cdf, ks_one_sample, pareto_cdf,
)
from .tcf import random_shift, random_shift_lags


class TooFewExceedances(ValueError):
    def __init__(self, achieved: int, required: int):
        super().__init__(f"only {achieved} exceedances, at least {required} required")
        self.achieved = achieved
        self.required = required


@dataclass
class ExceedanceSet:
    """Windows around a fixed time ``t0`` of every path whose norm there exceeds ``threshold``.

    ``spectral[m, l]`` is ``X_{t0+s+l} / ||X_{t0}||`` and ``tail[m, l]`` is
    ``X_{t0+s+l} / threshold``; ``radius`` is ``||X_{t0}|| / threshold``.
    """

    spectral: np.ndarray
    tail: np.ndarray
    radius: np.ndarray
    ids: np.ndarray
    threshold: float
    q: float
    t0: int
    s: int
    t: int
    n_paths: int

    @property
    def count(self) -> int:
        return int(self.ids.size)

    def lag(self, l: int, form: str = "spectral") -> np.ndarray:
        arr = self.spectral if form == "spectral" else self.tail
        return arr[:, l - self.s]

    def to_records(self) -> list[dict]:
        return [{"path": int(i), "t0": self.t0, "threshold": self.threshold, "t_min": self.s,
                 "values": w.tolist()} for i, w in zip(self.ids, self.spectral)]


def _default_t0(t_min: int, t_max: int, s: int, t: int) -> int:
    lo, hi = t_min - s, t_max - t
    if lo > hi:
        raise ValueError(f"probe lags [{s}, {t}] do not fit in path bounds [{t_min}, {t_max}]")
    return (lo + hi) // 2


def empirical_spectral_tail(paths, q: float, s: int, t: int, t0: int | None = None,
                            spec: NormSpec = SUP, min_exceedances: int = 200) -> ExceedanceSet:
    """Condition every path on ``||X_{t0}||`` exceeding its empirical ``q``-quantile across paths."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if not s <= 0 <= t:
        raise ValueError("probe lags must satisfy s <= 0 <= t")
    t_min, vals = path_array(paths)
    t_max = t_min + vals.shape[1] - 1
    t0 = _default_t0(t_min, t_max, s, t) if t0 is None else int(t0)
    if t0 + s < t_min or t0 + t > t_max:
        raise ValueError(f"window [{t0 + s}, {t0 + t}] outside path bounds [{t_min}, {t_max}]")
    norms = spec(vals[:, t0 - t_min])
    u = float(np.quantile(norms, q))
    ids = np.nonzero(norms > u)[0]
    if ids.size < min_exceedances:
        raise TooFewExceedances(int(ids.size), min_exceedances)
    win = vals[ids, t0 + s - t_min:t0 + t - t_min + 1]
    r = norms[ids]
    return ExceedanceSet(win / r[:, None, None], win / u, r / u, ids, u, q, t0, s, t, vals.shape[0])


def tail_factorization_check(paths, q: float, s: int, t: int, alpha, rng, p_threshold: float = 0.01,
                             permutations: int = 999, spec: NormSpec = SUP, t0: int | None = None,
                             min_exceedances: int = 200, dcor_max_n: int | None = 1000) -> TestReport:
    """Pareto radius and its independence from the spectral window.

    Passes when the KS test of ``||Y_0||`` against ``1 - y^(-alpha)`` and the
    distance-correlation permutation test both exceed ``p_threshold``.
    """
    alpha = check_alpha(alpha)
    ex = empirical_spectral_tail(paths, q, s, t, t0, spec, min_exceedances)
    ks = ks_one_sample(ex.radius, lambda y: pareto_cdf(y, alpha), p_threshold, test_id="ks[pareto radius]")
    dc = distance_correlation_test(np.log(ex.radius), np.log1p(ex.spectral.reshape(ex.count, -1)),
                                   permutations, rng, p_threshold, max_n=dcor_max_n,
                                   test_id="dcor[radius, spectral window]")
    notes = [f"{ex.count} exceedances of the {q} quantile {ex.threshold:.6g} at t0={ex.t0}"]
    notes += dc.notes
    return TestReport("tail_factorization", ks.statistic, "analytic", p_threshold,
                      ks.passed and dc.passed, p_value=min(ks.p_value, dc.p_value),
                      n_used=[ex.count], notes=notes, details=[ks.to_dict(), dc.to_dict()])


def block_maxima(raw, n_copies: int, replicates: int, b_n: float, rng, max_windows: int = 200_000) -> np.ndarray:
    """``max`` of ``n_copies`` i.i.d. windows from ``raw(rng, m)``, divided by ``b_n``, per replicate."""
    per = max(1, max_windows // n_copies)
    out = []
    for start in range(0, replicates, per):
        m = min(per, replicates - start)
        w = np.asarray(raw(rng, m * n_copies), dtype=float)
        if w.ndim == 2:
            w = w[:, :, None]
        out.append(w.reshape(m, n_copies, *w.shape[1:]).max(axis=1) / b_n)
    return np.concatenate(out)


def attractor_check(raw, alpha, n_copies: int, b_n: float, replicates: int, reference, rng,
                    p_threshold: float = 0.01, permutations: int = 999,
                    energy_max_n: int | None = 2000) -> TestReport:
    """Scaled componentwise maxima of i.i.d. windows against the max-stable reference.

    ``raw(rng, m)`` returns ``m`` i.i.d. windows ``(m, L[, d])`` of the
    underlying series. Each lag and component of the scaled maxima is
    KS-tested against standard Frechet(alpha) and the joint log1p vector is
    energy-tested against ``reference`` paths on the same lags.
    """
    alpha = check_alpha(alpha)
    _, ref = path_array(reference)
    M = block_maxima(raw, n_copies, replicates, b_n, rng)
    if M.shape[1:] != ref.shape[1:]:
        raise ValueError(f"raw windows {M.shape[1:]} and reference paths {ref.shape[1:]} differ in shape")
    reports = []
    for l in range(M.shape[1]):
        for i in range(M.shape[2]):
            reports.append(ks_one_sample(M[:, l, i], lambda x: frechet_cdf(x, alpha), p_threshold,
                                         test_id=f"ks[frechet, lag {l}, component {i}]"))
    en = energy_test(np.log1p(M.reshape(M.shape[0], -1)), np.log1p(ref.reshape(ref.shape[0], -1)),
                     permutations, rng, p_threshold, max_n=energy_max_n, test_id="energy[maxima vs reference]")
    reports.append(en)
    return TestReport("attractor", en.statistic, "permutation", p_threshold,
                      all(r.passed for r in reports), p_value=min(r.p_value for r in reports),
                      n_used=[replicates, ref.shape[0]], notes=[f"n_copies={n_copies}, b_n={b_n:g}"] + en.notes,
                      details=[r.to_dict() for r in reports])


@dataclass(frozen=True)
class AnchoredPattern:
    """Window ``Theta_{T*+t} / ||Theta_{T*}||``: sup norm 1, first attained at lag 0."""

    window: SpectralWindow
    t_star: int
    theta_star: float


def anchor_pattern(w: SpectralWindow, spec: NormSpec | None = None) -> AnchoredPattern:
    spec = spec or w.norm_spec
    if w.outside is not Outside.ZERO:
        raise ValueError("cannot anchor a window with unknown outside: the maximum may lie beyond it")
    a = anchor(w, spec)
    if a.t_star is None:
        raise ValueError("cannot anchor an all-zero window")
    pat = SpectralWindow(w.t_min - a.t_star, w.values / a.theta_star, normalized=True, norm_spec=spec)
    return AnchoredPattern(pat, a.t_star, a.theta_star)


def cluster_conditional_sample(p: AnchoredPattern, alpha, rng) -> SpectralWindow:
    """One draw of the spectral window given its anchored pattern."""
    return random_shift(p.window, alpha, rng)


def anchor_batch_values(values: np.ndarray, t_min: int, spec: NormSpec = SUP):
    """Batched anchoring: scaled values and the anchor lags (windows keep their array layout)."""
    norms = spec(values)
    top = norms.max(axis=1)
    if np.any(top == 0):
        raise ValueError("cannot anchor an all-zero window")
    idx = np.argmax(norms == top[:, None], axis=1)
    return values / top[:, None, None], t_min + idx


def round_trip_sample(values: np.ndarray, t_min: int, alpha, lo: int, hi: int, rng,
                      spec: NormSpec = SUP) -> np.ndarray:
    """Anchor each window, resample it from its pattern and return lags ``lo..hi``."""
    alpha = check_alpha(alpha)
    pats, _ = anchor_batch_values(values, t_min, spec)
    out, _ = random_shift_lags(pats, t_min, alpha, lo, hi, rng, spec)
    return out
