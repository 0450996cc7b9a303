"""Two-sample and goodness-of-fit machinery shared by every check."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special, stats

REPORT_SCHEMA_VERSION = 1


@dataclass
class TestReport:
    """Outcome of one statistical check.

    ``reference`` names the null law used: ``analytic``, ``permutation``,
    ``binomial``, ``normal`` or ``exact``. ``details`` holds per-cell
    sub-results for composite checks.
    """

    __test__ = False  # not a pytest class

    test_id: str
    statistic: float
    reference: str
    threshold: float
    passed: bool
    p_value: float | None = None
    z_score: float | None = None
    n_used: list[int] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    details: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = REPORT_SCHEMA_VERSION
        return jsonable(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        if self.p_value is not None:
            tail = f"p={self.p_value:.4g}"
        elif self.z_score is not None:
            tail = f"max|z|={self.z_score:.4g}"
        else:
            tail = ""
        return f"[{verdict}] {self.test_id}: stat={self.statistic:.6g} {tail} (threshold {self.threshold:g})"


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    return obj


def bonferroni(level: float, m: int) -> float:
    return level / max(int(m), 1)


def normal_quantile(q: float) -> float:
    return float(special.ndtri(q))


def frechet_cdf(x, alpha: float, scale: float = 1.0):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > 0, np.exp(-(np.maximum(x, 0) / scale) ** -alpha), 0.0)


def pareto_cdf(y, alpha: float):
    y = np.asarray(y, dtype=float)
    return np.where(y > 1, 1.0 - np.maximum(y, 1.0) ** -alpha, 0.0)


def ks_one_sample(samples, cdf, p_threshold: float = 0.01, test_id: str = "ks_one_sample") -> TestReport:
    """Kolmogorov-Smirnov against an analytic CDF with the asymptotic p-value."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size < 20:
        raise ValueError(f"need at least 20 samples, got {x.size}")
    probe = np.asarray(cdf(x), dtype=float)
    if np.any(np.diff(probe) < 0) or np.any((probe < 0) | (probe > 1)):
        raise ValueError("cdf is not a monotone map into [0, 1] on the sample range")
    res = stats.kstest(x, cdf, method="asymp")
    p = float(res.pvalue)
    return TestReport(test_id, float(res.statistic), "analytic", p_threshold,
                      p > p_threshold, p_value=p, n_used=[int(x.size)])


def ks_two_sample(a, b, p_threshold: float = 0.01, test_id: str = "ks_two_sample") -> TestReport:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if min(a.size, b.size) < 20:
        raise ValueError("need at least 20 samples per group")
    res = stats.ks_2samp(a, b, method="asymp")
    p = float(res.pvalue)
    return TestReport(test_id, float(res.statistic), "analytic", p_threshold,
                      p > p_threshold, p_value=p, n_used=[int(a.size), int(b.size)])


def _pairwise(x: np.ndarray) -> np.ndarray:
    sq = (x * x).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a.reshape(a.shape[0], -1) if a.ndim != 2 else a


def _subsample(x: np.ndarray, max_n: int | None, rng) -> np.ndarray:
    if max_n is None or x.shape[0] <= max_n:
        return x
    return x[np.sort(rng.choice(x.shape[0], size=max_n, replace=False))]


def energy_test(a, b, permutations: int = 999, rng=None, p_threshold: float = 0.01,
                max_n: int | None = 2000, test_id: str = "energy") -> TestReport:
    """Energy-distance two-sample test with a permutation p-value.

    Samples larger than ``max_n`` are subsampled first; the pooled
    distance matrix is O(N^2) and every permutation costs a matrix product.
    """
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if permutations < 199:
        raise ValueError("energy test needs at least 199 permutations")
    rng = np.random.default_rng() if rng is None else rng
    n_full, m_full = a.shape[0], b.shape[0]
    a, b = _subsample(a, max_n, rng), _subsample(b, max_n, rng)
    n, m = a.shape[0], b.shape[0]
    pooled = np.vstack([a, b])
    N = n + m
    dist = _pairwise(pooled)
    row = dist.sum(axis=1)
    total = row.sum()

    labels = np.zeros((N, permutations + 1))
    labels[:n, 0] = 1.0
    base = np.arange(N) < n
    for k in range(permutations):
        labels[:, k + 1] = rng.permutation(base)
    s_aa = np.einsum("ij,ij->j", labels, dist @ labels)
    r_a = row @ labels
    s_ab = r_a - s_aa
    s_bb = total - 2.0 * r_a + s_aa
    e = 2.0 * s_ab / (n * m) - s_aa / n**2 - s_bb / m**2
    e *= n * m / N
    obs = e[0]
    tol = 1e-12 * max(1.0, abs(obs))
    p = (1 + int(np.sum(e[1:] >= obs - tol))) / (permutations + 1)
    notes = []
    if (n, m) != (n_full, m_full):
        notes.append(f"subsampled from ({n_full}, {m_full}) to ({n}, {m})")
    return TestReport(test_id, float(obs), "permutation", p_threshold, p > p_threshold,
                      p_value=p, n_used=[n, m], notes=notes)


def _centered(d: np.ndarray) -> np.ndarray:
    return d - d.mean(axis=0)[None, :] - d.mean(axis=1)[:, None] + d.mean()


def distance_correlation_test(x, y, permutations: int = 999, rng=None, p_threshold: float = 0.01,
                              max_n: int | None = 1000, test_id: str = "dcor") -> TestReport:
    """Permutation test of independence based on distance covariance."""
    x, y = _as_matrix(x), _as_matrix(y)
    if x.shape[0] != y.shape[0]:
        raise ValueError("x and y must have the same number of rows")
    rng = np.random.default_rng() if rng is None else rng
    n_full = x.shape[0]
    if max_n is not None and n_full > max_n:
        keep = np.sort(rng.choice(n_full, size=max_n, replace=False))
        x, y = x[keep], y[keep]
    n = x.shape[0]
    A = _centered(_pairwise(x))
    B = _centered(_pairwise(y))
    dcov = (A * B).mean()
    va, vb = (A * A).mean(), (B * B).mean()
    if va == 0.0 or vb == 0.0:
        # a constant variable is independent of anything
        return TestReport(test_id, 0.0, "exact", p_threshold, True, p_value=1.0, n_used=[n],
                          notes=["degenerate: one variable is constant"])
    stat = dcov / math.sqrt(va * vb)
    exceed = 0
    tol = 1e-12 * max(1.0, abs(dcov))
    for _ in range(permutations):
        p_idx = rng.permutation(n)
        if (A * B[np.ix_(p_idx, p_idx)]).mean() >= dcov - tol:
            exceed += 1
    p = (1 + exceed) / (permutations + 1)
    return TestReport(test_id, float(stat), "permutation", p_threshold, p > p_threshold,
                      p_value=p, n_used=[n])


def binomial_band(p_hat: float, n: int, z: float = 3.0) -> tuple[float, float]:
    if not 0.0 <= p_hat <= 1.0 or n < 1:
        raise ValueError("need 0 <= p_hat <= 1 and n >= 1")
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / n)
    return max(0.0, p_hat - half), min(1.0, p_hat + half)


def binomial_se(p_hat, n):
    return np.sqrt(np.asarray(p_hat) * (1.0 - np.asarray(p_hat)) / n)
