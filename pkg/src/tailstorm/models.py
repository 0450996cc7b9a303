"""Catalog of spectral tail process models.

Every model draws batches of windows as ``(n, n_lags, d)`` arrays and
declares the structural facts the simulators rely on: whether it claims the
time-change formula and summability, its exact-zero support, and envelopes
bounding the pattern values the Poisson constructions can produce.
"""

from __future__ import annotations

import math

import numpy as np

from .core import SUP, NormSpec, Outside, SpectralWindow, alpha_sums, check_alpha


class SpectralModel:
    """Base class. Subclasses implement :meth:`_draw`."""

    name = "model"
    deterministic = False
    outside = Outside.ZERO

    def __init__(self, dim: int, params: dict, claims_tcf: bool, claims_sc: bool,
                 norm_spec: NormSpec = SUP):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = int(dim)
        self.params = dict(params)
        self.claims_tcf = bool(claims_tcf)
        self.claims_sc = bool(claims_sc)
        self.norm_spec = norm_spec

    # lags outside [lo, hi] carry no mass (up to ``truncation_bound``); None if unbounded
    support: tuple[int, int] | None = None

    def _draw(self, rng, n: int, t_min: int, t_max: int):
        raise NotImplementedError

    def sample_batch(self, rng, n: int, t_min: int, t_max: int) -> np.ndarray:
        if t_min > 0 or t_max < 0:
            raise ValueError("window must contain lag 0")
        return self._draw(rng, int(n), int(t_min), int(t_max))[0]

    def sample(self, rng, t_min: int, t_max: int) -> SpectralWindow:
        vals, trunc = self._draw(rng, 1, int(t_min), int(t_max))
        return SpectralWindow(t_min, vals[0], outside=self.outside, normalized=True,
                              norm_spec=self.norm_spec, truncation=float(trunc[0]))

    def truncation_bound(self, t_min: int, t_max: int, alpha: float | None = None) -> float:
        """Bound on the alpha-mass a window on ``[t_min, t_max]`` can miss."""
        if self.support is None:
            return math.inf
        lo, hi = self.support
        return 0.0 if t_min <= lo and hi <= t_max else math.inf

    def reachable_components(self) -> np.ndarray:
        return np.ones(self.dim, dtype=bool)

    def m3_envelope(self, lo: int, hi: int, alpha: float) -> float:
        """Upper bound on ``Theta^i_s / ||Theta||_alpha`` over ``s`` in ``[lo, hi]``."""
        if self.support is None:
            raise ValueError(f"model {self.name!r} has no finite support")
        a, b = self.support
        return 1.0 if lo <= b and hi >= a else 0.0

    def q_envelope(self, lo: int, hi: int, j: int) -> float:
        """Upper bound on ``Theta^i_s`` over ``s`` in ``[lo, hi]`` for ``Theta`` in ``Q_j``."""
        raise NotImplementedError(f"model {self.name!r} declares no Q_j envelope")

    def spec_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}

    def __repr__(self):
        return f"{type(self).__name__}({self.params})"


class DeltaModel(SpectralModel):
    name = "delta"
    deterministic = True

    def __init__(self, dim: int = 1, norm_spec: NormSpec = SUP):
        super().__init__(dim, {"d": dim}, True, True, norm_spec)
        self.support = (0, 0)

    def _draw(self, rng, n, t_min, t_max):
        vals = np.zeros((n, t_max - t_min + 1, self.dim))
        vals[:, -t_min, 0] = 1.0
        return vals, np.zeros(n)

    def reachable_components(self):
        mask = np.zeros(self.dim, dtype=bool)
        mask[0] = True
        return mask

    def m3_envelope(self, lo, hi, alpha):
        return 1.0 if lo <= 0 <= hi else 0.0

    def q_envelope(self, lo, hi, j):
        return 1.0 if lo <= 0 <= hi else 0.0


class PeriodicModel(SpectralModel):
    """Theta_t = 1 on even t, 0 on odd t."""

    name = "periodic"
    deterministic = True
    outside = Outside.UNKNOWN

    def __init__(self):
        super().__init__(1, {}, True, False)
        self.support = None

    def _draw(self, rng, n, t_min, t_max):
        lags = np.arange(t_min, t_max + 1)
        row = (lags % 2 == 0).astype(float)
        return np.broadcast_to(row[None, :, None], (n, row.size, 1)).copy(), np.full(n, math.inf)

    def q_envelope(self, lo, hi, j):
        if j not in (0, -1):
            return 0.0
        has_even = hi >= lo and (hi - lo >= 1 or lo % 2 == 0)
        return 1.0 if has_even else 0.0


def mma_truncation_lag(phi: float, alpha: float) -> int:
    """Smallest lag beyond which the geometric alpha-mass falls below 1e-10."""
    return int(math.ceil(-10.0 * math.log(10.0) / (alpha * math.log(phi))))


class MMAModel(SpectralModel):
    """Tail chain of the max-moving average ``X_t = max_j phi^j Z_{t-j}``.

    ``Theta_t = phi^t`` for ``t >= -J`` and 0 before, with
    ``P(J = j)`` proportional to ``phi^(j alpha)`` on ``0..j_max``.
    """

    name = "mma"

    def __init__(self, phi: float, alpha: float):
        alpha = check_alpha(alpha)
        if not 0.0 < phi < 1.0:
            raise ValueError(f"phi must lie in (0, 1), got {phi}")
        super().__init__(1, {"phi": float(phi), "alpha": alpha}, True, True)
        self.phi = float(phi)
        self.alpha = alpha
        self.j_max = mma_truncation_lag(self.phi, alpha)
        self.support = (-self.j_max, self.j_max)
        self._r = self.phi ** alpha

    def j_probabilities(self) -> np.ndarray:
        w = self._r ** np.arange(self.j_max + 1)
        return w / w.sum()

    def draw_j(self, rng, n: int) -> np.ndarray:
        # inverse CDF of the geometric law truncated to 0..j_max
        tail = self._r ** (self.j_max + 1)
        u = 1.0 - rng.random(n) * (1.0 - tail)
        j = np.floor(np.log(u) / math.log(self._r)).astype(np.int64)
        return np.clip(j, 0, self.j_max)

    def _draw(self, rng, n, t_min, t_max):
        J = self.draw_j(rng, n)
        lags = np.arange(t_min, t_max + 1)
        vals = np.where(lags[None, :] >= -J[:, None], self.phi ** lags[None, :].astype(float), 0.0)
        a = self.alpha
        fwd = self._r ** (t_max + 1) / (1.0 - self._r)
        # mass of lags -J..t_min-1 when the backward start is clipped
        back = np.where(-J < t_min, (self._r ** -J.astype(float) - self._r ** t_min) / (1.0 - self._r), 0.0)
        return vals[:, :, None], fwd + back

    def truncation_bound(self, t_min, t_max, alpha=None):
        back = 0.0 if t_min <= -self.j_max else math.inf
        return back + self._r ** (t_max + 1) / (1.0 - self._r)

    def m3_envelope(self, lo, hi, alpha):
        if hi < -self.j_max:
            return 0.0
        # the stored alpha-norm stops at j_max, hence the renormalizing factor
        c = ((1.0 - self._r) / (1.0 - self._r ** (self.j_max + 1))) ** (1.0 / self.alpha)
        return c * self.phi ** max(lo, 0) * (1.0 + 1e-12)

    def q_envelope(self, lo, hi, j):
        if j > 0:
            return 0.0
        if j < 0:  # Q_{-k} forces J = 0
            return self.phi ** max(lo, 0) if hi >= 0 else 0.0
        return self.phi ** max(lo, -self.j_max) if hi >= -self.j_max else 0.0

    def backward_zero_prob(self, k: int) -> float:
        """P(Theta_{-k} = ... = Theta_{-1} = 0), i.e. P(J = 0) for k >= 1."""
        return 1.0 if k <= 0 else float(self.j_probabilities()[0])


class FiniteTableModel(SpectralModel):
    """Categorical law over a finite list of windows with exact-zero outside."""

    name = "finite_table"

    def __init__(self, entries, claims_tcf: bool = False, norm_spec: NormSpec = SUP, name: str | None = None):
        if not entries:
            raise ValueError("finite table needs at least one entry")
        probs, windows = [], []
        for p, w in entries:
            if not isinstance(w, SpectralWindow):
                w = SpectralWindow(w[0], np.asarray(w[1], dtype=float), norm_spec=norm_spec)
            if w.outside is not Outside.ZERO:
                raise ValueError("finite table windows must have zero outside")
            if abs(norm_spec(w.at(0)) - 1.0) > 1e-12:
                raise ValueError("every finite table window must have norm 1 at lag 0")
            if p < 0:
                raise ValueError("probabilities must be nonnegative")
            probs.append(float(p))
            windows.append(w)
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {sum(probs)}, not 1")
        dims = {w.dim for w in windows}
        if len(dims) != 1:
            raise ValueError("all windows must share one dimension")
        dim = dims.pop()
        lo = min(w.t_min for w in windows)
        hi = max(w.t_max for w in windows)
        table = np.stack([w.slice(lo, hi) for w in windows])
        params = {"entries": [[p, {"t_min": w.t_min, "values": w.values.tolist()}] for p, w in zip(probs, windows)]}
        super().__init__(dim, params, claims_tcf, True, norm_spec)
        if name:
            self.name = name
        self.probs = np.asarray(probs) / sum(probs)
        self.table = table
        self.table_lo = lo
        nz = np.nonzero(norm_spec(table).max(axis=0) > 0)[0]
        self.support = (lo + int(nz[0]), lo + int(nz[-1]))
        self.deterministic = len(windows) == 1

    def _draw(self, rng, n, t_min, t_max):
        if self.deterministic:
            idx = np.zeros(n, dtype=np.int64)
        else:
            idx = rng.choice(len(self.probs), size=n, p=self.probs)
        out = np.zeros((n, t_max - t_min + 1, self.dim))
        a, b = max(t_min, self.table_lo), min(t_max, self.table_lo + self.table.shape[1] - 1)
        if a <= b:
            out[:, a - t_min:b - t_min + 1] = self.table[idx, a - self.table_lo:b - self.table_lo + 1]
        lo, hi = self.support
        trunc = np.zeros(n) if t_min <= lo and hi <= t_max else np.full(n, math.inf)
        return out, trunc

    def _lag_slice(self, lo, hi):
        out = np.zeros((self.table.shape[0], hi - lo + 1, self.dim))
        a, b = max(lo, self.table_lo), min(hi, self.table_lo + self.table.shape[1] - 1)
        if a <= b:
            out[:, a - lo:b - lo + 1] = self.table[:, a - self.table_lo:b - self.table_lo + 1]
        return out

    def reachable_components(self):
        return self.table.max(axis=(0, 1)) > 0

    def m3_envelope(self, lo, hi, alpha):
        if hi < lo:
            return 0.0
        live = self.probs > 0
        norms = alpha_sums(self.table[live], alpha, self.norm_spec) ** (1.0 / alpha)
        part = self._lag_slice(lo, hi)[live].max(axis=(1, 2))
        return float((part / norms).max())

    def q_envelope(self, lo, hi, j):
        from .general import q_member_batch

        if hi < lo:
            return 0.0
        k = abs(j)
        cov_lo, cov_hi = min(lo, -2 * k + 1, 0), max(hi, 2 * k, 0)
        wide = self._lag_slice(cov_lo, cov_hi)
        member = q_member_batch(wide, cov_lo, j) & (self.probs > 0)
        if not member.any():
            return 0.0
        return float(wide[member][:, lo - cov_lo:hi - cov_lo + 1].max())


def model_delta(d: int = 1, norm_spec: NormSpec = SUP) -> DeltaModel:
    return DeltaModel(d, norm_spec)


def model_periodic() -> PeriodicModel:
    return PeriodicModel()


def model_mma(phi: float, alpha: float) -> MMAModel:
    return MMAModel(phi, alpha)


def model_broken() -> FiniteTableModel:
    """Theta_0 = 1, Theta_1 = 2: norm one at lag 0 but violates the time-change formula."""
    m = FiniteTableModel([(1.0, (0, [1.0, 2.0]))], claims_tcf=False, name="broken")
    m.params = {}
    return m


def model_finite_table(entries, claims_tcf: bool = False, norm_spec: NormSpec = SUP) -> FiniteTableModel:
    return FiniteTableModel(entries, claims_tcf=claims_tcf, norm_spec=norm_spec)


CATALOG = {
    "delta": lambda params: model_delta(int(params.get("d", 1))),
    "periodic": lambda params: model_periodic(),
    "mma": lambda params: model_mma(float(params["phi"]), float(params["alpha"])),
    "broken": lambda params: model_broken(),
    "finite_table": lambda params: model_finite_table(
        [(p, SpectralWindow(w["t_min"], np.asarray(w["values"], dtype=float))) for p, w in params["entries"]],
        claims_tcf=bool(params.get("claims_tcf", False))),
}


def build_model(name: str, params: dict | None = None) -> SpectralModel:
    if name not in CATALOG:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(CATALOG)}")
    try:
        return CATALOG[name](params or {})
    except KeyError as exc:
        raise ValueError(f"model {name!r} missing parameter {exc.args[0]!r}") from None
