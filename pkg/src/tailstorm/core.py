"""Windows, norms and anchoring functionals for spectral sequences.

A spectral window stores a finite stretch ``Theta_{t_min}, ..., Theta_{t_max}``
of a d-dimensional nonnegative sequence as a dense ``(n_lags, d)`` array.
What lies outside the window is either known to be zero or unknown.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class CoverageError(ValueError):
    """Raised when a window does not cover the lags an operation inspects."""


class Outside(str, enum.Enum):
    ZERO = "zero"
    UNKNOWN = "unknown"


def check_alpha(alpha) -> float:
    """Validate a tail index and return it as a float."""
    a = float(alpha)
    if not math.isfinite(a) or a <= 0:
        raise ValueError(f"tail index must be a positive finite number, got {alpha!r}")
    return a


@dataclass(frozen=True)
class NormSpec:
    """A norm on R^d: ``sup``, ``l1`` or ``lp`` with ``p >= 1``."""

    kind: str = "sup"
    p: float | None = None

    def __post_init__(self):
        if self.kind not in ("sup", "l1", "lp"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == "lp":
            if self.p is None or not self.p >= 1:
                raise ValueError("lp norm requires p >= 1")
        elif self.p is not None:
            raise ValueError(f"{self.kind} norm takes no p")

    def __call__(self, v, axis=-1):
        v = np.abs(np.asarray(v, dtype=float))
        if self.kind == "sup":
            return v.max(axis=axis)
        if self.kind == "l1":
            return v.sum(axis=axis)
        if self.p == 2:
            return np.sqrt((v * v).sum(axis=axis))
        return (v ** self.p).sum(axis=axis) ** (1.0 / self.p)

    def to_string(self) -> str:
        return f"lp:{self.p:g}" if self.kind == "lp" else self.kind

    @classmethod
    def from_string(cls, s: str) -> "NormSpec":
        s = s.strip().lower()
        if s.startswith("lp:"):
            return cls("lp", float(s[3:]))
        return cls(s)


SUP = NormSpec()


def norm(v, spec: NormSpec = SUP) -> float:
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("norm of a non-finite vector")
    return float(spec(v))


@dataclass(frozen=True, eq=False)
class SpectralWindow:
    """Finite stretch of a nonnegative d-dimensional sequence.

    ``values[k]`` holds the vector at lag ``t_min + k``. ``truncation`` records
    the alpha-mass a sampler clipped away when it produced the window.
    """

    t_min: int
    values: np.ndarray
    outside: Outside = Outside.ZERO
    normalized: bool = False
    norm_spec: NormSpec = SUP
    truncation: float = 0.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[1] < 1:
            raise ValueError("window values must have shape (n_lags, d)")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "t_min", int(self.t_min))
        object.__setattr__(self, "outside", Outside(self.outside))
        if not self.t_min <= 0 <= self.t_max:
            raise ValueError(f"window [{self.t_min}, {self.t_max}] must contain lag 0")
        if not np.all(np.isfinite(vals)):
            raise ValueError("window values must be finite")
        if np.any(vals < 0):
            raise ValueError("window values must be nonnegative")
        if self.normalized and abs(self.norm_spec(vals[-self.t_min]) - 1.0) > 1e-12:
            raise ValueError("normalized window must have norm 1 at lag 0")

    @property
    def t_max(self) -> int:
        return self.t_min + self.values.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def lags(self) -> np.ndarray:
        return np.arange(self.t_min, self.t_max + 1)

    def covers(self, lo: int, hi: int) -> bool:
        return self.outside is Outside.ZERO or (self.t_min <= lo and hi <= self.t_max)

    def at(self, t: int) -> np.ndarray:
        if self.t_min <= t <= self.t_max:
            return self.values[t - self.t_min]
        if self.outside is Outside.ZERO:
            return np.zeros(self.dim)
        raise CoverageError(f"lag {t} outside window [{self.t_min}, {self.t_max}]")

    def slice(self, lo: int, hi: int) -> np.ndarray:
        """Values on lags ``lo..hi``, zero padded where the outside is zero."""
        if not self.covers(lo, hi):
            raise CoverageError(f"lags [{lo}, {hi}] not covered by [{self.t_min}, {self.t_max}]")
        out = np.zeros((hi - lo + 1, self.dim))
        a, b = max(lo, self.t_min), min(hi, self.t_max)
        if a <= b:
            out[a - lo:b - lo + 1] = self.values[a - self.t_min:b - self.t_min + 1]
        return out

    def norms(self) -> np.ndarray:
        return self.norm_spec(self.values)

    def __eq__(self, other):
        if not isinstance(other, SpectralWindow):
            return NotImplemented
        return (self.t_min == other.t_min and self.outside == other.outside
                and self.values.shape == other.values.shape
                and bool(np.array_equal(self.values, other.values)))

    def to_dict(self) -> dict:
        return {
            "t_min": self.t_min,
            "values": self.values.tolist(),
            "outside": self.outside.value,
            "norm": self.norm_spec.to_string(),
            "truncation": self.truncation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralWindow":
        return cls(
            t_min=d["t_min"],
            values=np.asarray(d["values"], dtype=float),
            outside=Outside(d.get("outside", "zero")),
            norm_spec=NormSpec.from_string(d.get("norm", "sup")),
            truncation=float(d.get("truncation", 0.0)),
        )


@dataclass(frozen=True)
class Anchor:
    """Sup of the window norms and the first lag attaining it.

    ``t_star`` is None when the anchor is not an integer (all-zero window).
    ``not_in_z_risk`` is set when the window cannot exclude a larger norm
    outside its coverage.
    """

    theta_star: float
    t_star: int | None
    not_in_z_risk: bool = False


def alpha_norm(w: SpectralWindow, alpha, spec: NormSpec | None = None) -> tuple[float, bool]:
    """``(sum_t ||Theta_t||^alpha)^(1/alpha)`` over the window.

    The flag is True when the outside is unknown, in which case the value is
    only a lower bound.
    """
    alpha = check_alpha(alpha)
    spec = spec or w.norm_spec
    terms = spec(w.values) ** alpha
    total = math.fsum(sorted(terms.tolist(), reverse=True))
    return total ** (1.0 / alpha), w.outside is Outside.UNKNOWN


def alpha_sums(values: np.ndarray, alpha: float, spec: NormSpec = SUP) -> np.ndarray:
    """Batched ``sum_t ||Theta_t||^alpha`` over axis -2 of ``(..., n_lags, d)``."""
    terms = spec(values) ** alpha
    return np.sort(terms, axis=-1)[..., ::-1].sum(axis=-1)


def anchor(w: SpectralWindow, spec: NormSpec | None = None) -> Anchor:
    spec = spec or w.norm_spec
    norms = spec(w.values)
    risk = w.outside is Outside.UNKNOWN
    top = float(norms.max())
    if top == 0.0:
        return Anchor(0.0, None, risk)
    return Anchor(top, int(w.t_min + np.argmax(norms == top)), risk)


def anchor_batch(values: np.ndarray, t_min: int, spec: NormSpec = SUP):
    """Vectorized anchor over ``(n, n_lags, d)``.

    Returns ``(theta_star, t_star, valid)`` where ``valid`` marks rows with a
    positive maximum.
    """
    norms = spec(values)
    top = norms.max(axis=1)
    idx = np.argmax(norms == top[:, None], axis=1)
    return top, t_min + idx, top > 0


def lift(x) -> np.ndarray:
    """``(x^1_+, x^1_-, ..., x^d_+, x^d_-)`` for a signed vector or array of vectors."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape[:-1] + (2 * x.shape[-1],))
    out[..., 0::2] = np.maximum(x, 0.0)
    out[..., 1::2] = np.maximum(-x, 0.0)
    return out


def signed_to_nonneg(values, t_min: int = 0, outside: Outside = Outside.ZERO,
                     spec: NormSpec = SUP) -> SpectralWindow:
    """Lift a signed ``(n_lags, d)`` window to a nonnegative ``2d`` window."""
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if not np.all(np.isfinite(vals)):
        raise ValueError("signed window values must be finite")
    return SpectralWindow(t_min, lift(vals), outside=outside, norm_spec=spec)
