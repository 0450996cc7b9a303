"""Run configuration: one JSON file per run, resolved into dataclasses."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .core import NormSpec, check_alpha

CONFIG_SCHEMA_VERSION = 1


@dataclass
class ModelSpec:
    name: str = "mma"
    params: dict = field(default_factory=lambda: {"phi": 0.5, "alpha": 1.0})


@dataclass
class StopConfig:
    eps: float = 1e-3
    n_max: int = 100_000
    batch: int = 32


@dataclass
class Thresholds:
    z: float = 3.0
    p: float = 0.01
    permutations: int = 999
    energy_max_n: int = 2000


@dataclass
class AttractorConfig:
    n_copies: int = 1000
    b_n: float | None = None  # analytic default for catalog models


@dataclass
class RunConfig:
    seed: int = 0
    alpha: float = 1.0
    norm: str = "sup"
    model: ModelSpec = field(default_factory=ModelSpec)
    bounds: list = field(default_factory=lambda: [0, 3])
    replicates: int = 1000
    stop: StopConfig = field(default_factory=StopConfig)
    j_cap: int = 16
    zero_tol: float = 0.0
    thresholds: Thresholds = field(default_factory=Thresholds)
    out: str = "out"
    construction: str = "m3"
    probe: list = field(default_factory=lambda: [-1, 1])
    shifts: list = field(default_factory=lambda: [-3, -2, -1, 1, 2, 3])
    n_mc: int = 10_000
    quantile: float = 0.99
    horizon: int = 40
    grid: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    lags: list = field(default_factory=lambda: [0, 1])
    k: list = field(default_factory=lambda: [2, 3])
    attractor: AttractorConfig = field(default_factory=AttractorConfig)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        check_alpha(self.alpha)
        NormSpec.from_string(self.norm)
        t_min, t_max = (int(b) for b in self.bounds)
        if not t_min <= 0 <= t_max:
            raise ValueError(f"bounds must satisfy t_min <= 0 <= t_max, got {self.bounds}")
        for name in ("replicates", "n_mc", "j_cap", "horizon"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.stop.n_max < 1 or self.stop.batch < 1:
            raise ValueError("stop.n_max and stop.batch must be >= 1")
        if not 0.0 < self.stop.eps < 1.0:
            raise ValueError("stop.eps must lie in (0, 1)")
        if self.thresholds.permutations < 1 or self.attractor.n_copies < 1:
            raise ValueError("counts must be >= 1")
        if not 0.0 < self.quantile < 1.0:
            raise ValueError("quantile must lie in (0, 1)")
        if self.construction not in ("m3", "general"):
            raise ValueError("construction must be 'm3' or 'general'")
        s, t = (int(x) for x in self.probe)
        if not s <= 0 <= t:
            raise ValueError("probe lags must satisfy s <= 0 <= t")

    @property
    def norm_spec(self) -> NormSpec:
        return NormSpec.from_string(self.norm)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = CONFIG_SCHEMA_VERSION
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        d.pop("schema", None)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        nested = {"model": ModelSpec, "stop": StopConfig, "thresholds": Thresholds, "attractor": AttractorConfig}
        for key, typ in nested.items():
            if key in d and isinstance(d[key], dict):
                sub = dict(d[key])
                bad = set(sub) - {f.name for f in fields(typ)}
                if bad:
                    raise ValueError(f"unknown keys in {key}: {sorted(bad)}")
                d[key] = typ(**sub)
        for key in ("bounds", "probe", "shifts", "grid", "lags", "k"):
            if key in d:
                d[key] = list(d[key])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
