"""Command-line front end.

Exit status: 0 when every verdict passes, 2 when a statistical check fails,
1 on configuration or runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig
from .core import CoverageError
from .estimate import (
    anchor_batch_values, attractor_check, empirical_spectral_tail, round_trip_sample, tail_factorization_check,
)
from .general import simulate_general
from .m3 import fdd_cdf, max_stability_check, simulate_m3
from .models import MMAModel, build_model
from .poisson import StopPolicy, TruncationError
from .raw import iid_frechet_paths, mma_paths
from .stats import TestReport, energy_test, jsonable
from .streams import derive_stream
from .tcf import rs_invariance_test, sc_diagnostic, tcf_battery

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2

COMMANDS = {
    "simulate": ("m3", "general"),
    "check": ("tcf", "rs", "sc"),
    "estimate": ("tail",),
    "decluster": None,
    "attractor": None,
    "fdd": None,
    "maxstab": None,
}


class Run:
    """Resolved configuration plus the artifact writer for one subcommand."""

    def __init__(self, command: str, cfg: RunConfig, out: Path, threads: int):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.threads = threads
        params = dict(cfg.model.params)
        if cfg.model.name == "mma":
            params.setdefault("alpha", cfg.alpha)
        self.model = build_model(cfg.model.name, params)
        self.stop = StopPolicy(cfg.stop.eps, cfg.stop.n_max, cfg.stop.batch)

    def rng(self, *labels):
        return derive_stream(self.cfg.seed, self.command, *labels)

    def header(self) -> dict:
        # the output directory is left out so that reruns elsewhere stay byte-identical
        cfg = self.cfg.to_dict()
        cfg.pop("out")
        return {"command": self.command, "seed": self.cfg.seed, "config": cfg}

    def write_json(self, name: str, payload: dict):
        self.out.mkdir(parents=True, exist_ok=True)
        body = dict(self.header(), **payload)
        (self.out / name).write_text(json.dumps(jsonable(body), sort_keys=True, indent=2) + "\n")

    def write_csv(self, name: str, header: list[str], rows):
        self.out.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        buf.write("# " + json.dumps(jsonable(self.header()), sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
        (self.out / name).write_text(buf.getvalue())

    def simulate(self, construction: str, n: int | None = None, bounds=None, label: str = "paths"):
        cfg = self.cfg
        bounds = bounds or cfg.bounds
        n = n or cfg.replicates
        if construction == "m3":
            return simulate_m3(self.model, cfg.alpha, bounds, n, self.rng(label), self.stop, self.threads)
        return simulate_general(self.model, cfg.alpha, bounds, n, self.rng(label), cfg.j_cap, self.stop,
                                cfg.zero_tol, self.threads)


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _report_payload(reports: list[TestReport]) -> dict:
    return {"passed": all(r.passed for r in reports), "reports": [r.to_dict() for r in reports]}


def _finish(run: Run, reports: list[TestReport]) -> int:
    run.write_json("report.json", _report_payload(reports))
    for r in reports:
        print(r.summary())
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


def cmd_simulate(run: Run, which: str) -> int:
    batch = run.simulate(which)
    rows = ((r, batch.t_min + l, i, batch.values[r, l, i])
            for r in range(batch.n) for l in range(batch.values.shape[1]) for i in range(batch.dim))
    run.write_csv("paths.csv", ["replicate", "t", "component", "value"], rows)
    run.write_json("certificates.json", {
        "construction": batch.construction,
        "certificate": batch.certificate.tolist(),
        "n_points": batch.n_points.tolist(),
        "model_bound": batch.model_bound,
        "meta": batch.meta,
    })
    print(f"simulated {batch.n} {which} paths on [{batch.t_min}, {batch.t_max}]; "
          f"max certificate {float(batch.certificate.max()):g}")
    return EXIT_PASS


def cmd_check(run: Run, which: str) -> int:
    cfg = run.cfg
    spec = cfg.norm_spec
    s, t = cfg.probe
    if which == "tcf":
        rep = tcf_battery(run.model, cfg.alpha, cfg.n_mc, run.rng("tcf"), s, t, tuple(cfg.shifts),
                          cfg.thresholds.z, spec=spec)
    elif which == "rs":
        rep = rs_invariance_test(run.model, cfg.alpha, s, t, cfg.n_mc, run.rng("rs"), cfg.thresholds.p,
                                 cfg.thresholds.permutations, cfg.thresholds.energy_max_n, spec)
    else:
        rep = sc_diagnostic(run.model, cfg.alpha, cfg.horizon, cfg.n_mc, run.rng("sc"), spec=spec)
    return _finish(run, [rep])


def cmd_estimate(run: Run, which: str) -> int:
    cfg = run.cfg
    s, t = cfg.probe
    batch = run.simulate(cfg.construction)
    ex = empirical_spectral_tail(batch, cfg.quantile, s, t, spec=cfg.norm_spec)
    run.write_json("exceedances.json", {"threshold": ex.threshold, "t0": ex.t0, "count": ex.count,
                                        "samples": ex.to_records()})
    d = batch.dim
    run.write_csv("exceedances.csv", [f"lag{l}_c{i}" for l in range(s, t + 1) for i in range(d)],
                  ex.spectral.reshape(ex.count, -1).tolist())
    rep = tail_factorization_check(batch, cfg.quantile, s, t, cfg.alpha, run.rng("factorization"),
                                   cfg.thresholds.p, cfg.thresholds.permutations, cfg.norm_spec)
    return _finish(run, [rep])


def cmd_decluster(run: Run) -> int:
    cfg = run.cfg
    model = run.model
    if model.support is None:
        raise ValueError(f"model {model.name!r} has no finite support; anchoring needs the summability condition (SC)")
    a, b = model.support
    s, t = cfg.probe
    n = cfg.n_mc
    vals = model.sample_batch(run.rng("theta"), n, a, b)
    pats, t_star = anchor_batch_values(vals, a, cfg.norm_spec)
    shown = min(n, 100)
    run.write_json("patterns.json", {"patterns": [
        {"t_min": int(a - ts), "values": p.tolist(), "t_star": int(ts)} for p, ts in zip(pats[:shown], t_star[:shown])
    ], "count_written": shown, "count": n})
    direct = model.sample_batch(run.rng("direct"), n, min(a, s), max(b, t))
    direct = direct[:, s - min(a, s):t - min(a, s) + 1]
    resampled = round_trip_sample(vals, a, cfg.alpha, s, t, run.rng("resample"), cfg.norm_spec)
    rep = energy_test(np.log1p(cfg.norm_spec(direct)), np.log1p(cfg.norm_spec(resampled)),
                      cfg.thresholds.permutations, run.rng("energy"), cfg.thresholds.p,
                      cfg.thresholds.energy_max_n, test_id="decluster_round_trip")
    return _finish(run, [rep])


def _raw_source(run: Run, n_lags: int):
    cfg = run.cfg
    model = run.model
    n = cfg.attractor.n_copies
    if model.name == "delta" and model.dim == 1:
        b_n = n ** (1.0 / cfg.alpha)
        return (lambda g, m: iid_frechet_paths(g, m, 0, n_lags - 1, cfg.alpha)), b_n
    if isinstance(model, MMAModel):
        b_n = (n / (1.0 - model.phi ** cfg.alpha)) ** (1.0 / cfg.alpha)
        return (lambda g, m: mma_paths(g, m, 0, n_lags - 1, model.phi, cfg.alpha, normalized=False)), b_n
    raise ValueError(f"no brute-force source for model {model.name!r}")


def cmd_attractor(run: Run) -> int:
    cfg = run.cfg
    lags = cfg.lags
    lo, hi = min(lags), max(lags)
    raw, b_n = _raw_source(run, hi - lo + 1)
    if cfg.attractor.b_n is not None:
        b_n = cfg.attractor.b_n
    ref = run.simulate("m3", bounds=[lo, hi], label="reference")
    rep = attractor_check(raw, cfg.alpha, cfg.attractor.n_copies, b_n, cfg.replicates, ref,
                          run.rng("raw"), cfg.thresholds.p, cfg.thresholds.permutations,
                          cfg.thresholds.energy_max_n)
    return _finish(run, [rep])


def cmd_fdd(run: Run) -> int:
    cfg = run.cfg
    lags = cfg.lags
    lo, hi = min(lags), max(lags)
    grid = cfg.grid
    rows = []
    for idx in np.ndindex(*([len(grid)] * (hi - lo + 1))):
        x = [grid[i] for i in idx]
        p, se = fdd_cdf(run.model, cfg.alpha, x, cfg.n_mc, run.rng("fdd", *idx), s=lo)
        rows.append(x + [p, se])
    run.write_csv("fdd.csv", [f"x{l}" for l in range(lo, hi + 1)] + ["probability", "se"], rows)
    print(f"wrote {len(rows)} cells to fdd.csv")
    return EXIT_PASS


def cmd_maxstab(run: Run) -> int:
    cfg = run.cfg
    lo, hi = min(cfg.lags), max(cfg.lags)
    bounds = [min(lo, cfg.bounds[0]), max(hi, cfg.bounds[1])]
    batch = run.simulate(cfg.construction, bounds=bounds)
    reports = [max_stability_check(batch, cfg.alpha, int(k), cfg.grid, cfg.lags, batch.n, None, cfg.thresholds.z,
                                   test_id=f"max_stability[k={k}]") for k in cfg.k]
    return _finish(run, reports)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tailstorm", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("target", nargs="?", help="simulate: m3|general; check: tcf|rs|sc; estimate: tail")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--threads", type=int, help="worker threads (fallback: TAILSTORM_THREADS, then 1)")
    p.add_argument("--out", help="output directory (overrides the configured one)")
    p.add_argument("--model", help="override the model name")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="override a model parameter (repeatable; value parsed as JSON)")
    return p


def resolve(args) -> tuple[RunConfig, int]:
    raw = RunConfig().to_dict()
    if args.config:
        with open(args.config) as fh:
            raw.update(json.load(fh))
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out:
        raw["out"] = args.out
    if args.model:
        raw["model"] = {"name": args.model, "params": {}}
    params = dict(raw["model"].get("params", {}) if isinstance(raw["model"], dict) else {})
    for item in args.param:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--param expects KEY=VALUE, got {item!r}")
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    if isinstance(raw["model"], dict):
        raw["model"] = dict(raw["model"], params=params)
    cfg = RunConfig.from_dict(raw)
    threads = args.threads or int(os.environ.get("TAILSTORM_THREADS", "1") or 1)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return cfg, threads


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    allowed = COMMANDS[args.command]
    if allowed is None and args.target is not None:
        parser.error(f"{args.command} takes no target")
    if allowed is not None and args.target not in allowed:
        parser.error(f"{args.command} needs one of {', '.join(allowed)}")
    name = args.command if args.target is None else f"{args.command} {args.target}"
    try:
        cfg, threads = resolve(args)
        run = Run(name, cfg, Path(cfg.out), threads)
        if args.command == "simulate":
            return cmd_simulate(run, args.target)
        if args.command == "check":
            return cmd_check(run, args.target)
        if args.command == "estimate":
            return cmd_estimate(run, args.target)
        return {"decluster": cmd_decluster, "attractor": cmd_attractor,
                "fdd": cmd_fdd, "maxstab": cmd_maxstab}[args.command](run)
    except (ValueError, CoverageError, TruncationError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
