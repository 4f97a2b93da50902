"""Experiment configuration, presets, runners and report emission.

A configuration is one JSON document. Every pass/fail flag in a report is
tied to a named entry of its ``tolerances`` section.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
import time
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import auxiliary as auxm
from .dynamics import (SimConfig, histogram, run_ensemble, simulate, simulate_batch,
                       target_from_config)
from .errors import ConfigurationError, QdiffError
from .fpgrid import (FokkerPlanck, Grid1D, arrhenius_slope, evolve_density, gap_bound_sweep,
                     generator_residual, gibbs_density, hit_bound_check, poincare_c, z_trace)
from .gibbs import GibbsSpec, density_grid, tv_distance
from .potentials import Potential, catalog_make, cube_grid, potential_range
from .schedules import (ConstantGamma, ConstantT, ScheduleWarning, ZeroGamma, quantum_from_config,
                        thermal_from_config, validate_joint)

KINDS = ("stationary-check", "anneal-quantum", "anneal-joint", "gap-sweep", "zt-track",
         "aux-benchmark", "hopfield-descent", "aux-properties")

SIM_KEYS = {"dt", "steps", "burn_in", "stride", "mode", "w", "u_max", "x0", "n_traj",
            "eval_times", "cross_mode", "write_trajectory"}
GRID_KEYS = {"N", "bins", "resolution", "T_list", "gammas", "t_end", "dt_ode", "scheme",
             "gap_oracle", "w"}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    name: str = ""
    potential: dict = field(default_factory=lambda: {"name": "double_well", "params": {"a": 0.5}})
    potentials: list = field(default_factory=list)
    aux: dict = field(default_factory=lambda: {"kind": "none"})
    aux_list: list = field(default_factory=list)
    thermal: dict = field(default_factory=lambda: {"kind": "constant", "T": 0.4})
    quantum: dict = field(default_factory=lambda: {"kind": "zero"})
    sim: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    targets: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: {"dir": "qdiff-out"})

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = copy.deepcopy(data)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        if "kind" not in data:
            raise ConfigurationError("config needs a 'kind'")
        return cls(**data)

    def to_dict(self) -> dict:
        return {f.name: copy.deepcopy(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def apply_overrides(data: dict, overrides) -> dict:
    """Set ``a.b.c=value`` paths; values parse as JSON when possible."""
    data = copy.deepcopy(data)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not of the form key=value")
        path, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        keys = path.split(".")
        for k in keys[:-1]:
            if not isinstance(node.get(k), dict):
                node[k] = {}
            node = node[k]
        node[keys[-1]] = value
    return data


# --- building blocks from config -------------------------------------------


def build_potential(spec: dict) -> Potential:
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigurationError(f"potential must be a {{'name', 'params'}} record, got {spec!r}")
    return catalog_make(spec["name"], spec.get("params", {}))


def build_aux(spec: dict, p: Potential):
    spec = dict(spec or {"kind": "none"})
    v0 = build_potential(spec["v0"]) if spec.get("v0") else None
    aux = auxm.make_aux(spec.get("kind", "none"), spec.get("eps"), v0)
    auxm.validate_aux(aux, p)
    return aux


def sim_config(cfg: ExperimentConfig, **over) -> SimConfig:
    s = {k: v for k, v in cfg.sim.items() if k in ("dt", "steps", "stride", "mode", "u_max", "x0", "w")}
    s.update(over)
    s.setdefault("seed", cfg.seed)
    return SimConfig(**s)


def _writable(path: Path) -> bool:
    p = path
    while not p.exists():
        if p.parent == p:
            return False
        p = p.parent
    return p.is_dir() and os.access(p, os.W_OK)


def validate(cfg: ExperimentConfig) -> list:
    """Every problem with ``cfg``, as human-readable strings (empty when valid)."""
    errs = []
    if cfg.kind not in KINDS:
        errs.append(f"kind: unknown experiment kind {cfg.kind!r}")
    pots = []
    for key, spec in [("potential", cfg.potential)] + [(f"potentials[{i}]", s)
                                                       for i, s in enumerate(cfg.potentials)]:
        try:
            pots.append(build_potential(spec))
        except QdiffError as exc:
            errs.append(f"{key}: {exc}")
    p = pots[0] if pots and not errs else None
    if p is not None:
        for key, spec in [("aux", cfg.aux)] + [(f"aux_list[{i}]", s) for i, s in enumerate(cfg.aux_list)]:
            try:
                build_aux(spec, p)
            except (QdiffError, KeyError, TypeError) as exc:
                errs.append(f"{key}: {exc}")
        for i, t in enumerate(cfg.targets):
            try:
                target_from_config(t, p)
            except (QdiffError, KeyError, TypeError) as exc:
                errs.append(f"targets[{i}]: {exc}")
    th = q = None
    try:
        th = thermal_from_config(cfg.thermal)
    except QdiffError as exc:
        errs.append(f"thermal: {exc}")
    try:
        q = quantum_from_config(cfg.quantum)
    except QdiffError as exc:
        errs.append(f"quantum: {exc}")
    for k in sorted(set(cfg.sim) - SIM_KEYS):
        errs.append(f"sim.{k}: unknown key")
    for k in sorted(set(cfg.grid) - GRID_KEYS):
        errs.append(f"grid.{k}: unknown key")
    try:
        sim_config(cfg)
    except (QdiffError, TypeError) as exc:
        errs.append(f"sim: {exc}")
    for k, v in cfg.tolerances.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            errs.append(f"tolerances.{k}: must be a number")
    if cfg.kind in ("stationary-check", "zt-track", "anneal-quantum"):
        if th is not None and not (isinstance(th, ConstantT) and th.T > 0):
            errs.append("thermal: this experiment needs a constant temperature T > 0")
    if cfg.kind == "stationary-check" and q is not None and not isinstance(q, (ZeroGamma, ConstantGamma)):
        errs.append("quantum: stationary-check needs a constant Gamma")
    if cfg.kind in ("gap-sweep", "zt-track", "aux-properties") and p is not None and p.dim != 1:
        errs.append("potential: this experiment is one-dimensional")
    if cfg.kind in ("anneal-joint", "anneal-quantum", "aux-benchmark", "zt-track") and not cfg.targets:
        errs.append("targets: this experiment needs at least one target set")
    out = resolve_out_dir(cfg)
    if not _writable(out):
        errs.append(f"output.dir: {out} is not writable")
    return errs


def resolve_out_dir(cfg: ExperimentConfig, override: Optional[str] = None) -> Path:
    if override:
        return Path(override)
    env = os.environ.get("QDIFF_OUT")
    if env:
        return Path(env) / (cfg.name or cfg.kind)
    return Path(cfg.output.get("dir", "qdiff-out")) / (cfg.name or cfg.kind)


# --- reports ---------------------------------------------------------------


@dataclass
class ExperimentReport:
    config: dict
    metrics: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(m["passed"] for m in self.metrics)

    def to_dict(self) -> dict:
        # wall-clock time is deliberately left out so reruns are byte-identical
        return {
            "config": self.config,
            "passed": self.passed,
            "metrics": self.metrics,
            "info": self.info,
            "tables": self.tables,
            "artifacts": self.artifacts,
        }


_OPS = {"<=": lambda v, t: v <= t, ">=": lambda v, t: v >= t}


class _Checks:
    def __init__(self, report: ExperimentReport, tolerances: dict):
        self.report, self.tol = report, tolerances

    def check(self, name, value, key, op="<=", threshold=None):
        """Record ``value op threshold``; ``threshold`` defaults to the tolerance itself."""
        if key not in self.tol:
            raise ConfigurationError(f"tolerances.{key} is required by metric {name!r}")
        thr = self.tol[key] if threshold is None else threshold
        value = float(value)
        ok = bool(np.isfinite(value) and _OPS[op](value, thr))
        self.report.metrics.append({"name": name, "value": value, "op": op,
                                    "threshold": float(thr), "tolerance_key": key,
                                    "tolerance": self.tol[key], "passed": ok})
        return ok

    def has(self, key):
        return key in self.tol


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def report_json(report: ExperimentReport) -> str:
    return json.dumps(_clean(report.to_dict()), indent=2) + "\n"


def report_csv(report: ExperimentReport) -> str:
    """Primary table when the report has one, else one row per metric."""
    buf = io.StringIO()
    if report.tables:
        rows = next(iter(report.tables.values()))
    else:
        rows = [{k: m[k] for k in ("name", "value", "op", "threshold", "tolerance_key", "passed")}
                for m in report.metrics]
    rows = _clean(rows)
    header = list(rows[0]) if rows else ["name", "value", "op", "threshold", "tolerance_key", "passed"]
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(r)
    return buf.getvalue()


def emit_report(report: ExperimentReport, out_dir, fmt: str = "json") -> list:
    """Write ``report.json`` and/or ``summary.csv``; returns the written paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if fmt in ("json", "both"):
            path = out / "report.json"
            path.write_text(report_json(report))
            written.append(path)
        if fmt in ("csv-summary", "both"):
            path = out / "summary.csv"
            path.write_text(report_csv(report))
            written.append(path)
    except OSError as exc:
        raise QdiffError(f"cannot write report to {out}: {exc}") from None
    if not written:
        raise ConfigurationError(f"unknown report format {fmt!r}")
    return written


# --- runners ---------------------------------------------------------------


def _bins_probability_csv(path, centers, *columns, names):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x"] + list(names))
        for row in zip(centers, *columns):
            w.writerow([repr(float(v)) for v in row])


def _run_stationary(cfg, p, aux, th, q, chk, rep, out):
    T = th.T
    gamma = q.gamma0 if isinstance(q, ConstantGamma) else 0.0
    bins = int(cfg.grid.get("bins", 64))
    burn = int(cfg.sim.get("burn_in", 0))
    sim = sim_config(cfg)
    refine = 16 if p.dim == 1 else (4 if p.dim == 2 else 1)
    grid = density_grid(GibbsSpec(p, aux, gamma, T), bins * refine)
    gibbs = grid.coarsen(bins)

    def hist_of(mode):
        tr = simulate(sim_config(cfg, mode=mode), p, aux, th, q)
        keep = tr.t > burn * sim.dt
        if cfg.sim.get("write_trajectory"):
            path = out / f"trajectory_{mode}.csv"
            tr.to_csv(path)
            rep.artifacts.append(path.name)
        return histogram(tr.x[keep], bins, p.dim), int(keep.sum())

    hist, count = hist_of(sim.mode)
    rep.info.update({"samples": count, "T": T, "gamma": gamma, "bins": bins})
    chk.check("tv_vs_gibbs", tv_distance(hist, grid), "tv")
    if cfg.sim.get("cross_mode"):
        other, _ = hist_of(cfg.sim["cross_mode"])
        chk.check("tv_between_modes", tv_distance(hist, other), "tv_cross")
        rep.info["tv_other_mode_vs_gibbs"] = tv_distance(other, grid)
    if p.dim == 1:
        centers = -1.0 + (np.arange(bins) + 0.5) * 2.0 / bins
        _bins_probability_csv(out / "histogram.csv", centers, hist, gibbs, names=["empirical", "gibbs"])
        rep.artifacts.append("histogram.csv")


def _run_gap_sweep(cfg, p, aux, th, q, chk, rep, out):
    N = int(cfg.grid.get("N", 400))
    w = float(cfg.grid.get("w", cfg.sim.get("w", 1.0)))
    scheme = cfg.grid.get("scheme", "chang_cooper")
    res = int(cfg.grid.get("resolution", 4097))
    T_list = [float(t) for t in cfg.grid.get("T_list", [0.2, 0.3, 0.5, 1.0])]
    gammas = [float(g) for g in cfg.grid.get("gammas", [0.0])]
    grid = Grid1D(N)
    slack = float(cfg.tolerances.get("bound_slack", 0.1))
    c = poincare_c(grid, w)
    rep.info["c"] = c
    if chk.has("c_expected"):
        chk.check("c_rel_error", abs(c - chk.tol["c_expected"]) / chk.tol["c_expected"], "c_rel")
    rows = []
    for gamma in gammas:
        sweep = gap_bound_sweep(p, aux, gamma, T_list, grid, w, res, scheme, slack)
        for r in sweep:
            rows.append(r.to_dict())
            tag = f"[gamma={gamma:g},T={r.T:g}]"
            chk.check(f"lemma_bound{tag}", r.gap / r.bound, "bound_slack", ">=", 1.0 - slack)
            if chk.has("stationary_tv"):
                chk.check(f"stationary_tv{tag}", r.stationary_tv, "stationary_tv")
            if cfg.grid.get("gap_oracle") == "legendre":
                expected = 2.0 * r.T / w
                chk.check(f"gap_rel_error{tag}", abs(r.gap - expected) / expected, "gap_rel")
            if chk.has("refinement_ratio"):
                coarse = generator_residual(p, aux, gamma, r.T, grid, w, scheme)
                fine = generator_residual(p, aux, gamma, r.T, Grid1D(2 * N), w, scheme)
                rows[-1]["residual_N"] = coarse
                rows[-1]["residual_2N"] = fine
                chk.check(f"residual_ratio{tag}", coarse / fine if fine > 0 else np.inf,
                          "refinement_ratio", ">=")
        if len(sweep) >= 2 and chk.has("arrhenius_slack"):
            slope = arrhenius_slope(sweep)
            ms = sweep[0].m_star
            chk.check(f"arrhenius_slope[gamma={gamma:g}]", slope, "arrhenius_slack", ">=",
                      -2.0 * ms * (1.0 + chk.tol["arrhenius_slack"]))
    rep.tables["sweep"] = rows
    with open(out / "gap_sweep.json", "w") as fh:
        fh.write(json.dumps(_clean(rows), indent=2) + "\n")
    rep.artifacts.append("gap_sweep.json")


def _run_zt(cfg, p, aux, th, q, chk, rep, out):
    N = int(cfg.grid.get("N", 400))
    w = float(cfg.grid.get("w", cfg.sim.get("w", 1.0)))
    t_end = float(cfg.grid.get("t_end", 200.0))
    dt_ode = float(cfg.grid.get("dt_ode", 1e-2))
    res = int(cfg.grid.get("resolution", 4097))
    grid = Grid1D(N)
    fp = FokkerPlanck(p, aux, th.T, grid, w, cfg.grid.get("scheme", "chang_cooper"))
    m0 = gibbs_density(p, aux, q.at(0.0)[0], th.T, grid)
    path = evolve_density(fp, th, q, m0, t_end, dt_ode)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        trace = z_trace(path, fp, res)
    rep.info.update({"K": trace.K, "excluded_cells": trace.excluded_cells,
                     "B_denominator_nonpositive": int((~trace.b_positive).sum()),
                     "warnings": [str(c.message) for c in caught]})
    chk.check("z_min", trace.z.min(), "z_lower", ">=", 1.0 - chk.tol["z_lower"])
    chk.check("z_sup", trace.z.max(), "z_sup_max")
    chk.check("z_final_excess", trace.z[-1] - 1.0, "z_final")
    chk.check("mass_drift", path.mass_drift, "mass_drift")
    for i, tcfg in enumerate(cfg.targets):
        S = target_from_config(tcfg, p)
        rows = hit_bound_check(path, trace, fp, S, 0.0)
        worst = max(m - b for _, m, b, _ in rows)
        chk.check(f"hit_bound[{i}:{tcfg.get('kind')}]", worst, "hit_bound_slack")
    with open(out / "zt_trace.json", "w") as fh:
        fh.write(json.dumps(_clean(trace.to_dict()), indent=2) + "\n")
    path.to_csv(out / "density_path.csv")
    rep.artifacts += ["zt_trace.json", "density_path.csv"]


def _eval_times(cfg, sim):
    horizon = sim.steps * sim.dt
    return cfg.sim.get("eval_times") or np.linspace(horizon / 10, horizon, 10).tolist()


def _run_anneal(cfg, p, aux, th, q, chk, rep, out):
    sim = sim_config(cfg)
    n_traj = int(cfg.sim.get("n_traj", 200))
    targets = [target_from_config(t, p) for t in cfg.targets]
    ens = run_ensemble(sim, p, aux, th, q, n_traj, targets[0], _eval_times(cfg, sim),
                       bins=int(cfg.grid.get("bins", 64)))
    ens.config = {"n_traj": n_traj, "dt": sim.dt, "steps": sim.steps}
    data = ens.to_dict()
    data["extra_targets"] = [ens.fractions(p, S) for S in targets[1:]]
    rep.info["ensemble"] = data
    rep.info["failures"] = ens.failures
    with open(out / "ensemble.json", "w") as fh:
        fh.write(json.dumps(_clean(data), indent=2) + "\n")
    rep.artifacts.append("ensemble.json")
    res = 4097 if p.dim == 1 else 65
    if cfg.kind == "anneal-joint":
        M = potential_range(p, res).M
        Mt = auxm.aux_range(aux, p, res).M
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ScheduleWarning)
            jr = validate_joint(th, q, M, Mt, sim.steps * sim.dt)
        rep.info["joint"] = {"M": jr.M, "M_tilde": jr.M_tilde, "T0": jr.T0,
                             "T0_exceeds_2M": jr.t0_exceeds_2M, "lambda_max": jr.lambda_max,
                             "lambda_final": jr.lambda_final,
                             "lambda_nonincreasing": jr.lambda_nonincreasing,
                             "warnings": [str(c.message) for c in caught]}
        chk.check("ground_fraction_final", ens.hit_fractions[-1], "ground_fraction", ">=")
        if len(targets) > 1:
            last = data["extra_targets"][0][-3:]
            chk.check("superlevel_increase_last3", max(np.diff(last)) if len(last) > 1 else 0.0,
                      "trend_slack")
    else:
        T = th.T
        bins = int(cfg.grid.get("bins", 16))
        grid = density_grid(GibbsSpec(p, aux, 0.0, T), bins * (16 if p.dim == 1 else 4))
        final = histogram(ens.final_x, bins, p.dim)
        chk.check("tv_final_vs_gibbs", tv_distance(final, grid), "tv")
        rep.info["hit_fraction_final"] = ens.hit_fractions[-1]


def _run_aux_benchmark(cfg, p, aux, th, q, chk, rep, out):
    sim = sim_config(cfg)
    n_traj = int(cfg.sim.get("n_traj", 100))
    target = target_from_config(cfg.targets[0], p)
    rows = []
    specs = cfg.aux_list or [{"kind": "none"}, {"kind": "homotopy"}, {"kind": "contraction"},
                             {"kind": "hessian_quadratic"}, {"kind": "kinetic_nd"}]
    for spec in specs:
        a = build_aux(spec, p)
        ens = run_ensemble(sim, p, a, th, q, n_traj, target, _eval_times(cfg, sim))
        rows.append({"aux": a.kind, "success_fraction": ens.hit_fractions[-1],
                     "meanV_final": ens.mean_v[-1], "minV_final": ens.min_v[-1],
                     "failures": ens.failures})
    missing = sum(1 for r in rows for v in r.values()
                  if isinstance(v, float) and not math.isfinite(v))
    chk.check("missing_fields", missing, "missing_fields")
    rep.tables["aux_benchmark"] = rows


def _run_hopfield(cfg, p, aux, th, q, chk, rep, out):
    sim = sim_config(cfg)
    n_traj = int(cfg.sim.get("n_traj", 8))
    pots = [build_potential(s) for s in (cfg.potentials or [cfg.potential])]
    rows = []
    for pot in pots:
        res = {1: 4097, 2: 257}.get(pot.dim, 33)
        L_hat = float(np.linalg.norm(pot.grad(cube_grid(pot.dim, res)), axis=-1).max())
        trajs = simulate_batch(sim, pot, auxm.NoAux(), ConstantT(0.0), ZeroGamma(), n_traj)
        max_inc = max(float(np.max(np.diff(tr.V))) for tr in trajs)
        term = max(float(np.abs(pot.grad(tr.x[-1])).max()) for tr in trajs)
        ratio = max_inc / (sim.dt ** 2 * L_hat) if L_hat > 0 else (0.0 if max_inc <= 0 else np.inf)
        chk.check(f"descent[{pot.name}]", ratio, "descent_slack_factor")
        chk.check(f"terminal_grad[{pot.name}]", term, "terminal_grad")
        rows.append({"potential": pot.name, "max_increment": max_inc, "lipschitz": L_hat,
                     "slack": chk.tol["descent_slack_factor"] * sim.dt ** 2 * L_hat,
                     "terminal_grad": term, "trajectories": len(trajs)})
    rep.tables["hopfield"] = rows


def _run_aux_properties(cfg, p, aux, th, q, chk, rep, out):
    res = int(cfg.grid.get("resolution", 4097))
    eps = float(np.atleast_1d(cfg.aux.get("eps", 0.1))[0])
    gamma = q.at(0.0)[0] if not isinstance(q, ZeroGamma) else 1.0
    rows = []
    for s in (cfg.potentials or [cfg.potential]):
        pot = build_potential(s)
        sign = auxm.sign_test(pot, eps, res)
        contact = auxm.contact_test(pot, eps, gamma, res)
        chk.check(f"sign_violations[{pot.name}]", sign["violations"], "sign_violations")
        chk.check(f"contact_violations[{pot.name}]", contact["violations"], "contact_violations")
        chk.check(f"contact_points[{pot.name}]", contact["points"], "min_contact_points", ">=")
        rows.append({"potential": pot.name, "minima": len(sign["minima"]),
                     "maxima": len(sign["maxima"]), "sign_violations": sign["violations"],
                     "contact_points": contact["points"],
                     "contact_violations": contact["violations"]})
    rep.tables["aux_properties"] = rows


_RUNNERS = {
    "stationary-check": _run_stationary,
    "gap-sweep": _run_gap_sweep,
    "zt-track": _run_zt,
    "anneal-joint": _run_anneal,
    "anneal-quantum": _run_anneal,
    "aux-benchmark": _run_aux_benchmark,
    "hopfield-descent": _run_hopfield,
    "aux-properties": _run_aux_properties,
}


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ExperimentReport:
    """Validate, dispatch to the kind's runner and collect a report.

    Artifacts go to ``out_dir`` (default: :func:`resolve_out_dir`).
    """
    errs = validate(cfg)
    if errs:
        raise ConfigurationError("invalid config:\n  " + "\n  ".join(errs))
    out = Path(out_dir) if out_dir is not None else resolve_out_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    p = build_potential(cfg.potential)
    aux = build_aux(cfg.aux, p)
    th = thermal_from_config(cfg.thermal)
    q = quantum_from_config(cfg.quantum)
    rep = ExperimentReport(config=cfg.to_dict())
    chk = _Checks(rep, cfg.tolerances)
    start = time.perf_counter()
    try:
        _RUNNERS[cfg.kind](cfg, p, aux, th, q, chk, rep, out)
    except QdiffError as exc:
        raise type(exc)(f"[{cfg.kind}] {exc}") from exc
    rep.wall_clock = time.perf_counter() - start
    return rep


# --- presets ---------------------------------------------------------------


def _dw():
    return {"name": "double_well", "params": {"a": 0.5}}


PRESETS = {
    "stationary": {
        "kind": "stationary-check", "seed": 20240601, "potential": _dw(),
        "thermal": {"kind": "constant", "T": 0.4}, "quantum": {"kind": "zero"},
        "sim": {"dt": 1e-3, "steps": 5_000_000, "burn_in": 100_000, "stride": 1,
                "mode": "u_space", "w": 1.0},
        "grid": {"bins": 64}, "tolerances": {"tv": 0.05},
    },
    "tilted-stationary": {
        "kind": "stationary-check", "seed": 20240602, "potential": _dw(),
        "aux": {"kind": "contraction"},
        "thermal": {"kind": "constant", "T": 0.4}, "quantum": {"kind": "constant", "gamma0": 0.25},
        "sim": {"dt": 1e-3, "steps": 5_000_000, "burn_in": 100_000, "stride": 1,
                "mode": "u_space", "w": 1.0},
        "grid": {"bins": 64}, "tolerances": {"tv": 0.05},
    },
    "generator-check": {
        "kind": "gap-sweep", "potential": _dw(), "aux": {"kind": "contraction"},
        "grid": {"N": 400, "T_list": [0.4], "gammas": [0.0, 0.25], "resolution": 4097},
        "tolerances": {"stationary_tv": 0.01, "refinement_ratio": 3.0, "bound_slack": 0.1},
    },
    "spectral-oracle": {
        "kind": "gap-sweep", "potential": {"name": "constant", "params": {"c": 0.0}},
        "grid": {"N": 512, "T_list": [0.25, 0.5, 1.0], "gammas": [0.0], "w": 1.0,
                 "gap_oracle": "legendre", "resolution": 257},
        "tolerances": {"gap_rel": 0.02, "c_expected": 0.5, "c_rel": 0.02, "bound_slack": 0.1},
    },
    "gap-sweep-double-well": {
        "kind": "gap-sweep", "potential": _dw(), "aux": {"kind": "contraction"},
        "grid": {"N": 400, "T_list": [0.2, 0.3, 0.5, 1.0], "gammas": [0.0, 0.25]},
        "tolerances": {"bound_slack": 0.1, "arrhenius_slack": 0.1},
    },
    "gap-sweep-multi-well": {
        "kind": "gap-sweep", "potential": {"name": "multi_well_cos", "params": {"k": 4, "depth": 0.25}},
        "aux": {"kind": "contraction"},
        "grid": {"N": 400, "T_list": [0.2, 0.3, 0.5, 1.0], "gammas": [0.0, 0.25]},
        "tolerances": {"bound_slack": 0.1, "arrhenius_slack": 0.1},
    },
    "zt-track": {
        "kind": "zt-track", "potential": _dw(), "aux": {"kind": "contraction"},
        "thermal": {"kind": "constant", "T": 0.4},
        "quantum": {"kind": "power_decay", "gamma0": 0.5, "p": 1.0},
        "grid": {"N": 400, "t_end": 200.0, "dt_ode": 0.01},
        "targets": [{"kind": "superlevel", "theta": 0.05}, {"kind": "superlevel", "theta": 0.2}],
        "tolerances": {"z_lower": 1e-8, "z_sup_max": 1e6, "z_final": 1e-3, "mass_drift": 1e-9,
                       "hit_bound_slack": 1e-8},
    },
    "anneal-joint": {
        "kind": "anneal-joint", "seed": 20240608,
        "potential": {"name": "tilted_double_well", "params": {"a": 0.5, "b": 0.05}},
        "aux": {"kind": "contraction"},
        "thermal": {"kind": "logarithmic", "T0": 1.2},
        "quantum": {"kind": "power_decay", "gamma0": 0.5, "p": 1.0},
        "sim": {"dt": 1e-3, "steps": 2_000_000, "n_traj": 200, "mode": "u_space",
                "eval_times": [200.0 * k for k in range(1, 11)]},
        "targets": [{"kind": "ground", "radius": 0.1}, {"kind": "superlevel", "theta": 0.2}],
        "tolerances": {"ground_fraction": 0.9, "trend_slack": 0.0},
    },
    "anneal-quantum": {
        "kind": "anneal-quantum", "seed": 20240609, "potential": _dw(),
        "aux": {"kind": "hessian_quadratic"},
        "thermal": {"kind": "constant", "T": 0.4},
        "quantum": {"kind": "power_decay", "gamma0": 1.0, "p": 1.0},
        "sim": {"dt": 1e-3, "steps": 50_000, "n_traj": 4000},
        "grid": {"bins": 16},
        "targets": [{"kind": "superlevel", "theta": 0.2}],
        "tolerances": {"tv": 0.05},
    },
    "hopfield-descent": {
        "kind": "hopfield-descent", "seed": 20240610,
        "thermal": {"kind": "constant", "T": 0.0},
        "potentials": [
            _dw(),
            {"name": "tilted_double_well", "params": {"a": 0.5, "b": 0.05}},
            {"name": "multi_well_cos", "params": {"k": 4, "depth": 0.25}},
            {"name": "quadratic_bowl", "params": {"center": [0.3, -0.2]}},
            {"name": "separable_nd", "params": {"factors": [
                {"name": "double_well", "params": {"a": 0.5}},
                {"name": "multi_well_cos", "params": {"k": 2, "depth": 0.25}}]}},
        ],
        "sim": {"dt": 1e-3, "steps": 20_000, "n_traj": 8},
        "tolerances": {"descent_slack_factor": 10.0, "terminal_grad": 1e-3},
    },
    "aux-properties": {
        "kind": "aux-properties",
        "potentials": [_dw(), {"name": "multi_well_cos", "params": {"k": 4, "depth": 0.25}}],
        "aux": {"kind": "kinetic_1d", "eps": 0.1},
        "grid": {"resolution": 4097},
        "tolerances": {"sign_violations": 0, "contact_violations": 0, "min_contact_points": 1},
    },
    "aux-benchmark": {
        "kind": "aux-benchmark", "seed": 20240612,
        "potential": {"name": "tilted_double_well", "params": {"a": 0.5, "b": 0.05}},
        "aux_list": [{"kind": "none"}, {"kind": "homotopy"}, {"kind": "contraction"},
                     {"kind": "hessian_quadratic"}, {"kind": "kinetic_1d"}, {"kind": "kinetic_nd"}],
        "thermal": {"kind": "logarithmic", "T0": 1.2},
        "quantum": {"kind": "power_decay", "gamma0": 0.9, "p": 1.0},
        "sim": {"dt": 1e-3, "steps": 200_000, "n_traj": 100},
        "targets": [{"kind": "ground", "radius": 0.1}],
        "tolerances": {"missing_fields": 0},
    },
}


def preset(name: str, seed: Optional[int] = None) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    data = copy.deepcopy(PRESETS[name])
    data["name"] = name
    if seed is not None:
        data["seed"] = int(seed)
    return ExperimentConfig.from_dict(data)
