"""Config-driven experiment runner.

``patternlab run config.json`` executes one experiment described by a
JSON document and writes a CSV of result rows plus a JSON manifest;
``patternlab check config.json`` prints design diagnostics
(irrepresentability margins, attainability, concavity conditions); and
``patternlab validate`` runs the built-in oracle suite.

Exit codes: 0 success, 2 config/validation failure, 3 when solver
non-convergence exceeds 0.1% of replicates. Estimate columns in the CSV
are reproducible byte-for-byte from (config, seed); the ``ms`` column is
wall time and excluded from that guarantee.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from .asymptotics import (
    ModelSpec,
    irrepresentability_check,
    attainability_check,
    recovery_probability_closed_form,
    recovery_probability_direct,
    reduced_ols_baseline,
    rmse_curve,
)
from .estimators import (
    generate_data,
    three_step_pipeline,
    two_step_recovery_rate,
)
from .numerics import RngStream, SPDMatrix, block_covariance, equicorrelation
from .regularizers import (
    ConcaveFusedTuning,
    Pattern,
    PenaltySpec,
    check_concavified,
    concavified_sequence,
    fused_lasso,
    gen_lasso,
    lasso,
    pattern_of,
    ridge,
    slope,
    slope_bh,
    slope_linear,
)

EXPERIMENTS = (
    "recovery_curve",
    "rmse_curve",
    "phase_transition",
    "two_step_curve",
    "three_step_demo",
    "irrep_report",
    "validate",
)
CURVE_EXPERIMENTS = ("recovery_curve", "rmse_curve", "phase_transition", "two_step_curve")

CSV_COLUMNS = ("experiment", "penalty", "grid1", "grid2", "estimate",
               "se", "reps", "seed", "method", "ms")


class ConfigError(Exception):
    """Config validation failure, anchored to a dotted field path."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True, eq=False)
class LabeledPenalty:
    label: str
    spec: PenaltySpec
    tuning: Optional[ConcaveFusedTuning] = None  # set for fused chains


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    experiment: str
    model: ModelSpec
    c_kind: str
    c_params: dict
    penalties: tuple
    alpha_grid: Optional[np.ndarray]
    rho_grid: Optional[np.ndarray]
    n_grid: Optional[np.ndarray]
    reps: int
    seed: int
    out: str
    methods: tuple
    candidates: tuple
    stages: Optional[dict]


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    penalty: str
    grid1: object
    grid2: object
    estimate: float
    se: float
    reps: int
    seed: int
    method: str
    ms: int


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def _get(d: dict, key: str, path: str, required: bool = True, default=None):
    if key in d:
        return d[key]
    if required:
        raise ConfigError(f"{path}.{key}", "missing required field")
    return default


def _parse_grid(obj, path: str) -> np.ndarray:
    if isinstance(obj, dict):
        start = _get(obj, "start", path)
        stop = _get(obj, "stop", path)
        count = _get(obj, "count", path)
        if not isinstance(count, int) or count < 1:
            raise ConfigError(f"{path}.count", "must be a positive integer")
        grid = np.linspace(float(start), float(stop), count)
    elif isinstance(obj, list):
        grid = np.asarray(obj, dtype=float)
    else:
        raise ConfigError(path, "expected a list or a {start, stop, count} triple")
    if grid.size == 0:
        raise ConfigError(path, "grid is empty")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ConfigError(path, "grid values must be strictly increasing")
    return grid


def _parse_beta0(obj, path: str) -> np.ndarray:
    if isinstance(obj, dict) and "runs" in obj:
        vals = []
        for i, run in enumerate(obj["runs"]):
            if not (isinstance(run, list) and len(run) == 2):
                raise ConfigError(f"{path}.runs[{i}]", "expected [value, count]")
            value, count = run
            if not isinstance(count, int) or count < 1:
                raise ConfigError(f"{path}.runs[{i}]", "count must be a positive integer")
            vals.extend([float(value)] * count)
        return np.asarray(vals)
    if isinstance(obj, list):
        return np.asarray(obj, dtype=float)
    raise ConfigError(path, "expected a list of numbers or {runs: [[value, count], ...]}")


def _build_cov(kind: str, params: dict, p: int, path: str) -> SPDMatrix:
    try:
        if kind == "identity":
            return SPDMatrix(np.eye(p))
        if kind == "equicorrelation":
            return equicorrelation(p, float(params.get("rho", 0.0)))
        if kind == "block":
            C = block_covariance(int(params["n_blocks"]), int(params["block_size"]),
                                 float(params["rho"]))
            if C.dim != p:
                raise ConfigError(path, f"block covariance has dimension {C.dim}, "
                                        f"but beta0 has {p}")
            return C
        if kind == "explicit":
            M = np.asarray(params["entries"], dtype=float)
            if M.shape != (p, p):
                raise ConfigError(path, f"entries have shape {M.shape}, expected ({p}, {p})")
            return SPDMatrix(M)
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}", "missing required field") from None
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.kind",
                      "unknown covariance kind (identity, equicorrelation, block, explicit)")


def _parse_model(d: dict, path: str):
    beta0 = _parse_beta0(_get(d, "beta0", path), f"{path}.beta0")
    sigma = float(_get(d, "sigma", path))
    c_obj = _get(d, "C", path)
    if not isinstance(c_obj, dict):
        raise ConfigError(f"{path}.C", "expected an object with a 'kind' field")
    kind = _get(c_obj, "kind", f"{path}.C")
    params = {k: v for k, v in c_obj.items() if k != "kind"}
    C = _build_cov(kind, params, beta0.size, f"{path}.C")
    try:
        model = ModelSpec(beta0, C, sigma)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None
    return model, kind, params


def _parse_penalty(d: dict, idx: int, p: int, path: str) -> LabeledPenalty:
    family = _get(d, "family", path)
    label = d.get("label", f"{family}_{idx}")
    alpha = float(d.get("alpha", 1.0))
    smooth = float(d.get("smooth_part", 0.0))
    tuning = None
    try:
        if family == "lasso":
            spec = lasso(float(d.get("lam", 1.0)), smooth_part=smooth, alpha=alpha)
        elif family == "ridge":
            spec = ridge(float(d.get("lam", 1.0)), alpha=alpha)
        elif family == "slope":
            if "lam_vec" in d:
                lam_vec = np.asarray(d["lam_vec"], dtype=float)
            elif "bh" in d:
                bh = d["bh"]
                lam_vec = slope_bh(p, float(bh["q"]), float(bh.get("scale", 1.0)))
            elif "linear" in d:
                lam_vec = slope_linear(p, float(d["linear"]["total"]))
            else:
                raise ConfigError(path, "slope needs lam_vec, bh, or linear")
            spec = slope(lam_vec, smooth_part=smooth, alpha=alpha)
        elif family == "gen_lasso":
            if "A" in d:
                spec = gen_lasso(np.asarray(d["A"], dtype=float),
                                 float(d.get("lam", 1.0)),
                                 smooth_part=smooth, alpha=alpha)
            elif "fused" in d:
                f = d["fused"]
                nu = kappa = None
                if "concavified" in f:
                    cc = f["concavified"]
                    nu, kappa = float(cc["nu"]), float(cc.get("kappa", 0.0))
                    weights = np.asarray(
                        concavified_sequence(p - 1, nu, kappa).weights)
                else:
                    weights = np.asarray(f["weights"], dtype=float)
                if weights.size != p - 1:
                    raise ConfigError(f"{path}.fused.weights",
                                      f"expected {p - 1} weights for p = {p}")
                sparsity = f.get("sparsity")
                if sparsity == "auto":
                    padded = np.concatenate([[0.0], weights, [0.0]])
                    sparsity = 1.001 * float(np.max(padded[:-1] + padded[1:]))
                elif sparsity is not None:
                    sparsity = float(sparsity)
                spec = fused_lasso(weights, sparsity, float(d.get("lam", 1.0)),
                                   alpha=alpha)
                tuning = ConcaveFusedTuning(tuple(weights.tolist()), sparsity,
                                            nu, kappa)
            else:
                raise ConfigError(path, "gen_lasso needs A or fused")
        else:
            raise ConfigError(f"{path}.family", f"unknown penalty family {family!r}")
    except ConfigError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None
    if spec.dim is not None and spec.dim != p:
        raise ConfigError(path, f"penalty dimension {spec.dim} does not match "
                                f"model dimension {p}")
    return LabeledPenalty(label, spec, tuning)


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a JSON-compatible config document."""
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be an object")
    experiment = _get(doc, "experiment", "config")
    if experiment not in EXPERIMENTS:
        raise ConfigError("config.experiment",
                          f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    if experiment == "validate":
        return ExperimentConfig(experiment, None, "", {}, (), None, None, None,
                                0, int(doc.get("seed", 0)), doc.get("out", "results"),
                                (), (), None)
    model, c_kind, c_params = _parse_model(_get(doc, "model", "config"), "config.model")
    p = model.dim
    pen_list = _get(doc, "penalties", "config")
    if not isinstance(pen_list, list) or not pen_list:
        raise ConfigError("config.penalties", "expected a nonempty list")
    penalties = tuple(_parse_penalty(d, i, p, f"config.penalties[{i}]")
                      for i, d in enumerate(pen_list))
    labels = [lp.label for lp in penalties]
    if len(set(labels)) != len(labels):
        raise ConfigError("config.penalties", "labels must be unique")

    grids = {}
    for name in ("alpha_grid", "rho_grid", "n_grid"):
        grids[name] = (_parse_grid(doc[name], f"config.{name}")
                       if name in doc else None)
    needed = {
        "recovery_curve": ("alpha_grid",),
        "rmse_curve": ("alpha_grid",),
        "phase_transition": ("alpha_grid", "rho_grid"),
        "two_step_curve": ("alpha_grid", "n_grid"),
        "three_step_demo": (),
        "irrep_report": (),
    }[experiment]
    for name in needed:
        if grids[name] is None:
            raise ConfigError(f"config.{name}", f"required by {experiment}")

    reps = int(_get(doc, "reps", "config", required=experiment != "irrep_report",
                    default=0))
    if experiment in CURVE_EXPERIMENTS and reps < 100:
        raise ConfigError("config.reps", "curve experiments require reps >= 100")
    if experiment == "three_step_demo" and reps < 1:
        raise ConfigError("config.reps", "three_step_demo requires reps >= 1")
    seed = int(_get(doc, "seed", "config"))

    methods = tuple(doc.get("methods", ["direct"]))
    for m in methods:
        if m not in ("direct", "closed_form"):
            raise ConfigError("config.methods", f"unknown method {m!r}")

    candidates = tuple(tuple(int(v) for v in c) for c in doc.get("candidates", []))

    stages = None
    if experiment == "three_step_demo":
        st = _get(doc, "stages", "config")
        stage1 = _parse_penalty(_get(st, "stage1", "config.stages"), 0, p,
                                "config.stages.stage1")
        stage2 = _parse_penalty(_get(st, "stage2", "config.stages"), 1, p,
                                "config.stages.stage2")
        alpha2 = float(_get(st, "alpha2", "config.stages"))
        n = int(_get(st, "n", "config.stages"))
        if n < 1:
            raise ConfigError("config.stages.n", "must be >= 1")
        stages = {"stage1": stage1, "stage2": stage2, "alpha2": alpha2, "n": n}

    if experiment == "phase_transition" and c_kind != "equicorrelation":
        raise ConfigError("config.model.C.kind",
                          "phase_transition sweeps rho and requires an "
                          "equicorrelation covariance")

    return ExperimentConfig(
        experiment, model, c_kind, c_params, penalties,
        grids["alpha_grid"], grids["rho_grid"], grids["n_grid"],
        reps, seed, doc.get("out", "results"), methods, candidates, stages,
    )


# ---------------------------------------------------------------------------
# Experiment cells
# ---------------------------------------------------------------------------


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, int(round(1000 * (time.perf_counter() - t0)))


def _cells_recovery(cfg: ExperimentConfig):
    def make(lp: LabeledPenalty, a: float):
        def cell():
            rows = []
            nonconv = total = 0
            for method in cfg.methods:
                if method == "direct":
                    (est, info), ms = _timed(lambda: recovery_probability_direct(
                        cfg.model, lp.spec.with_scale(lp.spec.global_scale * a),
                        cfg.reps, cfg.seed, details=True))
                    nonconv += info["nonconverged"]
                else:
                    est, ms = _timed(lambda: recovery_probability_closed_form(
                        cfg.model, lp.spec.with_scale(lp.spec.global_scale * a),
                        cfg.reps, cfg.seed))
                total += cfg.reps
                rows.append(ResultRow(cfg.experiment, lp.label, a, "", est.p_hat,
                                      est.se, cfg.reps, cfg.seed, method, ms))
            return rows, nonconv, total
        return cell

    return [make(lp, float(a)) for lp in cfg.penalties for a in cfg.alpha_grid]


def _cells_rmse(cfg: ExperimentConfig):
    def make_curve(lp: LabeledPenalty, a: float):
        def cell():
            (row,), ms = _timed(lambda: rmse_curve(
                cfg.model, lp.spec, [a], cfg.reps, cfg.seed))
            rows = [
                ResultRow(cfg.experiment, lp.label, a, "", row["rmse"],
                          row["rmse_se"], cfg.reps, cfg.seed, "rmse", ms),
                ResultRow(cfg.experiment, lp.label, a, "", row["recovery"],
                          row["recovery_se"], cfg.reps, cfg.seed, "recovery", ms),
            ]
            return rows, row["nonconverged"], cfg.reps
        return cell

    def make_baseline(lp: LabeledPenalty):
        def cell():
            base, ms = _timed(lambda: reduced_ols_baseline(cfg.model, lp.spec))
            row = ResultRow(cfg.experiment, lp.label, "", "", base["rmse"], 0.0,
                            0, cfg.seed, "reduced_ols_rmse", ms)
            return [row], 0, 0
        return cell

    cells = [make_curve(lp, float(a)) for lp in cfg.penalties for a in cfg.alpha_grid]
    cells += [make_baseline(lp) for lp in cfg.penalties]
    return cells


def _cells_phase(cfg: ExperimentConfig):
    p = cfg.model.dim

    def make(lp: LabeledPenalty, rho: float, a: float):
        def cell():
            model = ModelSpec(cfg.model.beta0, equicorrelation(p, rho), cfg.model.sigma)
            (est, info), ms = _timed(lambda: recovery_probability_direct(
                model, lp.spec.with_scale(lp.spec.global_scale * a),
                cfg.reps, cfg.seed, details=True))
            row = ResultRow(cfg.experiment, lp.label, rho, a, est.p_hat, est.se,
                            cfg.reps, cfg.seed, "direct", ms)
            return [row], info["nonconverged"], cfg.reps
        return cell

    return [make(lp, float(r), float(a))
            for lp in cfg.penalties for r in cfg.rho_grid for a in cfg.alpha_grid]


def _cells_two_step(cfg: ExperimentConfig):
    def make_finite(lp: LabeledPenalty, n: int):
        def cell():
            table, ms = _timed(lambda: two_step_recovery_rate(
                cfg.model, lp.spec, n, cfg.alpha_grid, cfg.reps, cfg.seed))
            rows = [ResultRow(cfg.experiment, lp.label, n, r["alpha"], r["rate"],
                              r["se"], cfg.reps, cfg.seed, "two_step", ms)
                    for r in table]
            return rows, 0, cfg.reps
        return cell

    def make_asymptotic(lp: LabeledPenalty, a: float):
        def cell():
            (est, info), ms = _timed(lambda: recovery_probability_direct(
                cfg.model, lp.spec.with_scale(lp.spec.global_scale * a),
                cfg.reps, cfg.seed, details=True))
            row = ResultRow(cfg.experiment, lp.label, "", a, est.p_hat, est.se,
                            cfg.reps, cfg.seed, "one_step_asymptotic", ms)
            return [row], info["nonconverged"], cfg.reps
        return cell

    cells = [make_finite(lp, int(n)) for lp in cfg.penalties for n in cfg.n_grid]
    cells += [make_asymptotic(lp, float(a))
              for lp in cfg.penalties for a in cfg.alpha_grid]
    return cells


def _cells_three_step(cfg: ExperimentConfig):
    st = cfg.stages
    target = pattern_of(st["stage2"].spec, cfg.model.beta0)

    def run_seed(r: int):
        data = generate_data(cfg.model, st["n"], RngStream(cfg.seed, r))
        return three_step_pipeline(data, st["stage1"].spec, st["stage2"].spec,
                                   st["alpha2"])

    def cell():
        t0 = time.perf_counter()
        rows = []
        err2, err3 = [], []
        hits = 0
        for r in range(cfg.reps):
            res = run_seed(r)
            rec = res.recovered and res.pattern2 == target
            hits += rec
            rows.append(ResultRow(cfg.experiment, st["stage2"].label, r, "",
                                  float(rec), 0.0, 1, cfg.seed, "stage2_recovered", 0))
            if rec:
                err2.append(float(np.sum((res.beta2 - cfg.model.beta0) ** 2)))
                if res.beta3 is not None:
                    err3.append(float(np.sum((res.beta3 - cfg.model.beta0) ** 2)))
        ms = int(round(1000 * (time.perf_counter() - t0)))
        rate = hits / cfg.reps
        rows.append(ResultRow(cfg.experiment, st["stage2"].label, "", "", rate,
                              float(np.sqrt(rate * (1 - rate) / cfg.reps)),
                              cfg.reps, cfg.seed, "stage2_exact_rate", ms))
        rmse2 = float(np.sqrt(np.mean(err2))) if err2 else float("nan")
        rmse3 = float(np.sqrt(np.mean(err3))) if err3 else float("nan")
        rows.append(ResultRow(cfg.experiment, st["stage2"].label, "", "", rmse2,
                              0.0, len(err2), cfg.seed, "stage2_rmse_given_recovery", ms))
        rows.append(ResultRow(cfg.experiment, st["stage2"].label, "", "", rmse3,
                              0.0, len(err3), cfg.seed, "stage3_rmse_given_recovery", ms))
        ratio = rmse3 / rmse2 if err2 and err3 and rmse2 > 0 else float("nan")
        rows.append(ResultRow(cfg.experiment, st["stage2"].label, "", "", ratio,
                              0.0, len(err3), cfg.seed, "stage3_over_stage2", ms))
        return rows, 0, cfg.reps

    return [cell]


def _cells_irrep(cfg: ExperimentConfig):
    def make(lp: LabeledPenalty):
        def cell():
            rows = []
            report, ms = _timed(lambda: irrepresentability_check(cfg.model, lp.spec))
            rows.append(ResultRow(cfg.experiment, lp.label, "", "",
                                  float(report.holds), 0.0, 0, cfg.seed,
                                  "irrep_holds", ms))
            rows.append(ResultRow(cfg.experiment, lp.label, "", "", report.margin,
                                  0.0, 0, cfg.seed, "irrep_margin", ms))
            if lp.tuning is not None:
                verdict = check_concavified(lp.tuning)
                rows.append(ResultRow(cfg.experiment, lp.label, "", "",
                                      float(verdict["valid"]), 0.0, 0, cfg.seed,
                                      "concavified_valid", ms))
            for ci, code in enumerate(cfg.candidates):
                cand = Pattern(lp.spec.family, code)
                ok = attainability_check(lp.spec, cfg.model.beta0, cand)
                rows.append(ResultRow(cfg.experiment, lp.label, ci, "", float(ok),
                                      0.0, 0, cfg.seed, "attainable", ms))
            return rows, 0, 0
        return cell

    return [make(lp) for lp in cfg.penalties]


def _cells_validate(cfg: ExperimentConfig, quick: bool = False):
    from . import validation

    def cell():
        results, ms = _timed(lambda: validation.run_all(quick))
        rows = [ResultRow("validate", r.name, "", "", float(r.passed), 0.0, 0,
                          cfg.seed, "validate", ms) for r in results]
        nonconv = sum(0 if r.passed else 1 for r in results)
        return rows, 0, 0, results  # extra element consumed by run()
    return [cell]


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def check_design(cfg: ExperimentConfig) -> dict:
    """Irrepresentability, attainability, and concavity diagnostics."""
    out = {"penalties": []}
    for lp in cfg.penalties:
        entry = {"label": lp.label, "family": lp.spec.family}
        report = irrepresentability_check(cfg.model, lp.spec)
        entry["irrepresentability"] = {
            "holds": bool(report.holds),
            "margin": float(report.margin),
            "mu": [float(v) for v in report.mu],
        }
        if report.boundary_note:
            entry["irrepresentability"]["note"] = report.boundary_note
        if lp.tuning is not None:
            verdict = check_concavified(lp.tuning)
            entry["concavified"] = {
                "valid": bool(verdict["valid"]),
                "violations": list(verdict["violations"]),
            }
        cands = []
        for code in cfg.candidates:
            cand = Pattern(lp.spec.family, code)
            try:
                ok = attainability_check(lp.spec, cfg.model.beta0, cand)
                cands.append({"code": list(code), "attainable": bool(ok)})
            except ValueError as exc:
                cands.append({"code": list(code), "error": str(exc)})
        if cands:
            entry["candidates"] = cands
        out["penalties"].append(entry)
    return out


def _format_field(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _write_csv(path: str, rows, cfg: ExperimentConfig) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# patternlab %s results: %s\n" % (__version__, cfg.experiment))
        fh.write("# columns: experiment,penalty,grid1,grid2,estimate,se,reps,seed,"
                 "method,ms\n")
        fh.write("# grid1/grid2 meaning depends on the experiment (alpha, rho, n, "
                 "seed index, or empty); ms is wall time and not reproducible\n")
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([r.experiment, r.penalty, _format_field(r.grid1),
                        _format_field(r.grid2), _format_field(r.estimate),
                        _format_field(r.se), r.reps, r.seed, r.method, r.ms])


def run(cfg: ExperimentConfig, threads: Optional[int] = None,
        out_dir: Optional[str] = None, quick: bool = False) -> int:
    """Execute the experiment; returns the process exit code."""
    t0 = time.perf_counter()
    if cfg.experiment == "validate":
        cells = _cells_validate(cfg, quick)
        outputs = [c() for c in cells]
        results = outputs[0][3]
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
        n_pass = sum(r.passed for r in results)
        print(f"{n_pass}/{len(results)} checks passed")
        outputs = [o[:3] for o in outputs]
        exit_code = 0 if n_pass == len(results) else 2
    else:
        builders = {
            "recovery_curve": _cells_recovery,
            "rmse_curve": _cells_rmse,
            "phase_transition": _cells_phase,
            "two_step_curve": _cells_two_step,
            "three_step_demo": _cells_three_step,
            "irrep_report": _cells_irrep,
        }
        cells = builders[cfg.experiment](cfg)
        workers = threads or os.cpu_count() or 1
        if workers > 1 and len(cells) > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                outputs = list(ex.map(lambda c: c(), cells))
        else:
            outputs = [c() for c in cells]
        exit_code = 0

    rows = [row for out in outputs for row in out[0]]
    nonconv = sum(out[1] for out in outputs)
    reps_total = sum(out[2] for out in outputs)
    if reps_total and nonconv > 0.001 * reps_total:
        exit_code = max(exit_code, 3)

    directory = out_dir or cfg.out
    os.makedirs(directory, exist_ok=True)
    base = f"{cfg.experiment}_{cfg.seed}"
    csv_path = os.path.join(directory, base + ".csv")
    _write_csv(csv_path, rows, cfg)
    manifest = {
        "experiment": cfg.experiment,
        "version": __version__,
        "seed": cfg.seed,
        "reps_total": reps_total,
        "nonconverged": nonconv,
        "rows": len(rows),
        "csv": os.path.basename(csv_path),
        "wall_ms": int(round(1000 * (time.perf_counter() - t0))),
        "exit_code": exit_code,
    }
    with open(os.path.join(directory, base + ".manifest.json"), "w",
              encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {csv_path} ({len(rows)} rows, {nonconv}/{reps_total} non-converged)")
    return exit_code


def _load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(path, "file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return parse_config(doc)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="patternlab",
        description="Pattern-recovery experiments for polyhedral-gauge "
                    "penalized regression.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: all cores); results do "
                            "not depend on this")
    p_run.add_argument("--out", default=None, help="output directory override")

    p_check = sub.add_parser("check", help="design diagnostics for a config")
    p_check.add_argument("config")

    p_val = sub.add_parser("validate", help="run the built-in oracle suite")
    p_val.add_argument("--quick", action="store_true",
                       help="smaller fixture counts")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = _load_config(args.config)
            return run(cfg, threads=args.threads, out_dir=args.out)
        if args.command == "check":
            cfg = _load_config(args.config)
            report = check_design(cfg)
            print(json.dumps(report, indent=2, sort_keys=True))
            return 0
        # validate
        from . import validation
        results = validation.run_all(args.quick)
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
        n_pass = sum(r.passed for r in results)
        print(f"{n_pass}/{len(results)} checks passed")
        return 0 if n_pass == len(results) else 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
