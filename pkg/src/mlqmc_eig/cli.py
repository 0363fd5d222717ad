"""Experiment runner: config parsing, orchestration, CSV artifacts.

Config files are flat ``key = value`` text (see docs/config.md); unknown
keys are rejected and all numeric ranges enforced.  Every run directory
receives a manifest (config hash, code version, seed) sufficient to
reproduce each CSV, with wall-clock timings quarantined to timing.json so
CSV bodies stay byte-identical for identical config + seed when the
deterministic cost model is selected.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, mlqmc, oracle
from .coeff import BUILTIN_KINDS, constant_expansion, make_builtin_family
from .eigsolve import EigsolveError, smallest_eigenpair
from .fem import CoefficientPositivityError, assemble
from .lattice import cbc_construct, load_generating_vector, save_generating_vector
from .mlqmc import (BudgetExceededError, Functional, Hierarchy,
                    LevelEvaluationError, LevelSpec, adapt, fit_rates,
                    fixed_schedule, geometric_schedule, ml_estimate_all,
                    model_cost)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_SOLVER = 4

CSV_VERSION = "v1"

LEVELS_COLUMNS = ["ell", "h", "s", "N", "R", "mean", "variance",
                  "cost_seconds", "solver_iters_mean", "solver_resid_max"]
SUMMARY_COLUMNS = ["quantity", "total", "bias_estimate", "stat_error", "cost_total"]
TRACE_COLUMNS = ["step", "ell_doubled", "N_after", "var_sum", "bias_est"]
RATES_COLUMNS = ["quantity", "fit", "slope"]
VALIDATE_COLUMNS = ["quantity", "estimator", "oracle", "abs_error", "rel_error"]


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config schema
# ---------------------------------------------------------------------------

def _bool(v: str) -> bool:
    if v.lower() in ("true", "1", "yes", "on"):
        return True
    if v.lower() in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _choice(*opts):
    def cast(v: str) -> str:
        if v not in opts:
            raise ValueError(f"expected one of {opts}, got {v!r}")
        return v
    return cast


def _pow2(v: str) -> int:
    n = int(v)
    if n < 1 or n & (n - 1):
        raise ValueError(f"expected a power of two, got {v}")
    return n


# key -> (caster, default, range check)
SCHEMA = {
    "problem.dim": (int, 1, lambda v: v in (1, 2)),
    "problem.kind": (_choice(*BUILTIN_KINDS), "sine-decay", None),
    "problem.theta": (float, 2.0, lambda v: v > 1.0),
    "problem.with_b": (_bool, False, None),
    "problem.functional": (_choice("mean", "indicator"), "mean", None),
    "problem.functional_lo": (float, 0.0, lambda v: 0.0 <= v <= 1.0),
    "problem.functional_hi": (float, 1.0, lambda v: 0.0 <= v <= 1.0),
    "discretization.h0": (float, 0.25, lambda v: 0.0 < v < 1.0),
    "discretization.L": (int, 3, lambda v: v >= 0),
    "discretization.s_mode": (_choice("fixed", "geometric"), "fixed", None),
    "discretization.s": (int, 16, lambda v: v >= 0),
    "discretization.s0": (int, 1, lambda v: v >= 1),
    "discretization.s_max": (int, 64, lambda v: v >= 1),
    "qmc.delta": (float, 0.1, lambda v: 0.0 < v < 1.0),
    "qmc.R": (int, 8, lambda v: v >= 1),
    "qmc.N_min": (_pow2, 16, None),
    "qmc.N0": (_pow2, 128, None),
    "qmc.N_decay": (_pow2, 2, None),
    "qmc.weight_constant": (float, 1.0, lambda v: v > 0.0),
    "qmc.seed": (int, 42, lambda v: v >= 0),
    "run.mode": (_choice("single", "ml", "adaptive", "validate", "rates"), "ml", None),
    "run.eps": (float, 1e-3, lambda v: v > 0.0),
    "run.quantity": (_choice("eigenvalue", "functional"), "eigenvalue", None),
    "run.alpha_hat": (float, 2.0, lambda v: v > 0.0),
    "run.out": (str, "out", None),
    "run.workers": (int, 1, lambda v: v >= 1),
    "run.max_levels": (int, 10, lambda v: v >= 0),
    "run.max_cost_seconds": (float, 900.0, lambda v: v > 0.0),
    "run.cost_model": (_bool, False, None),
    "run.cost_gamma": (float, 0.0, lambda v: v >= 0.0),   # 0 means "use dim"
    "run.solver_tol": (float, 1e-10, lambda v: v > 0.0),
}


class ExperimentConfig:
    """Validated flat-key configuration."""

    def __init__(self, values: dict):
        self.values = values

    def __getitem__(self, key: str):
        return self.values[key]

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in SCHEMA:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            caster, _, check = SCHEMA[key]
            try:
                parsed = caster(val)
            except ValueError as err:
                raise ConfigError(f"line {lineno}: bad value for {key}: {err}") from err
            if check is not None and not check(parsed):
                raise ConfigError(f"line {lineno}: value {parsed!r} out of range for {key}")
            values[key] = parsed
        for key, (_, default, _) in SCHEMA.items():
            values.setdefault(key, default)
        cfg = cls(values)
        cfg._cross_validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        return cls.from_text(text)

    def _cross_validate(self):
        v = self.values
        if v["problem.functional"] == "indicator":
            if v["problem.dim"] != 1:
                raise ConfigError("indicator functional requires problem.dim = 1")
            if not v["problem.functional_lo"] < v["problem.functional_hi"]:
                raise ConfigError("functional_lo must be below functional_hi")
        if v["qmc.N0"] < v["qmc.N_min"]:
            raise ConfigError("qmc.N0 must be at least qmc.N_min")
        if v["discretization.s_mode"] == "geometric" \
                and v["discretization.s0"] > v["discretization.s_max"]:
            raise ConfigError("discretization.s0 exceeds s_max")

    def canonical_text(self) -> str:
        return "\n".join(f"{k} = {self.values[k]!r}" for k in sorted(self.values))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


# ---------------------------------------------------------------------------
# Artifact writers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, kind: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# mlqmc-eig csv {kind} {CSV_VERSION}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def levels_rows(est: mlqmc.MLEstimate) -> list[list]:
    return [[ell, est.hs[ell], est.ss[ell], est.Ns[ell], est.R,
             est.per_level_mean[ell], est.per_level_variance[ell],
             est.per_level_cost[ell] * est.R * est.Ns[ell],
             est.solver_iters[ell], est.solver_resid[ell]]
            for ell in range(est.per_level_mean.size)]


def summary_rows(ests: dict[str, mlqmc.MLEstimate]) -> list[list]:
    return [[q, e.total, e.bias_estimate, e.statistical_error, e.cost_total]
            for q, e in ests.items()]


def write_manifest(outdir: Path, cfg: ExperimentConfig, mode: str, seed: int,
                   argv: list[str]) -> None:
    manifest = {
        "tool": "mlqmc-eig",
        "version": __version__,
        "mode": mode,
        "seed": seed,
        "config_hash": cfg.digest(),
        "config": cfg.values,
        "argv": argv,
        "timestamp_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def write_timing(outdir: Path, timings: dict) -> None:
    (outdir / "timing.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n")


def write_error(outdir: Path | None, code: int, kind: str, message: str,
                detail: dict | None = None) -> None:
    payload = {"exit_code": code, "error": kind, "message": message}
    if detail:
        payload["detail"] = detail
    text = json.dumps(payload, indent=2, sort_keys=True)
    if outdir is not None:
        try:
            outdir.mkdir(parents=True, exist_ok=True)
            (outdir / "error.json").write_text(text + "\n")
        except OSError:
            pass
    print(text, file=sys.stderr)


# ---------------------------------------------------------------------------
# Problem construction and CBC cache
# ---------------------------------------------------------------------------

def build_problem(cfg: ExperimentConfig):
    v = cfg.values
    # s = 0 keeps an empty series: the constant-coefficient problem.
    smax_needed = v["discretization.s"] if v["discretization.s_mode"] == "fixed" \
        else v["discretization.s_max"]
    try:
        exp = make_builtin_family(v["problem.kind"], v["problem.theta"],
                                  smax_needed, with_b=v["problem.with_b"])
    except ValueError as err:
        raise ConfigError(f"coefficient family rejected: {err}") from err
    functional = Functional(v["problem.functional"],
                            v["problem.functional_lo"], v["problem.functional_hi"])
    return exp, functional


def schedule_from(cfg: ExperimentConfig):
    v = cfg.values
    if v["discretization.s_mode"] == "fixed":
        return fixed_schedule(max(v["discretization.s"], 1))
    return geometric_schedule(v["discretization.s0"], v["discretization.s_max"])


def weight_digest(cfg: ExperimentConfig, N: int, s: int) -> str:
    v = cfg.values
    text = "|".join(str(x) for x in (
        "v1", v["problem.kind"], v["problem.theta"], v["problem.with_b"],
        v["qmc.delta"], v["qmc.weight_constant"], N, s))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def disk_rule_source(cfg: ExperimentConfig, cbc_dir: Path, *, rebuilt: list | None = None):
    """Generating-vector provider backed by digest-stamped cache files."""
    cbc_dir.mkdir(parents=True, exist_ok=True)

    def source(N: int, s: int, weights) -> np.ndarray:
        digest = weight_digest(cfg, N, s)
        path = cbc_dir / f"z_N{N}_s{s}_{digest}.txt"
        if path.exists():
            try:
                z, n_stored, stored = load_generating_vector(path)
                if n_stored == N and z.size == s and stored == digest:
                    return z
                warnings.warn(f"cbc cache {path.name}: digest mismatch, rebuilding")
            except (ValueError, OSError) as err:
                warnings.warn(f"cbc cache {path.name}: corrupt ({err}), rebuilding")
        z = cbc_construct(N, s, weights)
        save_generating_vector(path, z, N, digest=digest)
        if rebuilt is not None:
            rebuilt.append(path)
        return z

    return source


def make_hierarchy(cfg: ExperimentConfig, outdir: Path) -> Hierarchy:
    exp, _ = build_problem(cfg)
    source = disk_rule_source(cfg, outdir / "cbc")
    return Hierarchy(exp, cfg["problem.dim"], cfg["discretization.h0"],
                     schedule_from(cfg), delta=cfg["qmc.delta"],
                     c_beta=cfg["qmc.weight_constant"], rule_source=source)


def level_point_counts(cfg: ExperimentConfig, L: int) -> list[int]:
    N0, decay, N_min = cfg["qmc.N0"], cfg["qmc.N_decay"], cfg["qmc.N_min"]
    return [max(N_min, N0 // decay**ell) for ell in range(L + 1)]


def _cost_model(cfg: ExperimentConfig):
    if not cfg["run.cost_model"]:
        return None
    gamma = cfg["run.cost_gamma"] or None
    return model_cost(cfg["problem.dim"], gamma)


# ---------------------------------------------------------------------------
# Mode runners
# ---------------------------------------------------------------------------

def run_single(cfg: ExperimentConfig, outdir: Path, seed: int, workers: int) -> int:
    hier = make_hierarchy(cfg, outdir)
    _, functional = build_problem(cfg)
    L = cfg["discretization.L"]
    s_fin = max(1, schedule_from(cfg)(L))
    spec = LevelSpec(ell=0, mesh=hier.mesh(L), mesh_coarse=None,
                     s=s_fin, s_coarse=0, N=cfg["qmc.N0"],
                     z=hier.vector(cfg["qmc.N0"], s_fin))
    ests = ml_estimate_all([spec], hier.exp, cfg["qmc.R"], seed,
                           functional=functional, alpha_hat=cfg["run.alpha_hat"],
                           tol=cfg["run.solver_tol"], workers=workers,
                           cost_model=_cost_model(cfg))
    _write_run_outputs(outdir, ests)
    return EXIT_OK


def run_ml(cfg: ExperimentConfig, outdir: Path, seed: int, workers: int) -> int:
    hier = make_hierarchy(cfg, outdir)
    _, functional = build_problem(cfg)
    L = cfg["discretization.L"]
    levels = hier.levels(L, level_point_counts(cfg, L))
    ests = ml_estimate_all(levels, hier.exp, cfg["qmc.R"], seed,
                           functional=functional, alpha_hat=cfg["run.alpha_hat"],
                           tol=cfg["run.solver_tol"], workers=workers,
                           cost_model=_cost_model(cfg))
    _write_run_outputs(outdir, ests)
    return EXIT_OK


def _write_run_outputs(outdir: Path, ests: dict[str, mlqmc.MLEstimate]) -> None:
    write_csv(outdir / "levels.csv", "levels", LEVELS_COLUMNS,
              levels_rows(ests["eigenvalue"]))
    write_csv(outdir / "levels_functional.csv", "levels", LEVELS_COLUMNS,
              levels_rows(ests["functional"]))
    write_csv(outdir / "summary.csv", "summary", SUMMARY_COLUMNS, summary_rows(ests))


def run_adaptive(cfg: ExperimentConfig, outdir: Path, seed: int, workers: int) -> int:
    hier = make_hierarchy(cfg, outdir)
    _, functional = build_problem(cfg)
    L0 = cfg["discretization.L"]
    levels = hier.levels(L0, [cfg["qmc.N_min"]] * (L0 + 1))
    est, trace = adapt(
        levels, cfg["run.eps"], cfg["qmc.R"], seed,
        alpha_hat=cfg["run.alpha_hat"], hierarchy=hier, functional=functional,
        quantity=cfg["run.quantity"], N_min=cfg["qmc.N_min"],
        max_levels=cfg["run.max_levels"],
        max_cost_seconds=cfg["run.max_cost_seconds"],
        tol=cfg["run.solver_tol"], workers=workers, cost_model=_cost_model(cfg))
    write_csv(outdir / "levels.csv", "levels", LEVELS_COLUMNS, levels_rows(est))
    write_csv(outdir / "summary.csv", "summary", SUMMARY_COLUMNS,
              [[est.quantity, est.total, est.bias_estimate,
                est.statistical_error, est.cost_total]])
    write_csv(outdir / "adapt_trace.csv", "adapt_trace", TRACE_COLUMNS,
              [[t.step, t.ell_doubled, t.N_after, t.var_sum, t.bias_est]
               for t in trace])
    return EXIT_OK


def run_rates(cfg: ExperimentConfig, outdir: Path, seed: int, workers: int) -> int:
    L = cfg["discretization.L"]
    if L < 3:
        raise ConfigError("rates mode needs discretization.L >= 3 for a slope fit")
    hier = make_hierarchy(cfg, outdir)
    _, functional = build_problem(cfg)
    levels = hier.levels(L, level_point_counts(cfg, L))
    ests = ml_estimate_all(levels, hier.exp, cfg["qmc.R"], seed,
                           functional=functional, alpha_hat=cfg["run.alpha_hat"],
                           tol=cfg["run.solver_tol"], workers=workers,
                           cost_model=_cost_model(cfg))
    _write_run_outputs(outdir, ests)
    rows = []
    h_coarse = np.array([levels[ell].h_coarse for ell in range(1, L + 1)])
    for q, est in ests.items():
        rows.append([q, "variance_vs_h_coarse",
                     fit_rates(h_coarse, est.per_level_variance[1:])])
        rows.append([q, "mean_vs_h_coarse",
                     fit_rates(h_coarse, np.abs(est.per_level_mean[1:]))])
    write_csv(outdir / "rates.csv", "rates", RATES_COLUMNS, rows)
    return EXIT_OK


def run_cbc(cfg: ExperimentConfig, outdir: Path, seed: int, workers: int) -> int:
    hier = make_hierarchy(cfg, outdir)
    L = cfg["discretization.L"]
    sched = schedule_from(cfg)
    for ell, N in enumerate(level_point_counts(cfg, L)):
        hier.vector(N, max(1, sched(ell)))
    print(f"cbc cache ready under {outdir / 'cbc'}")
    return EXIT_OK


def run_validate(cfg: ExperimentConfig, outdir: Path, seed: int, workers: int) -> int:
    hier = make_hierarchy(cfg, outdir)
    exp, functional = build_problem(cfg)
    tol = cfg["run.solver_tol"]
    rows = []
    failures = []

    def record(name: str, got: float, want: float, tolerance: float):
        abs_err = abs(got - want)
        rel_err = abs_err / max(abs(want), 1e-30)
        rows.append([name, got, want, abs_err, rel_err])
        if abs_err > tolerance:
            failures.append({"check": name, "abs_error": abs_err,
                             "tolerance": tolerance})

    const = constant_expansion()
    for ell in range(min(cfg["discretization.L"], 3) + 1):
        mesh = hier.mesh(ell)
        pair = smallest_eigenpair(assemble(mesh, const, np.zeros(0)), tol=1e-13)
        if cfg["problem.dim"] == 1:
            ref = oracle.discrete_laplacian_eigenvalue(mesh.spacing, 1)
        else:
            vals, _ = oracle.dense_reference_eigenpairs(
                assemble(mesh, const, np.zeros(0)), 1)
            ref = float(vals[0])
        record(f"laplacian_lambda_h_ell{ell}", pair.lam, ref, 1e-8 * ref)

    rng = np.random.Generator(np.random.Philox(seed))
    sched = schedule_from(cfg)
    s_chk = max(1, sched(0))
    mesh_chk = hier.mesh(0)
    for i in range(3):
        y = rng.uniform(-0.5, 0.5, s_chk)
        sys_pair = assemble(mesh_chk, exp, y)
        if sys_pair.n <= oracle.MAX_DENSE_DOF:
            got = smallest_eigenpair(sys_pair, tol=1e-13).lam
            vals, _ = oracle.dense_reference_eigenpairs(sys_pair, 1)
            record(f"dense_agreement_{i}", got, float(vals[0]), 1e-9 * abs(vals[0]))

    L = cfg["discretization.L"]
    levels = hier.levels(L, [cfg["qmc.N_min"]] * (L + 1))
    s_fin = levels[-1].s
    worst = 0.0
    for _ in range(20):
        y = rng.uniform(-0.5, 0.5, s_fin)
        tele = sum(mlqmc.level_difference(levels, ell, y[:levels[ell].s], exp, tol=tol)
                   for ell in range(L + 1))
        direct = smallest_eigenpair(assemble(hier.mesh(L), exp, y), tol=tol).lam
        worst = max(worst, abs(tele - direct))
    rows.append(["telescoping_max_abs_err", worst, 0.0, worst, worst])
    if worst > 1e-11:
        failures.append({"check": "telescoping_max_abs_err",
                         "abs_error": worst, "tolerance": 1e-11})

    s_t = min(s_fin, 2)
    quad = oracle.TensorQuadrature.build(s_t, 8)
    mesh_fin = hier.mesh(L)

    def lam_batch(pts):
        out = np.empty(pts.shape[0])
        for i in range(pts.shape[0]):
            y_full = np.zeros(s_fin)
            y_full[:s_t] = pts[i]
            out[i] = smallest_eigenpair(assemble(mesh_fin, exp, y_full), tol=tol).lam
        return out

    ref = oracle.expect_tensor(lam_batch, quad)
    ests = ml_estimate_all(levels, exp, max(cfg["qmc.R"], 4), seed,
                           functional=functional, tol=tol, workers=workers)
    est = ests["eigenvalue"]
    # The hierarchy integrates over all s_fin coordinates; restrict the
    # comparison tolerance to the statistical error plus the weight of the
    # untruncated coordinates.
    slack = 6.0 * est.statistical_error + 1e-8
    if s_fin > s_t:
        slack += 0.5 * float(np.sum(exp.term_norms(s_fin)[s_t:]))
    record("expectation_vs_tensor", est.total, ref, slack)

    write_csv(outdir / "validate.csv", "validate", VALIDATE_COLUMNS, rows)
    if failures:
        write_error(outdir, EXIT_VALIDATION, "validation",
                    f"{len(failures)} validation check(s) failed",
                    {"failures": failures})
        return EXIT_VALIDATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

MODE_RUNNERS = {
    "single": run_single,
    "ml": run_ml,
    "adaptive": run_adaptive,
    "rates": run_rates,
    "validate": run_validate,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlqmc-eig",
        description="Multilevel QMC estimation of random elliptic eigenvalues")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("run", "run the mode selected in the config file"),
        ("cbc", "construct and cache generating vectors"),
        ("validate", "run oracle comparisons (forces mode=validate)"),
        ("rates", "run the variance/bias rate report (forces mode=rates)"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the experiment config")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="RNG seed override (u64)")
        p.add_argument("--workers", type=int, default=None, help="worker pool size")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = make_parser().parse_args(argv)
    # A CLI/env output override is usable for error reports even when the
    # config itself fails to parse.
    early_out = args.out or os.environ.get("MLQMC_EIG_OUT")
    outdir: Path | None = Path(early_out) if early_out else None
    try:
        cfg = ExperimentConfig.from_file(args.config)
        outdir = Path(args.out or os.environ.get("MLQMC_EIG_OUT") or cfg["run.out"])
        outdir.mkdir(parents=True, exist_ok=True)
        seed = args.seed if args.seed is not None else cfg["qmc.seed"]
        if seed < 0:
            raise ConfigError("seed must be nonnegative")
        workers = args.workers if args.workers is not None else cfg["run.workers"]
        if workers < 1:
            raise ConfigError("workers must be >= 1")

        mode = {"validate": "validate", "rates": "rates"}.get(args.command,
                                                              cfg["run.mode"])
        write_manifest(outdir, cfg, mode if args.command != "cbc" else "cbc",
                       seed, argv)
        t0 = time.perf_counter()
        if args.command == "cbc":
            code = run_cbc(cfg, outdir, seed, workers)
        else:
            code = MODE_RUNNERS[mode](cfg, outdir, seed, workers)
        write_timing(outdir, {"wall_seconds": time.perf_counter() - t0})
        return code
    except ConfigError as err:
        write_error(outdir, EXIT_CONFIG, "config", str(err))
        return EXIT_CONFIG
    except BudgetExceededError as err:
        write_error(outdir, EXIT_BUDGET, "budget", str(err),
                    {"trace_steps": len(err.trace)})
        return EXIT_BUDGET
    except (EigsolveError, LevelEvaluationError, CoefficientPositivityError) as err:
        write_error(outdir, EXIT_SOLVER, "solver", str(err))
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
