"""Multilevel QMC estimation of eigenvalue expectations.

The estimator telescopes over a hierarchy of (mesh, truncation) levels,

    E[lambda_L] = sum_l E[lambda_l - lambda_{l-1}],    lambda_{-1} := 0,

and approximates each term with an independently shifted lattice rule.
The coarse member of every difference is evaluated at the truncated prefix
of the same parameter point.  Per-level sample variances over the R shifts
drive both the error reporting and the adaptive sample allocation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from time import perf_counter
from typing import Callable, Sequence

import numpy as np

from . import fem
from .coeff import CoefficientExpansion, _y_values
from .eigsolve import smallest_eigenpair, tridiag_smallest
from .lattice import (LatticeRule, PODWeights, cbc_construct,
                      compute_pod_weights, estimate_from_shifts,
                      generate_points, shifts_for_level)

QUANTITIES = ("eigenvalue", "functional")


class BudgetExceededError(RuntimeError):
    """Adaptive run hit a level or cost cap before converging."""

    def __init__(self, message: str, trace=None, partial=None):
        super().__init__(message)
        self.trace = trace or []
        self.partial = partial


class LevelEvaluationError(RuntimeError):
    """A solver failure, tagged with the level and sample that caused it."""


@dataclass
class Functional:
    """Linear functional of the eigenfunction, realized as dof weights."""

    kind: str = "mean"      # "mean": integral over D; "indicator": over [lo, hi]
    lo: float = 0.0
    hi: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False)

    def weights(self, mesh: fem.MeshLevel) -> np.ndarray:
        entry = self._cache.get(id(mesh))
        if entry is None or entry[0] is not mesh:
            if self.kind == "mean":
                w = fem.functional_weights(mesh)
            elif self.kind == "indicator":
                w = fem.indicator_weights(mesh, self.lo, self.hi)
            else:
                raise ValueError(f"unknown functional kind {self.kind!r}")
            entry = (mesh, w)
            self._cache[id(mesh)] = entry
        return entry[1]


@dataclass
class LevelSpec:
    """All inputs needed to sample one telescoping difference."""

    ell: int
    mesh: fem.MeshLevel
    mesh_coarse: fem.MeshLevel | None
    s: int
    s_coarse: int
    N: int
    z: np.ndarray
    cost_per_sample: float | None = None

    @property
    def h(self) -> float:
        return self.mesh.h

    @property
    def h_coarse(self) -> float:
        return self.mesh_coarse.h if self.mesh_coarse is not None else 1.0


@dataclass
class MLEstimate:
    """Totals and per-level statistics of one multilevel run."""

    quantity: str
    per_level_mean: np.ndarray
    per_level_variance: np.ndarray
    Ns: np.ndarray
    hs: np.ndarray
    ss: np.ndarray
    R: int
    bias_estimate: float
    per_level_cost: np.ndarray     # per integrand sample, seconds or model units
    solver_iters: np.ndarray
    solver_resid: np.ndarray
    total: float = field(init=False)
    statistical_error: float = field(init=False)
    cost_total: float = field(init=False)

    def __post_init__(self):
        self.per_level_mean = np.asarray(self.per_level_mean, dtype=float)
        self.per_level_variance = np.asarray(self.per_level_variance, dtype=float)
        self.total = float(np.sum(self.per_level_mean))
        self.statistical_error = float(np.sqrt(np.sum(self.per_level_variance)))
        self.cost_total = float(np.sum(self.R * self.Ns * self.per_level_cost))

    @property
    def L(self) -> int:
        return self.per_level_mean.size - 1


@dataclass
class LevelPass:
    """Raw per-shift outcomes of estimating one level."""

    per_shift: dict
    seconds: float
    iters_mean: float
    R: int
    N: int
    resid_max: float = 0.0

    def estimate(self, quantity: str):
        return estimate_from_shifts(self.per_shift[quantity], self.R * self.N)


@dataclass
class TraceRow:
    step: int
    ell_doubled: int
    N_after: int
    var_sum: float
    bias_est: float


# ---------------------------------------------------------------------------
# Hierarchy construction
# ---------------------------------------------------------------------------

def fixed_schedule(s_L: int) -> Callable[[int], int]:
    return lambda ell: s_L


def geometric_schedule(s0: int, s_max: int) -> Callable[[int], int]:
    return lambda ell: min(s_max, s0 * 2**ell)


class Hierarchy:
    """Owns the meshes, weights and generating vectors of one problem.

    ``rule_source(N, s, weights)`` may supply cached generating vectors;
    anything it does not provide is CBC-constructed on demand and memoised.
    """

    def __init__(self, exp: CoefficientExpansion, dim: int, h0: float,
                 s_schedule: Callable[[int], int], delta: float = 0.1,
                 c_beta: float = 1.0, rule_source=None):
        self.exp = exp
        self.dim = dim
        self.h0 = h0
        self.s_schedule = s_schedule
        self.delta = delta
        self.c_beta = c_beta
        self.rule_source = rule_source
        self._meshes: dict[int, fem.MeshLevel] = {}
        self._weights: dict[int, PODWeights] = {}
        self._vectors: dict[tuple[int, int], np.ndarray] = {}

    def mesh(self, ell: int) -> fem.MeshLevel:
        m = self._meshes.get(ell)
        if m is None:
            m = fem.build_level(self.dim, self.h0, ell)
            self._meshes[ell] = m
        return m

    def weights_for(self, s: int) -> PODWeights:
        w = self._weights.get(s)
        if w is None:
            if self.exp.s_max >= s >= 1:
                w = compute_pod_weights(
                    self.exp.term_norms(s), self.exp.decay_p, self.exp.decay_q,
                    self.delta, s, betas_hat=self.exp.term_norms_grad(s),
                    c_beta=self.c_beta)
            else:
                # Degenerate family (constant problem): flat unit weights.
                w = PODWeights.from_base(np.ones(max(s, 1)), 2.0 / 3.0, 0.125)
            self._weights[s] = w
        return w

    def vector(self, N: int, s: int) -> np.ndarray:
        key = (N, s)
        z = self._vectors.get(key)
        if z is None:
            w = self.weights_for(s)
            if self.rule_source is not None:
                z = self.rule_source(N, s, w)
            if z is None:
                z = cbc_construct(N, s, w)
            self._vectors[key] = z
        return z

    def spec(self, ell: int, N: int) -> LevelSpec:
        s = max(1, self.s_schedule(ell))
        s_coarse = max(1, self.s_schedule(ell - 1)) if ell > 0 else 0
        return LevelSpec(
            ell=ell,
            mesh=self.mesh(ell),
            mesh_coarse=self.mesh(ell - 1) if ell > 0 else None,
            s=s, s_coarse=s_coarse, N=int(N),
            z=self.vector(int(N), s),
        )

    def levels(self, L: int, Ns: Sequence[int]) -> list[LevelSpec]:
        if len(Ns) != L + 1:
            raise ValueError("need one N per level")
        return [self.spec(ell, Ns[ell]) for ell in range(L + 1)]


# ---------------------------------------------------------------------------
# Level evaluation
# ---------------------------------------------------------------------------

def _solve_points(mesh: fem.MeshLevel, exp: CoefficientExpansion,
                  Y: np.ndarray, tol: float, w_g: np.ndarray):
    """Smallest eigenvalue, functional value and solver stats per row of Y."""
    if mesh.dim == 1:
        batch = fem.assemble_tridiag_batch(mesh, exp, Y)
        lams, us, iters = tridiag_smallest(batch, tol=tol)
        r = _batch_residuals(batch, lams, us)
        return lams, us @ w_g, float(iters), float(np.max(r))
    B = Y.shape[0]
    lams = np.empty(B)
    gs = np.empty(B)
    iters = 0
    res = 0.0
    for i in range(B):
        pair = fem.assemble(mesh, exp, Y[i])
        ep = smallest_eigenpair(pair, tol=tol)
        lams[i] = ep.lam
        gs[i] = ep.u @ w_g
        iters += ep.iterations
        res = max(res, ep.residual)
    return lams, gs, iters / max(B, 1), res


def _batch_residuals(batch, lams, us):
    from .eigsolve import _tri_mv
    r = _tri_mv(batch.dA, batch.eA, us) - lams[:, None] * _tri_mv(batch.dM, batch.eM, us)
    return np.linalg.norm(r, axis=1)


def level_difference(levels: Sequence[LevelSpec], ell: int, y,
                     exp: CoefficientExpansion, quantity: str = "eigenvalue",
                     functional: Functional | None = None,
                     tol: float = 1e-10) -> float:
    """One telescoping-difference sample at parameter point y.

    Point-by-point reference path (generic assembly and solver); the batched
    evaluator used by ml_estimate must agree with this to solver accuracy.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}")
    spec = levels[ell]
    functional = functional or Functional()
    yv = _y_values(y)
    if yv.size < spec.s:
        raise ValueError(f"level {ell} needs {spec.s} coordinates, got {yv.size}")

    def value(mesh, s):
        pair = fem.assemble(mesh, exp, yv[:s])
        ep = smallest_eigenpair(pair, tol=tol)
        if quantity == "eigenvalue":
            return ep.lam
        return float(ep.u @ functional.weights(mesh))

    try:
        fine = value(spec.mesh, spec.s)
        if spec.mesh_coarse is None:
            return float(fine)
        return float(fine - value(spec.mesh_coarse, spec.s_coarse))
    except Exception as err:
        raise LevelEvaluationError(f"level {ell}, y={yv!r}: {err}") from err


def evaluate_level(levels: Sequence[LevelSpec], ell: int,
                   exp: CoefficientExpansion, functional: Functional,
                   R: int, seed: int, tol: float = 1e-10,
                   workers: int = 1) -> LevelPass:
    """Shifted-QMC pass over one level, returning per-shift values.

    The shift matrix depends only on (seed, ell, r), so any level can be
    recomputed in isolation and reproduce its per-shift values exactly.
    """
    spec = levels[ell]
    shifts = shifts_for_level(seed, ell, R, spec.s)
    rule = LatticeRule(spec.z, spec.N, shifts)
    w_f = functional.weights(spec.mesh)
    w_c = functional.weights(spec.mesh_coarse) if spec.mesh_coarse is not None else None

    def one_shift(r: int):
        pts = generate_points(rule, r)
        try:
            lam_f, g_f, it_f, rs_f = _solve_points(spec.mesh, exp, pts, tol, w_f)
            if spec.mesh_coarse is None:
                return np.mean(lam_f), np.mean(g_f), it_f, rs_f
            lam_c, g_c, it_c, rs_c = _solve_points(
                spec.mesh_coarse, exp, pts[:, :spec.s_coarse], tol, w_c)
            return (np.mean(lam_f - lam_c), np.mean(g_f - g_c),
                    0.5 * (it_f + it_c), max(rs_f, rs_c))
        except Exception as err:
            raise LevelEvaluationError(f"level {ell}, shift {r}: {err}") from err

    per_lam = np.empty(R)
    per_g = np.empty(R)
    iters = np.empty(R)
    resid = np.empty(R)
    t0 = perf_counter()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_shift, range(R)))
    else:
        results = [one_shift(r) for r in range(R)]
    for r, (ml, mg, it, rs) in enumerate(results):
        per_lam[r], per_g[r], iters[r], resid[r] = ml, mg, it, rs
    seconds = perf_counter() - t0
    return LevelPass({"eigenvalue": per_lam, "functional": per_g},
                     seconds, float(np.mean(iters)), R, spec.N,
                     float(np.max(resid)))


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

def _collect(levels: Sequence[LevelSpec], passes: Sequence[LevelPass],
             quantity: str, alpha_hat: float,
             cost_model=None) -> MLEstimate:
    means, variances, costs, iters, resids = [], [], [], [], []
    for spec, p in zip(levels, passes):
        est = p.estimate(quantity)
        means.append(est.mean)
        variances.append(est.sample_variance)
        measured = p.seconds / (p.R * p.N)
        spec.cost_per_sample = measured
        costs.append(cost_model(spec) if cost_model is not None else measured)
        iters.append(p.iters_mean)
        resids.append(p.resid_max)
    bias = abs(means[-1]) / (2.0**alpha_hat - 1.0)
    return MLEstimate(
        quantity=quantity,
        per_level_mean=np.array(means),
        per_level_variance=np.array(variances),
        Ns=np.array([sp.N for sp in levels]),
        hs=np.array([sp.h for sp in levels]),
        ss=np.array([sp.s for sp in levels]),
        R=passes[0].R,
        bias_estimate=float(bias),
        per_level_cost=np.array(costs),
        solver_iters=np.array(iters),
        solver_resid=np.array(resids),
    )


def ml_estimate_all(levels: Sequence[LevelSpec], exp: CoefficientExpansion,
                    R: int, seed: int, *, functional: Functional | None = None,
                    alpha_hat: float = 2.0, tol: float = 1e-10,
                    workers: int = 1, evaluator=evaluate_level,
                    cost_model=None) -> dict[str, MLEstimate]:
    """One multilevel pass; both tracked quantities share the solves."""
    if R < 1:
        raise ValueError("R must be at least 1")
    functional = functional or Functional()
    passes = [evaluator(levels, ell, exp, functional, R, seed, tol, workers)
              for ell in range(len(levels))]
    return {q: _collect(levels, passes, q, alpha_hat, cost_model)
            for q in QUANTITIES}


def ml_estimate(levels: Sequence[LevelSpec], exp: CoefficientExpansion,
                R: int, seed: int, quantity: str = "eigenvalue",
                **kwargs) -> MLEstimate:
    """Shift-averaged multilevel estimate of one quantity."""
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}")
    if R < 2:
        raise ValueError("need R >= 2 shifts for a variance estimate")
    return ml_estimate_all(levels, exp, R, seed, **kwargs)[quantity]


def adapt(levels: list[LevelSpec], eps: float, R: int, seed: int,
          alpha_hat: float = 2.0, *, hierarchy: Hierarchy,
          functional: Functional | None = None, quantity: str = "eigenvalue",
          N_min: int = 16, max_levels: int = 10,
          max_cost_seconds: float = math.inf, tol: float = 1e-10,
          workers: int = 1, evaluator=evaluate_level,
          cost_model=None) -> tuple[MLEstimate, list[TraceRow]]:
    """Greedy sample allocation with bias-driven level extension.

    Splits the squared error budget evenly: shifts are doubled on the level
    with the best variance reduction per unit cost until the summed sample
    variances drop below eps^2/2, then the Richardson bias estimate from
    the finest-level mean must clear eps/sqrt(2) or a new level is added.
    Raises :class:`BudgetExceededError` with diagnostics instead of looping
    past the level or cost caps.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not levels:
        raise ValueError("need at least one initial level")
    functional = functional or Functional()
    exp = hierarchy.exp

    passes: list[LevelPass] = []
    spent = 0.0

    def estimate(ell: int):
        nonlocal spent
        p = evaluator(levels, ell, exp, functional, R, seed, tol, workers)
        spent += p.seconds
        if ell < len(passes):
            passes[ell] = p
        else:
            passes.append(p)

    def build_spec(ell: int, N: int) -> LevelSpec:
        # Rule construction is real work of the adaptive run; bill it too.
        nonlocal spent
        t0 = perf_counter()
        spec = hierarchy.spec(ell, N)
        spent += perf_counter() - t0
        return spec

    def stats():
        V = np.array([p.estimate(quantity).sample_variance for p in passes])
        means = np.array([p.estimate(quantity).mean for p in passes])
        return V, means

    def cost_per_sample(ell: int) -> float:
        if cost_model is not None:
            return cost_model(levels[ell])
        return passes[ell].seconds / (passes[ell].R * passes[ell].N)

    for ell in range(len(levels)):
        estimate(ell)

    trace: list[TraceRow] = []
    step = 0
    var_target = 0.5 * eps * eps
    bias_target = eps / math.sqrt(2.0)

    def bias_now(means) -> float:
        return abs(means[-1]) / (2.0**alpha_hat - 1.0)

    def check_budget():
        if spent > max_cost_seconds:
            raise BudgetExceededError(
                f"adaptive run exceeded cost budget ({spent:.1f}s > "
                f"{max_cost_seconds:.1f}s) at {len(levels)} levels",
                trace=trace)

    while True:
        V, means = stats()
        while float(np.sum(V)) > var_target:
            ratios = [V[ell] / (levels[ell].N * cost_per_sample(ell))
                      for ell in range(len(levels))]
            ell_star = int(np.argmax(ratios))
            levels[ell_star] = build_spec(ell_star, 2 * levels[ell_star].N)
            estimate(ell_star)
            V, means = stats()
            step += 1
            trace.append(TraceRow(step, ell_star, levels[ell_star].N,
                                  float(np.sum(V)), bias_now(means)))
            check_budget()
        if bias_now(means) <= bias_target:
            break
        if len(levels) >= max_levels + 1:
            raise BudgetExceededError(
                f"bias target {bias_target:.3g} unreachable within "
                f"{max_levels + 1} levels (bias estimate {bias_now(means):.3g})",
                trace=trace)
        new_ell = len(levels)
        levels.append(build_spec(new_ell, N_min))
        estimate(new_ell)
        V, means = stats()
        step += 1
        trace.append(TraceRow(step, new_ell, N_min,
                              float(np.sum(V)), bias_now(means)))
        check_budget()

    est = _collect(levels, passes, quantity, alpha_hat, cost_model)
    return est, trace


def fit_rates(xs, ys) -> float:
    """Least-squares slope of log2(ys) against log2(xs)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size or xs.size < 3:
        raise ValueError("need at least 3 matched points")
    if np.any(ys <= 0) or np.any(xs <= 0):
        raise ValueError("values must be positive for a log-log fit")
    lx = np.log2(xs)
    if np.ptp(lx) == 0:
        raise ValueError("degenerate abscissae: all xs equal")
    return float(np.polyfit(lx, np.log2(ys), 1)[0])


def model_cost(dim: int, gamma: float | None = None):
    """Per-sample cost model c(s, h) = s h^-dim + h^-gamma (model units)."""
    g = float(gamma) if gamma is not None else float(dim)
    def cost(spec: LevelSpec) -> float:
        return spec.s * spec.h ** (-dim) + spec.h ** (-g)
    return cost
