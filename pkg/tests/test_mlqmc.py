import math

import numpy as np
import pytest

from mlqmc_eig.coeff import constant_expansion, make_builtin_family
from mlqmc_eig.eigsolve import smallest_eigenpair
from mlqmc_eig.fem import assemble
from mlqmc_eig.lattice import LatticeRule, shifted_qmc, shifts_for_level
from mlqmc_eig.mlqmc import (BudgetExceededError, Functional, Hierarchy,
                             LevelEvaluationError, LevelPass, MLEstimate,
                             adapt, evaluate_level, fit_rates, fixed_schedule,
                             geometric_schedule, level_difference,
                             ml_estimate, ml_estimate_all, model_cost)
from mlqmc_eig.oracle import discrete_laplacian_eigenvalue

FAMILY = make_builtin_family("sine-decay", 2.0, 8)


def small_hierarchy(s=4, h0=0.25, exp=None):
    return Hierarchy(exp or FAMILY, 1, h0, fixed_schedule(s))


def test_level_zero_is_plain_eigenvalue():
    hier = small_hierarchy()
    levels = hier.levels(1, [16, 16])
    y = np.array([0.25, -0.1, 0.3, 0.0])
    got = level_difference(levels, 0, y, FAMILY)
    pair = assemble(levels[0].mesh, FAMILY, y)
    assert got == pytest.approx(smallest_eigenpair(pair, tol=1e-10).lam, rel=1e-12)


def test_differences_negative_for_constant_problem():
    # conforming FE converges from above, so refinements only decrease lambda
    hier = small_hierarchy(exp=constant_expansion())
    levels = hier.levels(3, [16] * 4)
    for ell in range(1, 4):
        assert level_difference(levels, ell, np.zeros(4), constant_expansion()) < 0


def test_laplacian_difference_closed_form():
    hier = small_hierarchy(exp=constant_expansion(), h0=0.5)
    levels = hier.levels(1, [16, 16])
    got = level_difference(levels, 1, np.zeros(4), constant_expansion(), tol=1e-13)
    want = discrete_laplacian_eigenvalue(0.25, 1) - discrete_laplacian_eigenvalue(0.5, 1)
    assert got == pytest.approx(want, rel=1e-11)
    assert got == pytest.approx(-1.613357994778768, rel=1e-10)


@pytest.mark.parametrize("schedule", [fixed_schedule(6),
                                      geometric_schedule(1, 6)])
def test_per_sample_telescoping_identity(schedule):
    hier = Hierarchy(FAMILY, 1, 0.25, schedule)
    levels = hier.levels(3, [16] * 4)
    s_fin = levels[-1].s
    rng = np.random.default_rng(1)
    for _ in range(25):
        y = rng.uniform(-0.5, 0.5, s_fin)
        tele = sum(level_difference(levels, ell, y[:levels[ell].s], FAMILY)
                   for ell in range(4))
        direct = smallest_eigenpair(
            assemble(levels[-1].mesh, FAMILY, y[:s_fin]), tol=1e-10).lam
        assert abs(tele - direct) <= 1e-12


def test_batched_evaluator_matches_pointwise():
    hier = small_hierarchy()
    levels = hier.levels(2, [8, 8, 8])
    G = Functional()
    p = evaluate_level(levels, 2, FAMILY, G, R=2, seed=5, tol=1e-12)
    # recompute one shift by the per-point path
    from mlqmc_eig.lattice import generate_points
    rule = LatticeRule(levels[2].z, 8, shifts_for_level(5, 2, 2, levels[2].s))
    pts = generate_points(rule, 0)
    # eigenvalues agree to solver tolerance; functional values inherit the
    # looser eigenvector accuracy of the residual test
    tols = {"eigenvalue": 1e-10, "functional": 1e-7}
    for quantity in ("eigenvalue", "functional"):
        direct = np.mean([level_difference(levels, 2, pts[i], FAMILY,
                                           quantity=quantity, functional=G,
                                           tol=1e-12)
                          for i in range(8)])
        assert p.per_shift[quantity][0] == pytest.approx(direct, abs=tols[quantity])


def test_level_pass_reproducible_in_isolation():
    hier = small_hierarchy()
    levels = hier.levels(2, [16, 16, 16])
    G = Functional()
    first = evaluate_level(levels, 1, FAMILY, G, R=4, seed=9)
    again = evaluate_level(levels, 1, FAMILY, G, R=4, seed=9)
    assert np.array_equal(first.per_shift["eigenvalue"],
                          again.per_shift["eigenvalue"])
    # a fresh hierarchy and single-level list reproduce the same numbers
    hier2 = small_hierarchy()
    levels2 = hier2.levels(2, [16, 16, 16])
    third = evaluate_level(levels2, 1, FAMILY, G, R=4, seed=9)
    assert np.array_equal(first.per_shift["eigenvalue"],
                          third.per_shift["eigenvalue"])


def test_ml_estimate_invariants():
    hier = small_hierarchy()
    levels = hier.levels(2, [32, 16, 16])
    est = ml_estimate(levels, FAMILY, R=4, seed=3)
    assert est.total == np.sum(est.per_level_mean)
    assert est.statistical_error == np.sqrt(np.sum(est.per_level_variance))
    assert est.cost_total == np.sum(est.R * est.Ns * est.per_level_cost)
    assert est.L == 2 and est.R == 4
    with pytest.raises(ValueError):
        ml_estimate(levels, FAMILY, R=1, seed=3)
    with pytest.raises(ValueError):
        ml_estimate(levels, FAMILY, R=4, seed=3, quantity="nope")


def test_single_level_matches_shifted_qmc():
    # L = 0 multilevel estimate is exactly a single-level shifted QMC rule
    hier = small_hierarchy()
    levels = hier.levels(0, [32])
    est = ml_estimate(levels, FAMILY, R=4, seed=11)
    rule = LatticeRule(levels[0].z, 32, shifts_for_level(11, 0, 4, levels[0].s))

    def lam(pts):
        out = np.empty(pts.shape[0])
        for i in range(pts.shape[0]):
            pair = assemble(levels[0].mesh, FAMILY, pts[i])
            out[i] = smallest_eigenpair(pair, tol=1e-10).lam
        return out

    ref = shifted_qmc(lam, rule)
    assert est.total == pytest.approx(ref.mean, rel=1e-12)
    assert est.per_level_variance[0] == pytest.approx(ref.sample_variance,
                                                      rel=1e-9, abs=1e-20)


def test_constant_integrand_zero_variance():
    hier = Hierarchy(constant_expansion(), 1, 0.25, fixed_schedule(1))
    levels = hier.levels(2, [16, 16, 16])
    est = ml_estimate(levels, constant_expansion(), R=4, seed=1)
    assert np.all(est.per_level_variance == 0.0)


def fake_evaluator(var_by_level, mean_by_level):
    """Synthetic LevelPass factory: variance model V(N) = V0 * N_min / N."""
    def evaluator(levels, ell, exp, functional, R, seed, tol=0, workers=1):
        spec = levels[ell]
        V = var_by_level(spec)
        d = math.sqrt(V)           # two shifts at m +- d give sample variance d^2
        m = mean_by_level(spec)
        per = np.array([m + d, m - d])
        return LevelPass({"eigenvalue": per, "functional": per},
                         seconds=1e-6 * spec.N * 2, iters_mean=1.0, R=2, N=spec.N)
    return evaluator


def test_adapt_returns_immediately_when_converged():
    eps = 1e-2
    hier = small_hierarchy()
    levels = hier.levels(1, [16, 16])
    ev = fake_evaluator(lambda spec: 1e-8, lambda spec: 1e-8)
    est, trace = adapt(levels, eps, 2, 0, alpha_hat=2.0, hierarchy=hier,
                       evaluator=ev)
    assert trace == []
    assert est.statistical_error <= eps / math.sqrt(2)


def test_adapt_doubles_exactly_twice():
    # V = 4 (eps^2/2) with V ~ 1/N needs exactly two doublings
    eps = 1e-3
    hier = small_hierarchy()
    levels = hier.levels(0, [16])
    target = eps**2 / 2

    def var(spec):
        return 4.0 * target * (16.0 / spec.N)

    ev = fake_evaluator(var, lambda spec: 0.0)
    est, trace = adapt(levels, eps, 2, 0, alpha_hat=2.0, hierarchy=hier,
                       evaluator=ev)
    doubles = [t for t in trace if t.N_after > 16]
    assert len(doubles) == 2
    assert levels[0].N == 64


def test_adapt_bias_adds_level():
    # bias estimate 3x over target adds one level; the Richardson factor is
    # 2^2 - 1 = 3, and a mean shrinking by 4x per level then clears the test
    eps = 1e-3
    bias_target = eps / math.sqrt(2)
    hier = small_hierarchy()
    levels = hier.levels(1, [16, 16])

    def mean(spec):
        return 9.0 * bias_target * 4.0 ** (1 - spec.ell)

    ev = fake_evaluator(lambda spec: 1e-12, mean)
    est, trace = adapt(levels, eps, 2, 0, alpha_hat=2.0, hierarchy=hier,
                       evaluator=ev)
    appended = [t for t in trace if t.N_after == 16 and t.ell_doubled >= 2]
    assert len(appended) == 1
    assert est.bias_estimate <= bias_target


def test_adapt_level_budget():
    eps = 1e-6
    hier = small_hierarchy()
    levels = hier.levels(0, [16])
    ev = fake_evaluator(lambda spec: 0.0, lambda spec: 1.0)
    with pytest.raises(BudgetExceededError) as err:
        adapt(levels, eps, 2, 0, alpha_hat=2.0, hierarchy=hier,
              evaluator=ev, max_levels=1)
    assert err.value.trace is not None


def test_adapt_cost_budget():
    eps = 1e-9
    hier = small_hierarchy()
    levels = hier.levels(0, [16])

    def var(spec):
        return 1e6 * (16.0 / spec.N) * eps**2

    ev = fake_evaluator(var, lambda spec: 0.0)
    with pytest.raises(BudgetExceededError):
        adapt(levels, eps, 2, 0, alpha_hat=2.0, hierarchy=hier,
              evaluator=ev, max_cost_seconds=1e-7)


def test_adapt_real_problem_small():
    hier = small_hierarchy(s=4)
    eps = 2e-3
    levels = hier.levels(1, [16, 16])
    est, trace = adapt(levels, eps, 4, 7, alpha_hat=2.0, hierarchy=hier)
    assert est.statistical_error <= eps / math.sqrt(2)
    assert est.bias_estimate <= eps / math.sqrt(2)
    assert est.total == pytest.approx(9.8, abs=0.3)


def test_fit_rates_examples():
    assert fit_rates([1, 0.5, 0.25], [1, 0.25, 0.0625]) == pytest.approx(2.0, abs=1e-12)
    assert fit_rates([1, 0.5, 0.25], [1.0, 1.0, 1.0]) == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(2)
    xs = 2.0 ** -np.arange(6)
    ys = xs**4 * np.exp(rng.normal(0, 0.01, xs.size))
    assert 3.8 <= fit_rates(xs, ys) <= 4.2
    with pytest.raises(ValueError):
        fit_rates([1, 2], [1, 2])
    with pytest.raises(ValueError):
        fit_rates([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        fit_rates([1, 2, 4], [1, -2, 3])


def test_variance_decay_rates():
    # lighter cousin of the acceptance criterion: slope >= 3.5 for both
    # quantities over h = 2^-2 .. 2^-6 at fixed s
    exp = make_builtin_family("sine-decay", 2.0, 8)
    hier = Hierarchy(exp, 1, 0.25, fixed_schedule(8))
    levels = hier.levels(4, [64] * 5)
    ests = ml_estimate_all(levels, exp, R=16, seed=2024)
    hc = np.array([lv.h_coarse for lv in levels[1:]])
    for q in ("eigenvalue", "functional"):
        slope = fit_rates(hc, ests[q].per_level_variance[1:])
        assert slope >= 3.5, (q, slope)


def test_qmc_variance_decay_in_N():
    # at fixed ell >= 1 the shift variance decays close to N^-2
    exp = make_builtin_family("sine-decay", 2.0, 8)
    hier = Hierarchy(exp, 1, 0.25, fixed_schedule(8))
    Ns = [2**n for n in range(4, 11)]
    variances = []
    for N in Ns:
        levels = [hier.spec(0, 16), hier.spec(1, N)]
        p = evaluate_level(levels, 1, exp, Functional(), R=16, seed=77)
        variances.append(p.estimate("eigenvalue").sample_variance)
    assert fit_rates(Ns, variances) <= -1.6


def test_model_cost():
    cost = model_cost(1, gamma=1.0)
    hier = small_hierarchy()
    spec = hier.spec(0, 16)
    assert cost(spec) == pytest.approx(spec.s / spec.h + 1.0 / spec.h)


def test_level_failure_is_tagged():
    hier = small_hierarchy()
    levels = hier.levels(1, [16, 16])
    with pytest.raises(LevelEvaluationError) as err:
        # parameter far outside the box drives the coefficient negative
        level_difference(levels, 1, np.array([-9.0, 0.0, 0.0, 0.0]), FAMILY)
    assert "level 1" in str(err.value)


def test_worker_count_does_not_change_results():
    hier = small_hierarchy()
    levels = hier.levels(1, [32, 16])
    G = Functional()
    for ell in range(2):
        seq = evaluate_level(levels, ell, FAMILY, G, R=4, seed=13, workers=1)
        par = evaluate_level(levels, ell, FAMILY, G, R=4, seed=13, workers=4)
        for q in ("eigenvalue", "functional"):
            assert np.array_equal(seq.per_shift[q], par.per_shift[q])


def test_solver_stats_in_estimate():
    hier = small_hierarchy()
    levels = hier.levels(1, [16, 16])
    est = ml_estimate(levels, FAMILY, R=4, seed=3)
    assert np.all(est.solver_iters >= 1)
    assert np.all(est.solver_resid > 0)
    assert np.all(est.solver_resid < 1e-3)
