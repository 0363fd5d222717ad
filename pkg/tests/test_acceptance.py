"""Acceptance suite: one test per criterion, printed as PASS/FAIL lines.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report.  Every tolerance below is fixed; nothing is calibrated at runtime.
"""

import itertools
import math
import time

import numpy as np
import pytest
import scipy.linalg

from mlqmc_eig.coeff import constant_expansion, make_builtin_family
from mlqmc_eig.eigsolve import (laplacian_chi1, sandwich_check,
                                second_eigenvalue, smallest_eigenpair,
                                tridiag_smallest)
from mlqmc_eig.fem import (assemble, assemble_tridiag_batch, build_level,
                           functional_weights)
from mlqmc_eig.lattice import (LatticeRule, cbc_construct, compute_pod_weights,
                               shifted_qmc, shifts_for_level,
                               worst_case_error_sq)
from mlqmc_eig.mlqmc import (Functional, Hierarchy, LevelSpec, adapt,
                             evaluate_level, fit_rates, fixed_schedule,
                             level_difference, ml_estimate_all)
from mlqmc_eig.oracle import (TensorQuadrature, discrete_laplacian_eigenvalue,
                              expect_tensor)

CONST = constant_expansion()


def report(name: str, ok: bool, detail: str, t0: float) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {name} ({time.perf_counter() - t0:.1f}s): {detail}"
    print(line)
    assert ok, line


def family(s: int, with_b: bool = False):
    return make_builtin_family("sine-decay", 2.0, s, with_b=with_b)


def family_weights(exp, s: int, delta: float = 0.1):
    return compute_pod_weights(exp.term_norms(s), exp.decay_p, exp.decay_q,
                               delta, s, betas_hat=exp.term_norms_grad(s))


def batch_lambda(level, exp):
    def f(pts):
        lams, _, _ = tridiag_smallest(
            assemble_tridiag_batch(level, exp, pts), tol=1e-10)
        return lams
    return f


def test_A1_fe_eigenvalue_rate():
    t0 = time.perf_counter()
    hs, errs = [], []
    closed_ok = True
    for ell in range(6):                       # h = 2^-2 .. 2^-7
        lv = build_level(1, 0.25, ell)
        lam = smallest_eigenpair(assemble(lv, CONST, np.zeros(0)), tol=1e-13).lam
        ref = discrete_laplacian_eigenvalue(lv.h, 1)
        closed_ok &= abs(lam - ref) <= 1e-10 * ref
        hs.append(lv.h)
        errs.append(abs(lam - np.pi**2))
    slope = fit_rates(hs, errs)
    ok = 1.9 <= slope <= 2.1 and closed_ok
    report("A1 FE eigenvalue rate", ok,
           f"slope={slope:.4f} in [1.9,2.1], closed-form match to 1e-10: {closed_ok}", t0)


def test_A2_functional_rate():
    t0 = time.perf_counter()
    lv_ref = build_level(1, 2**-9, 0)
    pair = assemble(lv_ref, CONST, np.zeros(0))
    A, M = pair.A.toarray(), pair.M.toarray()
    vals, vecs = scipy.linalg.eigh(A, M, subset_by_index=[0, 0])
    u = vecs[:, 0]
    u /= np.sqrt(u @ (M @ u))
    w_ref = functional_weights(lv_ref)
    if u @ w_ref < 0:
        u = -u
    G_ref = float(u @ w_ref)
    hs, errs = [], []
    for ell in range(5):                       # h = 2^-2 .. 2^-6
        lv = build_level(1, 0.25, ell)
        ep = smallest_eigenpair(assemble(lv, CONST, np.zeros(0)), tol=1e-13)
        hs.append(lv.h)
        errs.append(abs(float(ep.u @ functional_weights(lv)) - G_ref))
    slope = fit_rates(hs, errs)
    ok = slope >= 1.8
    report("A2 eigenfunction functional rate", ok,
           f"slope={slope:.4f} >= 1.8 (dense h=2^-9 reference G={G_ref:.6f})", t0)


def test_A3_single_level_qmc_rate():
    t0 = time.perf_counter()
    s, R = 16, 16
    exp = family(s)
    lv = build_level(1, 2**-5, 0)
    w = family_weights(exp, s)
    f = batch_lambda(lv, exp)
    # 2^16-point reference: N = 2^14 lattice with 4 independent shifts
    z_ref = cbc_construct(2**14, s, w)
    ref = shifted_qmc(f, LatticeRule(z_ref, 2**14, shifts_for_level(999, 0, 4, s)))
    Ns = [2**n for n in range(5, 13)]
    rmses = []
    for i, N in enumerate(Ns):
        rule = LatticeRule(cbc_construct(N, s, w), N, shifts_for_level(7, i, R, s))
        est = shifted_qmc(f, rule)
        rmses.append(float(np.sqrt(np.mean((est.per_shift - ref.mean) ** 2))))
    slope = fit_rates(Ns, rmses)
    ref_se = math.sqrt(ref.sample_variance)
    ok = slope <= -0.85 and ref_se <= min(rmses) / 5
    report("A3 single-level QMC rate", ok,
           f"slope={slope:.4f} <= -0.85, reference SE {ref_se:.2e} "
           f"<< min RMSE {min(rmses):.2e}", t0)


def test_A4_per_level_variance_decay():
    t0 = time.perf_counter()
    s = 32
    exp = family(s)
    hier = Hierarchy(exp, 1, 0.25, fixed_schedule(s))
    levels = hier.levels(4, [2**7] * 5)        # h = 2^-2 .. 2^-6
    ests = ml_estimate_all(levels, exp, R=16, seed=2024)
    hc = np.array([lv.h_coarse for lv in levels[1:]])
    slope_lam = fit_rates(hc, ests["eigenvalue"].per_level_variance[1:])
    slope_g = fit_rates(hc, ests["functional"].per_level_variance[1:])
    ok = 3.5 <= slope_lam <= 4.6 and 3.5 <= slope_g <= 4.6
    report("A4 per-level variance decay", ok,
           f"slope(lambda)={slope_lam:.3f}, slope(G)={slope_g:.3f}, band [3.5,4.6]", t0)


def test_A5_telescoping_exactness():
    t0 = time.perf_counter()
    exp = family(2)
    hier = Hierarchy(exp, 1, 0.25, fixed_schedule(2))
    levels = hier.levels(3, [16] * 4)
    quad = TensorQuadrature.build(2, 16)

    def level_expect(ell):
        def f(pts):
            return np.array([level_difference(levels, ell, p, exp, tol=1e-12)
                             for p in pts])
        return expect_tensor(f, quad)

    tele = sum(level_expect(ell) for ell in range(4))
    direct = expect_tensor(batch_lambda(levels[-1].mesh, exp), quad)
    # batch path and per-point path round differently; use the per-point one
    direct_pp = expect_tensor(
        lambda pts: np.array(
            [smallest_eigenpair(assemble(levels[-1].mesh, exp, p), tol=1e-12).lam
             for p in pts]), quad)
    sum_err = abs(tele - direct_pp)

    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        y = rng.uniform(-0.5, 0.5, 2)
        t = sum(level_difference(levels, ell, y, exp, tol=1e-12)
                for ell in range(4))
        d = smallest_eigenpair(assemble(levels[-1].mesh, exp, y), tol=1e-12).lam
        worst = max(worst, abs(t - d))
    ok = sum_err <= 1e-11 and worst <= 1e-12 and abs(tele - direct) <= 1e-8
    report("A5 telescoping exactness", ok,
           f"|sum E[Y_l] - E[lam_L]|={sum_err:.2e} <= 1e-11, per-sample "
           f"worst={worst:.2e} <= 1e-12", t0)


def test_A6_cbc_matches_exhaustive():
    t0 = time.perf_counter()
    exp = family(3)
    ok = True
    details = []
    for N in (8, 16):
        w = family_weights(exp, 3)
        z = cbc_construct(N, 3, w)
        for s in (1, 2, 3):
            mine = worst_case_error_sq(z[:s], N, w)
            best = min(worst_case_error_sq(list(zz), N, w)
                       for zz in itertools.product(range(1, N, 2), repeat=s))
            ok &= abs(mine - best) <= 1e-12 * best
            details.append(f"N={N},s={s}: {mine:.6g}")
    report("A6 CBC optimality on small instances", ok,
           "greedy prefixes equal exhaustive minima; " + "; ".join(details[:3]), t0)


def test_A7_sandwich_and_gap():
    t0 = time.perf_counter()
    s = 16
    exp = family(s)
    lv = build_level(1, 2**-5, 0)
    chi1h = laplacian_chi1(lv)
    rng = np.random.default_rng(77)
    min_gap = np.inf
    sandwich_all = True
    for _ in range(1000):
        pair = assemble(lv, exp, rng.uniform(-0.5, 0.5, s))
        ep = smallest_eigenpair(pair, tol=1e-10)
        sandwich_all &= sandwich_check(ep, exp, chi1h)
        min_gap = min(min_gap, second_eigenvalue(pair, ep, tol=1e-8).gap)
    ok = sandwich_all and min_gap >= 1.0
    report("A7 spectral sandwich and gap", ok,
           f"sandwich holds on 1000 samples, min gap={min_gap:.3f} >= 1.0 "
           "(observed, problem-specific)", t0)


def test_A8_adaptive_allocator_and_cost():
    t0 = time.perf_counter()
    s, R, N_min, seed = 16, 8, 16, 31
    exp = family(s)
    hier = Hierarchy(exp, 1, 0.25, fixed_schedule(s))
    eps_list = [4e-3, 2e-3, 1e-3, 5e-4]
    ml_costs, sl_costs = [], []
    constraints_ok = True
    for eps in eps_list:
        levels = hier.levels(2, [N_min] * 3)
        est, _ = adapt(levels, eps, R, seed, alpha_hat=2.0, hierarchy=hier,
                       quantity="eigenvalue", N_min=N_min, max_levels=10,
                       max_cost_seconds=600.0)
        constraints_ok &= est.statistical_error <= eps / math.sqrt(2)
        constraints_ok &= est.bias_estimate <= eps / math.sqrt(2)
        ml_costs.append(est.cost_total)
        # single-level QMC at this run's finest mesh, same variance target
        ell_fin, s_fin = levels[-1].ell, levels[-1].s
        N = N_min
        while True:
            spec = LevelSpec(0, hier.mesh(ell_fin), None, s_fin, 0, N,
                             hier.vector(N, s_fin))
            p = evaluate_level([spec], 0, exp, Functional(), R, seed + 1)
            if p.estimate("eigenvalue").sample_variance <= eps**2 / 2 or N >= 2**16:
                sl_costs.append(p.seconds)
                break
            N *= 2
    e_ml = fit_rates(eps_list, ml_costs)
    e_sl = fit_rates(eps_list, sl_costs)
    gap = abs(e_sl) - abs(e_ml)
    ok = constraints_ok and gap >= 0.5
    report("A8 adaptive allocator contract", ok,
           f"stat/bias <= eps/sqrt(2) at every eps: {constraints_ok}; "
           f"cost exponents ML {e_ml:.2f} vs SL {e_sl:.2f}, gap {gap:.2f} >= 0.5", t0)


def test_A9_truncation_bias_ordering():
    t0 = time.perf_counter()
    exp = family(4)
    lv = build_level(1, 2**-5, 0)

    def expect_at_dim(s):
        quad = TensorQuadrature.build(s, 12)

        def f(pts):
            Y = np.zeros((pts.shape[0], 4))
            Y[:, :s] = pts
            lams, _, _ = tridiag_smallest(
                assemble_tridiag_batch(lv, exp, Y), tol=1e-11)
            return lams

        return expect_tensor(f, quad)

    E = {s: expect_at_dim(s) for s in (1, 2, 3, 4)}
    d = {s: abs(E[s] - E[4]) for s in (1, 2, 3)}
    ok = d[1] > d[2] > d[3] > 0
    report("A9 truncation-bias ordering", ok,
           f"|E[lam_s]-E[lam_4]| = {d[1]:.3e} > {d[2]:.3e} > {d[3]:.3e} > 0 "
           "(rate itself out of quantitative scope at s <= 4)", t0)
