"""Smallest eigenpair of the generalized pencil A u = lambda M u.

Inverse iteration with zero shift: A is factorized once per parameter
point and reused across iterations.  Convergence combines a Rayleigh
quotient stagnation test with a residual check.  Eigenvectors are
M-normalized and sign-fixed so that the weighted integral of the
eigenfunction is nonnegative, which makes level differences of
eigenfunction functionals well defined.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coeff import CoefficientExpansion, constant_expansion
from .fem import AssembledPair, MeshLevel, TridiagBatch, assemble


class EigsolveError(RuntimeError):
    """Inverse iteration failed to converge."""


class FactorizationError(EigsolveError):
    """Sparse factorization failed; the assembled pencil is not SPD."""


class DegenerateSpectrumWarning(UserWarning):
    """The observed spectral gap fell below the configured threshold."""


@dataclass
class EigenPair:
    lam: float
    u: np.ndarray
    residual: float       # ||A u - lam M u||_2
    iterations: int


@dataclass
class GapReport:
    lambda1: float
    lambda2: float

    @property
    def gap(self) -> float:
        return self.lambda2 - self.lambda1


def _m_normalize(M: sp.spmatrix, x: np.ndarray) -> np.ndarray:
    return x / np.sqrt(x @ (M @ x))


def _sign_fix(M: sp.spmatrix, x: np.ndarray) -> np.ndarray:
    # Discrete counterpart of requiring the weighted mean to be >= 0.
    if x @ (M @ np.ones_like(x)) < 0.0:
        return -x
    return x


def smallest_eigenpair(sys: AssembledPair, tol: float = 1e-10,
                       max_iter: int = 200) -> EigenPair:
    """Minimal eigenpair of A u = lambda M u by inverse iteration."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    A, M = sys.A, sys.M
    n = A.shape[0]
    try:
        lu = spla.splu(A.tocsc())
    except RuntimeError as err:
        raise FactorizationError(f"factorization of A failed: {err}") from err

    res_rtol = max(np.sqrt(tol), 1e-8)
    x = _m_normalize(M, np.ones(n))
    lam = x @ (A @ x)
    restarted = False
    for it in range(1, max_iter + 1):
        v = M @ x
        w = lu.solve(v)
        mw = M @ w
        denom = w @ mw
        if denom <= 0 or not np.isfinite(denom):
            raise FactorizationError("iteration produced a nonpositive M-norm")
        lam_new = (w @ v) / denom
        x = w / np.sqrt(denom)
        stagnated = abs(lam_new - lam) <= tol * abs(lam_new)
        lam = lam_new
        if stagnated:
            r = A @ x - lam * (M @ x)
            res = float(np.linalg.norm(r))
            scale = lam * float(np.linalg.norm(M @ x))
            if res <= res_rtol * scale:
                x = _sign_fix(M, x)
                return EigenPair(float(lam), x, res, it)
            # Rayleigh quotient stalled away from an eigenvector: the start
            # vector may be (numerically) M-orthogonal to the target.
            if not restarted and it > 10:
                rng = np.random.Generator(np.random.Philox(0x5EED))
                x = _m_normalize(M, rng.standard_normal(n))
                lam = x @ (A @ x)
                restarted = True
    raise EigsolveError(
        f"no convergence in {max_iter} iterations (last lambda {lam:.6g}); "
        "the spectral gap may be nearly degenerate"
    )


def second_eigenpair(sys: AssembledPair, first: EigenPair, tol: float = 1e-10,
                     max_iter: int = 400) -> EigenPair:
    """Second eigenpair by inverse iteration with M-orthogonal deflation."""
    A, M = sys.A, sys.M
    n = A.shape[0]
    u1 = first.u
    try:
        lu = spla.splu(A.tocsc())
    except RuntimeError as err:
        raise FactorizationError(f"factorization of A failed: {err}") from err

    def deflate(v: np.ndarray) -> np.ndarray:
        return v - u1 * (u1 @ (M @ v))

    # A symmetric start can have no component along the target mode, so add
    # a small deterministic perturbation before deflating.
    rng = np.random.Generator(np.random.Philox(0xDEF1))
    x = deflate(np.ones(n) + 0.01 * rng.standard_normal(n))
    x = _m_normalize(M, x)
    lam = x @ (A @ x)
    for it in range(1, max_iter + 1):
        w = lu.solve(M @ x)
        w = deflate(w)
        nrm = w @ (M @ w)
        if nrm <= 0 or not np.isfinite(nrm):
            raise EigsolveError("deflated iterate vanished")
        x = w / np.sqrt(nrm)
        lam_new = x @ (A @ x)
        stagnated = abs(lam_new - lam) <= tol * abs(lam_new)
        lam = lam_new
        if stagnated:
            r = A @ x - lam * (M @ x)
            x = _sign_fix(M, x)
            return EigenPair(float(lam), x, float(np.linalg.norm(r)), it)
    raise EigsolveError(f"second eigenvalue: no convergence in {max_iter} iterations")


def second_eigenvalue(sys: AssembledPair, first: EigenPair, tol: float = 1e-10,
                      max_iter: int = 400, gap_min: float = 1e-6) -> GapReport:
    """Both leading eigenvalues and their gap; warns on a tiny gap."""
    pair2 = second_eigenpair(sys, first, tol=tol, max_iter=max_iter)
    rep = GapReport(first.lam, pair2.lam)
    if rep.gap < gap_min:
        warnings.warn(
            f"spectral gap {rep.gap:.3g} below threshold {gap_min:.3g}",
            DegenerateSpectrumWarning,
        )
    return rep


def sandwich_check(pair: EigenPair, exp: CoefficientExpansion, chi1h: float) -> bool:
    """Spectral sandwich from the coefficient bounds.

    ``chi1h`` is the discrete Laplacian eigenvalue on the same mesh.  The
    lower bound uses the discrete value since the FE eigenvalue dominates
    only the continuous one.
    """
    r = exp.amin / exp.amax
    return r * chi1h <= pair.lam <= (chi1h + 1.0) / r


def laplacian_chi1(level: MeshLevel, tol: float = 1e-12) -> float:
    """Discrete Laplacian smallest eigenvalue (a=1, b=0, c=1 pencil)."""
    pair = smallest_eigenpair(assemble(level, constant_expansion(), np.zeros(0)), tol=tol)
    return pair.lam


# ---------------------------------------------------------------------------
# Batched tridiagonal path (1D meshes).  Same iteration and convergence
# criteria as smallest_eigenpair, vectorised across the parameter batch.
# ---------------------------------------------------------------------------

def _thomas_factor(d: np.ndarray, e: np.ndarray):
    """LU factorization of SPD tridiagonal systems, batched over axis 0."""
    B, n = d.shape
    dp = np.empty_like(d)
    w = np.empty_like(e)
    dp[:, 0] = d[:, 0]
    for i in range(1, n):
        w[:, i - 1] = e[:, i - 1] / dp[:, i - 1]
        dp[:, i] = d[:, i] - w[:, i - 1] * e[:, i - 1]
    if np.min(dp) <= 0:
        raise FactorizationError("tridiagonal pivot <= 0; pencil is not SPD")
    return dp, w


def _thomas_solve(dp, w, e, b):
    B, n = b.shape
    y = np.empty_like(b)
    y[:, 0] = b[:, 0]
    for i in range(1, n):
        y[:, i] = b[:, i] - w[:, i - 1] * y[:, i - 1]
    x = np.empty_like(b)
    x[:, n - 1] = y[:, n - 1] / dp[:, n - 1]
    for i in range(n - 2, -1, -1):
        x[:, i] = (y[:, i] - e[:, i] * x[:, i + 1]) / dp[:, i]
    return x


def _tri_mv(d, e, x):
    out = d * x
    out[:, :-1] += e * x[:, 1:]
    out[:, 1:] += e * x[:, :-1]
    return out


def tridiag_smallest(batch: TridiagBatch, tol: float = 1e-10,
                     max_iter: int = 200) -> tuple[np.ndarray, np.ndarray, int]:
    """Smallest eigenpairs for a batch of tridiagonal pencils.

    Returns (lambdas, eigenvectors, iterations); vectors are M-normalized
    and sign-fixed.  All batch members iterate together until the slowest
    satisfies both the Rayleigh stagnation and residual tests.
    """
    dA, eA, dM, eM = batch.dA, batch.eA, batch.dM, batch.eM
    B, n = dA.shape
    dp, w = _thomas_factor(dA, eA)
    res_rtol = max(np.sqrt(tol), 1e-8)

    x = np.ones((B, n))
    x /= np.sqrt(np.einsum("bi,bi->b", x, _tri_mv(dM, eM, x)))[:, None]
    lam = np.einsum("bi,bi->b", x, _tri_mv(dA, eA, x))
    diff = np.full(B, np.inf)
    for it in range(1, max_iter + 1):
        v = _tri_mv(dM, eM, x)
        z = _thomas_solve(dp, w, eA, v)
        mz = _tri_mv(dM, eM, z)
        denom = np.einsum("bi,bi->b", z, mz)
        if np.min(denom) <= 0 or not np.all(np.isfinite(denom)):
            bad = int(np.argmin(denom))
            raise FactorizationError(f"nonpositive M-norm in batch member {bad}")
        lam_new = np.einsum("bi,bi->b", z, v) / denom
        x = z / np.sqrt(denom)[:, None]
        diff = np.abs(lam_new - lam)
        done = np.all(diff <= tol * np.abs(lam_new))
        lam = lam_new
        if done:
            r = _tri_mv(dA, eA, x) - lam[:, None] * _tri_mv(dM, eM, x)
            res = np.linalg.norm(r, axis=1)
            scale = lam * np.linalg.norm(_tri_mv(dM, eM, x), axis=1)
            if np.all(res <= res_rtol * scale):
                m1 = _tri_mv(dM, eM, np.ones((B, n)))
                sign = np.where(np.einsum("bi,bi->b", x, m1) < 0.0, -1.0, 1.0)
                return lam, x * sign[:, None], it
    bad = int(np.argmax(diff))
    raise EigsolveError(
        f"batched inverse iteration: no convergence in {max_iter} iterations "
        f"(worst batch member {bad})"
    )
