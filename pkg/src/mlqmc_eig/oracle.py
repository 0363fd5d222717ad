"""Independent brute-force references for tests and validation runs.

Nothing here is called by the production estimator; these routines exist
so every estimate has a second, structurally different route to the same
number: full tensor-product Gauss quadrature over the parameter box,
dense full-spectrum eigensolves, and the closed-form P1 eigenvalue on a
uniform 1D mesh.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .fem import AssembledPair

MAX_TENSOR_DIM = 4
MAX_TENSOR_NODES = 32
MAX_DENSE_DOF = 500


@dataclass
class TensorQuadrature:
    """Tensor-product Gauss-Legendre rule on [-1/2, 1/2]^s.

    Weights are normalized to the uniform probability measure, so they sum
    to one in each direction.
    """

    s: int
    n: int
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def build(cls, s: int, n: int) -> "TensorQuadrature":
        if s < 1 or n < 1:
            raise ValueError("need s >= 1 and n >= 1")
        x, w = np.polynomial.legendre.leggauss(n)
        w = w / np.sum(w)
        return cls(s, n, 0.5 * x, w)

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        """All s-fold node combinations (n^s, s) and their product weights."""
        mesh = np.meshgrid(*([self.nodes] * self.s), indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        wmesh = np.meshgrid(*([self.weights] * self.s), indexing="ij")
        wts = np.ones(pts.shape[0])
        for wm in wmesh:
            wts = wts * wm.ravel()
        return pts, wts


def expect_tensor(f, quad: TensorQuadrature) -> float:
    """Full tensor-product quadrature of a batched integrand over the box.

    ``f`` maps an (m, s) array of points to (m,) values.  Guarded to
    s <= 4, n <= 32 because the node count grows like n^s.
    """
    if quad.s > MAX_TENSOR_DIM or quad.n > MAX_TENSOR_NODES:
        raise ValueError(
            f"tensor quadrature budget exceeded (s={quad.s} <= {MAX_TENSOR_DIM}, "
            f"n={quad.n} <= {MAX_TENSOR_NODES})"
        )
    pts, wts = quad.grid()
    vals = np.asarray(f(pts), dtype=float).reshape(-1)
    if vals.shape != wts.shape:
        raise ValueError("integrand returned wrong shape")
    return float(wts @ vals)


def dense_reference_eigenpairs(sys: AssembledPair, k: int = 1):
    """k smallest generalized eigenpairs via dense reduction.

    Cholesky of M and full symmetric diagonalization (LAPACK), guarded to
    small problems.  Vectors come back M-normalized and sign-fixed with the
    same convention as the sparse solver.
    """
    n = sys.A.shape[0]
    if n > MAX_DENSE_DOF:
        raise ValueError(f"dense reference limited to {MAX_DENSE_DOF} dofs, got {n}")
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    A = sys.A.toarray()
    M = sys.M.toarray()
    vals, vecs = scipy.linalg.eigh(A, M, subset_by_index=[0, k - 1])
    m1 = M @ np.ones(n)
    for j in range(k):
        v = vecs[:, j]
        v /= np.sqrt(v @ (M @ v))
        if v @ m1 < 0:
            v = -v
        vecs[:, j] = v
    return vals, vecs


def discrete_laplacian_eigenvalue(h: float, k: int = 1) -> float:
    """Closed-form kth eigenvalue of the P1 pencil for -u'' on (0, 1).

    Uniform mesh of width h; valid while k h < 1 so the mode is resolved.
    """
    if not 0 < k * h < 1:
        raise ValueError("need 0 < k*h < 1")
    c = np.cos(k * np.pi * h)
    return (6.0 / h**2) * (1.0 - c) / (2.0 + c)
