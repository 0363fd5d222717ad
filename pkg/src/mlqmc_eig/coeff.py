"""Parametric coefficient series and their dimension truncations.

The diffusion and reaction coefficients have the affine form

    a(x, y) = a_0(x) + sum_{j>=1} y_j a_j(x),
    b(x, y) = b_0(x) + sum_{j>=1} y_j b_j(x),

with y_j i.i.d. uniform on [-1/2, 1/2], and a y-independent weight c(x).
Truncating to dimension s simply sets y_j = 0 for j > s.  A built-in
family with analytically known sup norms (and hence explicit summability
exponents and uniform lower bound) is provided by
:func:`make_builtin_family`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import zeta

# A scalar field on D: maps coordinates of shape (m, dim) to values (m,).
Field = Callable[[np.ndarray], np.ndarray]

BUILTIN_KINDS = ("sine-decay", "indicator-patches")


def _as_coords(x, dim: int | None = None) -> np.ndarray:
    """Normalise a point/point-array to shape (m, dim)."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim == 1:
        # A single point (x1, ..., xd) unless dim says otherwise.
        if dim == 1 or dim is None and arr.size == 1:
            arr = arr.reshape(-1, 1)
        else:
            arr = arr.reshape(1, -1)
    return arr


@dataclass
class ParamPoint:
    """A truncated stochastic parameter y in [-1/2, 1/2]^s."""

    y: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        if self.y.size and (np.min(self.y) < -0.5 or np.max(self.y) > 0.5):
            raise ValueError("parameter components must lie in [-1/2, 1/2]")

    @property
    def s(self) -> int:
        return self.y.size

    def truncate(self, s: int) -> "ParamPoint":
        if s > self.s:
            raise ValueError(f"cannot truncate dimension {self.s} point to {s}")
        return ParamPoint(self.y[:s])


def _y_values(y) -> np.ndarray:
    if isinstance(y, ParamPoint):
        return y.y
    return np.asarray(y, dtype=float).reshape(-1)


@dataclass
class CoefficientExpansion:
    """Affine coefficient expansion with decay metadata.

    ``anorms[j-1]`` etc. hold the sup norms of the series terms; they feed
    the QMC weight construction and the uniform bounds ``amin``/``amax``.
    ``amin`` is a certified lower bound of a(x, y) and c(x) over all
    admissible (x, y); construction must fail if no positive bound exists.
    """

    a0: Field
    aj: Sequence[Field]
    b0: Field | None
    bj: Sequence[Field]
    c: Field
    anorms: np.ndarray
    bnorms: np.ndarray
    grad_anorms: np.ndarray
    decay_p: float
    decay_q: float
    amin: float
    amax: float
    kind: str = "custom"
    theta: float = float("nan")

    def __post_init__(self):
        self.anorms = np.asarray(self.anorms, dtype=float)
        self.bnorms = np.asarray(self.bnorms, dtype=float)
        self.grad_anorms = np.asarray(self.grad_anorms, dtype=float)
        if not (0 < self.decay_p < 1 and 0 < self.decay_q < 1):
            raise ValueError("decay exponents p, q must lie in (0, 1)")
        if self.amin <= 0:
            raise ValueError("coefficient family admits no positive lower bound")

    @property
    def s_max(self) -> int:
        return len(self.aj)

    def term_norms(self, s: int) -> np.ndarray:
        """max(||a_j||_inf, ||b_j||_inf) for j = 1..s."""
        return np.maximum(self.anorms[:s], self.bnorms[:s])

    def term_norms_grad(self, s: int) -> np.ndarray:
        """max(||a_j||_inf, ||b_j||_inf, ||grad a_j||_inf) for j = 1..s."""
        return np.maximum(self.term_norms(s), self.grad_anorms[:s])

    def table(self, which: str, x: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]:
        """Series terms evaluated at coordinates x.

        Returns ``(base, terms)`` with ``base`` of shape (m,) and ``terms``
        of shape (s, m), so a^s(x, y) = base + y @ terms.
        """
        x = _as_coords(x)
        m = x.shape[0]
        if which == "a":
            base, terms = self.a0(x), self.aj
        elif which == "b":
            base = np.zeros(m) if self.b0 is None else self.b0(x)
            terms = self.bj
        elif which == "c":
            return self.c(x), np.zeros((0, m))
        else:
            raise ValueError(f"unknown coefficient {which!r}")
        s = min(s, len(terms))
        tab = np.empty((s, m))
        for j in range(s):
            tab[j] = terms[j](x)
        return np.broadcast_to(np.asarray(base, dtype=float), (m,)).copy(), tab


def eval_truncated(exp: CoefficientExpansion, which: str, x, y) -> np.ndarray | float:
    """Evaluate a^s (resp. b^s, c) at x for the truncated parameter y.

    The truncation dimension is the length of ``y``; terms beyond the
    family's own series length contribute nothing.
    """
    yv = _y_values(y)
    coords = _as_coords(x)
    base, tab = exp.table(which, coords, yv.size)
    if which == "c" or tab.shape[0] == 0:
        vals = base
    else:
        vals = base + yv[: tab.shape[0]] @ tab
    return float(vals[0]) if vals.size == 1 else vals


def make_builtin_family(
    kind: str,
    theta: float,
    s_max: int,
    *,
    with_b: bool = False,
) -> CoefficientExpansion:
    """Construct one of the built-in coefficient families.

    Parameters
    ----------
    kind:
        "sine-decay": a_j(x) = j^(-theta) sin(j pi x_1) on the unit
        interval/square, giving ||a_j||_inf = j^(-theta) exactly.
        "indicator-patches": a_j(x) = j^(-theta) 1_{I_j}(x_1) on a dyadic
        patch hierarchy, same sup norms, discontinuous in x.
    theta:
        Decay exponent of the series terms; must exceed 1 so the series
        is summable against |y_j| <= 1/2 with margin.
    s_max:
        Number of series terms kept; 0 yields the constant problem a == 1.
    with_b:
        Attach a reaction series b_0 == 1, b_j matching the a_j decay.
        Default keeps b == 0.

    The base fields are a_0 == 1 and c == 1.  The certified lower bound is
    amin = 1 - zeta(theta)/2 (tail summed analytically over the *full*
    series, not just the s_max kept terms); construction fails if this is
    not positive, which happens for theta <~ 1.7287.
    """
    if kind not in BUILTIN_KINDS:
        raise ValueError(f"unknown family kind {kind!r}; expected one of {BUILTIN_KINDS}")
    if not theta > 1:
        raise ValueError("theta must exceed 1 for a summable series")
    if s_max < 0:
        raise ValueError("s_max must be nonnegative")

    tail = float(zeta(theta, 1))  # sum_{j>=1} j^(-theta)
    amin = 1.0 - 0.5 * tail
    if amin <= 0:
        raise ValueError(
            f"series too strong: 1 - zeta({theta})/2 = {amin:.4f} <= 0; increase theta"
        )
    amax = 1.0 + 0.5 * tail

    js = np.arange(1, s_max + 1)
    anorms = js.astype(float) ** (-theta)

    def one(x: np.ndarray) -> np.ndarray:
        return np.ones(x.shape[0])

    if kind == "sine-decay":
        def make_term(j: int) -> Field:
            amp = float(j) ** (-theta)
            def term(x: np.ndarray, j=j, amp=amp) -> np.ndarray:
                return amp * np.sin(j * np.pi * x[:, 0])
            return term
        grad_anorms = np.pi * js.astype(float) ** (1.0 - theta)
    else:
        # Dyadic patches: j = 2^k + i covers [i 2^-k, (i+1) 2^-k) in x_1.
        def make_term(j: int) -> Field:
            amp = float(j) ** (-theta)
            k = int(np.floor(np.log2(j)))
            i = j - 2**k
            lo, hi = i * 2.0**-k, (i + 1) * 2.0**-k
            def term(x: np.ndarray, amp=amp, lo=lo, hi=hi) -> np.ndarray:
                return amp * ((x[:, 0] >= lo) & (x[:, 0] < hi))
            return term
        # Discontinuous terms carry no usable gradient bound; the weight
        # construction then falls back to the sup norms alone.
        grad_anorms = np.zeros(s_max)

    aj = [make_term(int(j)) for j in js]

    if with_b:
        b0: Field | None = one
        bj = [make_term(int(j)) for j in js]
        bnorms = anorms.copy()
    else:
        b0 = None
        bj = []
        bnorms = np.zeros(s_max)

    p, q = _decay_exponents(theta)
    return CoefficientExpansion(
        a0=one, aj=aj, b0=b0, bj=bj, c=one,
        anorms=anorms, bnorms=bnorms, grad_anorms=grad_anorms,
        decay_p=p, decay_q=q, amin=amin, amax=amax,
        kind=kind, theta=theta,
    )


def _decay_exponents(theta: float) -> tuple[float, float]:
    """Pick summability exponents p <= q in (0, 1) for a j^(-theta) family.

    Any p > 1/theta certifies sum ||a_j||^p < infinity.  q <= 2/3 keeps the
    QMC convergence exponent at its best value, so it is preferred whenever
    the constraint p < q allows it.
    """
    pmin = 1.0 / theta
    if pmin < 0.6:
        return 0.6, 2.0 / 3.0
    p = 0.5 * (pmin + 1.0)
    return p, 0.5 * (p + 1.0)


def constant_expansion(a: float = 1.0, b: float = 0.0, c: float = 1.0) -> CoefficientExpansion:
    """A y-independent problem with constant coefficients (no series terms)."""
    if a <= 0 or c <= 0 or b < 0:
        raise ValueError("need a > 0, c > 0, b >= 0")

    def const(v: float) -> Field:
        def f(x: np.ndarray, v=v) -> np.ndarray:
            return np.full(x.shape[0], v)
        return f

    return CoefficientExpansion(
        a0=const(a), aj=[], b0=const(b) if b else None, bj=[], c=const(c),
        anorms=np.zeros(0), bnorms=np.zeros(0), grad_anorms=np.zeros(0),
        decay_p=0.5, decay_q=0.5, amin=min(a, c), amax=max(a, b, c),
        kind="constant",
    )
