"""Randomly shifted rank-1 lattice rules with CBC-constructed generators.

The quadrature points are t_k = frac(k z / N + Delta) - 1/2 for a
generating vector z, point count N (a power of two here) and a uniform
random shift Delta.  Generating vectors are chosen greedily, component by
component, to minimise the shift-averaged squared worst-case error in a
weighted unanchored Sobolev space,

    e^2(z) = sum_{nonempty u} gamma_u (1/N) sum_k prod_{j in u} B2(frac(k z_j / N)),

with the Bernoulli polynomial B2(x) = x^2 - x + 1/6.  The weights are
product-and-order-dependent: gamma_u = Gamma(|u|) prod_{j in u} g_j, which
keeps both the error evaluation and the CBC search quadratic rather than
exponential in the dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln, zeta


class IntegrandError(RuntimeError):
    """An integrand evaluation failed; carries the offending indices."""

    def __init__(self, shift_index: int, point_index: int | None, cause: Exception):
        self.shift_index = shift_index
        self.point_index = point_index
        loc = f"shift {shift_index}" + (
            f", point {point_index}" if point_index is not None else ""
        )
        super().__init__(f"integrand failed at {loc}: {cause}")


def bernoulli2(x: np.ndarray) -> np.ndarray:
    """B2 on [0, 1): the shift-averaged lattice kernel."""
    return x * x - x + 1.0 / 6.0


@dataclass
class PODWeights:
    """Product-and-order-dependent QMC weights, truncated at s dimensions.

    ``order_factor(k)`` and ``dim_factors[j-1]`` are the *realized* POD
    pieces: gamma_u = order_factor(|u|) * prod_{j in u} dim_factors[j-1].
    ``gamma_j`` keeps the underlying per-dimension weights for reporting.
    The weight of the empty set is 1 by convention.
    """

    gamma_j: np.ndarray
    xi: float
    upeps: float
    order_factor: Callable[[int], float]
    dim_factors: np.ndarray

    def __post_init__(self):
        self.gamma_j = np.asarray(self.gamma_j, dtype=float)
        self.dim_factors = np.asarray(self.dim_factors, dtype=float)
        if np.any(self.gamma_j <= 0) or np.any(self.dim_factors <= 0):
            raise ValueError("weights must be positive")

    @property
    def s(self) -> int:
        return self.dim_factors.size

    @classmethod
    def from_base(cls, gamma_j, xi: float, upeps: float) -> "PODWeights":
        """Realize POD weights from per-dimension gamma_j.

        gamma_u = ((|u|+3)!^(2(1+eps)) prod_{j in u} kappa gamma_j^2)^(1/(1+xi))
        with the kernel constant kappa = (2 pi^2)^xi / (2 zeta(2 xi)).
        """
        gamma_j = np.asarray(gamma_j, dtype=float)
        if not 0.5 < xi <= 1.0:
            raise ValueError("xi must lie in (1/2, 1]")
        if upeps < 0:
            raise ValueError("upeps must be nonnegative")
        kappa = (2.0 * np.pi**2) ** xi / (2.0 * zeta(2.0 * xi, 1))
        expo = 1.0 / (1.0 + xi)

        def order_factor(k: int, _e=2.0 * (1.0 + upeps) * expo) -> float:
            return 1.0 if k == 0 else math.exp(gammaln(k + 4.0) * _e)

        return cls(gamma_j, xi, upeps, order_factor,
                   (kappa * gamma_j**2) ** expo)

    @classmethod
    def from_pod(cls, order_factor: Callable[[int], float],
                 dim_factors) -> "PODWeights":
        """Raw POD weights with explicit order and per-dimension factors."""
        dim_factors = np.asarray(dim_factors, dtype=float)
        return cls(dim_factors.copy(), 1.0, 0.0, order_factor, dim_factors)

    def order_array(self, kmax: int) -> np.ndarray:
        out = np.empty(kmax + 1)
        out[0] = 1.0
        for k in range(1, kmax + 1):
            out[k] = self.order_factor(k)
        return out

    def weight(self, u) -> float:
        """Realized gamma_u for a subset of dimensions (1-based indices)."""
        u = sorted(set(int(j) for j in u))
        if not u:
            return 1.0
        if u[0] < 1 or u[-1] > self.s:
            raise ValueError(f"subset {u} outside 1..{self.s}")
        return float(self.order_factor(len(u))
                     * np.prod([self.dim_factors[j - 1] for j in u]))


def choose_xi(q: float, delta: float) -> tuple[float, float]:
    """Convergence exponent xi and regularity margin for summability q."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    xi = 1.0 / (2.0 - delta) if q <= 2.0 / 3.0 else q / (2.0 - q)
    return xi, (1.0 - xi) / (4.0 * xi)


def compute_pod_weights(betas, p: float, q: float, delta: float, s: int,
                        betas_hat=None, c_beta: float = 1.0) -> PODWeights:
    """POD weights for the eigenproblem integrands.

    ``betas`` are the per-dimension sup norms max(||a_j||, ||b_j||) and
    ``betas_hat`` additionally majorise the gradient norms (defaults to
    ``betas`` when gradient information is unavailable).  The theoretical
    multipliers on the two sequences involve unknown spectral constants and
    are replaced by the single configurable ``c_beta``.  Per-dimension
    weights are gamma_j = max(beta_hat_j, beta_j^(p/q)).
    """
    if not 0 < p <= q < 1:
        raise ValueError(f"need 0 < p <= q < 1, got p={p}, q={q}")
    if s < 1:
        raise ValueError("need s >= 1")
    betas = c_beta * np.asarray(betas, dtype=float)[:s]
    if betas.size < s:
        raise ValueError(f"need {s} beta values, got {betas.size}")
    if betas_hat is None:
        bhat = betas
    else:
        bhat = c_beta * np.asarray(betas_hat, dtype=float)[:s]
    if np.any(betas <= 0) or np.any(bhat <= 0):
        raise ValueError("beta sequences must be positive")
    xi, upeps = choose_xi(q, delta)
    gamma_j = np.maximum(bhat, betas ** (p / q))
    return PODWeights.from_base(gamma_j, xi, upeps)


# ---------------------------------------------------------------------------
# Worst-case error and CBC construction
# ---------------------------------------------------------------------------

def _validate_z(z: np.ndarray, N: int) -> np.ndarray:
    z = np.asarray(z, dtype=np.int64).reshape(-1)
    if N < 1:
        raise ValueError("N must be positive")
    for zj in z:
        if zj < 1 or math.gcd(int(zj), N) != 1:
            raise ValueError(f"generator entry {zj} not coprime with N={N}")
    return z


def worst_case_error_sq(z, N: int, w: PODWeights) -> float:
    """Shift-averaged squared worst-case error e^2(z) of the length-s rule.

    Uses the order-dependent recursion over dimensions, so the cost is
    O(s^2 N) rather than a sum over all 2^s subsets.
    """
    z = _validate_z(z, N)
    s = z.size
    if s > w.s:
        raise ValueError(f"weights provide {w.s} dimensions, generator has {s}")
    k = np.arange(N)
    P = np.zeros((N, s + 1))
    P[:, 0] = 1.0
    for j in range(1, s + 1):
        v = w.dim_factors[j - 1] * bernoulli2(((k * int(z[j - 1])) % N) / N)
        for ell in range(j, 0, -1):
            P[:, ell] += v * P[:, ell - 1]
    Gam = w.order_array(s)
    return float(np.sum(Gam[1:] * P[:, 1:].mean(axis=0)))


def cbc_construct(N: int, s: int, w: PODWeights, *,
                  tie_rtol: float = 1e-12, chunk: int = 512) -> np.ndarray:
    """Greedy component-by-component minimiser of the worst-case error.

    z_1 = 1; each further component scans the odd residues modulo N and
    keeps the candidate minimising e^2 of the extended prefix, breaking
    ties (equality up to ``tie_rtol`` relative) towards the smallest
    candidate.  Per-point order-dependent accumulators are carried along,
    so one component costs O(s N) per candidate.
    """
    if N < 1 or (N & (N - 1)) != 0:
        raise ValueError("N must be a power of two")
    if s < 1:
        raise ValueError("s must be positive")
    if s > w.s:
        raise ValueError(f"weights provide {w.s} dimensions, requested s={s}")

    if N <= 2:
        return np.ones(s, dtype=np.int64)

    k = np.arange(N)
    b2_table = bernoulli2(k / N)
    # B2 is symmetric about 1/2, so candidates c and N - c always score
    # identically; with smallest-candidate tie-breaking only c < N/2 can win.
    candidates = np.arange(1, max(N // 2, 2), 2, dtype=np.int64)
    k32 = k.astype(np.int32) if N <= 2**15 else k
    Gam = w.order_array(s)
    P = np.zeros((N, s + 1))
    P[:, 0] = 1.0
    z = np.empty(s, dtype=np.int64)
    for j in range(1, s + 1):
        g = float(w.dim_factors[j - 1])
        # e^2 after adding candidate c:
        #   const + g * mean_k B2(frac(k c / N)) * q_k,
        # where q_k folds the order factors over the current accumulators.
        q = P[:, :j] @ Gam[1:j + 1]
        scores = np.empty(candidates.size)
        for lo in range(0, candidates.size, chunk):
            cs = candidates[lo:lo + chunk].astype(k32.dtype)
            idx = (k32[None, :] * cs[:, None]) % N
            scores[lo:lo + chunk] = b2_table[idx] @ q
        best = float(np.min(scores))
        tol = tie_rtol * max(1.0, abs(best))
        choice = int(candidates[np.nonzero(scores <= best + tol)[0][0]])
        z[j - 1] = choice
        v = g * b2_table[(k * choice) % N]
        for ell in range(j, 0, -1):
            P[:, ell] += v * P[:, ell - 1]
    return z


# ---------------------------------------------------------------------------
# Point generation, shifting, estimation
# ---------------------------------------------------------------------------

@dataclass
class LatticeRule:
    """Generating vector, point count, and R random shifts in [0, 1)^s."""

    z: np.ndarray
    N: int
    shifts: np.ndarray   # (R, s)

    def __post_init__(self):
        self.z = _validate_z(self.z, self.N)
        self.shifts = np.atleast_2d(np.asarray(self.shifts, dtype=float))
        if self.shifts.shape[1] != self.z.size:
            raise ValueError("shift dimension does not match generator length")
        if np.any(self.shifts < 0.0) or np.any(self.shifts >= 1.0):
            raise ValueError("shifts must lie in [0, 1)")

    @property
    def R(self) -> int:
        return self.shifts.shape[0]

    @property
    def s(self) -> int:
        return self.z.size


def shift_for(seed: int, ell: int, r: int, s: int) -> np.ndarray:
    """The shift for (seed, level, replicate) - a pure function of its args."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(ell), int(r)))
    return np.random.Generator(np.random.Philox(ss)).random(s)


def shifts_for_level(seed: int, ell: int, R: int, s: int) -> np.ndarray:
    """R independent shifts for one level, reproducible row by row."""
    return np.vstack([shift_for(seed, ell, r, s) for r in range(R)])


def generate_points(rule: LatticeRule, shift_index: int) -> np.ndarray:
    """The N shifted lattice points, mapped to [-1/2, 1/2)^s."""
    if not 0 <= shift_index < rule.R:
        raise ValueError(f"shift index {shift_index} outside 0..{rule.R - 1}")
    k = np.arange(rule.N)
    frac = (np.outer(k, rule.z) / rule.N + rule.shifts[shift_index]) % 1.0
    return frac - 0.5


@dataclass
class ShiftedEstimate:
    """Average over R shift replicas with its sample variance."""

    mean: float
    sample_variance: float
    per_shift: np.ndarray
    n_evals: int

    @property
    def R(self) -> int:
        return self.per_shift.size


def estimate_from_shifts(per_shift: np.ndarray, n_evals: int) -> ShiftedEstimate:
    per_shift = np.asarray(per_shift, dtype=float)
    R = per_shift.size
    mean = float(np.mean(per_shift))
    if R >= 2:
        var = float(np.sum((mean - per_shift) ** 2) / (R * (R - 1)))
    else:
        var = float("nan")   # unavailable with a single shift
    return ShiftedEstimate(mean, var, per_shift, n_evals)


def shifted_qmc(f, rule: LatticeRule) -> ShiftedEstimate:
    """Shift-averaged QMC approximation of a batched integrand.

    ``f`` maps an (N, s) array of points in [-1/2, 1/2)^s to (N,) values.
    Failures are re-raised with the offending (point, shift) indices.
    """
    per_shift = np.empty(rule.R)
    for r in range(rule.R):
        pts = generate_points(rule, r)
        try:
            vals = np.asarray(f(pts), dtype=float).reshape(-1)
        except Exception as err:
            raise IntegrandError(r, _locate_failure(f, pts), err) from err
        if vals.size != rule.N:
            raise ValueError(f"integrand returned {vals.size} values for {rule.N} points")
        per_shift[r] = np.mean(vals)
    return estimate_from_shifts(per_shift, rule.R * rule.N)


def _locate_failure(f, pts: np.ndarray) -> int | None:
    for kk in range(pts.shape[0]):
        try:
            f(pts[kk:kk + 1])
        except Exception:
            return kk
    return None


# ---------------------------------------------------------------------------
# Plain-text persistence of generating vectors
# ---------------------------------------------------------------------------

def save_generating_vector(path, z, N: int, digest: str = "") -> None:
    """One integer per line with an N/s header, optionally digest-stamped."""
    z = np.asarray(z, dtype=np.int64).reshape(-1)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# mlqmc-eig generating vector v1",
             f"# N={int(N)} s={z.size}"]
    if digest:
        lines.append(f"# digest={digest}")
    lines += [str(int(v)) for v in z]
    path.write_text("\n".join(lines) + "\n")


def load_generating_vector(path) -> tuple[np.ndarray, int, str]:
    """Returns (z, N, digest); raises ValueError on a malformed file."""
    text = Path(path).read_text().strip().splitlines()
    meta = {}
    entries = []
    for line in text:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    key, val = tok.split("=", 1)
                    meta[key] = val
            continue
        entries.append(int(line))
    if "N" not in meta or "s" not in meta:
        raise ValueError(f"{path}: missing N/s header")
    N, s = int(meta["N"]), int(meta["s"])
    if len(entries) != s:
        raise ValueError(f"{path}: expected {s} entries, found {len(entries)}")
    z = _validate_z(np.array(entries, dtype=np.int64), N)
    return z, N, meta.get("digest", "")
