"""Mesh hierarchies and P1 assembly of the discrete eigenproblem.

Meshes are uniform: subdivided intervals on (0, 1), or a structured
right-triangle (Friedrichs-Keller) triangulation of the unit square.
Homogeneous Dirichlet conditions are imposed by eliminating boundary rows
and columns at assembly time.  Coefficients are evaluated by a one-point
(centroid) rule per element; the P1 basis products are integrated exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .coeff import CoefficientExpansion, _y_values


class CoefficientPositivityError(RuntimeError):
    """The diffusion coefficient was not positive at a quadrature point."""


@dataclass
class MeshLevel:
    """One uniform mesh of the hierarchy.

    ``h`` is the maximum element diameter (the hypotenuse in 2D), while
    ``spacing`` is the grid step 1/n.  ``interior_dof`` indexes the
    non-boundary nodes; those are the only degrees of freedom.
    """

    dim: int
    h: float
    spacing: float
    nodes: np.ndarray           # (n_nodes, dim)
    elements: np.ndarray        # (n_el, dim + 1) vertex indices
    interior_dof: np.ndarray    # (M_h,) node indices
    centroids: np.ndarray = field(repr=False, default=None)
    volumes: np.ndarray = field(repr=False, default=None)
    _geo: dict = field(default_factory=dict, repr=False)
    _tables: dict = field(default_factory=dict, repr=False)

    @property
    def M_h(self) -> int:
        return int(self.interior_dof.size)

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.shape[0])

    def coeff_tables(self, exp: CoefficientExpansion, s: int):
        """Centroid tables (a0, Aj, b0, Bj, c) cached per (family, s).

        The cache entry keeps a strong reference to the expansion and is
        verified by identity, so a recycled object address cannot alias a
        stale table.
        """
        key = (id(exp), s)
        entry = self._tables.get(key)
        if entry is None or entry[0] is not exp:
            a0, Aj = exp.table("a", self.centroids, s)
            b0, Bj = exp.table("b", self.centroids, s)
            cc, _ = exp.table("c", self.centroids, s)
            entry = (exp, (a0, Aj, b0, Bj, cc))
            self._tables[key] = entry
        return entry[1]


def build_level(dim: int, h0: float, ell: int) -> MeshLevel:
    """Build the single mesh with grid spacing h0 * 2^-ell."""
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    if not 0 < h0 < 1:
        raise ValueError("h0 must lie in (0, 1)")
    spacing = h0 * 2.0 ** (-ell)
    n = 1.0 / spacing
    n_cells = int(round(n))
    if abs(n - n_cells) > 1e-9 * n:
        raise ValueError(f"1/(h0*2^-ell) = {n} is not an integer grid count")
    if n_cells < 2:
        raise ValueError("mesh has no interior degrees of freedom")

    if dim == 1:
        nodes = (np.arange(n_cells + 1) / n_cells).reshape(-1, 1)
        elements = np.column_stack([np.arange(n_cells), np.arange(1, n_cells + 1)])
        interior = np.arange(1, n_cells)
        centroids = 0.5 * (nodes[elements[:, 0]] + nodes[elements[:, 1]])
        volumes = np.full(n_cells, spacing)
        level = MeshLevel(1, spacing, spacing, nodes, elements, interior,
                          centroids, volumes)
    else:
        side = np.arange(n_cells + 1) / n_cells
        X, Y = np.meshgrid(side, side, indexing="xy")
        nodes = np.column_stack([X.ravel(), Y.ravel()])
        idx = np.arange((n_cells + 1) ** 2).reshape(n_cells + 1, n_cells + 1)
        v00 = idx[:-1, :-1].ravel()
        v10 = idx[:-1, 1:].ravel()
        v01 = idx[1:, :-1].ravel()
        v11 = idx[1:, 1:].ravel()
        # Each grid square splits into two right triangles along its diagonal.
        lower = np.column_stack([v00, v10, v11])
        upper = np.column_stack([v00, v11, v01])
        elements = np.vstack([lower, upper])
        ix, iy = np.meshgrid(np.arange(n_cells + 1), np.arange(n_cells + 1),
                             indexing="xy")
        interior = idx[(ix > 0) & (ix < n_cells) & (iy > 0) & (iy < n_cells)]
        pts = nodes[elements]                       # (n_el, 3, 2)
        centroids = pts.mean(axis=1)
        d1 = pts[:, 1] - pts[:, 0]
        d2 = pts[:, 2] - pts[:, 0]
        volumes = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        level = MeshLevel(2, spacing * np.sqrt(2.0), spacing, nodes, elements,
                          np.sort(interior), centroids, volumes)
        _precompute_2d_geometry(level)
    return level


def build_hierarchy(dim: int, h0: float, L: int) -> list[MeshLevel]:
    """L + 1 nested uniform meshes with spacing h0 * 2^-ell."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    return [build_level(dim, h0, ell) for ell in range(L + 1)]


def _precompute_2d_geometry(level: MeshLevel) -> None:
    """Per-element y-independent pieces of the P1 local matrices."""
    pts = level.nodes[level.elements]               # (n_el, 3, 2)
    # Barycentric gradient components: grad phi_i = (b_i, c_i) / (2A).
    b = pts[:, [1, 2, 0], 1] - pts[:, [2, 0, 1], 1]
    c = pts[:, [2, 0, 1], 0] - pts[:, [1, 2, 0], 0]
    A = level.volumes
    K_geo = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) \
        / (4.0 * A)[:, None, None]
    S = (np.ones((3, 3)) + np.eye(3)) / 12.0        # exact P1 mass pattern
    rows = np.repeat(level.elements, 3, axis=1).ravel()
    cols = np.tile(level.elements, (1, 3)).ravel()
    level._geo.update(K_geo=K_geo, S=S, rows=rows, cols=cols)


@dataclass
class AssembledPair:
    """Stiffness/reaction matrix A and weighted mass matrix M (interior dofs)."""

    A: sp.csr_matrix
    M: sp.csr_matrix
    level: MeshLevel
    y: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]


def _coeff_values(level: MeshLevel, exp: CoefficientExpansion, y: np.ndarray):
    """Centroid values of a^s, b^s and c for one parameter point."""
    a0, Aj, b0, Bj, cc = level.coeff_tables(exp, y.size)
    av = a0 + y[: Aj.shape[0]] @ Aj if Aj.shape[0] else a0.copy()
    bv = b0 + y[: Bj.shape[0]] @ Bj if Bj.shape[0] else b0.copy()
    return av, bv, cc


def assemble(level: MeshLevel, exp: CoefficientExpansion, y,
             keep_boundary: bool = False) -> AssembledPair:
    """Assemble A and M at parameter point y.

    Raises :class:`CoefficientPositivityError` if a^s fails to be positive
    at any element centroid.  ``keep_boundary`` retains boundary rows and
    columns (used by conservation checks); the eigenproblem always uses the
    interior-only matrices.
    """
    yv = _y_values(y)
    av, bv, cc = _coeff_values(level, exp, yv)
    if np.min(av) <= 0.0:
        e = int(np.argmin(av))
        raise CoefficientPositivityError(
            f"a^s = {av[e]:.4g} <= 0 at element {e} centroid {level.centroids[e]}"
        )
    if level.dim == 1:
        A_full, M_full = _assemble_full_1d(level, av, bv, cc)
    else:
        A_full, M_full = _assemble_full_2d(level, av, bv, cc)
    if not keep_boundary:
        dof = level.interior_dof
        A_full = A_full[dof][:, dof]
        M_full = M_full[dof][:, dof]
    return AssembledPair(A_full.tocsr(), M_full.tocsr(), level, yv)


def _assemble_full_1d(level, av, bv, cc):
    h = level.spacing
    e0 = level.elements[:, 0]
    e1 = level.elements[:, 1]
    kd = av / h                       # exact stiffness of a P1 interval element
    mb = bv * (h / 6.0)
    mc = cc * (h / 6.0)
    rows = np.concatenate([e0, e1, e0, e1])
    cols = np.concatenate([e0, e1, e1, e0])
    dataA = np.concatenate([kd + 2 * mb, kd + 2 * mb, -kd + mb, -kd + mb])
    dataM = np.concatenate([2 * mc, 2 * mc, mc, mc])
    n = level.n_nodes
    A = sp.coo_matrix((dataA, (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((dataM, (rows, cols)), shape=(n, n)).tocsr()
    return A, M


def _assemble_full_2d(level, av, bv, cc):
    geo = level._geo
    K = av[:, None, None] * geo["K_geo"] \
        + (bv * level.volumes)[:, None, None] * geo["S"]
    Mloc = (cc * level.volumes)[:, None, None] * geo["S"]
    n = level.n_nodes
    A = sp.coo_matrix((K.ravel(), (geo["rows"], geo["cols"])), shape=(n, n)).tocsr()
    M = sp.coo_matrix((Mloc.ravel(), (geo["rows"], geo["cols"])), shape=(n, n)).tocsr()
    return A, M


@dataclass
class TridiagBatch:
    """Interior tridiagonal pencils for a batch of 1D parameter points."""

    dA: np.ndarray   # (B, n) diagonal of A
    eA: np.ndarray   # (B, n-1) off-diagonal of A
    dM: np.ndarray   # (B, n) diagonal of M
    eM: np.ndarray   # (B, n-1) off-diagonal of M

    @property
    def batch(self) -> int:
        return self.dA.shape[0]

    @property
    def n(self) -> int:
        return self.dA.shape[1]


def assemble_tridiag_batch(level: MeshLevel, exp: CoefficientExpansion,
                           Y: np.ndarray) -> TridiagBatch:
    """Vectorised interior assembly for many 1D parameter points at once.

    ``Y`` has shape (B, s).  Matches :func:`assemble` entry for entry.
    """
    if level.dim != 1:
        raise ValueError("batched assembly is implemented for 1D meshes only")
    Y = np.asarray(Y, dtype=float)
    a0, Aj, b0, Bj, cc = level.coeff_tables(exp, Y.shape[1])
    av = a0 + Y[:, : Aj.shape[0]] @ Aj if Aj.shape[0] else \
        np.broadcast_to(a0, (Y.shape[0], a0.size)).copy()
    if np.min(av) <= 0.0:
        b_idx, e_idx = np.unravel_index(np.argmin(av), av.shape)
        raise CoefficientPositivityError(
            f"a^s = {av[b_idx, e_idx]:.4g} <= 0 at sample {b_idx}, element {e_idx}"
        )
    bv = b0 + Y[:, : Bj.shape[0]] @ Bj if Bj.shape[0] else \
        np.broadcast_to(b0, (Y.shape[0], b0.size))
    h = level.spacing
    kd = av / h
    mb = bv * (h / 6.0)
    mcd = cc * (h / 6.0)
    dA = (kd[:, :-1] + 2 * mb[:, :-1]) + (kd[:, 1:] + 2 * mb[:, 1:])
    eA = -kd[:, 1:-1] + mb[:, 1:-1]
    dM = 2 * mcd[:-1] + 2 * mcd[1:]
    eM = mcd[1:-1]
    B = Y.shape[0]
    return TridiagBatch(dA, eA,
                        np.broadcast_to(dM, (B, dM.size)).copy(),
                        np.broadcast_to(eM, (B, eM.size)).copy())


def functional_weights(level: MeshLevel) -> np.ndarray:
    """Interior dof weights w with w . u = integral of the P1 interpolant."""
    w = np.zeros(level.n_nodes)
    share = level.volumes / (level.dim + 1)
    for v in range(level.dim + 1):
        np.add.at(w, level.elements[:, v], share)
    return w[level.interior_dof]


def indicator_weights(level: MeshLevel, lo: float, hi: float) -> np.ndarray:
    """Interior dof weights for G(v) = integral of v over [lo, hi] (1D only)."""
    if level.dim != 1:
        raise ValueError("indicator functional is implemented for 1D meshes only")
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError("need 0 <= lo < hi <= 1")
    x = level.nodes[:, 0]
    h = level.spacing
    w = np.zeros(level.n_nodes)
    for el, (i, j) in enumerate(level.elements):
        a = max(lo, x[i])
        b = min(hi, x[j])
        if b <= a:
            continue
        # Exact integrals of the two linear hat restrictions over [a, b].
        w[j] += ((b - x[i]) ** 2 - (a - x[i]) ** 2) / (2 * h)
        w[i] += ((x[j] - a) ** 2 - (x[j] - b) ** 2) / (2 * h)
    return w[level.interior_dof]


def dump_mesh_csv(level: MeshLevel, outdir) -> None:
    """Write nodes.csv and elements.csv for debugging."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "nodes.csv", "w", newline="") as fh:
        wcsv = csv.writer(fh)
        wcsv.writerow(["index"] + [f"x{k}" for k in range(level.dim)])
        for i, row in enumerate(level.nodes):
            wcsv.writerow([i] + [repr(float(v)) for v in row])
    with open(outdir / "elements.csv", "w", newline="") as fh:
        wcsv = csv.writer(fh)
        wcsv.writerow(["index"] + [f"v{k}" for k in range(level.dim + 1)])
        for i, row in enumerate(level.elements):
            wcsv.writerow([i] + [int(v) for v in row])
