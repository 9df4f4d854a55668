"""Bilinear finite elements on the tensor grid, boundary data and solvers.

The assembled operator is the plain Laplace stiffness matrix; material
constants enter through energies and boundary fluxes, never through the
matrix itself. Constrained degrees of freedom (top edge, bonded part of
the bottom edge) are handled by masking: the full matrix is kept and the
solvers skip constrained rows and columns, so changing the bonded set
costs nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .grid import Grid


def element_stiffness(hx: float, hy: float) -> np.ndarray:
    """Exact stiffness integrals of one bilinear element.

    Node order SW, SE, NE, NW. For a square element this reduces to
    (1/6) * [[4,-1,-2,-1], [-1,4,-1,-2], [-2,-1,4,-1], [-1,-2,-1,4]].
    """
    rho = hy / hx
    kx = np.array(
        [[2, -2, -1, 1], [-2, 2, 1, -1], [-1, 1, 2, -2], [1, -1, -2, 2]],
        dtype=float,
    )
    ky = np.array(
        [[2, 1, -1, -2], [1, 2, -2, -1], [-1, -2, 2, 1], [-2, -1, 1, 2]],
        dtype=float,
    )
    return (rho * kx + ky / rho) / 6.0


def element_mass(hx: float, hy: float) -> np.ndarray:
    """Exact mass integrals of one bilinear element, node order SW, SE, NE, NW."""
    m = np.array(
        [[4, 2, 1, 2], [2, 4, 2, 1], [1, 2, 4, 2], [2, 1, 2, 4]], dtype=float
    )
    return (hx * hy / 36.0) * m


def _assemble(grid: Grid, ke: np.ndarray) -> sp.csr_matrix:
    conn = grid.element_conn
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    vals = np.tile(ke.ravel(), conn.shape[0])
    mat = sp.coo_matrix(
        (vals, (rows, cols)), shape=(grid.n_nodes, grid.n_nodes)
    ).tocsr()
    mat.sum_duplicates()
    return mat


def assemble_stiffness(grid: Grid) -> sp.csr_matrix:
    return _assemble(grid, element_stiffness(grid.hx, grid.hy))


def assemble_mass(grid: Grid) -> sp.csr_matrix:
    return _assemble(grid, element_mass(grid.hx, grid.hy))


@dataclass(frozen=True)
class BoundaryData:
    """Essential boundary data for one auxiliary problem.

    top holds the prescribed displacement at y = b, one value per node
    column. Bottom nodes with j >= sigma_idx are pinned to zero (bonded
    material ahead of the cohesive zone); the rest of the bottom edge is
    a natural boundary and receives its flux through the load vector.
    """

    top: np.ndarray
    sigma_idx: int


class SolveError(RuntimeError):
    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


@dataclass
class LinearSystem:
    """Constrained SPD system kept in full (unreduced) form.

    matrix is the full stiffness, mask flags free nodes, g carries the
    Dirichlet extension (top values, zeros elsewhere) and b_eff the
    load with the Dirichlet coupling moved to the right-hand side.
    The reduced matrix and right-hand side are materialized lazily; the
    iterative solvers never need them.
    """

    matrix: sp.csr_matrix
    grid: Grid
    bc: BoundaryData
    mask: np.ndarray
    g: np.ndarray
    b_eff: np.ndarray
    _free: Optional[np.ndarray] = dc_field(default=None, repr=False)
    _free_matrix: Optional[sp.csr_matrix] = dc_field(default=None, repr=False)

    @property
    def n_free(self) -> int:
        return int(self.mask.sum())

    @property
    def free_indices(self) -> np.ndarray:
        if self._free is None:
            self._free = np.flatnonzero(self.mask)
        return self._free

    @property
    def free_matrix(self) -> sp.csr_matrix:
        if self._free_matrix is None:
            f = self.free_indices
            self._free_matrix = self.matrix[f][:, f].tocsr()
        return self._free_matrix

    @property
    def free_rhs(self) -> np.ndarray:
        return self.b_eff[self.free_indices]


def apply_dirichlet(
    matrix: sp.csr_matrix,
    load: np.ndarray,
    grid: Grid,
    bc: BoundaryData,
    shifted_load: np.ndarray | None = None,
) -> LinearSystem:
    """Impose the essential constraints symmetrically.

    Returns a LinearSystem whose solution, extended by the boundary
    values, solves the original constrained problem. `shifted_load` may
    carry a precomputed -A g term (it only depends on the top data, not
    on sigma_idx, so callers scanning the bonded set can reuse it).
    """
    if bc.top.shape != (grid.nx + 1,):
        raise ValueError("top data must hold one value per node column")
    if not 0 <= bc.sigma_idx <= grid.nx:
        raise ValueError("sigma_idx outside the bottom edge")

    n = grid.n_nodes
    mask = np.ones(n, dtype=bool)
    mask[grid.top_nodes()] = False
    mask[bc.sigma_idx : grid.nx + 1] = False

    g = np.zeros(n)
    g[grid.top_nodes()] = bc.top

    if shifted_load is None:
        shifted_load = -(matrix @ g)
    b_eff = load + shifted_load
    b_eff[~mask] = 0.0
    return LinearSystem(matrix, grid, bc, mask, g, b_eff)


@dataclass
class ScalarField:
    """Nodal scalar field on the full grid, bottom row first."""

    grid: Grid
    values: np.ndarray
    iterations: int = 0

    def grid_view(self) -> np.ndarray:
        """(ny+1, nx+1) view, row k holds the nodes at height k*hy."""
        return self.values.reshape(self.grid.ny + 1, self.grid.nx + 1)

    def bottom_trace(self) -> np.ndarray:
        return self.values[: self.grid.nx + 1]

    def top_trace(self) -> np.ndarray:
        return self.values[self.grid.ny * (self.grid.nx + 1) :]


def _pcg_python(system: LinearSystem, apply_m, x, rel_tol: float, max_iter: int):
    """Textbook PCG with a caller-supplied preconditioner apply."""
    a = system.matrix
    mask = system.mask
    b = system.b_eff

    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        x[mask] = 0.0
        return 0, 0.0

    ax = np.empty_like(x)
    _kernels.csr_matvec_masked(a.indptr, a.indices, a.data, x, mask, ax)
    r = b - ax
    r[~mask] = 0.0
    z = apply_m(r)
    z[~mask] = 0.0
    p = z.copy()
    rz = float(r @ z)
    r_norm = float(np.linalg.norm(r))

    it = 0
    while r_norm > rel_tol * b_norm and it < max_iter:
        _kernels.csr_matvec_masked(a.indptr, a.indices, a.data, p, mask, ax)
        alpha = rz / float(p @ ax)
        x += alpha * p
        r -= alpha * ax
        r_norm = float(np.linalg.norm(r))
        z = apply_m(r)
        z[~mask] = 0.0
        rz_new = float(r @ z)
        p *= rz_new / rz
        p += z
        rz = rz_new
        it += 1
    return it, r_norm / b_norm


def solve_spd(
    system: LinearSystem,
    rel_tol: float = 1e-10,
    precond: str = "jacobi",
    x0: np.ndarray | None = None,
    max_iter: int | None = None,
    schur=None,
) -> ScalarField:
    """Solve the constrained system by preconditioned conjugate gradients.

    precond selects the preconditioner: "jacobi" (diagonal scaling) or
    "schur" (exact elimination of the interior through the x-mode basis,
    which makes CG a one-or-two iteration polish). Convergence is always
    certified by the actual residual: |b - A x| <= rel_tol * |b| on the
    free equations, else SolveError.
    """
    if max_iter is None:
        max_iter = int(50 * np.sqrt(system.n_free)) + 1000

    x = np.zeros(system.grid.n_nodes)
    if x0 is not None:
        x[system.mask] = x0[system.mask]

    a = system.matrix
    if precond == "jacobi":
        inv_diag = np.zeros(system.grid.n_nodes)
        diag = a.diagonal()
        inv_diag[system.mask] = 1.0 / diag[system.mask]
        it, relres = _kernels.pcg_jacobi(
            a.indptr,
            a.indices,
            a.data,
            inv_diag,
            system.b_eff,
            x,
            system.mask,
            rel_tol,
            max_iter,
        )
    elif precond == "schur":
        if schur is None:
            from .schur import BottomSchur

            schur = BottomSchur(system.grid)
        sigma_idx = system.bc.sigma_idx

        def apply_m(r):
            return schur.constrained_solve(r, sigma_idx)

        it, relres = _pcg_python(system, apply_m, x, rel_tol, max_iter)
    else:
        raise ValueError(f"unknown preconditioner {precond!r}")

    if relres > rel_tol:
        raise SolveError(
            f"CG stalled after {it} iterations, relative residual {relres:.3e} "
            f"> {rel_tol:.3e}",
            it,
            relres,
        )

    values = x + system.g
    # constrained entries carry the boundary values exactly
    values[~system.mask] = system.g[~system.mask]
    return ScalarField(system.grid, values, iterations=it)


def dirichlet_energy(field: ScalarField) -> float:
    """Integral of |grad u|^2 over the body, exact for the bilinear space."""
    g = field.grid
    ke = element_stiffness(g.hx, g.hy)
    u4 = field.values[g.element_conn]
    return float(np.einsum("ei,ij,ej->", u4, ke, u4))


def elastic_energy(field: ScalarField, alpha: float) -> float:
    return 0.5 * alpha * dirichlet_energy(field)


def h1_seminorm(field: ScalarField) -> float:
    return float(np.sqrt(max(dirichlet_energy(field), 0.0)))


def l2_norm(field: ScalarField) -> float:
    g = field.grid
    me = element_mass(g.hx, g.hy)
    u4 = field.values[g.element_conn]
    return float(np.sqrt(max(np.einsum("ei,ij,ej->", u4, me, u4), 0.0)))


def path_abs_integral(
    grid: Grid, j_from: int, f: np.ndarray, g: np.ndarray
) -> float:
    """Exact integral of |f - g| over the bottom edge from node j_from to x = a.

    f and g hold nodal values on the full bottom row; the difference is
    piecewise linear, so each edge contributes either a trapezoid or, when
    the sign flips inside the edge, two triangles around the zero crossing.
    """
    d = f[j_from:] - g[j_from:]
    if d.shape[0] < 2:
        return 0.0
    d0 = d[:-1]
    d1 = d[1:]
    same = d0 * d1 >= 0.0
    out = np.empty_like(d0)
    out[same] = np.abs(d0[same]) + np.abs(d1[same])
    flip = ~same
    absum = np.abs(d0[flip]) + np.abs(d1[flip])
    out[flip] = (d0[flip] ** 2 + d1[flip] ** 2) / absum
    return float(0.5 * grid.hx * out.sum())
