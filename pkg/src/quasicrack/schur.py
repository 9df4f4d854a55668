"""Exact elimination of the bulk onto the bottom edge for the tensor grid.

The stiffness matrix of a uniform tensor grid separates into 1D factors.
With homogeneous Neumann sides, the x-direction pencil (stiffness, mass)
is diagonalized by sampled cosines, so applying the inverse of the
operator with a fully free bottom row costs one cosine transform, a batch
of tridiagonal solves in y, and a transform back. Partial bottom
constraints (nodes bonded from some column onward) are then enforced
through a small capacitance system on the constrained nodes, built from
the bottom-to-bottom Green matrix.

This gives a machine-accurate application of the inverse of the reduced
operator for any bonded set, which serves two roles: a preconditioner
that makes CG converge in one or two iterations, and a cheap evaluator
of bottom traces during scans over the bonded set, where only a handful
of boundary values are needed per trial.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import _kernels
from .grid import Grid


def _tridiag_mv(d, e, x):
    y = d[:, None] * x
    if e.shape[0]:
        y[:-1] += e[:, None] * x[1:]
        y[1:] += e[:, None] * x[:-1]
    return y


class BottomSchur:
    """Factored representation tied to one grid; reusable across loads."""

    def __init__(self, grid: Grid):
        self.grid = grid
        nx, ny = grid.nx, grid.ny
        hx, hy = grid.hx, grid.hy
        n = nx + 1
        self.n = n
        self._nrows = ny * n

        m = np.arange(n)
        theta = m * np.pi / nx
        # generalized eigenvalues of the 1D (stiffness, mass) pencil in x
        self.lam = (6.0 / hx**2) * (1.0 - np.cos(theta)) / (2.0 + np.cos(theta))
        jj, mm = np.meshgrid(m, m, indexing="ij")
        self.v = np.cos(np.pi * jj * mm / nx)

        mx_d = np.full(n, 4.0 * hx / 6.0)
        mx_d[0] = mx_d[-1] = 2.0 * hx / 6.0
        mx_e = np.full(nx, hx / 6.0)
        self.dm = np.einsum(
            "jm,jm->m", self.v, _tridiag_mv(mx_d, mx_e, self.v)
        )

        # y-direction matrices on rows k = 0..ny-1: free end at the bottom,
        # the top row is eliminated by the Dirichlet condition
        ky_d = np.full(ny, 2.0 / hy)
        ky_d[0] = 1.0 / hy
        ky_e = np.full(max(ny - 1, 0), -1.0 / hy)
        my_d = np.full(ny, 4.0 * hy / 6.0)
        my_d[0] = 2.0 * hy / 6.0
        my_e = np.full(max(ny - 1, 0), hy / 6.0)

        diag = self.lam[None, :] * my_d[:, None] + ky_d[:, None]
        off = self.lam[None, :] * my_e[:, None] + ky_e[:, None]
        self._off = np.ascontiguousarray(off)
        self._denom, self._cprime = _kernels.tridiag_factor(
            np.ascontiguousarray(diag), self._off
        )

        # bottom-to-bottom Green matrix: per mode the unit bottom load
        # solves to a scalar multiple of one tridiagonal column
        e0 = np.zeros((ny, n))
        e0[0, :] = 1.0
        t0 = np.empty_like(e0)
        _kernels.tridiag_solve_batch(self._denom, self._cprime, self._off, e0, t0)
        self.gbb = (self.v * (t0[0] / self.dm)[None, :]) @ self.v.T

        # prefix traces: column j holds the unit-flux load of edges [0, j],
        # i.e. hx/2 at the run ends and hx at interior nodes
        p = np.zeros((n, n))
        p[np.triu_indices(n, k=1)] = hx
        p[0, 1:] -= 0.5 * hx
        p[np.arange(1, n), np.arange(1, n)] += 0.5 * hx
        self.tpref = self.gbb @ p

        self._chol_cache: dict[int, tuple] = {}

    def a0_solve(self, f_rows: np.ndarray) -> np.ndarray:
        """Inverse of the bottom-free operator; f_rows has shape (ny, nx+1)."""
        fhat = f_rows @ self.v
        fhat /= self.dm[None, :]
        out = np.empty_like(fhat)
        _kernels.tridiag_solve_batch(
            self._denom, self._cprime, self._off, fhat, out
        )
        return out @ self.v.T

    def chol(self, sigma_idx: int):
        f = self._chol_cache.get(sigma_idx)
        if f is None:
            c = self.gbb[sigma_idx:, sigma_idx:]
            f = cho_factor(c, lower=True)
            self._chol_cache[sigma_idx] = f
        return f

    def constrained_solve(self, rhs: np.ndarray, sigma_idx: int) -> np.ndarray:
        """Exact solve with bottom nodes j >= sigma_idx pinned to zero.

        rhs is a full-length masked vector (zeros on constrained entries).
        Returns a full-length vector, zero on the top row and on the
        pinned bottom nodes.
        """
        f2 = rhs[: self._nrows].reshape(self.grid.ny, self.n)
        v = self.a0_solve(f2)
        lam = cho_solve(self.chol(sigma_idx), -v[0, sigma_idx:])
        f2b = f2.copy()
        f2b[0, sigma_idx:] += lam
        u = self.a0_solve(f2b)
        out = np.zeros(self.grid.n_nodes)
        out[: self._nrows] = u.ravel()
        out[sigma_idx : self.n] = 0.0
        return out

    def constrained_bottom_trace(
        self,
        vw_bottom: np.ndarray,
        s_idx: int,
        sigma_idx: int,
        flux: float,
        lo: int,
        hi: int,
    ) -> np.ndarray:
        """Bottom trace on nodes [lo, hi) of the constrained solution.

        vw_bottom is the bottom row of the bottom-free solve of the load
        that does not depend on the crack configuration (the top-data
        term); the yield traction on edges [s_idx, sigma_idx], which
        opposes the opening, is added through precomputed prefix traces.
        """
        tr = vw_bottom - flux * (
            self.tpref[:, sigma_idx] - self.tpref[:, s_idx]
        )
        lam = cho_solve(self.chol(sigma_idx), -tr[sigma_idx:])
        return tr[lo:hi] + self.gbb[lo:hi, sigma_idx:] @ lam
