import numpy as np
import pytest
import scipy.sparse as sp

from quasicrack import (
    BoundaryData,
    GridSpec,
    apply_dirichlet,
    assemble_stiffness,
    build_grid,
    solve_spd,
)
from quasicrack.cohesive import ProfileParams, boundary_profile, cohesive_load
from quasicrack.schur import BottomSchur


def _lower_block(grid):
    """Stiffness restricted to the non-top nodes (top Dirichlet eliminated)."""
    k = assemble_stiffness(grid).toarray()
    n_low = grid.ny * (grid.nx + 1)
    return k[:n_low, :n_low]


def _x_line_matrices(grid):
    nx, hx = grid.nx, grid.hx
    main = np.full(nx + 1, 2.0 / hx)
    main[0] = main[-1] = 1.0 / hx
    kx = sp.diags([main, -np.ones(nx) / hx, -np.ones(nx) / hx], [0, -1, 1])
    mmain = np.full(nx + 1, 4.0 * hx / 6.0)
    mmain[0] = mmain[-1] = 2.0 * hx / 6.0
    mx = sp.diags(
        [mmain, np.full(nx, hx / 6.0), np.full(nx, hx / 6.0)], [0, -1, 1]
    )
    return kx.toarray(), mx.toarray()


class TestModeBasis:
    def test_cosine_modes_diagonalize_the_line_pencil(self, grid_small):
        schur = BottomSchur(grid_small)
        kx, mx = _x_line_matrices(grid_small)
        resid = kx @ schur.v - (mx @ schur.v) * schur.lam[None, :]
        assert np.abs(resid).max() < 1e-11

    def test_mode_normalization(self, grid_small):
        schur = BottomSchur(grid_small)
        _, mx = _x_line_matrices(grid_small)
        gram = schur.v.T @ mx @ schur.v
        np.testing.assert_allclose(
            np.diag(gram), schur.dm, rtol=1e-12, atol=1e-15
        )
        off = gram - np.diag(np.diag(gram))
        assert np.abs(off).max() < 1e-13


@pytest.mark.parametrize(
    "spec",
    [
        GridSpec(2.0, 1.0, 8, 4, 0.5),
        GridSpec(2.0, 1.0, 5, 1, 0.4),
        GridSpec(1.5, 0.8, 7, 5, 1.5 / 7),
        GridSpec(3.0, 0.5, 12, 6, 0.25),
    ],
)
class TestUnconstrainedSolve:
    def test_a0_solve_matches_dense(self, spec, rng):
        grid = build_grid(spec)
        schur = BottomSchur(grid)
        a0 = _lower_block(grid)
        f = rng.standard_normal((grid.ny, grid.nx + 1))
        u = schur.a0_solve(f)
        ref = np.linalg.solve(a0, f.ravel()).reshape(f.shape)
        scale = np.abs(ref).max()
        np.testing.assert_allclose(u, ref, rtol=0, atol=1e-11 * max(scale, 1.0))

    def test_bottom_green_matrix_columns(self, spec):
        grid = build_grid(spec)
        schur = BottomSchur(grid)
        a0 = _lower_block(grid)
        n = grid.nx + 1
        for j in [0, n // 2, n - 1]:
            e = np.zeros(grid.ny * n)
            e[j] = 1.0
            col = np.linalg.solve(a0, e)[:n]
            np.testing.assert_allclose(
                schur.gbb[:, j], col, rtol=0, atol=1e-11
            )


class TestConstrainedSolve:
    @pytest.mark.parametrize("sigma_idx", [2, 5, 8])
    def test_matches_dense_elimination(self, grid_small, sigma_idx, rng):
        grid = grid_small
        schur = BottomSchur(grid)
        rhs = rng.standard_normal(grid.n_nodes)
        out = schur.constrained_solve(rhs, sigma_idx)

        k = assemble_stiffness(grid)
        system = apply_dirichlet(
            k, np.zeros(grid.n_nodes), grid,
            BoundaryData(np.zeros(grid.nx + 1), sigma_idx),
        )
        free = system.free_indices
        ref = np.zeros(grid.n_nodes)
        ref[free] = np.linalg.solve(
            system.free_matrix.toarray(), rhs[free]
        )
        np.testing.assert_allclose(out, ref, rtol=0, atol=1e-10)
        assert (out[~system.mask] == 0.0).all()

    def test_cholesky_cache_reused(self, grid_small):
        schur = BottomSchur(grid_small)
        f1 = schur.chol(4)
        f2 = schur.chol(4)
        assert f1 is f2
        assert schur.chol(6) is not f1

    def test_single_iteration_preconditioner(self, grid_small):
        w = boundary_profile(ProfileParams(0.1, 0.2, 0.1), 0.3, grid_small.xs)
        k = assemble_stiffness(grid_small)
        load = cohesive_load(grid_small, 2, 5, 0.2)
        system = apply_dirichlet(k, load, grid_small, BoundaryData(w, 5))
        field = solve_spd(system, precond="schur")
        assert field.iterations <= 2


class TestTraceEvaluator:
    def _setup(self, grid, t, s_idx, sigma_idx, flux):
        schur = BottomSchur(grid)
        k = assemble_stiffness(grid)
        w = boundary_profile(ProfileParams(0.1, 0.2, 0.1), t, grid.xs)
        g = np.zeros(grid.n_nodes)
        g[grid.top_nodes()] = w
        shifted = -(k @ g)
        nrows = grid.ny * (grid.nx + 1)
        vw = schur.a0_solve(shifted[:nrows].reshape(grid.ny, grid.nx + 1))[0]
        load = cohesive_load(grid, s_idx, sigma_idx, flux)
        system = apply_dirichlet(
            k, load, grid, BoundaryData(w, sigma_idx), shifted_load=shifted
        )
        field = solve_spd(system, rel_tol=1e-13, precond="schur", schur=schur)
        return schur, vw, field

    @pytest.mark.parametrize("t,s_idx,sigma_idx", [
        (0.3, 2, 5),
        (0.6, 2, 3),
        (0.9, 4, 8),
        (0.3, 2, 2),
    ])
    def test_matches_certified_solve(self, grid_small, t, s_idx, sigma_idx):
        flux = 0.2
        schur, vw, field = self._setup(grid_small, t, s_idx, sigma_idx, flux)
        tr = schur.constrained_bottom_trace(
            vw, s_idx, sigma_idx, flux, 0, grid_small.nx + 1
        )
        np.testing.assert_allclose(
            tr, field.bottom_trace(), rtol=0, atol=1e-12
        )

    def test_window_slicing(self, grid_small):
        flux = 0.2
        schur, vw, field = self._setup(grid_small, 0.3, 2, 5, flux)
        window = schur.constrained_bottom_trace(vw, 2, 5, flux, 2, 5)
        np.testing.assert_allclose(
            window, field.bottom_trace()[2:5], rtol=0, atol=1e-12
        )
