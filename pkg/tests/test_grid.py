import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasicrack import GridSpec, build_grid


class TestGridSpec:
    def test_rejects_bad_domain(self):
        with pytest.raises(ValueError):
            GridSpec(0.0, 0.5, 10, 5, 0.0)
        with pytest.raises(ValueError):
            GridSpec(2.0, -1.0, 10, 5, 0.0)
        with pytest.raises(ValueError):
            GridSpec(2.0, 0.5, 0, 5, 0.2)
        # a single element column leaves no interior node for the tip
        with pytest.raises(ValueError):
            GridSpec(2.0, 0.5, 1, 5, 1.0)

    def test_rejects_tip_on_outer_boundary(self):
        with pytest.raises(ValueError):
            GridSpec(2.0, 0.5, 10, 5, 0.0)
        with pytest.raises(ValueError):
            GridSpec(2.0, 0.5, 10, 5, 2.0)

    def test_rejects_off_node_tip(self):
        # hx = 0.2, so 0.35 is inside a cell
        with pytest.raises(ValueError):
            GridSpec(2.0, 0.5, 10, 5, 0.35)

    def test_accepts_node_tip_with_roundoff(self):
        spec = GridSpec(2.0, 0.5, 200, 50, 0.1)
        grid = build_grid(spec)
        assert grid.s0_idx == 10


class TestGrid:
    def test_spacings_and_counts(self):
        grid = build_grid(GridSpec(2.0, 0.5, 200, 50, 0.1))
        assert grid.hx == pytest.approx(0.01, abs=0)
        assert grid.hy == pytest.approx(0.01, abs=0)
        assert grid.n_nodes == 201 * 51
        assert grid.n_elements == 200 * 50

    def test_path_indices(self):
        grid = build_grid(GridSpec(2.0, 0.5, 200, 50, 0.1))
        assert grid.path_indices[0] == 10
        assert grid.path_indices[-1] == 200
        assert len(grid.path_indices) == 191

    def test_node_numbering(self, grid_small):
        assert grid_small.node_id(0, 0) == 0
        assert grid_small.node_id(3, 0) == 3
        assert grid_small.node_id(0, 1) == 9
        assert grid_small.node_id(8, 4) == grid_small.n_nodes - 1

    def test_boundary_nodes(self, grid_small):
        np.testing.assert_array_equal(grid_small.bottom_nodes(), np.arange(9))
        np.testing.assert_array_equal(grid_small.top_nodes(), 36 + np.arange(9))
        np.testing.assert_array_equal(
            grid_small.boundary_nodes("left"), np.arange(5) * 9
        )
        np.testing.assert_array_equal(
            grid_small.boundary_nodes("right"), np.arange(5) * 9 + 8
        )
        with pytest.raises(ValueError):
            grid_small.boundary_nodes("diagonal")

    def test_element_conn_corners(self, grid_small):
        conn = grid_small.element_conn
        assert conn.shape == (32, 4)
        # first element: SW=0, SE=1, NE=10, NW=9
        np.testing.assert_array_equal(conn[0], [0, 1, 10, 9])
        # last element NE corner is the last node
        assert conn[-1, 2] == grid_small.n_nodes - 1

    def test_aspect_flag(self):
        assert build_grid(GridSpec(2.0, 0.5, 200, 50, 0.1)).aspect_ok
        # hx/hy = 2 violates the M-matrix bound
        assert not build_grid(GridSpec(2.0, 0.5, 8, 4, 0.5)).aspect_ok
        # ratio sqrt(2) is exactly on the bound and allowed
        root2 = np.sqrt(2.0)
        assert build_grid(GridSpec(2.0 * root2, 1.0, 2, 1, root2)).aspect_ok


@settings(max_examples=50, deadline=None)
@given(
    nx=st.integers(2, 40),
    ny=st.integers(1, 20),
    a=st.floats(0.5, 10.0),
    b=st.floats(0.5, 10.0),
    data=st.data(),
)
def test_grid_consistency(nx, ny, a, b, data):
    j0 = data.draw(st.integers(1, nx - 1))
    grid = build_grid(GridSpec(a, b, nx, ny, j0 * (a / nx)))
    assert grid.s0_idx == j0
    assert grid.xs.shape == (nx + 1,)
    assert grid.ys.shape == (ny + 1,)
    assert grid.hx * nx == pytest.approx(a, rel=1e-12)
    assert grid.hy * ny == pytest.approx(b, rel=1e-12)
    assert grid.element_conn.shape == (nx * ny, 4)
    assert grid.path_indices[-1] == nx
