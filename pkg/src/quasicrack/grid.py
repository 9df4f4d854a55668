"""Structured rectangular grids with a crack path along the bottom edge.

The computational domain is the upper half of a rectangular body,
``(0, a) x (0, b)``, discretized by a tensor product of uniform node rows.
The crack lives on the bottom edge ``y = 0`` and is only allowed to occupy
whole mesh edges, so admissible tip positions form a finite set of node
abscissae to the right of the initial tip ``s0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Bottom-row comparison arguments (discrete maximum principle) need the
# assembled operator to be an M-matrix, which for bilinear elements on a
# uniform rectangle holds exactly when hx/hy lies in [1/sqrt(2), sqrt(2)].
ASPECT_LO = 1.0 / np.sqrt(2.0)
ASPECT_HI = np.sqrt(2.0)

LEFT, RIGHT, BOTTOM, TOP = "left", "right", "bottom", "top"


@dataclass(frozen=True)
class GridSpec:
    """User-facing description of the mesh.

    Parameters
    ----------
    a, b : float
        Domain half lengths: the body occupies (0, a) x (0, b).
    nx, ny : int
        Number of element columns and rows.
    s0 : float
        Initial crack tip abscissa. Must coincide with a mesh node.
    """

    a: float
    b: float
    nx: int
    ny: int
    s0: float

    def __post_init__(self) -> None:
        if self.a <= 0 or self.b <= 0:
            raise ValueError("domain lengths must be positive")
        # nx >= 2 so the tip has at least one node strictly inside (0, a)
        if self.nx < 2 or self.ny < 1:
            raise ValueError("need nx >= 2 and ny >= 1")
        if not 0 < self.s0 < self.a:
            raise ValueError("s0 must lie strictly inside (0, a)")
        hx = self.a / self.nx
        j0 = round(self.s0 / hx)
        if not (1 <= j0 <= self.nx - 1) or abs(j0 * hx - self.s0) > 1e-9 * hx:
            raise ValueError(
                f"s0={self.s0} does not coincide with a mesh node (hx={hx})"
            )


def build_grid(spec: GridSpec) -> "Grid":
    return Grid(spec)


class Grid:
    """Derived mesh quantities shared by assembly, solvers and output.

    Nodes are numbered row by row from the bottom-left corner:
    node ``(j, k)`` at ``(j*hx, k*hy)`` has id ``k*(nx+1) + j``.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self.nx = spec.nx
        self.ny = spec.ny
        self.hx = spec.a / spec.nx
        self.hy = spec.b / spec.ny
        self.xs = np.linspace(0.0, spec.a, spec.nx + 1)
        self.ys = np.linspace(0.0, spec.b, spec.ny + 1)
        self.n_nodes = (spec.nx + 1) * (spec.ny + 1)
        self.n_elements = spec.nx * spec.ny
        self.s0_idx = round(spec.s0 / self.hx)
        # Admissible tip positions: nodes from the initial tip to the right end.
        self.path_indices = np.arange(self.s0_idx, spec.nx + 1)
        ratio = self.hx / self.hy
        self.aspect_ok = ASPECT_LO - 1e-12 <= ratio <= ASPECT_HI + 1e-12

    def node_id(self, j, k):
        return k * (self.nx + 1) + j

    @cached_property
    def element_conn(self) -> np.ndarray:
        """Element connectivity, one row per element.

        Column order is counterclockwise from the south-west corner:
        SW, SE, NE, NW. Element (j, k) covers
        [j*hx, (j+1)*hx] x [k*hy, (k+1)*hy].
        """
        jj, kk = np.meshgrid(
            np.arange(self.nx), np.arange(self.ny), indexing="xy"
        )
        n0 = (kk * (self.nx + 1) + jj).ravel()
        return np.stack(
            [n0, n0 + 1, n0 + self.nx + 2, n0 + self.nx + 1], axis=1
        ).astype(np.int64)

    def bottom_nodes(self) -> np.ndarray:
        return np.arange(self.nx + 1)

    def top_nodes(self) -> np.ndarray:
        return self.ny * (self.nx + 1) + np.arange(self.nx + 1)

    def boundary_nodes(self, side: str) -> np.ndarray:
        if side == BOTTOM:
            return self.bottom_nodes()
        if side == TOP:
            return self.top_nodes()
        if side == LEFT:
            return np.arange(self.ny + 1) * (self.nx + 1)
        if side == RIGHT:
            return np.arange(self.ny + 1) * (self.nx + 1) + self.nx
        raise ValueError(f"unknown boundary side {side!r}")

    def x_of(self, j) -> float:
        return self.xs[j]

    def __repr__(self) -> str:
        return (
            f"Grid({self.nx}x{self.ny}, a={self.spec.a}, b={self.spec.b}, "
            f"s0={self.spec.s0})"
        )
