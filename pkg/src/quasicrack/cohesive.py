"""Boundary loading program, cohesive flux and the bonded-set rule.

The crack configuration on the bottom edge is a pair of node columns
(s, sigma): the crack occupies [0, s), the cohesive zone [s, sigma] where
the material yields at constant shear, and the bonded remainder
[sigma, a] where the displacement vanishes. For a given tip s the zone
end sigma is not a free variable: it is the largest column for which the
solved displacement stays nonnegative along the zone, which expresses
that the yield stress cannot be exceeded ahead of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fem
from .fem import BoundaryData, ScalarField, apply_dirichlet, solve_spd
from .grid import Grid


@dataclass(frozen=True)
class ProfileParams:
    """Parameters of the loading profile applied on the top edge.

    The profile is a smoothed step of height roughly c1 moving right
    with unit speed: c1 * (1/2 - arctan((x - t - s0) * c2 * pi / c1) / pi).
    It is positive, strictly decreasing in x and strictly increasing in
    t, which is what the monotone evolution arguments need.
    """

    c1: float
    c2: float
    s0: float


def boundary_profile(p: ProfileParams, t: float, xs: np.ndarray) -> np.ndarray:
    arg = (xs - t - p.s0) * (p.c2 * np.pi / p.c1)
    return p.c1 * (0.5 - np.arctan(arg) / np.pi)


def profile_is_admissible(
    p: ProfileParams, ts: np.ndarray, xs: np.ndarray, tol: float = 0.0
) -> bool:
    """Sampled check: nonnegative, nonincreasing in x, nondecreasing in t."""
    prev = None
    for t in ts:
        w = boundary_profile(p, t, xs)
        if np.any(w < -tol):
            return False
        if np.any(np.diff(w) > tol):
            return False
        if prev is not None and np.any(w < prev - tol):
            return False
        prev = w
    return True


def cohesive_load(
    grid: Grid, s_idx: int, sigma_idx: int, flux: float
) -> np.ndarray:
    """Load vector of the yield traction acting on edges [s_idx, sigma_idx].

    flux is the positive traction-to-stiffness ratio; the traction
    resists the opening, so the assembled entries are negative. Exact
    integration against the hat functions: interior nodes of the run
    collect hx from both neighbouring edges, the two end nodes half of
    that. Empty run (s == sigma) gives zero.
    """
    load = np.zeros(grid.n_nodes)
    if sigma_idx > s_idx:
        load[s_idx : sigma_idx + 1] = -flux * grid.hx
        load[s_idx] = -0.5 * flux * grid.hx
        load[sigma_idx] = -0.5 * flux * grid.hx
    return load


@dataclass
class AuxSolution:
    """Solved displacement for one crack configuration."""

    field: ScalarField
    s_idx: int
    sigma_idx: int


def solve_aux(
    grid: Grid,
    stiffness,
    w: np.ndarray,
    s_idx: int,
    sigma_idx: int,
    flux: float,
    rel_tol: float = 1e-10,
    precond: str = "jacobi",
    schur=None,
    x0: np.ndarray | None = None,
    shifted_load: np.ndarray | None = None,
) -> AuxSolution:
    """Solve the displacement problem for a fixed configuration (s, sigma)."""
    load = cohesive_load(grid, s_idx, sigma_idx, flux)
    system = apply_dirichlet(
        stiffness, load, grid, BoundaryData(w, sigma_idx), shifted_load
    )
    field = solve_spd(system, rel_tol=rel_tol, precond=precond, x0=x0, schur=schur)
    return AuxSolution(field, s_idx, sigma_idx)


def trace_feasible(
    trace_zone: np.ndarray, eps_neg: float
) -> bool:
    """A configuration is admissible when the zone trace stays above -eps_neg."""
    return trace_zone.size == 0 or float(trace_zone.min()) >= -eps_neg


def find_sigma(
    grid: Grid,
    stiffness,
    w: np.ndarray,
    s_idx: int,
    sigma_lower_idx: int,
    flux: float,
    eps_neg: float,
    rel_tol: float = 1e-10,
    scan: str = "incremental",
    precond: str = "jacobi",
    schur=None,
    vw_bottom: np.ndarray | None = None,
    shifted_load: np.ndarray | None = None,
    diagnostics: dict | None = None,
) -> AuxSolution:
    """Locate the zone end for tip s_idx and return the solved problem.

    Feasibility of a trial sigma means the bottom trace on [s_idx, sigma]
    is nonnegative up to eps_neg. The feasible trials form a contiguous
    block starting at s_idx (pinning more of the edge can only push the
    trace down), so the scan starts at max(s_idx, sigma_lower_idx) and
    walks up while feasible; sigma = s_idx is always feasible because the
    zone then carries no free nodes. scan="exhaustive" instead tests
    every trial up to the right end and takes the largest feasible one,
    which is slower but makes no structural assumption.

    With precond="schur" trials are evaluated through exact boundary
    traces; otherwise each trial costs a full solve. Either way the
    returned solution comes from the certified CG path and its trace is
    re-checked, falling back to full-solve trials if the fast scan and
    the solve disagree.
    """
    nx = grid.nx
    lo = max(s_idx, sigma_lower_idx)
    use_fast = precond == "schur" and schur is not None and vw_bottom is not None

    def feasible(sig: int) -> bool:
        if diagnostics is not None:
            diagnostics["scan_evals"] = diagnostics.get("scan_evals", 0) + 1
        if sig == s_idx:
            return True
        if use_fast:
            tz = schur.constrained_bottom_trace(
                vw_bottom, s_idx, sig, flux, s_idx, sig
            )
        else:
            sol = solve_aux(
                grid, stiffness, w, s_idx, sig, flux,
                rel_tol=rel_tol, precond=precond, schur=schur,
                shifted_load=shifted_load,
            )
            tz = sol.field.bottom_trace()[s_idx:sig]
        return trace_feasible(tz, eps_neg)

    if scan == "incremental":
        if feasible(lo):
            sigma = lo
            while sigma < nx and feasible(sigma + 1):
                sigma += 1
        else:
            # not expected for monotone data; scan down to stay well defined
            if diagnostics is not None:
                diagnostics["downward_scans"] = (
                    diagnostics.get("downward_scans", 0) + 1
                )
            sigma = lo - 1
            while sigma > s_idx and not feasible(sigma):
                sigma -= 1
    elif scan == "exhaustive":
        # test every trial; equals the incremental result whenever the
        # feasible set is contiguous, which the comparison argument grants
        sigma = s_idx
        for sig in range(s_idx + 1, nx + 1):
            if feasible(sig):
                sigma = sig
    else:
        raise ValueError(f"unknown scan strategy {scan!r}")

    sol = solve_aux(
        grid, stiffness, w, s_idx, sigma, flux,
        rel_tol=rel_tol, precond=precond, schur=schur,
        shifted_load=shifted_load,
    )
    tz = sol.field.bottom_trace()[s_idx:sigma]
    if use_fast and not trace_feasible(tz, eps_neg):
        # fast scan and certified solve disagree at the tolerance edge;
        # redo the scan with full solves, which is then self-consistent
        if diagnostics is not None:
            diagnostics["trace_recheck_fail"] = (
                diagnostics.get("trace_recheck_fail", 0) + 1
            )
        return find_sigma(
            grid, stiffness, w, s_idx, sigma_lower_idx, flux, eps_neg,
            rel_tol=rel_tol, scan=scan, precond=precond, schur=schur,
            vw_bottom=None, shifted_load=shifted_load, diagnostics=diagnostics,
        )
    return sol
