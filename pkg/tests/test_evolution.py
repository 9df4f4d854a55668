import dataclasses

import numpy as np
import pytest

from quasicrack import Config, run_evolution
from quasicrack.evolution import CAND_COLS, _tie_tol
from quasicrack.experiments import validate_result

# small but nontrivial setting: square cells, enough steps for the tip
# to traverse a good part of the path
TINY = Config(
    a=2.0, b=0.5, nx=40, ny=10, s0=0.1, T=1.0, n_steps=12,
    alpha=100.0, beta=20.0, gamma=1.0, c1=0.1, c2=0.2,
)


@pytest.fixture(scope="module")
def tiny_result():
    return run_evolution(TINY)


class TestEvolutionInvariants:
    def test_validator_is_clean(self, tiny_result):
        checks = validate_result(tiny_result)
        failed = [(name, d) for name, ok, d in checks if not ok]
        assert failed == []

    def test_shapes(self, tiny_result):
        r = tiny_result
        n = TINY.n_steps
        assert r.t.shape == (n + 1,)
        assert r.s_idx.shape == (n + 1,)
        assert r.bottom_traces.shape == (n + 1, TINY.nx + 1)
        assert len(r.candidates) == n + 1 and r.candidates[0] is None
        assert r.t[0] == 0.0 and r.t[-1] == TINY.T

    def test_tip_monotone_and_on_path(self, tiny_result):
        r = tiny_result
        assert (np.diff(r.s_idx) >= 0).all()
        assert r.s_idx[0] == r.grid.s0_idx
        assert (r.s_idx <= TINY.nx).all()
        assert (r.sigma_idx >= r.s_idx).all()

    def test_tip_actually_moves(self, tiny_result):
        # the load program is strong enough to drive the crack forward
        assert tiny_result.s_idx[-1] > tiny_result.s_idx[0]

    def test_energy_split(self, tiny_result):
        r = tiny_result
        total = r.e_elastic + r.de_plastic + r.de_crack
        np.testing.assert_allclose(r.e_incr, total, rtol=1e-12, atol=1e-14)
        assert (r.e_elastic >= 0).all()
        assert (r.de_plastic >= 0).all()
        assert (r.de_crack >= 0).all()

    def test_chosen_minimizes_candidate_table(self, tiny_result):
        r = tiny_result
        for i in range(1, TINY.n_steps + 1):
            table = r.candidates[i]
            e_tot = table[:, CAND_COLS.index("E_total")]
            pick = r.chosen[i]
            e_min = e_tot.min()
            assert e_tot[pick] <= e_min + _tie_tol(e_min)
            # first-of-tie: every earlier candidate is strictly worse
            assert (e_tot[:pick] > e_tot[pick]).all()

    def test_candidate_rows_cover_admissible_tips(self, tiny_result):
        r = tiny_result
        for i in range(1, TINY.n_steps + 1):
            table = r.candidates[i]
            s_col = table[:, 0].astype(int)
            assert s_col[0] == r.s_idx[i - 1]
            assert s_col[-1] == TINY.nx
            assert (np.diff(s_col) == 1).all()

    def test_trace_consistency(self, tiny_result):
        r = tiny_result
        # pinned tail of each step's trace is exactly zero
        for i in range(TINY.n_steps + 1):
            assert (r.bottom_traces[i, r.sigma_idx[i]:] == 0.0).all()


class TestScalingInvariance:
    def test_energy_scales_linearly(self):
        base = run_evolution(dataclasses.replace(TINY, n_steps=6))
        scaled = run_evolution(
            dataclasses.replace(
                TINY, n_steps=6, alpha=300.0, beta=60.0, gamma=3.0
            )
        )
        np.testing.assert_array_equal(base.s_idx, scaled.s_idx)
        np.testing.assert_array_equal(base.sigma_idx, scaled.sigma_idx)
        np.testing.assert_allclose(
            scaled.e_incr, 3.0 * base.e_incr, rtol=1e-12, atol=1e-13
        )
        np.testing.assert_allclose(
            scaled.e_elastic, 3.0 * base.e_elastic, rtol=1e-12, atol=1e-13
        )


class TestDeterminism:
    def test_bitwise_repeatable(self):
        cfg = dataclasses.replace(TINY, n_steps=5)
        a = run_evolution(cfg)
        b = run_evolution(cfg)
        np.testing.assert_array_equal(a.s_idx, b.s_idx)
        np.testing.assert_array_equal(a.sigma_idx, b.sigma_idx)
        assert (a.e_incr == b.e_incr).all()
        assert (a.bottom_traces == b.bottom_traces).all()


class TestSnapshots:
    def test_requested_times_map_to_steps(self):
        cfg = dataclasses.replace(
            TINY, n_steps=10, snapshot_times=(0.0, 0.52, 1.0)
        )
        r = run_evolution(cfg)
        # 0.52 rounds to the nearest load step
        assert set(r.snapshots) == {0, 5, 10}
        for step, sol in r.snapshots.items():
            assert sol.s_idx == r.s_idx[step]
            assert sol.sigma_idx == r.sigma_idx[step]
            np.testing.assert_array_equal(
                sol.field.bottom_trace(), r.bottom_traces[step]
            )


class TestInitialStep:
    def test_zero_mode_starts_unloaded(self):
        cfg = dataclasses.replace(TINY, n_steps=3, u0_mode="zero")
        r = run_evolution(cfg)
        assert r.e_elastic[0] == 0.0
        assert r.sigma_idx[0] == r.grid.s0_idx
        assert (r.bottom_traces[0] == 0.0).all()

    def test_harmonic_mode_equilibrates(self):
        cfg = dataclasses.replace(TINY, n_steps=3, u0_mode="harmonic")
        r = run_evolution(cfg)
        assert r.e_elastic[0] > 0.0
        assert r.s_idx[0] == r.grid.s0_idx
        # the initial problem holds the entire bottom edge at zero
        assert (r.bottom_traces[0] == 0.0).all()

    def test_unknown_mode_rejected(self):
        cfg = dataclasses.replace(TINY, n_steps=3, u0_mode="warm")
        with pytest.raises(ValueError):
            run_evolution(cfg)


class TestInitialDisplacement:
    def test_zero_mode(self, grid_small):
        from quasicrack import assemble_stiffness, initial_displacement

        k = assemble_stiffness(grid_small)
        field = initial_displacement(grid_small, k, np.zeros(9), "zero")
        assert (field.values == 0.0).all()

    def test_harmonic_constant_data_is_linear(self, grid_small):
        from quasicrack import assemble_stiffness, initial_displacement

        k = assemble_stiffness(grid_small)
        c = 0.07
        field = initial_displacement(
            grid_small, k, np.full(9, c), "harmonic", rel_tol=1e-13
        )
        exact = c * np.repeat(grid_small.ys, 9) / grid_small.spec.b
        np.testing.assert_allclose(field.values, exact, rtol=0, atol=1e-11)

    def test_harmonic_nonnegative(self, grid_small):
        from quasicrack import assemble_stiffness, initial_displacement
        from quasicrack.cohesive import ProfileParams, boundary_profile

        k = assemble_stiffness(grid_small)
        w = boundary_profile(ProfileParams(0.1, 0.2, 0.1), 0.0, grid_small.xs)
        field = initial_displacement(grid_small, k, w, "harmonic")
        assert field.values.min() >= -1e-12

    def test_unknown_mode(self, grid_small):
        from quasicrack import assemble_stiffness, initial_displacement

        k = assemble_stiffness(grid_small)
        with pytest.raises(ValueError):
            initial_displacement(grid_small, k, np.zeros(9), "best")


class TestDiagnostics:
    def test_counters_present_and_sane(self, tiny_result):
        d = tiny_result.diagnostics
        # every step solves every admissible tip once
        expected = sum(
            TINY.nx + 1 - int(tiny_result.s_idx[i - 1])
            for i in range(1, TINY.n_steps + 1)
        )
        assert d["candidate_solves"] == expected
        assert d["trace_recheck_fail"] == 0
        assert d["downward_scans"] == 0
        assert d["wall_time"] > 0.0

    def test_progress_callback(self):
        seen = []
        cfg = dataclasses.replace(TINY, n_steps=4)
        run_evolution(cfg, progress=lambda i, n: seen.append((i, n)))
        assert seen == [(1, 4), (2, 4), (3, 4), (4, 4)]
