"""Boundary solvability maps, parameter sweeps, and the root oracle."""

import cmath

import numpy as np
import pytest

import lopashka as lp
from lopashka import ArgumentError, AssumptionError

import oracles
from conftest import physical_slots


class TestSolutionMap:

    def test_dirichlet_map_reproduces_closed_form(self, heat_dirichlet):
        sym, bspec = heat_dirichlet
        b, sigma = np.array([0.3]), 0.7 * np.exp(0.5j)
        cs = lp.build_companion(sym, b, sigma)
        smap = lp.build_solution_map(cs, bspec)
        g = 1.3 - 0.2j
        got = smap.trace({(1, 0): np.array([g])})
        s = oracles.heat_decay_rate(b, sigma)
        # slots of g exp(-s y): value g, then D_y v(0) = i s g
        assert np.allclose(got, [g, 1j * s * g], atol=1e-10)

    def test_inward_derivative_map_reproduces_closed_form(self,
                                                          heat_neumann):
        sym, bspec = heat_neumann
        b, sigma = np.array([0.4]), 1.1 * np.exp(-0.3j)
        cs = lp.build_companion(sym, b, sigma)
        smap = lp.build_solution_map(cs, bspec)
        g = 0.8 + 0.5j
        got = smap.trace({(1, 1): np.array([g])})
        s = oracles.heat_decay_rate(b, sigma)
        # v = -(g/s) exp(-s y); the row i D_y evaluates to g at y = 0
        assert np.allclose(got, [-g / s, -1j * g], atol=1e-10)

    def test_zero_boundary_operator_is_rejected(self, scalar_symbol):
        comp = lp.BoundaryComponent(k=0, projection=np.eye(1),
                                    coeffs={(0, 0): np.zeros((1, 1))},
                                    dim=2)
        bspec = lp.BoundaryOperatorSpec([lp.BoundaryRow([comp])])
        cs = lp.build_companion(scalar_symbol, np.array([0.1]), 1.0)
        with pytest.raises(AssumptionError) as exc:
            lp.build_solution_map(cs, bspec)
        assert "unique solvability fails" in str(exc.value)
        assert "rank deficient" in str(exc.value)

    def test_pack_rejects_out_of_range_data(self, catalysis):
        sym, bspec = catalysis
        cs = lp.build_companion(sym, np.array([0.2]), 0.9)
        smap = lp.build_solution_map(cs, bspec)
        comps = {k: comp for _, k, comp in bspec.slots()}
        # vectors in the value projection's range are illegal flux data
        bad = comps[0].projection @ np.ones(3)
        with pytest.raises(ArgumentError, match="rejected, not projected"):
            smap.pack({(1, 1): bad})

    def test_pack_rejects_unknown_slots(self, heat_dirichlet):
        sym, bspec = heat_dirichlet
        cs = lp.build_companion(sym, np.array([0.0]), 1.0)
        smap = lp.build_solution_map(cs, bspec)
        with pytest.raises(ArgumentError, match="unknown slots"):
            smap.pack({(2, 0): np.array([1.0])})

    def test_reproduction_defect_small(self, catalysis):
        sym, bspec = catalysis
        cs = lp.build_companion(sym, np.array([0.5]), 0.5 * np.exp(0.2j))
        smap = lp.build_solution_map(cs, bspec)
        assert smap.reproduction_defect() <= 1e-8

    @pytest.mark.parametrize("name", ["heat-dirichlet", "heat-neumann",
                                      "heat-robin", "biharmonic",
                                      "catalysis", "mixed-two-component"])
    def test_unstable_part_of_map_vanishes(self, name):
        sym, bspec = lp.load_fixture(name)
        b, sigma = np.array([0.35]), 0.8 * np.exp(0.4j)
        cs = lp.build_companion(sym, b, sigma)
        split = lp.spectral_split(cs)
        smap = lp.build_solution_map(cs, bspec)
        assert np.abs(split.P_plus @ smap.M).max() <= 1e-8

    def test_map_is_linear_in_data(self, catalysis):
        sym, bspec = catalysis
        cs = lp.build_companion(sym, np.array([0.25]), 1.1)
        smap = lp.build_solution_map(cs, bspec)
        comps = {k: comp for _, k, comp in bspec.slots()}
        rng = np.random.default_rng(4)
        g1 = comps[0].projection @ rng.normal(size=3)
        g2 = comps[0].projection @ rng.normal(size=3)
        a, b2 = 2.0 - 1j, 0.3j
        lhs = smap.trace({(1, 0): a * g1 + b2 * g2})
        rhs = a * smap.trace({(1, 0): g1}) + b2 * smap.trace({(1, 0): g2})
        assert np.abs(lhs - rhs).max() <= 1e-10


class TestSweep:

    def test_point_count_and_sector_coverage(self):
        pts = lp.sweep_points(1, np.pi / 2)
        assert len(pts) == 3968
        has_axis = False
        for b, sigma in pts:
            assert abs(sigma) + np.linalg.norm(b) ** 2 > 1e-12
            if abs(sigma) > 1e-12:
                # spectral arguments stay inside the swept sector
                assert abs(cmath.phase(sigma)) <= np.pi / 2 + 1e-9
            if np.linalg.norm(b) <= 1e-12:
                has_axis = True
        assert has_axis

    def test_scalar_rows_sweep_clean(self, heat_dirichlet, heat_neumann):
        for sym, bspec in (heat_dirichlet, heat_neumann):
            verdict = lp.ls_sweep(sym, bspec, np.pi / 2, grid=(16, 8, 6))
            assert verdict.passes
            assert verdict.worst_condition_number < 2.0
            assert verdict.failure is None

    def test_catalysis_sweep_passes_and_oracle_agrees(self, catalysis):
        sym, bspec = catalysis
        verdict = lp.ls_sweep(sym, bspec, np.pi / 2, grid=(16, 8, 6))
        assert verdict.passes
        assert verdict.worst_condition_number < 10.0
        # the hand-built boundary determinant stays away from zero on
        # the same compact set
        pts = lp.sweep_points(sym.n, np.pi / 2, grid=(16, 8, 6))
        margins = [oracles.catalysis_ls_margin(sigma, b[0], (1, 2, 3),
                                               (1, 1, 1), (1, -2, 0),
                                               (1, 0, 3))
                   for b, sigma in pts[::7]]
        assert min(margins) > 1e-3

    def test_duplicate_rows_fail_with_rank_verdict(self, duplicate_row):
        sym, bspec = duplicate_row
        verdict = lp.ls_sweep(sym, bspec, np.pi / 2, grid=(8, 4, 4))
        assert not verdict.passes
        assert verdict.worst_condition_number == np.inf
        assert "rank deficient" in verdict.failure

    def test_sector_gate(self, heat_dirichlet):
        sym, bspec = heat_dirichlet
        rotated = lp.InteriorSymbol(
            2, 2, {(2, 0): np.exp(1.4j) * np.eye(1),
                   (0, 2): np.exp(1.4j) * np.eye(1)})
        with pytest.raises(AssumptionError, match="not below"):
            lp.ls_sweep(rotated, bspec, np.pi - 1.3)

    def test_verdict_invariant_under_positive_scaling(self, heat_robin):
        sym, bspec = heat_robin
        doubled = lp.InteriorSymbol(2, 2,
                                    {a: 2.0 * m
                                     for a, m in sym.coeffs.items()})
        v1 = lp.ls_sweep(sym, bspec, np.pi / 2, grid=(8, 4, 4))
        v2 = lp.ls_sweep(doubled, bspec, np.pi / 2, grid=(8, 4, 4))
        assert v1.passes == v2.passes

    def test_verdict_to_dict_round_trips_the_fields(self, heat_dirichlet):
        sym, bspec = heat_dirichlet
        verdict = lp.ls_sweep(sym, bspec, np.pi / 2, grid=(8, 4, 4))
        d = verdict.to_dict()
        assert d["passes"] is True
        assert d["sweep_size"] == verdict.sweep_size
        assert d["worst_condition_number"] == pytest.approx(
            verdict.worst_condition_number)


class TestOdeOracle:

    def test_dirichlet_profile_is_exponential(self, heat_dirichlet):
        sym, bspec = heat_dirichlet
        sol = lp.ode_oracle(sym, bspec, 1.0, [0.0],
                            {(1, 0): np.array([1.0])})
        ys = np.linspace(0.0, 4.0, 17)
        got = sol(ys)
        assert np.abs(got[0] - np.exp(-ys)).max() <= 1e-10
        assert sol.residual <= 1e-10

    def test_zero_data_gives_zero_profile(self, heat_dirichlet):
        sym, bspec = heat_dirichlet
        sol = lp.ode_oracle(sym, bspec, 1.0, [0.0],
                            {(1, 0): np.array([0.0])})
        assert np.abs(sol(np.linspace(0, 3, 7))).max() <= 1e-12
        assert np.abs(sol.trace).max() <= 1e-12

    def test_inward_derivative_profile_sign(self, heat_neumann):
        sym, bspec = heat_neumann
        sol = lp.ode_oracle(sym, bspec, 1.0, [0.0],
                            {(1, 1): np.array([1.0])})
        ys = np.linspace(0.0, 4.0, 17)
        assert np.abs(sol(ys)[0] - (-np.exp(-ys))).max() <= 1e-10

    def test_profiles_match_halfline_closed_forms(self, heat_dirichlet):
        sym, bspec = heat_dirichlet
        lam, xi = 0.9 * np.exp(0.6j), 0.7
        sol = lp.ode_oracle(sym, bspec, lam, [xi],
                            {(1, 0): np.array([2.0])})
        ys = np.linspace(0.0, 3.0, 13)
        want = oracles.dirichlet_halfline(lam, xi, 2.0, ys)
        assert np.abs(sol(ys)[0] - want).max() <= 1e-9

    @pytest.mark.parametrize("name", ["heat-dirichlet", "heat-neumann",
                                      "heat-robin", "catalysis",
                                      "mixed-two-component"])
    def test_agreement_with_solution_map_on_a_sweep(self, name):
        sym, bspec = lp.load_fixture(name)
        pts = lp.sweep_points(sym.n, np.pi / 2, grid=(6, 4, 3))
        worst = 0.0
        for b, sigma in pts:
            cs = lp.build_companion(sym, b, sigma)
            smap = lp.build_solution_map(cs, bspec)
            data = {(j, k): comp.projection
                    for j, k, comp, _ in smap.slots}
            got = smap.trace(data)
            sol = lp.ode_oracle(sym, bspec, sigma, b, data)
            assert np.abs(got - physical_slots(sol)).max() <= 1e-8

    def test_boundary_data_reproduced_by_physical_rows(self, catalysis):
        sym, bspec = catalysis
        lam, xi = 0.8 * np.exp(0.3j), 0.45
        comps = {k: comp for _, k, comp in bspec.slots()}
        rng = np.random.default_rng(9)
        data = {(1, 0): comps[0].projection @ rng.normal(size=3),
                (1, 1): comps[1].projection @ rng.normal(size=3)}
        sol = lp.ode_oracle(sym, bspec, lam, [xi], data)
        # differentiate the profile numerically and apply the rows
        h = 1e-6
        v0 = sol(np.array([0.0]))[:, 0]
        dv0 = (sol(np.array([h]))[:, 0] - v0) / h
        P0, P1 = comps[0].projection, comps[1].projection
        C = comps[1].coeffs[(0, 1)] / 1j
        row_value = P0 @ (P0 @ v0)
        row_flux = 1j * C @ (P1 @ (-1j * dv0))
        assert np.abs(row_value - data[(1, 0)]).max() <= 1e-5
        assert np.abs(row_flux - data[(1, 1)]).max() <= 1e-4
