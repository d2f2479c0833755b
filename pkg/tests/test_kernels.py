"""Radial kernel family, composition identity, and decay fits."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import lopashka as lp
from lopashka import ArgumentError

import oracles


class TestRadialKernels:

    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("n", [2, 3, 4])
    @pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
    def test_moment_indices_have_closed_form(self, k, n, r):
        got = lp.p_kernel(k, k - 1, n, r)
        want = oracles.p_moment_closed_form(k, n, r)
        assert abs(got - want) <= 1e-8 * want

    def test_reference_value(self):
        assert abs(lp.p_kernel(1, 0, 2, 1.0) - math.exp(-1.0)) <= 1e-8

    def test_monotone_decay(self):
        assert lp.p_kernel(2, 0, 3, 1.0) > lp.p_kernel(2, 0, 3, 2.0)

    def test_vanishes_at_large_argument(self):
        assert lp.p_kernel(2, 1, 2, 40.0) < 1e-12

    @given(st.integers(1, 4), st.integers(0, 3), st.integers(2, 4),
           st.integers(0, 2 ** 16 - 1))
    def test_batch_agrees_with_adaptive_quadrature(self, k, nu, n, seed):
        rng = np.random.default_rng(seed)
        rs = rng.uniform(0.2, 8.0, size=5)
        batch = lp.p_kernel_batch(k, nu, n, rs)
        for r, v in zip(rs, batch):
            single = lp.p_kernel(k, nu, n, r)
            assert abs(v - single) <= 1e-8 * max(single, 1e-300)

    def test_argument_validation(self):
        with pytest.raises(ArgumentError):
            lp.p_kernel(2, 0, 1, 1.0)
        with pytest.raises(ArgumentError):
            lp.p_kernel(2, 0, 2, 0.0)

    @given(st.integers(1, 3), st.integers(0, 2), st.integers(2, 3),
           st.integers(0, 2 ** 16 - 1))
    def test_complete_monotonicity_of_differences(self, k, nu, n, seed):
        # alternating finite differences keep their sign for a totally
        # monotone function; geometric grids probe several scales
        rng = np.random.default_rng(seed)
        base = rng.uniform(0.3, 2.0)
        h = rng.uniform(0.05, 0.4)
        rs = base + h * np.arange(6)
        vals = lp.p_kernel_batch(k, nu, n, rs)
        for j in range(1, 4):
            diffs = np.diff(vals, j)
            assert np.all((-1.0) ** j * diffs >= -1e-10)


class TestCompositionIdentity:

    def test_reference_indices(self):
        assert lp.lemma_integral_identity_check(2, 0, 2, 1.0, 1.0) <= 1e-6

    @pytest.mark.parametrize("k", [2, 3, 4])
    @pytest.mark.parametrize("nu", [0, 1, 2])
    @pytest.mark.parametrize("y", [0.5, 1.5])
    def test_residual_grid(self, k, nu, y):
        assert lp.lemma_integral_identity_check(k, nu, 2, 0.8, y) <= 1e-6

    def test_oracle_routes_agree_with_each_other(self):
        # fully independent check of the identity at elementary indices
        lhs = oracles.lemma_lhs_direct(0.8, 1.5)
        rhs = oracles.lemma_rhs_closed_form(0.8, 1.5)
        assert abs(lhs - rhs) <= 1e-9 * rhs

    def test_scale_change_of_variables(self):
        # substituting r -> r/2 sends (c, y) to (2c, y) with a 2^-n factor
        lhs_a = oracles.lemma_lhs_direct(1.6, 0.7)
        lhs_b = oracles.lemma_lhs_direct(0.8, 1.4)
        assert abs(lhs_a - lhs_b / 4.0) <= 1e-9 * lhs_a
        assert lp.lemma_integral_identity_check(2, 1, 2, 1.6, 0.7) <= 1e-6
        assert lp.lemma_integral_identity_check(2, 1, 2, 0.8, 1.4) <= 1e-6

    def test_both_sides_vanish_far_out(self):
        # the residual stays well conditioned even when both integrals
        # are exponentially small
        assert lp.lemma_integral_identity_check(2, 0, 2, 1.0, 8.0) <= 1e-6

    def test_divergent_index_pattern_rejected(self):
        with pytest.raises(ArgumentError, match="diverges"):
            lp.lemma_integral_identity_check(1, 2, 2, 1.0, 1.0)

    def test_domain_validation(self):
        with pytest.raises(ArgumentError):
            lp.lemma_integral_identity_check(2, 0, 2, -1.0, 1.0)
        with pytest.raises(ArgumentError):
            lp.lemma_integral_identity_check(2, 0, 2, 1.0, 0.0)


@pytest.fixture(scope="module")
def heat_field(heat_dirichlet):
    sym, bspec = heat_dirichlet
    return lp.compute_kernel_field(sym, bspec, 1.0)


@pytest.fixture(scope="module")
def heat_fit(heat_dirichlet):
    sym, bspec = heat_dirichlet
    field = lp.compute_kernel_field(sym, bspec, 1.0, check=False)
    return field, lp.verify_kernel_decay(field)


class TestKernelField:

    def test_trace_block_positive_and_real(self, heat_field):
        tr = heat_field.values[..., 0, 0]
        assert np.abs(tr.imag).max() <= 1e-12
        assert tr.real.min() > 0.0

    def test_radial_decay_of_shell_maxima(self, heat_field):
        tr = np.abs(heat_field.values[..., 0, 0])
        rad = heat_field.radial_distance()
        edges = np.linspace(0.3, 6.0, 12)
        maxima = [tr[(rad >= a) & (rad < b)].max()
                  for a, b in zip(edges, edges[1:])]
        assert all(x > y for x, y in zip(maxima, maxima[1:]))

    def test_zero_data_maps_to_zero(self, heat_field):
        g = np.zeros(heat_field.spatial_shape + (1,))
        out = heat_field.convolve(g)
        assert np.abs(out).max() == 0.0

    def test_convolution_agrees_with_spectral_application(self,
                                                          heat_field):
        rng = np.random.default_rng(8)
        xs = heat_field.xs
        g = (np.cos(2 * np.pi * xs / heat_field.L)
             + 0.3 * rng.standard_normal(len(xs)))[:, None]
        direct = heat_field.convolve(g)
        spectral = heat_field.spectral_apply(g)
        scale = np.abs(spectral).max()
        assert np.abs(direct - spectral).max() <= 1e-8 * scale

    def test_self_check_residual(self, heat_field):
        assert heat_field.self_check(seed=0) <= 1e-8

    def test_derivative_needs_matching_length_and_order(self, heat_field):
        with pytest.raises(ArgumentError):
            heat_field.derivative((0, 0, 0))
        with pytest.raises(ArgumentError):
            heat_field.derivative((3, 0))

    def test_conjugate_parameter_flips_derivative_slots(self,
                                                        heat_dirichlet):
        # real-coefficient problems: conjugating lambda conjugates the
        # solution, and each D_y power contributes one sign flip
        sym, bspec = heat_dirichlet
        lam = 2.0 * np.exp(0.7j)
        fa = lp.compute_kernel_field(sym, bspec, lam, check=False)
        fb = lp.compute_kernel_field(sym, bspec, np.conj(lam), check=False)
        for s in range(2):
            blk_a = fa.values[..., s, :]
            blk_b = fb.values[..., s, :]
            assert np.abs(blk_b - (-1.0) ** s * np.conj(blk_a)).max() \
                <= 1e-12

    def test_tangential_refinement_converges_away_from_origin(self,
                                                              heat_dirichlet):
        sym, bspec = heat_dirichlet
        coarse = lp.compute_kernel_field(
            sym, bspec, 1.0, grid=lp.KernelGrid(nx=64, ny=48), check=False)
        fine = lp.compute_kernel_field(
            sym, bspec, 1.0, grid=lp.KernelGrid(nx=128, ny=48), check=False)
        a = coarse.values[:, :, 0, 0]
        b = fine.values[::2, :, 0, 0]
        mask = coarse.radial_distance() > 1.0
        sup = np.abs(b).max()
        assert np.abs(a - b)[mask].max() <= 1e-3 * sup

    def test_grid_validation(self):
        with pytest.raises(ArgumentError):
            lp.KernelGrid(nx=4, ny=48)


class TestDecayFits:

    def test_fit_is_feasible_with_high_coverage(self, heat_fit):
        _, fit = heat_fit
        assert fit.feasible
        assert fit.coverage >= 0.99
        assert fit.c > 0.0
        assert np.isfinite(fit.M)

    def test_far_field_doubling_sits_between_envelope_and_slow_rate(
            self, heat_fit):
        field, fit = heat_fit
        mag = np.sqrt((np.abs(field.values) ** 2).sum(axis=(-2, -1)))
        rad = field.radial_distance()
        for r0 in (1.0, 2.0, 3.0):
            near = mag[(rad > 0.9 * r0) & (rad < 1.1 * r0)].max()
            far = mag[(rad > 1.8 * r0) & (rad < 2.2 * r0)].max()
            env = lp.p_kernel_batch(2, -1, 3,
                                    np.array([fit.c * r0, 2 * fit.c * r0]))
            ratio = far / near
            assert ratio >= 0.8 * env[1] / env[0]
            assert ratio <= math.exp(-0.45 * r0)

    def test_modulus_scaling_of_the_supremum(self, heat_dirichlet):
        # sup |K| tracks |lambda|^{(n - 2m) / 2m} on self-scaled grids
        sym, bspec = heat_dirichlet
        sups = {}
        for mod in (1.0, 4.0, 16.0):
            field = lp.compute_kernel_field(sym, bspec, mod, check=False)
            sups[mod] = float(np.abs(field.values).max())
        for mod in (4.0, 16.0):
            predicted = mod ** (-0.5) * sups[1.0]
            assert abs(sups[mod] - predicted) <= 0.25 * predicted

    def test_stability_across_moduli_and_arguments(self, heat_dirichlet):
        sym, bspec = heat_dirichlet
        res = lp.decay_stability(sym, bspec)
        assert res["stable"]
        assert res["c_spread"] <= 1.2
        assert len(res["fits"]) == 9
        assert all(f.feasible for f in res["fits"])

    def test_fit_report_serializes(self, heat_fit):
        _, fit = heat_fit
        d = fit.to_dict()
        assert d["feasible"] is True
        assert d["lambda"] == [1.0, 0.0]

    def test_derivative_order_capped_by_symbol_order(self, heat_fit):
        field, _ = heat_fit
        with pytest.raises(ArgumentError):
            lp.verify_kernel_decay(field, alpha=(3, 0))
