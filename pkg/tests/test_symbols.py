"""Interior symbols, boundary rows, and the tangential splitting."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

import lopashka as lp
from lopashka import ArgumentError

import oracles


def unit_vectors(dim):
    return [np.eye(dim)[i] for i in range(dim)]


class TestInteriorEval:

    def test_laplacian_at_normal_direction(self, scalar_symbol):
        val = scalar_symbol.eval([0.0, 1.0])
        assert np.allclose(val, [[1.0]], atol=1e-14)

    def test_diagonal_symbol_at_tangential_direction(self):
        d = np.diag([1.0, 2.0, 3.0])
        sym = lp.InteriorSymbol(2, 2, {(2, 0): d, (0, 2): d})
        assert np.allclose(sym.eval([1.0, 0.0]), d, atol=1e-14)

    def test_homogeneity_factor_second_order(self, scalar_symbol):
        xi = np.array([0.7, -1.3])
        assert np.allclose(scalar_symbol.eval(2.0 * xi),
                           4.0 * scalar_symbol.eval(xi), atol=1e-12)

    def test_homogeneity_factor_fourth_order(self, biharmonic):
        sym, _ = biharmonic
        xi = np.array([0.4, 0.9])
        assert np.allclose(sym.eval(2.0 * xi), 16.0 * sym.eval(xi),
                           atol=1e-12)

    @given(st.integers(0, 2 ** 32 - 1))
    def test_homogeneity_random_directions(self, seed):
        rng = np.random.default_rng(seed)
        sym = lp.InteriorSymbol(2, 2, {(2, 0): np.eye(2),
                                       (1, 1): 0.5j * np.eye(2),
                                       (0, 2): 2.0 * np.eye(2)})
        xi = rng.normal(size=2)
        t = rng.uniform(0.1, 10.0)
        assert np.allclose(sym.eval(t * xi), t ** 2 * sym.eval(xi),
                           rtol=1e-10, atol=1e-12)

    def test_eval_batch_matches_eval(self, scalar_symbol):
        rng = np.random.default_rng(5)
        xis = rng.normal(size=(7, 2))
        batch = scalar_symbol.eval_batch(xis)
        for i, xi in enumerate(xis):
            assert np.allclose(batch[i], scalar_symbol.eval(xi), atol=1e-13)


class TestInteriorValidation:

    def test_odd_order_rejected(self):
        with pytest.raises(ArgumentError):
            lp.InteriorSymbol(3, 2, {(3, 0): np.eye(1), (0, 3): np.eye(1)})

    def test_inhomogeneous_coefficients_rejected(self):
        with pytest.raises(ArgumentError):
            lp.InteriorSymbol(2, 2, {(2, 0): np.eye(1), (1, 0): np.eye(1)})

    def test_missing_normal_top_coefficient_rejected(self):
        # the top normal-degree block must be present and invertible
        with pytest.raises(ArgumentError):
            lp.InteriorSymbol(2, 2, {(2, 0): np.eye(1)})


class TestTangentialSplit:

    def test_laplacian_parts(self, scalar_symbol):
        parts = scalar_symbol.tangential_parts()
        b = np.array([0.8], dtype=complex)
        assert np.allclose(parts[0](b), [[1.0]], atol=1e-12)
        assert np.allclose(parts[1](b), [[0.0]], atol=1e-12)
        assert np.allclose(parts[2](b), [[0.64]], atol=1e-12)

    def test_cross_term_binomial_parts(self):
        # (xi_1 + xi_2)^2 splits into eta^2 + 2 xi' eta + xi'^2
        sym = lp.InteriorSymbol(2, 2, {(2, 0): np.eye(1),
                                       (1, 1): 2.0 * np.eye(1),
                                       (0, 2): np.eye(1)})
        parts = sym.tangential_parts()
        want = oracles.tangential_split_by_fit(sym.eval, 2, [3.0])
        b = np.array([3.0], dtype=complex)
        for l in range(3):
            assert np.allclose(parts[l](b), want[l], atol=1e-9)

    @given(st.integers(0, 2 ** 32 - 1))
    def test_reconstruction_from_parts(self, seed):
        rng = np.random.default_rng(seed)
        coeffs = {}
        for alpha in lp.multi_indices(2, 2):
            coeffs[alpha] = rng.normal(size=(2, 2)) \
                + 1j * rng.normal(size=(2, 2))
        coeffs[(0, 2)] = coeffs[(0, 2)] + 3.0 * np.eye(2)  # keep a0 invertible
        sym = lp.InteriorSymbol(2, 2, coeffs)
        parts = sym.tangential_parts()
        b = rng.normal(size=1).astype(complex)
        eta = rng.normal()
        total = sum(np.asarray(parts[l](b)) * eta ** (2 - l)
                    for l in range(3))
        assert np.allclose(total, sym.eval(np.array([b[0].real, eta])),
                           rtol=1e-9, atol=1e-10)


class TestBoundaryRows:

    def test_dirichlet_row_identity(self):
        comp = lp.BoundaryComponent(k=0, projection=np.eye(1),
                                    coeffs={(0, 0): np.eye(1)}, dim=2)
        spec = lp.BoundaryOperatorSpec([lp.BoundaryRow([comp])])
        for xi in ([0.0, 1.0], [2.0, -3.0]):
            assert np.allclose(spec.eval_row(1, xi), np.eye(1), atol=1e-14)

    def test_plain_normal_derivative_row_at_normal_direction(self):
        comp = lp.BoundaryComponent(k=1, projection=np.eye(1),
                                    coeffs={(0, 1): np.eye(1)}, dim=2)
        spec = lp.BoundaryOperatorSpec([lp.BoundaryRow([comp])])
        assert np.allclose(spec.eval_row(1, [0.0, 1.0]), np.eye(1),
                           atol=1e-14)

    def test_weighted_flux_row_combines_projections(self):
        # first-order row carrying two diagonal projections
        P1 = np.diag([1.0, 0.0])
        P2 = np.diag([0.0, 1.0])
        b1, b2 = 2.0, -0.5
        comp = lp.BoundaryComponent(k=1, projection=np.eye(2),
                                    coeffs={(0, 1): b1 * P1 + b2 * P2},
                                    dim=2)
        spec = lp.BoundaryOperatorSpec([lp.BoundaryRow([comp])])
        assert np.allclose(spec.eval_row(1, [0.0, 1.0]), b1 * P1 + b2 * P2,
                           atol=1e-14)

    def test_duplicate_normal_order_in_one_row_rejected(self):
        P0 = np.diag([1.0, 0.0])
        P1 = np.diag([0.0, 1.0])
        c0 = lp.BoundaryComponent(k=0, projection=P0, coeffs={(0, 0): P0},
                                  dim=2)
        c1 = lp.BoundaryComponent(k=0, projection=P1, coeffs={(0, 0): P1},
                                  dim=2)
        with pytest.raises(ArgumentError, match="duplicate component order"):
            lp.BoundaryRow([c0, c1])

    def test_non_annihilating_projections_rejected(self):
        c0 = lp.BoundaryComponent(k=0, projection=np.eye(2),
                                  coeffs={(0, 0): np.eye(2)}, dim=2)
        c1 = lp.BoundaryComponent(k=1, projection=np.eye(2),
                                  coeffs={(0, 1): np.eye(2)}, dim=2)
        with pytest.raises(ArgumentError, match="annihilate"):
            lp.BoundaryRow([c0, c1])

    def test_non_idempotent_projection_rejected(self):
        bad = np.array([[1.0, 1.0], [0.0, 1.0]])
        with pytest.raises(ArgumentError, match="P @ P = P"):
            lp.BoundaryComponent(k=0, projection=bad, coeffs={(0, 0): bad},
                                 dim=2)

    def test_coefficient_leaking_out_of_range_rejected(self):
        P = np.diag([1.0, 0.0])
        leak = np.array([[1.0, 0.0], [1.0, 0.0]])  # image not inside ran(P)
        with pytest.raises(ArgumentError, match="leaks"):
            lp.BoundaryComponent(k=0, projection=P, coeffs={(0, 0): leak},
                                 dim=2)

    def test_row_index_is_one_based(self, heat_dirichlet):
        _, bspec = heat_dirichlet
        bspec.eval_row(1, [0.0, 1.0])
        with pytest.raises(ArgumentError, match="out of range"):
            bspec.eval_row(0, [0.0, 1.0])
        with pytest.raises(ArgumentError, match="out of range"):
            bspec.eval_row(2, [0.0, 1.0])

    def test_slots_enumeration_and_data_dimension(self, catalysis):
        sym, bspec = catalysis
        slots = list(bspec.slots())
        assert [(j, k) for j, k, _ in slots] == [(1, 0), (1, 1)]
        assert bspec.data_dimension() == sym.m * sym.N == 3

    def test_check_against_dimension_mismatch(self, heat_dirichlet):
        _, bspec = heat_dirichlet
        wrong = lp.InteriorSymbol(2, 2, {(2, 0): np.eye(2),
                                         (0, 2): np.eye(2)})
        with pytest.raises(ArgumentError):
            bspec.check_against(wrong)


class TestProjectionAlgebra:

    @pytest.mark.parametrize("name", lp.FIXTURE_NAMES)
    def test_fixture_projections_are_projections(self, name):
        _, bspec = lp.load_fixture(name)
        for _, _, comp in bspec.slots():
            P = comp.projection
            assert np.abs(P @ P - P).max() <= 1e-10

    def test_coupled_projections_annihilate_and_sum(self, catalysis):
        _, bspec = catalysis
        comps = {k: comp for _, k, comp in bspec.slots()}
        P0, P1 = comps[0].projection, comps[1].projection
        assert np.abs(P0 @ P1).max() <= 1e-10
        assert np.abs(P1 @ P0).max() <= 1e-10
        assert np.abs(P0 + P1 - np.eye(3)).max() <= 1e-10
        assert lp.projection_rank(P0) == 1
        assert lp.projection_rank(P1) == 2

    @pytest.mark.parametrize("name", lp.FIXTURE_NAMES)
    def test_range_basis_spans_projection_range(self, name):
        _, bspec = lp.load_fixture(name)
        for _, _, comp in bspec.slots():
            U = lp.range_basis(comp.projection)
            assert U.shape[1] == lp.projection_rank(comp.projection)
            assert np.abs(U.conj().T @ U - np.eye(U.shape[1])).max() <= 1e-10
            assert np.abs(comp.projection @ U - U).max() <= 1e-10

    def test_component_eval_stays_in_projection_range(self, catalysis):
        # B(xi) = sum b_beta xi^beta P maps everything into ran(P)
        _, bspec = catalysis
        rng = np.random.default_rng(11)
        for _, _, comp in bspec.slots():
            P = comp.projection
            for _ in range(5):
                xi = rng.normal(size=2)
                val = comp.eval(xi.astype(complex))
                assert np.abs(P @ val - val).max() <= 1e-10
