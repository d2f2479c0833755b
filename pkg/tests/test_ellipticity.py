"""Spectral-angle scans and the perturbation stability check."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import lopashka as lp
from lopashka import ArgumentError

import oracles


def scalar(value=1.0):
    m = np.array([[value]], dtype=complex)
    return lp.InteriorSymbol(2, 2, {(2, 0): m, (0, 2): m})


def matrix_heat(mat):
    m = np.asarray(mat, dtype=complex)
    return lp.InteriorSymbol(2, 2, {(2, 0): m, (0, 2): m})


class TestAngle:

    def test_laplacian_angle_zero(self):
        rep = lp.ellipticity_angle(scalar())
        assert rep.elliptic
        assert abs(rep.angle) <= 1e-8

    def test_rotated_diagonal_angle(self):
        rep = lp.ellipticity_angle(matrix_heat(np.diag([1.0,
                                                        np.exp(0.3j)])))
        assert rep.elliptic
        assert abs(rep.angle - 0.3) <= 1e-8

    def test_rotation_block_angle_matches_eigenvalue_oracle(self):
        mat = [[1.0, 0.5], [-0.5, 1.0]]
        rep = lp.ellipticity_angle(matrix_heat(mat))
        assert rep.elliptic
        assert abs(rep.angle - oracles.matrix_angle(mat)) <= 1e-6
        assert abs(rep.angle - math.atan(0.5)) <= 1e-6

    def test_constant_matrix_angle_is_frequency_independent(self):
        # eigenvalue arguments of M |xi|^2 never depend on xi, so a
        # coarse scan already reaches the exact angle
        mat = np.diag([np.exp(-0.2j), np.exp(0.45j)])
        coarse = lp.ellipticity_angle(matrix_heat(mat), 64)
        fine = lp.ellipticity_angle(matrix_heat(mat), 4096)
        assert abs(coarse.angle - 0.45) <= 1e-10
        assert abs(fine.angle - 0.45) <= 1e-10

    def test_degenerate_symbol_reports_pi(self):
        rep = lp.ellipticity_angle(matrix_heat(np.diag([1.0, 0.0])))
        assert not rep.elliptic
        assert rep.angle == pytest.approx(np.pi)

    def test_sample_floor(self):
        with pytest.raises(ArgumentError):
            lp.ellipticity_angle(scalar(), 63)

    def test_report_fields(self):
        rep = lp.ellipticity_angle(scalar(), 256)
        assert rep.a0_invertible
        assert rep.a0_condition == pytest.approx(1.0)
        assert rep.samples == 256
        assert len(rep.worst_xi) == 2
        d = rep.to_dict()
        assert d["elliptic"] is True

    def test_refinement_triple_nondecreasing(self):
        for mat in (np.eye(1), np.diag([1.0, np.exp(0.3j)]),
                    [[1.0, 0.5], [-0.5, 1.0]]):
            rep = lp.ellipticity_angle(matrix_heat(np.atleast_2d(mat)))
            r = rep.refinement
            assert len(r) == 3
            assert r[0] <= r[1] + 1e-15
            assert r[1] <= r[2] + 1e-15
            assert r[2] == pytest.approx(rep.angle)

    @given(st.floats(0.1, 10.0))
    def test_positive_scaling_leaves_angle_unchanged(self, c):
        base = lp.ellipticity_angle(scalar(), 256).angle
        scaled = lp.ellipticity_angle(scalar(c), 256).angle
        assert abs(scaled - base) <= 1e-12


class TestPerturbation:

    def test_zero_radius_recovers_base_angle(self):
        base = lp.ellipticity_angle(scalar(np.exp(0.25j)), 256).angle
        angle = lp.check_complex_perturbation(scalar(np.exp(0.25j)), 0.0)
        assert abs(angle - base) <= 1e-12

    def test_scalar_growth_stays_below_closed_form_bound(self):
        eps = 0.1
        angle = lp.check_complex_perturbation(scalar(), eps)
        exact = oracles.perturbed_heat_angle(eps)
        # sampled sup never exceeds the exact sup, and must get close
        assert angle <= exact + 1e-12
        assert angle >= 0.8 * exact
        assert angle <= 2.0 * math.atan(eps / (1.0 - eps))

    def test_diagonal_perturbation_is_componentwise(self):
        eps = 0.05
        joint = lp.check_complex_perturbation(
            matrix_heat(np.diag([1.0, np.exp(0.3j)])), eps)
        parts = [lp.check_complex_perturbation(scalar(v), eps)
                 for v in (1.0, np.exp(0.3j))]
        assert abs(joint - max(parts)) <= 1e-12

    def test_monotone_in_radius_on_dyadic_ladder(self):
        angles = [lp.check_complex_perturbation(scalar(), e)
                  for e in (0.05, 0.1, 0.2, 0.4)]
        assert all(a <= b + 1e-15 for a, b in zip(angles, angles[1:]))

    def test_radius_domain(self):
        with pytest.raises(ArgumentError):
            lp.check_complex_perturbation(scalar(), 1.0)
        with pytest.raises(ArgumentError):
            lp.check_complex_perturbation(scalar(), -0.1)

    def test_degenerate_symbol_counts_as_pi(self):
        angle = lp.check_complex_perturbation(matrix_heat(np.diag([1.0,
                                                                   0.0])),
                                              0.0)
        assert angle == pytest.approx(np.pi)
