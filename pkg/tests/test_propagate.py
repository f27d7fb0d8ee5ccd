import math

import numpy as np
import pytest

import pearsonlab as pl
from pearsonlab.propagate import DeterminantDriftError

from util import monolithic_rk4, one_bump, two_bump


class TestFreeTransfer:
    def test_rotation_by_pi(self):
        T = pl.free_transfer(1.0, 0.0, math.pi)
        assert np.allclose(T.entries, [[-1.0, 0.0], [0.0, -1.0]], atol=1e-14)

    def test_zero_length_is_identity(self):
        T = pl.free_transfer(2.7, 5.0, 5.0)
        assert np.allclose(T.entries, np.eye(2), atol=0.0)

    def test_unit_determinant(self):
        T = pl.free_transfer(2.3, 0.0, 7.1)
        assert T.det() == pytest.approx(1.0, abs=1e-14)

    def test_nonpositive_real_part_rejected(self):
        with pytest.raises(ValueError):
            pl.free_transfer(-1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            pl.free_transfer(0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            pl.free_transfer(complex(-0.5, 1.0), 0.0, 1.0)

    def test_small_argument_series_branch(self):
        # |z| < 1e-4 goes through the series; compare with a slightly
        # larger argument evaluated directly
        T = pl.free_transfer(1e-9, 0.0, 1.0)
        assert T.entries[0, 1] == pytest.approx(1.0, rel=1e-9)
        assert T.det() == pytest.approx(1.0, abs=1e-14)

    def test_group_property(self):
        xi = 1.9
        T1 = pl.free_transfer(xi, 0.0, 3.0)
        T2 = pl.free_transfer(xi, 3.0, 8.0)
        T = pl.free_transfer(xi, 0.0, 8.0)
        assert np.allclose(T2.after(T1).entries, T.entries, atol=1e-13)

    def test_complex_argument(self):
        T = pl.free_transfer(complex(1.0, 0.25), 0.0, 2.0)
        assert T.det() == pytest.approx(1.0, abs=1e-12)
        assert T.entries.dtype == np.complex128


class TestBumpTransfer:
    def test_zero_amplitude_matches_free(self):
        for steps in (64, 256, 512):
            B = pl.bump_transfer(pl.canonical_bump(), 0.0, 1.0, steps)
            F = pl.free_transfer(1.0, 0.0, 1.0)
            defect = np.abs(B.entries - F.entries).max()
            assert defect <= 10.0 * (1.0 / steps) ** 4

    def test_unit_determinant(self):
        B = pl.bump_transfer(pl.canonical_bump(), 0.7, 1.3)
        assert B.det() == pytest.approx(1.0, abs=1e-12)

    def test_too_few_steps_rejected(self):
        with pytest.raises(ValueError):
            pl.bump_transfer(pl.canonical_bump(), 0.5, 1.0, 8)

    def test_perturbation_linear_in_amplitude(self):
        # ||A - B|| / |lam| stable across three amplitude decades
        F = pl.free_transfer(1.0, 0.0, 1.0).entries
        ratios = []
        for lam in (1e-2, 1e-3, 1e-4):
            B = pl.bump_transfer(pl.canonical_bump(), lam, 1.0).entries
            ratios.append(np.linalg.norm(F - B, 2) / lam)
        assert max(ratios) / min(ratios) < 1.1

    def test_step_halving_order(self):
        # defects against a common 4x-step reference shrink by >= 8x per halving
        ref = pl.bump_transfer(pl.canonical_bump(), 0.7, 1.3, 256).entries
        d32 = np.linalg.norm(pl.bump_transfer(pl.canonical_bump(), 0.7, 1.3, 32).entries - ref, 2)
        d64 = np.linalg.norm(pl.bump_transfer(pl.canonical_bump(), 0.7, 1.3, 64).entries - ref, 2)
        assert d32 / d64 >= 8.0


class TestPropagateTo:
    def test_free_neumann_closed_form(self):
        V0 = pl.zero_potential()
        s = pl.propagate_to(V0, 1.0, 5.0, pl.SolutionState(1.0, 0.0, 0.0))
        assert s.u == pytest.approx(math.cos(5.0), abs=1e-13)
        assert s.du == pytest.approx(-math.sin(5.0), abs=1e-13)

    def test_free_dirichlet_closed_form(self):
        V0 = pl.zero_potential()
        s = pl.propagate_to(V0, 4.0, math.pi / 4, pl.SolutionState(0.0, 1.0, 0.0))
        assert s.u == pytest.approx(0.5, abs=1e-13)
        assert s.du == pytest.approx(0.0, abs=1e-13)

    def test_backwards_target_rejected(self):
        with pytest.raises(ValueError):
            pl.propagate_to(pl.zero_potential(), 1.0, 1.0, pl.SolutionState(1.0, 0.0, 2.0))

    def test_one_bump_against_monolithic_oracle(self):
        # independent oracle: a single fine-step RK4 across [0, 20] that
        # samples the potential pointwise and never sees the gap structure
        V = pl.PearsonPotential(pl.canonical_bump(), (0.3,), (10.0,))
        xi = 1.0
        s = pl.neumann_solution(V, xi, 20.0)
        u_ref, du_ref = monolithic_rk4(V, xi, 20.0, 80000)
        assert s.u == pytest.approx(u_ref, abs=5e-10)
        assert s.du == pytest.approx(du_ref, abs=5e-10)

    def test_composition_through_a_bump(self):
        V = two_bump()
        xi = 1.7
        mid = pl.propagate_to(V, xi, 10.5, pl.SolutionState(1.0, 0.0, 0.0))
        end_a = pl.propagate_to(V, xi, 30.0, mid)
        end_b = pl.propagate_to(V, xi, 30.0, pl.SolutionState(1.0, 0.0, 0.0))
        assert end_a.u == pytest.approx(end_b.u, rel=1e-8, abs=1e-10)
        assert end_a.du == pytest.approx(end_b.du, rel=1e-8, abs=1e-10)

    def test_composition_free_points(self):
        V = two_bump()
        xi = 0.8
        s1 = pl.propagate_to(V, xi, 50.0, pl.SolutionState(1.0, 0.0, 0.0))
        s2 = pl.propagate_to(V, xi, 120.0, s1)
        direct = pl.propagate_to(V, xi, 120.0, pl.SolutionState(1.0, 0.0, 0.0))
        assert s2.u == pytest.approx(direct.u, rel=1e-10, abs=1e-12)
        assert s2.du == pytest.approx(direct.du, rel=1e-10, abs=1e-12)


class TestNeumannSolution:
    def test_boundary_values(self):
        s = pl.neumann_solution(two_bump(), 1.0, 0.0)
        assert (s.u, s.du) == (1.0, 0.0)

    def test_free_periodicity(self):
        s = pl.neumann_solution(pl.zero_potential(), 1.0, 2 * math.pi)
        assert s.u == pytest.approx(1.0, abs=1e-12)
        assert s.du == pytest.approx(0.0, abs=1e-12)

    def test_wronskian_with_dirichlet_is_one(self):
        V = two_bump()
        xi = 1.3
        for x in (0.0, 5.0, 10.5, 50.0, 101.0, 150.0):
            n = pl.neumann_solution(V, xi, x)
            d = pl.dirichlet_solution(V, xi, x)
            wronskian = n.u * d.du - n.du * d.u
            assert wronskian == pytest.approx(1.0, abs=1e-10)


class TestVariationCoeffs:
    def test_free_coeffs_are_zero_one(self):
        V0 = pl.zero_potential()
        for x in (0.5, 10.0, 333.3):
            c = pl.variation_coeffs(V0, 1.9, x)
            assert c.a1 == pytest.approx(0.0, abs=1e-12)
            assert c.a2 == pytest.approx(1.0, abs=1e-12)

    def test_tilde_normalization(self):
        V = two_bump()
        xi = 2.2
        c = pl.variation_coeffs(V, xi, 57.0)
        assert c.a1_tilde == pytest.approx(c.a1 / math.sqrt(xi), rel=1e-14)
        assert c.a2_tilde == c.a2

    def test_constant_beyond_last_kept_bump(self):
        V = pl.truncate(two_bump(), 1)
        xi = 1.1
        base = pl.variation_coeffs(V, xi, 11.0)
        for x in (20.0, 75.0, 200.0):
            c = pl.variation_coeffs(V, xi, x)
            assert c.a1 == pytest.approx(base.a1, abs=1e-10)
            assert c.a2 == pytest.approx(base.a2, abs=1e-10)

    def test_reconstruction_inverts(self):
        V = two_bump()
        xi = 1.4
        s = pl.neumann_solution(V, xi, 42.0)
        c = pl.variation_coeffs_from_state(s, xi)
        u, du = pl.reconstruct_state(c, xi)
        assert u == pytest.approx(s.u, rel=1e-12)
        assert du == pytest.approx(s.du, rel=1e-12)

    def test_free_region_constancy_within_gaps(self):
        V = two_bump()
        xi = 1.0
        for gap in [(0.0, 10.0), (11.0, 100.0), (101.0, 400.0)]:
            lo, hi = gap
            xs = np.linspace(lo + 1e-6, hi - 1e-6, 7)
            coeffs = [pl.variation_coeffs(V, xi, float(x)) for x in xs]
            a1s = [c.a1 for c in coeffs]
            a2s = [c.a2 for c in coeffs]
            drift = max(max(a1s) - min(a1s), max(a2s) - min(a2s))
            assert drift <= 1e-10 * (hi - lo)


class TestPropagateExtended:
    def test_derivative_pair_starts_at_zero(self):
        e = pl.extended_neumann(two_bump(), 1.0, 0.0)
        assert (e.u_xi, e.du_xi) == (0.0, 0.0)

    def test_free_u_xi_vanishes_at_pi(self):
        # d/dxi cos(sqrt(xi) x) = -x sin(sqrt(xi) x) / (2 sqrt(xi)), zero at
        # x = pi for xi = 1
        e = pl.extended_neumann(pl.zero_potential(), 1.0, math.pi)
        assert e.u_xi == pytest.approx(0.0, abs=1e-13)

    def test_free_u_xi_closed_form(self):
        xi, x = 1.7, 9.0
        e = pl.extended_neumann(pl.zero_potential(), xi, x)
        w = math.sqrt(xi)
        assert e.u_xi == pytest.approx(-x * math.sin(w * x) / (2 * w), rel=1e-12)

    def test_finite_difference_oracle_free(self):
        # central difference in xi of the propagated solution
        V0 = pl.zero_potential()
        xi, x, h = 1.0, 50.0, 1e-5
        e = pl.extended_neumann(V0, xi, x)
        up = pl.neumann_solution(V0, xi + h, x)
        dn = pl.neumann_solution(V0, xi - h, x)
        assert e.u_xi == pytest.approx((up.u - dn.u) / (2 * h), abs=1e-6)
        assert e.du_xi == pytest.approx((up.du - dn.du) / (2 * h), abs=1e-6)

    def test_finite_difference_oracle_with_bumps(self):
        V = two_bump()
        xi, x, h = 1.3, 120.0, 1e-5
        e = pl.extended_neumann(V, xi, x)
        up = pl.neumann_solution(V, xi + h, x)
        dn = pl.neumann_solution(V, xi - h, x)
        assert e.u_xi == pytest.approx((up.u - dn.u) / (2 * h), rel=1e-5, abs=1e-5)
        assert e.du_xi == pytest.approx((up.du - dn.du) / (2 * h), rel=1e-5, abs=1e-5)

    def test_complex_parameter_rejected(self):
        with pytest.raises(ValueError):
            pl.propagate_extended(
                pl.zero_potential(), complex(1.0, 0.5), 1.0,
                pl.ExtendedState(1.0, 0.0, 0.0, 0.0, 0.0),
            )


class TestDeterminantConservation:
    def test_composed_transfer_over_real_grid(self):
        V = two_bump()
        for xi in (0.25, 1.0, 2.5, 4.0):
            for x in (10.5, 50.0, 150.0):
                T = pl.transfer_to(V, xi, x)
                assert abs(T.det() - 1.0) <= 1e-10 * max(1.0, x)

    def test_composed_transfer_on_strip_points(self):
        V = two_bump()
        for xi in (0.5, 1.0, 2.0):
            for x in (50.0, 150.0):
                for t in (-1.0, 0.5):
                    T = pl.transfer_to(V, xi + 1j * t / x, x)
                    assert abs(T.det() - 1.0) <= 1e-10 * max(1.0, x)

    def test_drift_budget_enforced_at_construction(self):
        bad = np.array([[1.0, 0.0], [0.0, 1.0 + 1e-6]])
        with pytest.raises(DeterminantDriftError):
            pl.TransferMatrix(bad, 0.0, 1.0)


class TestComplexStripBoundedness:
    def test_norms_do_not_grow_past_thousand(self):
        # numerical reflection of the strip bound: sup over x in [1e3, 1e4]
        # must not exceed the sup over [1, 1e3] by more than 5 percent
        m = 2.0
        xi_grid = np.geomspace(1.0 / m, m, 9)
        t_grid = (-1.0, -0.5, 0.5, 1.0)

        def sup_over(xs):
            worst = 0.0
            for x in xs:
                for xi in xi_grid:
                    for t in t_grid:
                        T = pl.free_transfer(xi + 1j * t / x, 0.0, float(x))
                        worst = max(worst, np.linalg.norm(T.entries, 2))
            return worst

        small = sup_over(np.geomspace(1.0, 1e3, 25))
        large = sup_over(np.geomspace(1e3, 1e4, 25))
        assert np.isfinite(large)
        assert large <= small * 1.05
