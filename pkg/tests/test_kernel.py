import math

import numpy as np
import pytest

import pearsonlab as pl

from util import free_kernel, free_kernel_ratio, sinc, two_bump


class TestSineKernel:
    def test_removable_singularity(self):
        assert pl.sine_kernel(1.3, 0.7, 0.7) == 1.0

    def test_first_clock_zero(self):
        # pi * rho(xi) * (b - a) = pi at b - a = 2 sqrt(xi) pi
        xi = 1.0
        assert pl.sine_kernel(xi, 0.0, 2 * math.sqrt(xi) * math.pi) == pytest.approx(
            0.0, abs=1e-15
        )

    def test_free_density_of_states_value(self):
        assert pl.rho(1.0) == pytest.approx(1.0 / (2 * math.pi), rel=1e-15)
        assert pl.rho(4.0) == pytest.approx(1.0 / (4 * math.pi), rel=1e-15)

    def test_nonpositive_energy_rejected(self):
        with pytest.raises(ValueError):
            pl.sine_kernel(0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            pl.rho(-1.0)

    def test_even_in_separation(self):
        assert pl.sine_kernel(2.0, -1.0, 1.5) == pl.sine_kernel(2.0, 1.5, -1.0)

    def test_complex_separation(self):
        v = pl.sine_kernel(1.0, 0.0, 1j)
        z = 1j / 2.0
        assert v == pytest.approx(np.sin(z) / z, rel=1e-14)


class TestQuadratureRoute:
    def test_free_diagonal_closed_form(self):
        for L in (3.0, 10.0, 27.5):
            ev = pl.cd_quadrature(pl.zero_potential(), 1.0, 1.0, L)
            assert ev.value == pytest.approx(L / 2 + math.sin(2 * L) / 4, rel=1e-12)
            assert ev.method == "quadrature"

    def test_free_off_diagonal_product_to_sum(self):
        L = 9.0
        ev = pl.cd_quadrature(pl.zero_potential(), 1.0, 4.0, L)
        assert ev.value == pytest.approx(
            (math.sin(3 * L) / 3 + math.sin(L)) / 2, abs=1e-12
        )

    def test_matches_formula_route_with_bumps(self):
        ev_q = pl.cd_quadrature(two_bump(), 1.0, 1.1, 200.0)
        ev_f = pl.cd_formula(two_bump(), 1.0, 1.1, 200.0)
        assert abs(ev_q.value - ev_f.value) / abs(ev_f.value) < 1e-8

    def test_nonpositive_length_rejected(self):
        with pytest.raises(ValueError):
            pl.cd_quadrature(pl.zero_potential(), 1.0, 2.0, 0.0)

    def test_symmetry(self):
        a = pl.cd_quadrature(two_bump(), 0.7, 1.9, 120.0)
        b = pl.cd_quadrature(two_bump(), 1.9, 0.7, 120.0)
        assert a.value == pytest.approx(b.value, rel=1e-12)

    def test_cauchy_schwarz(self):
        V = two_bump()
        for (xi, zeta) in [(0.5, 1.0), (0.8, 1.7), (1.2, 2.0)]:
            for L in (10.0, 100.0):
                off = pl.cd_quadrature(V, xi, zeta, L).value
                d1 = pl.cd_quadrature(V, xi, xi, L).value
                d2 = pl.cd_quadrature(V, zeta, zeta, L).value
                assert abs(off) <= math.sqrt(d1 * d2) * (1 + 1e-12)


class TestFormulaRoute:
    def test_free_closed_form_zero(self):
        ev = pl.cd_formula(pl.zero_potential(), 1.0, 4.0, math.pi)
        assert ev.value == pytest.approx(0.0, abs=1e-13)
        assert ev.method == "cd_formula"

    def test_antisymmetric_numerator_invariant_value(self):
        V = two_bump()
        a = pl.cd_formula(V, 1.0, 1.7, 80.0)
        b = pl.cd_formula(V, 1.7, 1.0, 80.0)
        assert a.value == pytest.approx(b.value, rel=1e-13)

    def test_agreement_with_quadrature_two_bumps(self):
        ev_f = pl.cd_formula(two_bump(), 1.0, 1.05, 500.0)
        ev_q = pl.cd_quadrature(two_bump(), 1.0, 1.05, 500.0)
        assert abs(ev_f.value - ev_q.value) / abs(ev_q.value) < 1e-6

    def test_near_diagonal_reroutes_and_flags(self):
        ev = pl.cd_formula(two_bump(), 1.0, 1.0 + 1e-12, 50.0)
        assert ev.method == "accumulated"
        direct = pl.cd_diagonal(two_bump(), 1.0, 50.0)
        assert ev.value == pytest.approx(direct.value, rel=1e-9)

    def test_near_diagonal_complex_reroutes_to_quadrature(self):
        ev = pl.cd_formula(two_bump(), 1.0 + 1e-12j, 1.0, 50.0)
        assert ev.method == "quadrature"


class TestDiagonalRoute:
    def test_free_closed_form(self):
        for L in (5.0, 40.0):
            ev = pl.cd_diagonal(pl.zero_potential(), 1.0, L)
            assert ev.value == pytest.approx(L / 2 + math.sin(2 * L) / 4, rel=1e-11)
            assert ev.method == "accumulated"

    def test_positivity(self):
        V = two_bump()
        for xi in (0.3, 1.0, 2.7):
            for L in (7.0, 63.0, 140.0):
                assert pl.cd_diagonal(V, xi, L).value > 0.0

    def test_richardson_limit_of_formula_route(self):
        # finite-difference oracle: S(xi, xi+d) -> S(xi, xi) linearly in d,
        # so two Richardson eliminations on d in {1e-3, 1e-4, 1e-5} give the
        # diagonal to high order
        V = two_bump()
        xi, L = 1.3, 60.0
        f = [pl.cd_formula(V, xi, xi + d, L).value for d in (1e-3, 1e-4, 1e-5)]
        g1 = (10 * f[1] - f[0]) / 9.0
        g2 = (10 * f[2] - f[1]) / 9.0
        extrap = (100 * g2 - g1) / 99.0
        diag = pl.cd_diagonal(V, xi, L).value
        assert abs(extrap - diag) / abs(diag) < 1e-6

    def test_complex_rejected(self):
        with pytest.raises(ValueError):
            pl.cd_diagonal(two_bump(), 1.0 + 0.1j, 10.0)


class TestRouteAgreementGrid:
    @pytest.mark.parametrize("potential", ["free", "two_bump"])
    def test_pairwise_agreement(self, potential):
        V = pl.zero_potential() if potential == "free" else two_bump()
        xis = (0.5, 1.1, 2.0)
        for L in (10.0, 100.0):
            for xi in xis:
                for zeta in xis:
                    q = pl.cd_quadrature(V, xi, zeta, L).value
                    if xi == zeta:
                        d = pl.cd_diagonal(V, xi, L).value
                        assert abs(q - d) / abs(d) < 1e-6
                    else:
                        f = pl.cd_formula(V, xi, zeta, L).value
                        assert abs(q - f) / max(abs(f), 1e-30) < 1e-6


class TestKernelRatio:
    def test_identity_at_zero_shifts(self):
        assert pl.kernel_ratio(two_bump(), 1.0, 0.0, 0.0, 50.0) == pytest.approx(
            1.0, rel=1e-12
        )

    def test_free_ratio_against_closed_form(self):
        V0 = pl.zero_potential()
        for (a, b) in [(1.0, -1.0), (2.0, 0.5), (0.0, 2.0)]:
            got = pl.kernel_ratio(V0, 1.0, a, b, 500.0)
            assert got == pytest.approx(free_kernel_ratio(1.0, a, b, 500.0), rel=1e-10)

    def test_free_sup_error_small_at_large_length(self):
        # closed-form free kernel against the sinc target
        V0 = pl.zero_potential()
        L = 1e4
        sup = 0.0
        for a in np.linspace(-2, 2, 9):
            for b in np.linspace(-2, 2, 9):
                got = pl.kernel_ratio(V0, 1.0, float(a), float(b), L)
                sup = max(sup, abs(got - pl.sine_kernel(1.0, a, b)))
        assert sup < 1e-2

    def test_conjugate_symmetry(self):
        V = two_bump()
        a, b = 0.4 + 0.3j, -1.0 + 0.6j
        plain = pl.kernel_ratio(V, 1.2, a, b, 80.0)
        conj = pl.kernel_ratio(V, 1.2, a.conjugate(), b.conjugate(), 80.0)
        assert conj == pytest.approx(plain.conjugate(), rel=1e-11)

    def test_left_half_plane_rejected(self):
        with pytest.raises(ValueError):
            pl.kernel_ratio(two_bump(), 0.5, -60.0, 0.0, 100.0)

    def test_complex_strip_arguments(self):
        v = pl.kernel_ratio(two_bump(), 1.0, 1j, -0.5, 200.0)
        assert np.isfinite(v.real) and np.isfinite(v.imag)


class TestKappa:
    def test_free_value_is_half(self):
        V = two_bump()
        for xi in (0.3, 1.0, 4.0):
            for x in (1.0, 17.3, 250.0):
                assert pl.kappa(V, 0, xi, x).value == pytest.approx(0.5, rel=1e-12)

    def test_constant_beyond_last_kept_bump(self):
        V = two_bump()
        base = pl.kappa(V, 2, 1.4, 101.0).value
        for x in (120.0, 500.0, 4000.0):
            assert pl.kappa(V, 2, 1.4, x).value == pytest.approx(base, rel=1e-9)

    def test_positive_everywhere(self):
        V = two_bump()
        for xi in (0.25, 0.9, 3.3):
            for x in (5.0, 10.5, 100.2, 333.0):
                assert pl.kappa(V, 2, xi, x).value > 0.0

    def test_matches_prufer_radius_identity(self):
        # (a1_tilde^2 + a2_tilde^2)/2 equals (u^2 + u'^2/xi)/2 identically
        V = two_bump()
        xi, x = 1.7, 57.0
        s = pl.neumann_solution(pl.truncate(V, 2), xi, x)
        expected = 0.5 * (s.u**2 + s.du**2 / xi)
        assert pl.kappa(V, 2, xi, x).value == pytest.approx(expected, rel=1e-12)


class TestKappaRatio:
    def test_free_level_matches_sinc_at_large_x(self):
        got = pl.kappa_ratio(two_bump(), 0, 1.0, 1.0, -1.0, 1e3)
        target = pl.sine_kernel(1.0, 1.0, -1.0)
        assert abs(got - target) < 1e-2

    def test_diagonal_normalization_limit(self):
        V = two_bump()
        vals = [abs(pl.kappa_ratio(V, 2, 1.0, 0.7, 0.7, x) - 1.0) for x in (200.0, 2000.0, 20000.0)]
        assert vals[-1] < 1e-2
        assert vals[-1] <= vals[0]

    def test_uniformity_probe_decreasing_sup(self):
        # sup over a small grid decreases along x = 1e2, 1e3, 1e4 (10% slack)
        V = two_bump()
        xi_grid = np.linspace(0.5, 2.0, 5)
        ab = np.linspace(-2.0, 2.0, 5)
        sups = []
        for x in (1e2, 1e3, 1e4):
            worst = 0.0
            for xi in xi_grid:
                for a in ab:
                    for b in ab:
                        got = pl.kappa_ratio(V, 2, float(xi), float(a), float(b), x)
                        worst = max(worst, abs(got - pl.sine_kernel(xi, a, b)))
            sups.append(worst)
        assert sups[1] <= sups[0] * 1.1
        assert sups[2] <= sups[1] * 1.1


class TestKappaRatioGap:
    def _potential(self, lam3=0.01):
        return pl.PearsonPotential(
            pl.canonical_bump(), (0.5, 0.25, lam3), (10.0, 100.0, 1000.0),
            monotone_from=3,
        )

    def test_zero_new_amplitude_gives_zero_gap(self):
        # the bump added between levels 1 and 2 has amplitude 0, so the two
        # truncations are the same operator
        V = pl.PearsonPotential(
            pl.canonical_bump(), (0.5, 0.0, 0.0), (10.0, 100.0, 1000.0)
        )
        gap = pl.kappa_ratio_gap(V, 1, 1.0, 0.5, -0.5, 150.0)
        assert gap.gap == pytest.approx(0.0, abs=1e-13)

    def test_window_enforced(self):
        V = self._potential()
        with pytest.raises(ValueError):
            pl.kappa_ratio_gap(V, 1, 1.0, 0.5, -0.5, 50.0)
        with pytest.raises(ValueError):
            pl.kappa_ratio_gap(V, 1, 1.0, 0.5, -0.5, 1500.0)

    def test_linear_scaling_in_new_amplitude(self):
        # the gap divided by lam_{ell+1} is stable across two amplitude
        # decades; ell = 1 so the new bump is the one at 100
        x, xi, a, b = 150.0, 1.0, 1.0, -1.0
        gaps = []
        for lam2 in (1e-2, 1e-3):
            V = pl.PearsonPotential(
                pl.canonical_bump(), (0.5, lam2, 0.0), (10.0, 100.0, 1000.0),
                monotone_from=3,
            )
            gaps.append(pl.kappa_ratio_gap(V, 1, xi, a, b, x).gap / lam2)
        assert max(gaps) / min(gaps) < 1.2

    def test_triangle_split_bounds_gap(self):
        V = self._potential(0.1)
        for x in (100.0, 150.0, 400.0, 999.0):
            g = pl.kappa_ratio_gap(V, 1, 1.3, 0.8, -0.4, x)
            assert g.s_term + g.kappa_term >= g.gap * (1 - 1e-12)
