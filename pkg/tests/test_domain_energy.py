"""Domain-energy tests: two routes, residues, counterterms, closed forms.

Oracles: the convergent volume-route finite part (closed-form pair
profiles for disks and balls) against the boundary route, curvature
residue formulas against antisymmetric finite differences of the
continuation, and the eps-cutoff route with exact counterterms at
z = -2n.
"""

import math

import numpy as np
import pytest

from rieszreg.errors import (ExcludedExponent, ExponentNotConvergent,
                             ExponentOutOfRange, PoleAt,
                             UnsupportedDimension)
from rieszreg.domain_energy import (ball_beta_poles, beta_ball_closed_form,
                                    domain_continuation, domain_energy,
                                    domain_energy_boundary,
                                    domain_energy_direct, domain_residues,
                                    fractional_perimeter, log_kernel_residue,
                                    planar_energy, power_kernel_residue,
                                    regularized_minus2n_energy, residues_dim4,
                                    scaled_domain)
from rieszreg.extrinsic import domain_pair_profile
from rieszreg.regularize import finite_part_cumulative
from rieszreg.shapes import builtin_shape

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def disk():
    return builtin_shape("disk", {"r": 1.0})


@pytest.fixture(scope="module")
def ball3():
    return builtin_shape("ball", {"n": 3, "r": 1.0})


@pytest.fixture(scope="module")
def ball4():
    return builtin_shape("ball", {"n": 4, "r": 1.0})


@pytest.fixture(scope="module")
def squircle():
    return builtin_shape("superellipse-domain", {"p": 4.0})


class TestTwoRoutesAgree:
    """Volume-direct and boundary double integral are independent."""

    @pytest.mark.parametrize("z", [0.0, -0.5, -1.0])
    def test_disk(self, disk, z):
        a = domain_energy_direct(disk, z).value
        b = domain_energy_boundary(disk, z).value
        assert complex(b) == pytest.approx(complex(a), rel=1e-9)

    @pytest.mark.parametrize("z", [0.0, -0.5, -1.5])
    def test_ball(self, ball3, z):
        a = domain_energy_direct(ball3, z).value
        b = domain_energy_boundary(ball3, z).value
        assert complex(b) == pytest.approx(complex(a), rel=1e-9)

    def test_disk_at_zero_is_area_squared(self, disk):
        assert complex(domain_energy_direct(disk, 0.0).value).real == \
            pytest.approx(math.pi ** 2, rel=1e-12)

    def test_direct_needs_convergence(self, disk):
        with pytest.raises(ExponentNotConvergent):
            domain_energy_direct(disk, -2.5)

    def test_boundary_excludes_minus_two(self, disk, ball3):
        with pytest.raises(ExcludedExponent):
            domain_energy_boundary(disk, -2.0)
        with pytest.raises(ExcludedExponent):
            domain_energy_boundary(ball3, -3.0)
        with pytest.raises(ExcludedExponent):
            domain_energy_boundary(ball3, -2.0)


class TestFractionalPerimeter:
    def test_disk_against_volume_continuation(self, disk):
        # continuation of the volume finite part through the strip
        z = -2.5
        prof = domain_pair_profile(disk)
        ref = -complex(finite_part_cumulative(prof, z).finite_part).real
        assert fractional_perimeter(disk, z) == pytest.approx(ref, rel=1e-8)

    def test_strip_enforced(self, disk):
        with pytest.raises(ExponentOutOfRange):
            fractional_perimeter(disk, -1.5)
        with pytest.raises(ExponentOutOfRange):
            fractional_perimeter(disk, -3.5)


class TestResidues:
    def test_disk_curvature_formulas(self, disk):
        res = domain_residues(disk)
        assert res[-2] == pytest.approx(2.0 * math.pi ** 2, rel=1e-12)
        assert res[-3] == pytest.approx(-4.0 * math.pi, rel=1e-10)
        assert res[-5] == pytest.approx(math.pi / 6.0, rel=1e-10)

    def test_ball_curvature_formulas(self, ball3):
        res = domain_residues(ball3)
        assert res[-3] == pytest.approx(16.0 * math.pi ** 2 / 3.0, rel=1e-12)
        assert res[-4] == pytest.approx(-4.0 * math.pi ** 2, rel=1e-10)
        assert res[-6] == pytest.approx(math.pi ** 2 / 3.0, rel=1e-10)

    @pytest.mark.parametrize("k", [2, 3, 5])
    def test_disk_continuation_residue(self, disk, k):
        # antisymmetric difference of F around the pole isolates the residue
        F = domain_continuation(disk)
        h = 1e-4
        got = (F(-k + h) - F(-k - h)) * h / 2.0
        assert got.real == pytest.approx(domain_residues(disk)[-k], rel=1e-3)

    @pytest.mark.parametrize("k", [3, 4, 6])
    def test_ball_continuation_residue(self, ball3, k):
        F = domain_continuation(ball3)
        h = 1e-4
        got = (F(-k + h) - F(-k - h)) * h / 2.0
        assert got.real == pytest.approx(domain_residues(ball3)[-k], rel=1e-3)

    def test_volume_jet_encodes_residues(self, disk, ball3):
        # coefficient of t^k in Psi_Omega equals Res(-k)/k
        for dom in (disk, ball3):
            jet = domain_pair_profile(dom).jet
            for k, r in domain_residues(dom).items():
                assert jet.coeffs[-k] == pytest.approx(r / float(-k),
                                                       rel=1e-10)

    def test_dim4_evaluator_matches_closed_form(self, ball4):
        res = domain_residues(ball4)
        for z0, r in ball_beta_poles(4, j_max=1):
            k = int(round(-z0))
            if -k in res:
                assert res[-k] == pytest.approx(r, rel=1e-5)

    def test_residues_dim4_formulas(self):
        out = residues_dim4(1.0, 1.0, 1.0)
        assert out[-4] == pytest.approx(2.0 * math.pi ** 2)
        assert out[-5] == pytest.approx(-4.0 * math.pi / 3.0)
        assert out[-7] == pytest.approx(math.pi / 90.0)

    def test_unsupported_dimension(self):
        from rieszreg.errors import InvalidParams
        with pytest.raises(InvalidParams):
            builtin_shape("ball", {"n": 5, "r": 1.0})


class TestKernelIdentities:
    def test_log_kernel_gives_planar_residue(self, disk):
        # -int log|x-y| <n_x,n_y> over boundary pairs equals 2 pi A
        assert log_kernel_residue(disk) == pytest.approx(
            2.0 * math.pi ** 2, rel=1e-5)

    def test_power_kernel_gives_spatial_residue(self, ball3):
        assert power_kernel_residue(ball3) == pytest.approx(
            16.0 * math.pi ** 2 / 3.0, rel=1e-5)


class TestMinusTwoNEnergy:
    """Scale-invariant exponent z = -2n, cross-checked against cutoff."""

    def test_disk(self, disk):
        rep = regularized_minus2n_energy(disk)
        assert complex(rep.value).real == pytest.approx(math.pi ** 2 / 2.0,
                                                        rel=1e-6)
        assert rep.diagnostics["cross_check_diff"] < 1e-5

    def test_disk_matches_closed_form(self, disk):
        rep = regularized_minus2n_energy(disk)
        assert complex(rep.value).real == pytest.approx(
            beta_ball_closed_form(2, -4.0), rel=1e-8)

    def test_ball3(self, ball3):
        rep = regularized_minus2n_energy(ball3)
        assert rep.has_log  # -6 is a genuine pole, value is pole-removed
        assert complex(rep.value).real == pytest.approx(5.021919599, rel=1e-6)
        assert rep.diagnostics["cross_check_diff"] < 1e-5

    def test_ball4(self, ball4):
        rep = regularized_minus2n_energy(ball4)
        assert rep.method == "closed-form"
        assert complex(rep.value).real == pytest.approx(-4.058712126,
                                                        rel=1e-6)
        assert rep.diagnostics["cross_check_diff"] < 1e-5

    def test_planar_energy_of_disk(self, disk):
        assert planar_energy(disk) == pytest.approx(
            3.0 * math.pi ** 2 / 4.0, rel=1e-6)

    def test_disk_scale_invariance(self, disk):
        big = scaled_domain(disk, 3.0)
        a = complex(regularized_minus2n_energy(disk).value).real
        b = complex(regularized_minus2n_energy(big).value).real
        assert b == pytest.approx(a, rel=1e-8)

    def test_squircle_scale_invariance(self, squircle):
        a = complex(domain_energy(squircle, -4.0).value).real
        b = complex(domain_energy(scaled_domain(squircle, 2.0),
                                  -4.0).value).real
        assert b == pytest.approx(a, rel=1e-8)

    def test_generic_boundary_value(self, squircle):
        # regression for the p = 4 superellipse (no closed form exists)
        v = complex(domain_energy(squircle, -4.0).value).real
        assert v == pytest.approx(5.676138438834148, rel=1e-6)


class TestBallClosedForm:
    def test_calibration_at_zero(self):
        for n in (2, 3, 4):
            vol = math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
            assert beta_ball_closed_form(n, 0.0) == pytest.approx(vol * vol,
                                                                  rel=1e-12)

    def test_radius_scaling(self):
        z = -1.5
        assert beta_ball_closed_form(3, z, radius=2.0) == pytest.approx(
            2.0 ** (6 + z) * beta_ball_closed_form(3, z), rel=1e-13)

    @pytest.mark.parametrize("z", [-0.5, -1.0, -2.5])
    def test_matches_direct_route(self, ball3, z):
        got = complex(domain_energy_direct(ball3, z).value).real \
            if z > -3 else None
        if got is not None:
            assert got == pytest.approx(beta_ball_closed_form(3, z),
                                        rel=1e-9)

    def test_odd_dimension_pole_count(self):
        # odd n: the Beta factor is rational and the list closes at -2n
        for n in (3, 5):
            poles = ball_beta_poles(n)
            assert len(poles) == (n + 3) // 2
            assert poles[-1][0] == float(-2 * n)
        with pytest.raises(PoleAt):
            beta_ball_closed_form(3, -4.0)
        # beyond the last pole the odd-dimensional form is finite
        assert np.isfinite(beta_ball_closed_form(3, -7.0))
        assert np.isfinite(beta_ball_closed_form(3, -8.0))

    def test_even_dimension_poles_persist(self):
        poles = ball_beta_poles(2, j_max=4)
        assert len(poles) == 6
        with pytest.raises(PoleAt):
            beta_ball_closed_form(2, -9.0)

    def test_ball3_residues_from_closed_form(self, ball3):
        res = domain_residues(ball3)
        for z0, r in ball_beta_poles(3):
            assert r == pytest.approx(res[int(round(z0))], rel=1e-5)


class TestExcludedButAnalytic:
    def test_ball_at_minus_two(self, ball3):
        # z = -2 is excluded only by the prefactor; the filled value is
        # continuous with the neighbourhood
        rep = domain_energy(ball3, -2.0)
        near = 0.5 * (complex(domain_energy(ball3, -2.0 + 1e-3).value)
                      + complex(domain_energy(ball3, -2.0 - 1e-3).value))
        assert complex(rep.value).real == pytest.approx(near.real, rel=1e-5)

    def test_disk_minus_two_is_the_area_pole(self, disk):
        rep = domain_energy(disk, -2.0)
        assert rep.has_log
        assert rep.residue == pytest.approx(2.0 * math.pi ** 2, rel=1e-10)
        assert complex(rep.value).real == pytest.approx(-math.pi ** 2,
                                                        rel=1e-6)
