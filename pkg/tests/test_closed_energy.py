"""Energy-level tests: closed forms, residues, scaling, cross-checks.

Oracles: the Beta-function closed form for round spheres (calibrated
only by the elementary z = 0 value), curvature-integral residue tables,
and an independent direct double-quadrature cutoff route for curves.
"""

import math

import numpy as np
import pytest

from rieszreg.errors import ExponentNotConvergent, MethodsDisagree, PoleAt
from rieszreg.closed_energy import (beta_sphere_closed_form, continuation,
                                    cutoff_integral,
                                    cutoff_integral_direct_curve, energy,
                                    energy_at_pole, get_profile,
                                    residue_table, scaling_check,
                                    sphere_beta_poles)
from rieszreg.regularize import finite_part_cumulative
from rieszreg.shapes import builtin_shape, curvature_integrals, make_sphere, \
    make_torus

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def circle():
    return builtin_shape("circle", {"r": 1.0})


@pytest.fixture(scope="module")
def ellipse():
    return builtin_shape("ellipse", {"a": 2.0, "b": 1.0})


@pytest.fixture(scope="module")
def torus():
    return make_torus(2.0, 1.0)


class TestCircleClosedForm:
    """The unit circle is the 1-sphere; compare to the Beta form."""

    @pytest.mark.parametrize("z", [-0.5, -1.5, -2.5, 0.7])
    def test_regular_points(self, circle, z):
        ref = beta_sphere_closed_form(1, z)
        got = energy(circle, z).value
        assert got == pytest.approx(ref, rel=1e-8, abs=1e-8)

    def test_at_minus_two(self, circle):
        # between the poles -1 and -3 the continuation vanishes exactly
        assert beta_sphere_closed_form(1, -2.0) == pytest.approx(0.0,
                                                                 abs=1e-13)
        assert abs(energy(circle, -2.0).value) < 1e-9

    def test_complex_exponent(self, circle):
        z = -1.5 + 0.75j
        got = energy(circle, z).value
        # closed form extends to complex z through the same Beta function
        from scipy import special
        calib = 0.5  # fixed by area^2 at z = 0
        ref = calib * 2.0 ** (z + 1) * 2.0 * TWO_PI * \
            special.gamma((z + 1) / 2.0) * special.gamma(0.5) / \
            special.gamma((z + 2) / 2.0)
        assert abs(got - ref) < 1e-8 * abs(ref)

    def test_radius_scaling_of_closed_form(self):
        z = -0.5
        assert beta_sphere_closed_form(1, z, radius=2.0) == pytest.approx(
            2.0 ** (2 + z) * beta_sphere_closed_form(1, z), rel=1e-13)

    def test_pole_raises(self):
        with pytest.raises(PoleAt):
            beta_sphere_closed_form(1, -3.0)
        with pytest.raises(PoleAt):
            beta_sphere_closed_form(2, -2.0)

    def test_even_sphere_has_no_deep_poles(self):
        # Beta(x, 1) = 1/x is rational: only the z = -2 pole survives
        val = beta_sphere_closed_form(2, -4.0)
        assert np.isfinite(val)


class TestMethods:
    def test_direct_requires_convergence(self, circle):
        with pytest.raises(ExponentNotConvergent):
            energy(circle, -1.5, method="direct")

    def test_direct_matches_hadamard(self, circle):
        a = energy(circle, -0.5, method="direct").value
        b = energy(circle, -0.5, method="hadamard").value
        assert a == pytest.approx(b, rel=1e-12)

    def test_cutoff_route_agrees(self, circle):
        rep = energy(circle, -1.5, cross_check=True)
        assert rep.diagnostics["cross_check_diff"] < 1e-8
        assert rep.diagnostics["cutoff_value"] == pytest.approx(
            rep.value, rel=1e-7)

    def test_cross_check_can_fail(self, circle):
        with pytest.raises(MethodsDisagree):
            energy(circle, -1.5, cross_check=True, check_tol=0.0)

    def test_cutoff_direct_curve_oracle(self, ellipse):
        # profile-based cutoff integral vs an independent double quad
        eps = 0.35
        z = -1.5
        a = cutoff_integral(ellipse, z, eps)
        b = cutoff_integral_direct_curve(ellipse, z, eps)
        assert a == pytest.approx(b, rel=1e-10)


class TestResidues:
    def test_circle_residue_table(self, circle):
        tab = residue_table(circle)
        assert tab[-1] == pytest.approx(2.0 * TWO_PI, rel=1e-12)
        assert tab[-3] == pytest.approx(0.25 * TWO_PI, rel=1e-12)

    def test_ellipse_residues_from_continuation(self, ellipse):
        tab = residue_table(ellipse)
        prof = get_profile(ellipse)
        for k in (1, 3):
            rv = finite_part_cumulative(prof, complex(-k))
            assert rv.has_log
            assert rv.residue == pytest.approx(tab[-k], rel=1e-7)

    def test_torus_residues_from_continuation(self, torus):
        tab = residue_table(torus)
        A = 4.0 * math.pi ** 2 * 2.0
        assert tab[-2] == pytest.approx(TWO_PI * A, rel=1e-10)
        ci = curvature_integrals(torus)
        assert tab[-4] == pytest.approx(math.pi / 8.0 *
                                        ci.integral_umbilic_defect, rel=1e-12)
        prof = get_profile(torus)
        rv = finite_part_cumulative(prof, complex(-2))
        assert rv.residue == pytest.approx(tab[-2], rel=1e-7)

    def test_sphere_pole_list(self):
        poles1 = sphere_beta_poles(1, j_max=1)
        assert poles1[0][0] == -1.0
        assert poles1[0][1] == pytest.approx(2.0 * TWO_PI, rel=1e-7)
        assert poles1[1][1] == pytest.approx(0.25 * TWO_PI, rel=1e-6)
        poles2 = sphere_beta_poles(2)
        assert len(poles2) == 1  # even sphere: Beta rational after -2
        assert poles2[0][0] == -2.0
        assert poles2[0][1] == pytest.approx(TWO_PI * 4.0 * math.pi,
                                             rel=1e-7)


class TestPoleRemoved:
    def test_circle_minus_one(self, circle):
        rep = energy_at_pole(circle, 1)
        assert rep.residue == pytest.approx(4.0 * math.pi, rel=1e-12)
        assert rep.has_log
        # symmetric average of the closed form around the pole
        h = 1e-4
        ref = 0.5 * (beta_sphere_closed_form(1, -1.0 + h)
                     + beta_sphere_closed_form(1, -1.0 - h))
        assert rep.value == pytest.approx(ref, abs=1e-5)
        assert rep.value == pytest.approx(17.4206887224, abs=1e-6)

    def test_nonpole_falls_back(self, circle):
        rep = energy_at_pole(circle, 2)
        assert rep.method == "hadamard"
        assert abs(rep.value) < 1e-9

    def test_torus_minus_two(self, torus):
        rep = energy_at_pole(torus, 2)
        A = 4.0 * math.pi ** 2 * 2.0
        assert rep.residue == pytest.approx(TWO_PI * A, rel=1e-10)
        assert np.isfinite(rep.value)


class TestSphereNumeric:
    def test_numeric_profile_matches_closed_form(self):
        s = make_sphere(1.0)
        prof = get_profile(s, exact=False)
        for z in (-1.0, -3.0):
            got = energy(s, z, profile=prof).value
            assert got == pytest.approx(beta_sphere_closed_form(2, z),
                                        rel=1e-10)


class TestScaling:
    def test_curve_regular(self, ellipse):
        out = scaling_check(ellipse, -0.5, 1.7)
        assert out["exponent"] == pytest.approx(1.5)
        assert out["defect"] < 1e-8 * abs(out["predicted"])

    def test_curve_log_anomaly(self, circle):
        out = scaling_check(circle, -1.0, 2.0)
        assert out["anomaly"] == pytest.approx(4.0 * math.pi * math.log(2.0),
                                               rel=1e-10)
        assert out["defect"] < 1e-6 * abs(out["predicted"])

    def test_surface_regular(self, torus):
        out = scaling_check(torus, -0.5, 1.3)
        assert out["exponent"] == pytest.approx(3.5)
        assert out["defect"] < 1e-8 * abs(out["predicted"])
