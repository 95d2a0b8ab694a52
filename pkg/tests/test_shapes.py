"""Shape catalog tests against classical closed forms.

Length, area, curvature, and curvature-integral values are checked
against independent analytic expressions (elliptic integrals, gamma
functions, Gauss-Bonnet) rather than against the implementation's own
quadratures.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from rieszreg.errors import InvalidParams, UnknownShape
from rieszreg.shapes import (Curve, CurvatureIntegrals, builtin_shape,
                             curvature_integrals, make_ellipsoid, make_sphere,
                             make_torus, parse_shape_spec)

TWO_PI = 2.0 * math.pi


class TestCurveBasics:
    def test_circle_is_bandlimited(self):
        c = builtin_shape("circle", {"r": 1.5})
        # cos/sin only: a single positive Fourier mode per coordinate
        assert c._c.shape[1] <= 2

    def test_circle_points_and_speed(self):
        r = 1.7
        c = builtin_shape("circle", {"r": r})
        th = np.linspace(0.0, TWO_PI, 37)
        p = c.point(th)
        assert np.allclose(np.linalg.norm(p, axis=1), r, atol=1e-12)
        assert np.allclose(c.speed(th), r, atol=1e-12)

    def test_circle_curvature(self):
        r = 0.8
        c = builtin_shape("circle", {"r": r})
        th = c.grid(16)
        assert np.allclose(c.curvature(th), 1.0 / r, atol=1e-12)
        assert np.allclose(c.signed_curvature(th), 1.0 / r, atol=1e-12)

    def test_circle_outward_normal(self):
        c = builtin_shape("circle", {"r": 2.0})
        th = c.grid(16)
        n = c.normal2d(th)
        assert np.allclose(n, c.point(th) / 2.0, atol=1e-12)

    def test_ellipse_curvature_closed_form(self):
        a, b = 2.0, 1.0
        c = builtin_shape("ellipse", {"a": a, "b": b})
        th = np.array([0.0, 0.4, math.pi / 2, 2.2])
        expected = a * b / (a ** 2 * np.sin(th) ** 2
                            + b ** 2 * np.cos(th) ** 2) ** 1.5
        assert np.allclose(c.curvature(th), expected, rtol=1e-12)

    def test_ellipse_perimeter_elliptic_integral(self):
        a, b = 2.0, 1.0
        c = builtin_shape("ellipse", {"a": a, "b": b})
        exact = 4.0 * a * special.ellipe(1.0 - b ** 2 / a ** 2)
        assert c.length == pytest.approx(exact, rel=1e-10)

    def test_trefoil_regular_and_3d(self):
        c = builtin_shape("trefoil")
        th = c.grid(128)
        assert c.point(th).shape == (128, 3)
        assert np.all(c.speed(th) > 0.5)
        assert np.all(c.curvature(th) > 0.0)

    def test_deriv_matches_finite_difference(self):
        c = builtin_shape("trefoil")
        th = np.array([0.3, 1.1, 4.0])
        h = 1e-5
        fd = (c.point(th + h) - c.point(th - h)) / (2 * h)
        assert np.allclose(c.deriv(th, 1), fd, atol=1e-8)

    @given(st.floats(min_value=0.5, max_value=3.0))
    @settings(max_examples=20, deadline=None)
    def test_circle_length_scales(self, r):
        c = builtin_shape("circle", {"r": r})
        assert c.length == pytest.approx(TWO_PI * r, rel=1e-10)

    def test_transformed_rotation_preserves_curvature(self):
        c = builtin_shape("ellipse", {"a": 2.0, "b": 1.0})
        ang = 0.7
        R = np.array([[math.cos(ang), -math.sin(ang)],
                      [math.sin(ang), math.cos(ang)]])
        c2 = c.transformed(lambda p: p @ R.T)
        th = np.array([0.0, 1.0, 2.5])
        assert np.allclose(c2.curvature(th), c.curvature(th), rtol=1e-9)


class TestCurveIntegrals:
    def test_circle_kappa_sq(self):
        r = 1.3
        ci = curvature_integrals(builtin_shape("circle", {"r": r}))
        assert ci.total_measure == pytest.approx(TWO_PI * r, rel=1e-10)
        assert ci.integral_kappa_sq == pytest.approx(TWO_PI / r, rel=1e-10)

    def test_ellipse_kappa_sq_against_quad(self):
        a, b = 2.0, 1.0
        ci = curvature_integrals(builtin_shape("ellipse", {"a": a, "b": b}))

        def integrand(t):
            # kappa^2 ds in the angle parameter
            s = math.hypot(a * math.sin(t), b * math.cos(t))
            kappa = a * b / s ** 3
            return kappa ** 2 * s

        oracle, err = integrate.quad(integrand, 0.0, TWO_PI, limit=200)
        assert ci.integral_kappa_sq == pytest.approx(oracle, rel=1e-9)

    def test_total_turning_ellipse(self):
        # planar Gauss-Bonnet: signed curvature integrates to 2 pi
        c = builtin_shape("ellipse", {"a": 2.0, "b": 1.0})
        th = c.grid(2048)
        total = np.sum(c.signed_curvature(th) * c.speed(th)) * TWO_PI / 2048
        assert total == pytest.approx(TWO_PI, rel=1e-10)


class TestSurfaces:
    def test_sphere_area_and_umbilic(self):
        r = 1.4
        s = make_sphere(r)
        assert s.area == pytest.approx(4.0 * math.pi * r * r, rel=1e-10)
        k1, k2 = s.principal_curvatures(np.array([0.3]), np.array([1.0]))
        # at an umbilic the sqrt in k = H +/- sqrt(H^2 - K) amplifies
        # rounding to ~sqrt(eps), so only 1e-7 accuracy is meaningful
        assert k1[0] == pytest.approx(1.0 / r, rel=1e-7)
        assert k2[0] == pytest.approx(1.0 / r, rel=1e-7)

    def test_sphere_outward_normal(self):
        s = make_sphere(2.0)
        u = np.array([0.5, 1.0])
        v = np.array([0.7, 2.0])
        n = s.normal(u, v)
        assert np.allclose(n, s.point(u, v) / 2.0, atol=1e-12)

    def test_torus_area(self):
        R, r = 2.0, 1.0
        s = make_torus(R, r)
        assert s.area == pytest.approx(4.0 * math.pi ** 2 * R * r, rel=1e-10)

    def test_torus_principal_curvatures_outer_equator(self):
        R, r = 2.0, 1.0
        s = make_torus(R, r)
        k1, k2 = s.principal_curvatures(np.array([0.7]), np.array([0.0]))
        assert sorted([k1[0], k2[0]], reverse=True) == \
            pytest.approx([1.0 / r, 1.0 / (R + r)], rel=1e-9)

    def test_torus_principal_curvatures_inner_equator(self):
        R, r = 2.0, 0.5
        s = make_torus(R, r)
        k1, k2 = s.principal_curvatures(np.array([0.0]), np.array([math.pi]))
        assert sorted([k1[0], k2[0]], reverse=True) == \
            pytest.approx([1.0 / r, -1.0 / (R - r)], rel=1e-9)

    def test_prolate_spheroid_area(self):
        a, b = 2.0, 1.0
        s = make_ellipsoid(a, b, b)
        e = math.sqrt(1.0 - b * b / (a * a))
        exact = 2.0 * math.pi * b * b * (1.0 + a / (b * e) * math.asin(e))
        assert s.area == pytest.approx(exact, rel=1e-9)

    def test_gauss_bonnet(self):
        for s, chi in [(make_sphere(1.0), 2), (make_torus(2.0, 1.0), 0),
                       (make_ellipsoid(2.0, 1.0, 1.0), 2)]:
            ci = curvature_integrals(s)
            assert ci.integral_gauss == pytest.approx(
                TWO_PI * chi, abs=1e-6), s.meta

    def test_sphere_3h2_minus_k(self):
        # on a unit sphere 3H^2 - K = 2, times area 4 pi
        ci = curvature_integrals(make_sphere(1.0))
        assert ci.integral_3H2_minus_K == pytest.approx(8.0 * math.pi,
                                                        rel=1e-9)
        assert ci.integral_umbilic_defect == pytest.approx(0.0, abs=1e-9)

    def test_torus_umbilic_defect_against_quad(self):
        R, r = 2.0, 1.0
        s = make_torus(R, r)

        def integrand(v):
            k1 = 1.0 / r
            k2 = math.cos(v) / (R + r * math.cos(v))
            return (k1 - k2) ** 2 * r * (R + r * math.cos(v))

        oracle, _ = integrate.quad(integrand, 0.0, TWO_PI, limit=200)
        oracle *= TWO_PI  # trivial u integral
        ci = curvature_integrals(s)
        assert ci.integral_umbilic_defect == pytest.approx(oracle, rel=1e-9)


class TestDomains:
    def test_disk(self):
        d = builtin_shape("disk", {"r": 1.5})
        assert d.volume == pytest.approx(math.pi * 1.5 ** 2, rel=1e-12)
        assert d.contains(np.array([[0.3, 0.2], [2.0, 0.0]])).tolist() == \
            [True, False]
        assert d.check_outward()

    def test_ball3(self):
        d = builtin_shape("ball", {"n": 3, "r": 2.0})
        assert d.volume == pytest.approx(4.0 * math.pi * 8.0 / 3.0, rel=1e-12)
        assert d.check_outward()

    def test_ball4_closed_form_record(self):
        d = builtin_shape("ball", {"n": 4})
        assert d.dim == 4
        assert d.boundary is None
        assert d.volume == pytest.approx(math.pi ** 2 / 2.0, rel=1e-12)
        assert d.meta["boundary_volume"] == pytest.approx(
            2.0 * math.pi ** 2, rel=1e-12)

    def test_ball_rejects_bad_dim(self):
        with pytest.raises(InvalidParams):
            builtin_shape("ball", {"n": 5})

    def test_superellipse_area_gamma(self):
        p = 4.0
        d = builtin_shape("superellipse-domain", {"p": p})
        exact = 4.0 * special.gamma(1.0 + 1.0 / p) ** 2 \
            / special.gamma(1.0 + 2.0 / p)
        assert d.volume == pytest.approx(exact, rel=1e-10)

    def test_superellipse_contains_and_orientation(self):
        d = builtin_shape("superellipse-domain", {"p": 4})
        pts = np.array([[0.9, 0.0], [0.8, 0.8], [1.05, 0.0]])
        assert d.contains(pts).tolist() == [True, True, False]
        assert d.check_outward()

    def test_superellipse_rejects_odd_exponent(self):
        with pytest.raises(InvalidParams):
            builtin_shape("superellipse-domain", {"p": 3})

    def test_domain_curvature_integrals_delegate(self):
        ci = curvature_integrals(builtin_shape("disk", {"r": 2.0}))
        assert isinstance(ci, CurvatureIntegrals)
        assert ci.total_measure == pytest.approx(4.0 * math.pi, rel=1e-10)


class TestCatalogAndParser:
    def test_unknown_shape(self):
        with pytest.raises(UnknownShape):
            builtin_shape("klein-bottle")

    def test_bad_param_name(self):
        with pytest.raises(InvalidParams):
            builtin_shape("circle", {"radius": 1.0})

    def test_invalid_value(self):
        with pytest.raises(InvalidParams):
            builtin_shape("torus", {"R": 1.0, "r": 2.0})

    def test_parse_plain_name(self):
        c = parse_shape_spec("circle")
        assert isinstance(c, Curve)
        assert c.meta["r"] == 1.0

    def test_parse_with_params(self):
        s = parse_shape_spec("torus(R=2, r=0.5)")
        assert s.meta == {"name": "torus", "R": 2, "r": 0.5}

    def test_parse_hyphenated_name(self):
        d = parse_shape_spec("superellipse-domain(p=4)")
        assert d.meta["name"] == "superellipse-domain"

    def test_parse_errors(self):
        for bad in ["", "circle(r=abc)", "circle(r=1", "circle(r=1)x",
                    "circle(=1)", "circle(r 1)"]:
            with pytest.raises(InvalidParams):
                parse_shape_spec(bad)

    def test_parse_unknown_name(self):
        with pytest.raises(UnknownShape):
            parse_shape_spec("dodecahedron(r=1)")

    def test_diameter_estimates(self):
        assert builtin_shape("circle", {"r": 1.0}).diameter() == \
            pytest.approx(2.0, rel=1e-3)
        assert make_sphere(1.0).diameter(48) == pytest.approx(2.0, rel=1e-3)
