"""Moebius transport and invariance tests.

Oracles: the exact conformal identity of sphere inversion, classical
inversive geometry of circles, finite-difference checks of the
derivative transport, and the homothety scaling law with its exact
log-residue defect.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rieszreg.closed_energy import energy
from rieszreg.errors import CenterTooClose, InvalidParams
from rieszreg.moebius import (compose, homothety, invariance_check,
                              inversion, transform_shape, translation)
from rieszreg.shapes import (builtin_shape, curvature_integrals,
                             make_ellipsoid)

TWO_PI = 2.0 * math.pi

coord = st.floats(min_value=-3.0, max_value=3.0,
                  allow_nan=False, allow_infinity=False)


@pytest.fixture(scope="module")
def ellipse():
    return builtin_shape("ellipse", {"a": 2.0, "b": 1.0})


class TestMapAlgebra:
    @given(st.tuples(coord, coord, coord), st.tuples(coord, coord, coord))
    @settings(max_examples=50, deadline=None)
    def test_conformal_identity(self, p, q):
        # |I(x) - I(y)| |x| |y| = |x - y| for the unit-sphere inversion
        x = np.asarray(p)
        y = np.asarray(q)
        if min(np.linalg.norm(x), np.linalg.norm(y)) < 1e-2 or \
                np.linalg.norm(x - y) < 1e-6:
            return
        inv = inversion([0.0, 0.0, 0.0], 1.0)
        lhs = np.linalg.norm(inv.apply(x) - inv.apply(y)) * \
            np.linalg.norm(x) * np.linalg.norm(y)
        assert lhs == pytest.approx(np.linalg.norm(x - y), rel=1e-12)

    def test_inversion_is_involution(self):
        inv = inversion([1.0, -2.0, 0.5], 1.4)
        x = np.random.default_rng(3).normal(size=(20, 3)) + \
            np.array([4.0, 0.0, 0.0])
        assert np.allclose(inv.apply(inv.apply(x)), x, atol=1e-12)

    def test_composition_inverse(self):
        T = compose(translation([0.3, -0.2]), homothety(1.7),
                    inversion([5.0, 1.0], 1.2))
        x = np.random.default_rng(5).normal(size=(20, 2))
        assert np.allclose(T.inverse().apply(T.apply(x)), x, atol=1e-10)

    def test_invalid_parameters(self):
        with pytest.raises(InvalidParams):
            homothety(-2.0)
        with pytest.raises(InvalidParams):
            inversion([0.0, 0.0], 0.0)

    def test_derivative_transport_matches_finite_differences(self):
        T = compose(translation([0.3, -0.2, 0.1]),
                    inversion([2.0, 0.5, -1.0], 1.3), homothety(1.7))
        x0 = np.array([[0.4, 0.1, -0.3]])
        dx = np.array([[0.2, -0.5, 0.7]])
        ddx = np.array([[0.1, 0.3, -0.2]])
        h = 1e-5
        fd = (T.apply(x0 + h * dx) - T.apply(x0 - h * dx)) / (2 * h)
        assert np.abs(T.d(x0, dx) - fd).max() < 1e-8

        def g(t):
            return T.apply(x0 + t * dx + 0.5 * t * t * ddx)
        fd2 = (g(h) - 2 * g(0.0) + g(-h)) / h ** 2
        assert np.abs(T.d2(x0, dx, dx, ddx) - fd2).max() < 1e-4


class TestCurveTransport:
    def test_double_inversion_restores(self, ellipse):
        inv = inversion([4.0, 1.0], 1.0)
        th = ellipse.grid(64)
        # the composed map is the identity: one resample, exact transport
        back = transform_shape(compose(inv, inv), ellipse)
        assert np.abs(back.point(th) - ellipse.point(th)).max() < 1e-12
        # transforming twice adds one more Fourier round trip
        again = transform_shape(inv, transform_shape(inv, ellipse))
        assert np.abs(again.point(th) - ellipse.point(th)).max() < 1e-10

    def test_circle_maps_to_circle(self):
        # classical image radius R^2 r / |d^2 - r^2|
        circle = builtin_shape("circle", {"r": 1.0})
        c = np.array([3.0, 0.5])
        R = 1.5
        img = transform_shape(inversion(c, R), circle)
        kappa = img.curvature(img.grid(64))
        assert kappa.max() - kappa.min() < 1e-8
        pred = R * R / abs((c * c).sum() - 1.0)
        assert 1.0 / kappa.mean() == pytest.approx(pred, rel=1e-10)

    def test_homothety_scales_curvature_integrals(self, ellipse):
        c = 2.5
        img = transform_shape(homothety(c), ellipse)
        ci0 = curvature_integrals(ellipse)
        ci1 = curvature_integrals(img)
        assert ci1.total_measure == pytest.approx(c * ci0.total_measure,
                                                  rel=1e-10)
        assert ci1.integral_kappa_sq == pytest.approx(
            ci0.integral_kappa_sq / c, rel=1e-10)

    def test_speed_transforms_by_conformal_factor(self, ellipse):
        center = np.array([4.0, 0.0])
        img = transform_shape(inversion(center, 1.0), ellipse)
        th = ellipse.grid(97)[1:]
        ratio = img.speed(th) / ellipse.speed(th)
        pred = 1.0 / ((ellipse.point(th) - center) ** 2).sum(-1)
        assert np.abs(ratio - pred).max() < 1e-8


class TestSurfaceTransport:
    def test_area_element_conformal_factor(self):
        s = make_ellipsoid(2.0, 1.0, 1.0)
        center = np.array([6.0, 0.0, 0.0])
        img = transform_shape(inversion(center, 1.0), s)
        u = np.asarray([0.4, 1.1, 2.0])
        v = np.asarray([0.7, 1.3, 2.5])
        ratio = img.area_element(u, v) / s.area_element(u, v)
        pred = 1.0 / ((s.point(u, v) - center) ** 2).sum(-1) ** 2
        assert np.abs(ratio / pred - 1.0).max() < 1e-8

    def test_revolution_symmetry_detection(self):
        s = make_ellipsoid(2.0, 1.0, 1.0)
        on_axis = transform_shape(inversion([6.0, 0.0, 0.0], 1.0), s)
        assert on_axis.revolution
        off_axis = transform_shape(inversion([6.0, 3.0, 0.0], 1.0), s)
        assert not off_axis.revolution


class TestMargins:
    def test_center_too_close(self, ellipse):
        with pytest.raises(CenterTooClose):
            transform_shape(inversion([2.1, 0.0], 1.0), ellipse)

    def test_center_inside_domain(self):
        disk = builtin_shape("disk", {"r": 1.0})
        with pytest.raises(CenterTooClose):
            transform_shape(inversion([0.0, 0.0], 1.0), disk)

    def test_far_center_allowed(self, ellipse):
        img = transform_shape(inversion([5.0, 0.0], 1.0), ellipse)
        assert img.point([0.0]).shape == (1, 2)


class TestInvariance:
    def test_translation_leaves_energy(self, ellipse):
        img = transform_shape(translation([10.0, -3.0]), ellipse)
        a = energy(ellipse, -0.5).value
        b = energy(img, -0.5).value
        assert complex(b) == pytest.approx(complex(a), rel=1e-9)

    @pytest.mark.parametrize("center", [(4.0, 1.0), (-1.0, 3.5)])
    def test_curve_inversion_at_minus_two(self, ellipse, center):
        out = invariance_check(ellipse, -2.0, inversion(center, 1.0))
        assert out["passed"]
        assert out["defect"] < out["bound"]

    def test_domain_inversion_at_minus_four(self):
        sup = builtin_shape("superellipse-domain", {"p": 4.0})
        out = invariance_check(sup, -4.0, inversion([3.0, 0.5], 1.0))
        assert out["passed"]

    def test_surface_homothety_defect(self):
        s = make_ellipsoid(2.0, 1.0, 1.0)
        out = invariance_check(s, -4.0, homothety(2.0))
        ci = curvature_integrals(s)
        pred = math.pi * math.log(2.0) / 8.0 * ci.integral_umbilic_defect
        assert out["defect"] == pytest.approx(pred, rel=1e-3)
        assert out["prediction_error"] < 1e-6 * abs(out["value_original"])
        # scale non-invariance at -4 is genuine: the defect is far
        # above the numerical error budget
        assert out["defect"] > 100.0 * out["bound"]

    def test_homothety_prediction_off_pole(self, ellipse):
        c = 2.0
        out = invariance_check(ellipse, -1.5, homothety(c))
        pred = c ** (2 * 1 - 1.5) * out["value_original"]
        assert out["value_image"] == pytest.approx(pred, rel=1e-8)
