"""Parametric closed curves, closed surfaces, and compact domains.

Curves are backed by truncated Fourier series, so derivatives of any
order are spectrally accurate; surfaces carry analytic first and second
fundamental forms.  All shapes are immutable after construction and
expose curvature and measure accessors used by the energy modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (DegenerateParameterization, InvalidParams,
                     QuadratureNotConverged, UnknownShape)

TWO_PI = 2.0 * math.pi

__all__ = [
    "Curve", "Surface", "Domain", "CurvatureIntegrals",
    "curvature_curve", "principal_curvatures", "curvature_integrals",
    "builtin_shape", "parse_shape_spec",
]


class Curve:
    """Closed curve theta in [0, 2pi) -> R^2 or R^3, Fourier-backed."""

    def __init__(self, coeffs: np.ndarray, dim_ambient: int,
                 meta: dict | None = None):
        # coeffs: complex array (dim, n_modes) of rfft-style coefficients
        # already normalized so that x_d(theta) = Re sum_k c[d,k] e^{ik theta}
        # with c[d,0] real and k = 0..n_modes-1 counting doubled positive modes.
        self._c = np.asarray(coeffs, dtype=complex)
        self.dim_ambient = int(dim_ambient)
        self.meta = dict(meta or {})
        self._k = np.arange(self._c.shape[1])

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], dim: int,
                      n: int = 512, tol: float = 1e-13,
                      meta: dict | None = None) -> "Curve":
        """Build from a smooth closed map theta -> point by FFT sampling."""
        theta = TWO_PI * np.arange(n) / n
        pts = np.asarray(fn(theta), dtype=float)
        if pts.shape != (n, dim):
            pts = pts.reshape(n, dim)
        c = np.fft.rfft(pts, axis=0) / n  # shape (n//2 + 1, dim)
        c[1:, :] *= 2.0  # fold negative modes into doubled positive ones
        mags = np.abs(c).max(axis=1)
        keep = mags > tol * max(mags.max(), 1e-300)
        last = int(np.nonzero(keep)[0].max()) + 1 if keep.any() else 1
        return cls(c[:last, :].T.copy(), dim, meta=meta)

    def _phase(self, theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return np.exp(1j * np.outer(theta, self._k))

    def point(self, theta) -> np.ndarray:
        """Points of shape (N, dim)."""
        return np.real(self._phase(theta) @ self._c.T)

    def deriv(self, theta, order: int = 1) -> np.ndarray:
        fac = (1j * self._k) ** order
        return np.real(self._phase(theta) @ (self._c * fac).T)

    def speed(self, theta) -> np.ndarray:
        return np.linalg.norm(self.deriv(theta, 1), axis=-1)

    def tangent(self, theta) -> np.ndarray:
        d = self.deriv(theta, 1)
        s = np.linalg.norm(d, axis=-1, keepdims=True)
        self._check_regular(s[..., 0])
        return d / s

    def normal2d(self, theta) -> np.ndarray:
        """Outward unit normal, assuming counterclockwise orientation."""
        if self.dim_ambient != 2:
            raise DegenerateParameterization("normal2d needs a planar curve")
        t = self.tangent(theta)
        return np.stack([t[:, 1], -t[:, 0]], axis=-1)

    def signed_curvature(self, theta) -> np.ndarray:
        """Planar signed curvature, positive where a ccw curve is convex."""
        if self.dim_ambient != 2:
            raise DegenerateParameterization(
                "signed curvature needs a planar curve")
        d1 = self.deriv(theta, 1)
        d2 = self.deriv(theta, 2)
        s = np.linalg.norm(d1, axis=-1)
        self._check_regular(s)
        return (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / s ** 3

    def curvature(self, theta) -> np.ndarray:
        d1 = self.deriv(theta, 1)
        d2 = self.deriv(theta, 2)
        s = np.linalg.norm(d1, axis=-1)
        self._check_regular(s)
        if self.dim_ambient == 2:
            cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
            return np.abs(cross) / s ** 3
        cross = np.cross(d1, d2)
        return np.linalg.norm(cross, axis=-1) / s ** 3

    def _check_regular(self, speed):
        scale = float(np.abs(self._c).sum()) + 1e-300
        if np.any(speed < 1e-12 * scale):
            raise DegenerateParameterization("curve speed vanished")

    def grid(self, n: int) -> np.ndarray:
        return TWO_PI * np.arange(n) / n

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray],
                  n: int = 512) -> float:
        """Periodic-trapezoid line integral of fn(theta) against arclength."""
        th = self.grid(n)
        return float(np.sum(fn(th) * self.speed(th)) * TWO_PI / n)

    @property
    def length(self) -> float:
        if not hasattr(self, "_length"):
            self._length = self.integrate(lambda th: np.ones_like(th), n=1024)
        return self._length

    def diameter(self, n: int = 512) -> float:
        p = self.point(self.grid(n))
        # grid-based estimate, adequate for quadrature sizing
        d2 = ((p[:, None, :] - p[None, :, :]) ** 2).sum(-1)
        return float(np.sqrt(d2.max()))

    def transformed(self, fn: Callable[[np.ndarray], np.ndarray],
                    n: int = 1024, meta: dict | None = None) -> "Curve":
        """Image curve under a smooth map of ambient space (re-Fourierized)."""
        return Curve.from_function(lambda th: fn(self.point(th)),
                                   self.dim_ambient, n=n, meta=meta)


class Surface:
    """Closed surface in R^3 with analytic fundamental forms.

    ``v_polar`` marks sphere-like charts where v in [0, pi] with polar
    points at the ends; otherwise v is 2pi-periodic (torus-like).
    Subclasses/instances supply ``_eval``, ``_d1``, ``_d2``.
    """

    def __init__(self, eval_fn, d1_fn, d2_fn, v_polar: bool,
                 orientation_sign: float = 1.0, meta: dict | None = None,
                 revolution: bool = False):
        self._eval = eval_fn
        self._d1 = d1_fn
        self._d2 = d2_fn
        self.v_polar = bool(v_polar)
        self.orientation_sign = float(orientation_sign)
        self.meta = dict(meta or {})
        self.revolution = bool(revolution)

    def point(self, u, v) -> np.ndarray:
        return self._eval(np.asarray(u, float), np.asarray(v, float))

    def first_forms(self, u, v):
        su, sv = self._d1(np.asarray(u, float), np.asarray(v, float))
        E = (su * su).sum(-1)
        F = (su * sv).sum(-1)
        G = (sv * sv).sum(-1)
        return su, sv, E, F, G

    def normal(self, u, v) -> np.ndarray:
        su, sv, E, F, G = self.first_forms(u, v)
        n = np.cross(su, sv)
        norm = np.linalg.norm(n, axis=-1, keepdims=True)
        if np.any(norm < 1e-14):
            raise DegenerateParameterization("metric degenerate at point")
        return self.orientation_sign * n / norm

    def area_element(self, u, v) -> np.ndarray:
        _, _, E, F, G = self.first_forms(u, v)
        return np.sqrt(np.maximum(E * G - F * F, 0.0))

    def shape_operator_invariants(self, u, v):
        """Mean curvature H = (k1+k2)/2 and Gauss curvature K = k1 k2."""
        u = np.asarray(u, float)
        v = np.asarray(v, float)
        su, sv = self._d1(u, v)
        suu, suv, svv = self._d2(u, v)
        E = (su * su).sum(-1)
        F = (su * sv).sum(-1)
        G = (sv * sv).sum(-1)
        n = np.cross(su, sv)
        norm = np.linalg.norm(n, axis=-1)
        if np.any(norm < 1e-14):
            raise DegenerateParameterization("metric degenerate at point")
        # curvature sign convention: inward normal, so convex bodies have
        # positive principal curvatures (sphere of radius r -> 1/r)
        nn = -self.orientation_sign * n / norm[..., None]
        L = (suu * nn).sum(-1)
        M = (suv * nn).sum(-1)
        N = (svv * nn).sum(-1)
        den = E * G - F * F
        H = (E * N - 2 * F * M + G * L) / (2 * den)
        K = (L * N - M * M) / den
        return H, K

    def principal_curvatures(self, u, v):
        """(k1, k2) sorted descending, sign convention from the normal."""
        H, K = self.shape_operator_invariants(u, v)
        disc = np.sqrt(np.maximum(H * H - K, 0.0))
        return H + disc, H - disc

    def quad_grid(self, nu: int, nv: int):
        """Quadrature nodes/weights adapted to the chart topology."""
        u = TWO_PI * np.arange(nu) / nu
        wu = np.full(nu, TWO_PI / nu)
        if self.v_polar:
            x, w = np.polynomial.legendre.leggauss(nv)
            v = 0.5 * math.pi * (x + 1.0)
            wv = 0.5 * math.pi * w
        else:
            v = TWO_PI * np.arange(nv) / nv
            wv = np.full(nv, TWO_PI / nv)
        return u, wu, v, wv

    def integrate(self, fn, nu: int = 128, nv: int = 128) -> float:
        """Surface integral of fn(u, v) (pointwise values) over the area."""
        u, wu, v, wv = self.quad_grid(nu, nv)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        vals = fn(uu.ravel(), vv.ravel()) * self.area_element(uu.ravel(),
                                                              vv.ravel())
        w = np.outer(wu, wv).ravel()
        return float(np.sum(vals * w))

    @property
    def area(self) -> float:
        if not hasattr(self, "_area"):
            self._area = self.integrate(lambda u, v: 1.0)
        return self._area

    def diameter(self, n: int = 64) -> float:
        u, _, v, _ = self.quad_grid(n, n)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        p = self.point(uu.ravel(), vv.ravel())
        d2 = ((p[:, None, :] - p[None, :, :]) ** 2).sum(-1)
        return float(np.sqrt(d2.max()))


def _surface_of_revolution(eval_fn, d1_fn, d2_fn, v_polar, meta,
                           orientation_sign=1.0):
    return Surface(eval_fn, d1_fn, d2_fn, v_polar,
                   orientation_sign=orientation_sign, meta=meta,
                   revolution=True)


def make_torus(R: float, r: float) -> Surface:
    if not (R > r > 0):
        raise InvalidParams("torus needs R > r > 0")

    def ev(u, v):
        w = R + r * np.cos(v)
        return np.stack([w * np.cos(u), w * np.sin(u), r * np.sin(v)
                         * np.ones_like(u)], axis=-1)

    def d1(u, v):
        w = R + r * np.cos(v)
        su = np.stack([-w * np.sin(u), w * np.cos(u), np.zeros_like(u)], -1)
        sv = np.stack([-r * np.sin(v) * np.cos(u), -r * np.sin(v) * np.sin(u),
                       r * np.cos(v) * np.ones_like(u)], -1)
        return su, sv

    def d2(u, v):
        w = R + r * np.cos(v)
        suu = np.stack([-w * np.cos(u), -w * np.sin(u), np.zeros_like(u)], -1)
        suv = np.stack([r * np.sin(v) * np.sin(u), -r * np.sin(v) * np.cos(u),
                        np.zeros_like(u)], -1)
        svv = np.stack([-r * np.cos(v) * np.cos(u),
                        -r * np.cos(v) * np.sin(u),
                        -r * np.sin(v) * np.ones_like(u)], -1)
        return suu, suv, svv

    s = _surface_of_revolution(ev, d1, d2, v_polar=False,
                               meta={"name": "torus", "R": R, "r": r})
    # orientation: normal should point away from the tube center circle
    u0 = np.asarray([0.0])
    v0 = np.asarray([0.5])
    n = s.normal(u0, v0)[0]
    p = s.point(u0, v0)[0]
    axis_pt = np.array([R * math.cos(0.0), R * math.sin(0.0), 0.0])
    if np.dot(n, p - axis_pt) < 0:
        s.orientation_sign = -1.0
    return s


def make_ellipsoid(a: float, b: float, c: float) -> Surface:
    if min(a, b, c) <= 0:
        raise InvalidParams("ellipsoid semi-axes must be positive")

    def ev(u, v):
        return np.stack([a * np.cos(v) * np.ones_like(u),
                         b * np.sin(v) * np.cos(u),
                         c * np.sin(v) * np.sin(u)], -1)

    def d1(u, v):
        su = np.stack([np.zeros_like(u), -b * np.sin(v) * np.sin(u),
                       c * np.sin(v) * np.cos(u)], -1)
        sv = np.stack([-a * np.sin(v) * np.ones_like(u),
                       b * np.cos(v) * np.cos(u),
                       c * np.cos(v) * np.sin(u)], -1)
        return su, sv

    def d2(u, v):
        suu = np.stack([np.zeros_like(u), -b * np.sin(v) * np.cos(u),
                        -c * np.sin(v) * np.sin(u)], -1)
        suv = np.stack([np.zeros_like(u), -b * np.cos(v) * np.sin(u),
                        c * np.cos(v) * np.cos(u)], -1)
        svv = np.stack([-a * np.cos(v) * np.ones_like(u),
                        -b * np.sin(v) * np.cos(u),
                        -c * np.sin(v) * np.sin(u)], -1)
        return suu, suv, svv

    meta = {"name": "sphere", "r": a} if a == b == c else \
        {"name": "ellipsoid", "a": a, "b": b, "c": c}
    s = _surface_of_revolution(ev, d1, d2, v_polar=True, meta=meta)
    s.revolution = (b == c)
    # outward orientation (center at origin)
    u0, v0 = np.asarray([0.3]), np.asarray([1.1])
    if np.dot(s.normal(u0, v0)[0], s.point(u0, v0)[0]) < 0:
        s.orientation_sign = -1.0
    return s


def make_sphere(r: float) -> Surface:
    return make_ellipsoid(r, r, r)


@dataclass
class Domain:
    """Compact regular domain with an oriented smooth boundary."""

    dim: int
    boundary: object  # Curve (dim 2) or Surface (dim 3); None for dim 4 ball
    contains: Callable[[np.ndarray], np.ndarray]
    volume: float
    meta: dict = field(default_factory=dict)

    def boundary_normal(self, *args) -> np.ndarray:
        if self.dim == 2:
            return self.boundary.normal2d(*args)
        if self.dim == 3:
            return self.boundary.normal(*args)
        raise InvalidParams("no parametric boundary in this dimension")

    def check_outward(self, delta: float = 1e-4, n: int = 32) -> bool:
        """Sampled check that boundary normals point to the exterior."""
        if self.dim == 2:
            th = self.boundary.grid(n)
            pts = self.boundary.point(th) + delta * self.boundary.normal2d(th)
        elif self.dim == 3:
            u, _, v, _ = self.boundary.quad_grid(n, n)
            uu, vv = np.meshgrid(u[1:], v[1:-1], indexing="ij")
            uu, vv = uu.ravel(), vv.ravel()
            pts = self.boundary.point(uu, vv) + \
                delta * self.boundary.normal(uu, vv)
        else:
            return True
        return not bool(np.any(self.contains(pts)))

    def diameter(self) -> float:
        return self.boundary.diameter()


@dataclass
class CurvatureIntegrals:
    """Curvature integrals entering the residue formulas."""

    total_measure: float            # length (curves) or area (surfaces)
    integral_kappa_sq: float | None = None       # curves
    integral_umbilic_defect: float | None = None  # surfaces: (k1-k2)^2
    integral_gauss: float | None = None           # surfaces: K
    integral_3H2_minus_K: float | None = None     # dim-3 domain boundaries
    error_estimate: float = 0.0


def curvature_curve(c: Curve, theta) -> np.ndarray:
    """Curvature magnitude of a closed curve at the given parameters."""
    return c.curvature(np.atleast_1d(theta))


def principal_curvatures(s: Surface, u, v):
    """Principal curvatures (k1 >= k2) at a regular surface point."""
    k1, k2 = s.principal_curvatures(np.atleast_1d(u), np.atleast_1d(v))
    return float(k1[0]) if np.ndim(u) == 0 else k1, \
        float(k2[0]) if np.ndim(u) == 0 else k2


def _doubling(value_fn, n0: int, rel_tol: float, abs_tol: float = 1e-12):
    coarse = value_fn(n0)
    fine = value_fn(2 * n0)
    err = abs(fine - coarse)
    if err > rel_tol * abs(fine) + abs_tol:
        finer = value_fn(4 * n0)
        err = abs(finer - fine)
        if err > rel_tol * abs(finer) + abs_tol:
            raise QuadratureNotConverged(
                f"grid doubling changed the result by {err:.3g}")
        return finer, err
    return fine, err


def curvature_integrals(shape, rel_tol: float = 1e-9) -> CurvatureIntegrals:
    """Quadrature of the residue-formula integrands, with doubling check."""
    if isinstance(shape, Domain):
        inner = curvature_integrals(shape.boundary, rel_tol=rel_tol)
        return inner
    if isinstance(shape, Curve):
        length, e1 = _doubling(
            lambda n: shape.integrate(lambda th: np.ones_like(th), n), 256,
            rel_tol)
        ksq, e2 = _doubling(
            lambda n: shape.integrate(lambda th: shape.curvature(th) ** 2, n),
            256, rel_tol)
        return CurvatureIntegrals(total_measure=length,
                                  integral_kappa_sq=ksq,
                                  error_estimate=max(e1, e2))
    if isinstance(shape, Surface):
        def defect(n):
            def f(u, v):
                k1, k2 = shape.principal_curvatures(u, v)
                return (k1 - k2) ** 2
            return shape.integrate(f, n, n)

        def gauss(n):
            return shape.integrate(
                lambda u, v: shape.shape_operator_invariants(u, v)[1], n, n)

        def hk(n):
            def f(u, v):
                H, K = shape.shape_operator_invariants(u, v)
                return 3.0 * H * H - K
            return shape.integrate(f, n, n)

        area, e1 = _doubling(lambda n: shape.integrate(
            lambda u, v: 1.0, n, n), 64, rel_tol)
        dft, e2 = _doubling(defect, 64, rel_tol)
        gss, e3 = _doubling(gauss, 64, rel_tol)
        hkv, e4 = _doubling(hk, 64, rel_tol)
        return CurvatureIntegrals(total_measure=area,
                                  integral_umbilic_defect=dft,
                                  integral_gauss=gss,
                                  integral_3H2_minus_K=hkv,
                                  error_estimate=max(e1, e2, e3, e4))
    raise UnknownShape(f"cannot integrate curvature of {type(shape)!r}")


# ---------------------------------------------------------------------------
# builtin catalog


def _circle(r=1.0):
    if r <= 0:
        raise InvalidParams("circle radius must be positive")
    return Curve.from_function(
        lambda th: np.stack([r * np.cos(th), r * np.sin(th)], -1), 2,
        meta={"name": "circle", "r": r})


def _ellipse(a=2.0, b=1.0):
    if min(a, b) <= 0:
        raise InvalidParams("ellipse semi-axes must be positive")
    return Curve.from_function(
        lambda th: np.stack([a * np.cos(th), b * np.sin(th)], -1), 2,
        meta={"name": "ellipse", "a": a, "b": b})


def _trefoil(scale=1.0):
    def fn(th):
        return scale * np.stack([np.sin(th) + 2 * np.sin(2 * th),
                                 np.cos(th) - 2 * np.cos(2 * th),
                                 -np.sin(3 * th)], -1)
    return Curve.from_function(fn, 3, meta={"name": "trefoil",
                                            "scale": scale})


def _superellipse_curve(p=4.0, scale=1.0):
    if p < 2 or p != int(p) or int(p) % 2:
        raise InvalidParams("superellipse exponent must be an even integer")
    p = float(p)

    def fn(th):
        g = (np.cos(th) ** p + np.sin(th) ** p) ** (-1.0 / p)
        return scale * np.stack([g * np.cos(th), g * np.sin(th)], -1)
    return Curve.from_function(fn, 2, meta={"name": "superellipse", "p": p,
                                            "scale": scale})


def _disk(r=1.0):
    return Domain(
        dim=2, boundary=_circle(r),
        contains=lambda x: (np.asarray(x) ** 2).sum(-1) <= r * r,
        volume=math.pi * r * r, meta={"name": "disk", "r": r})


def _ball(n=3, r=1.0):
    n = int(n)
    if n == 2:
        return _disk(r)
    if n == 3:
        return Domain(
            dim=3, boundary=make_sphere(r),
            contains=lambda x: (np.asarray(x) ** 2).sum(-1) <= r * r,
            volume=4.0 * math.pi * r ** 3 / 3.0,
            meta={"name": "ball", "n": 3, "r": r})
    if n == 4:
        # closed-form support only: no parametric boundary in R^4
        return Domain(
            dim=4, boundary=None,
            contains=lambda x: (np.asarray(x) ** 2).sum(-1) <= r * r,
            volume=math.pi ** 2 * r ** 4 / 2.0,
            meta={"name": "ball", "n": 4, "r": r,
                  "boundary_volume": 2.0 * math.pi ** 2 * r ** 3})
    raise InvalidParams("ball supports n in {2, 3, 4}")


def _superellipse_domain(p=4.0, scale=1.0):
    bd = _superellipse_curve(p=p, scale=scale)
    pp = float(p)

    def contains(x):
        x = np.asarray(x, dtype=float) / scale
        return np.abs(x[..., 0]) ** pp + np.abs(x[..., 1]) ** pp <= 1.0

    # area by the boundary divergence theorem (exact to quadrature)
    th = bd.grid(4096)
    pts = bd.point(th)
    d1 = bd.deriv(th, 1)
    area = 0.5 * float(np.sum(pts[:, 0] * d1[:, 1] - pts[:, 1] * d1[:, 0])
                       * TWO_PI / 4096)
    return Domain(dim=2, boundary=bd, contains=contains, volume=abs(area),
                  meta={"name": "superellipse-domain", "p": pp,
                        "scale": scale})


_BUILTINS = {
    "circle": _circle,
    "ellipse": _ellipse,
    "trefoil": _trefoil,
    "torus": make_torus,
    "sphere": make_sphere,
    "ellipsoid": make_ellipsoid,
    "disk": _disk,
    "ball": _ball,
    "superellipse-domain": _superellipse_domain,
}


def builtin_shape(name: str, params: dict | None = None):
    """Instantiate a catalog shape: curve, surface, or domain."""
    if name not in _BUILTINS:
        raise UnknownShape(f"unknown shape {name!r}; "
                           f"choose from {sorted(_BUILTINS)}")
    try:
        return _BUILTINS[name](**(params or {}))
    except TypeError as exc:
        raise InvalidParams(str(exc)) from None


def parse_shape_spec(spec: str):
    """Parse `name(key=value,...)` and build the shape.

    A tiny recursive-descent parser for the CLI shape grammar; values are
    numbers (int or float).
    """
    s = spec.strip()
    i = 0

    def error(msg):
        raise InvalidParams(f"bad shape spec {spec!r}: {msg}")

    while i < len(s) and (s[i].isalnum() or s[i] in "-_"):
        i += 1
    name = s[:i]
    if not name:
        error("missing shape name")
    params = {}
    if i == len(s):
        return builtin_shape(name, params)
    if s[i] != "(":
        error(f"expected '(' at position {i}")
    i += 1
    while True:
        while i < len(s) and s[i].isspace():
            i += 1
        if i < len(s) and s[i] == ")":
            i += 1
            break
        j = i
        while j < len(s) and (s[j].isalnum() or s[j] == "_"):
            j += 1
        key = s[i:j]
        if not key:
            error(f"expected parameter name at position {i}")
        while j < len(s) and s[j].isspace():
            j += 1
        if j >= len(s) or s[j] != "=":
            error(f"expected '=' after {key!r}")
        j += 1
        k = j
        while k < len(s) and s[k] not in ",)":
            k += 1
        try:
            text = s[j:k].strip()
            params[key] = int(text) if text.lstrip("+-").isdigit() \
                else float(text)
        except ValueError:
            error(f"bad numeric value for {key!r}")
        i = k
        if i < len(s) and s[i] == ",":
            i += 1
        elif i >= len(s):
            error("unterminated parameter list")
    if i != len(s):
        error("trailing characters after ')'")
    return builtin_shape(name, params)
