"""Moebius transformations acting on shapes, and the invariance harness.

A Moebius map is a composition of translations, homotheties, and sphere
inversions.  Shapes are transported with exact derivatives: the chain
rule is applied analytically through each factor, so image curves and
surfaces carry spectrally accurate curvature data.

The invariance harness compares the regularized energy of a shape and
of its Moebius image.  Exact invariance holds at z = -2m for closed
submanifolds of odd dimension m and for domains of even dimension n
(z = -2n); homotheties pick up the exact defect log c times the
residue when z sits on a pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .closed_energy import (energy, energy_at_pole, get_profile,
                            residue_table, shape_dimension)
from .domain_energy import domain_residues
from .errors import CenterTooClose, InvalidParams, UnsupportedDimension
from .extrinsic import boundary_pair_profile, pair_profile
from .regularize import finite_part_cumulative, pole_removed_value
from .shapes import Curve, Domain, Surface

TWO_PI = 2.0 * math.pi

__all__ = [
    "MoebiusMap", "translation", "homothety", "inversion", "compose",
    "transform_shape", "invariance_check",
]


@dataclass(frozen=True)
class MoebiusMap:
    """One factor or a composition; apply/derivatives are exact.

    ``kind`` is one of translation, homothety, inversion, composition.
    Compositions apply ``parts`` left to right.
    """

    kind: str
    vector: tuple = ()
    ratio: float = 1.0
    center: tuple = ()
    radius: float = 1.0
    parts: tuple = field(default_factory=tuple)

    # -- point map ---------------------------------------------------------

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "translation":
            return x + np.asarray(self.vector)
        if self.kind == "homothety":
            return self.ratio * x
        if self.kind == "inversion":
            y = x - np.asarray(self.center)
            q = (y * y).sum(-1, keepdims=True)
            return np.asarray(self.center) + self.radius ** 2 * y / q
        out = x
        for p in self.parts:
            out = p.apply(out)
        return out

    def d(self, x: np.ndarray, dx: np.ndarray) -> np.ndarray:
        """Directional derivative: J_T(x) dx."""
        if self.kind == "translation":
            return np.asarray(dx, dtype=float)
        if self.kind == "homothety":
            return self.ratio * np.asarray(dx, dtype=float)
        if self.kind == "inversion":
            y = np.asarray(x, float) - np.asarray(self.center)
            q = (y * y).sum(-1, keepdims=True)
            yd = (y * dx).sum(-1, keepdims=True)
            return self.radius ** 2 * (dx / q - 2.0 * yd * y / q ** 2)
        out = np.asarray(x, float)
        dout = np.asarray(dx, float)
        for p in self.parts:
            dout = p.d(out, dout)
            out = p.apply(out)
        return dout

    def d2(self, x, dx1, dx2, ddx) -> np.ndarray:
        """Second derivative of T(gamma): Hess_T[dx1,dx2] + J_T ddx."""
        if self.kind == "translation":
            return np.asarray(ddx, dtype=float)
        if self.kind == "homothety":
            return self.ratio * np.asarray(ddx, dtype=float)
        if self.kind == "inversion":
            y = np.asarray(x, float) - np.asarray(self.center)
            q = (y * y).sum(-1, keepdims=True)
            a1 = (y * dx1).sum(-1, keepdims=True)
            a2 = (y * dx2).sum(-1, keepdims=True)
            a12 = (np.asarray(dx1) * dx2).sum(-1, keepdims=True)
            ad = (y * ddx).sum(-1, keepdims=True)
            return self.radius ** 2 * (
                np.asarray(ddx, float) / q
                - 2.0 * (a2 * dx1 + a1 * dx2 + (a12 + ad) * y) / q ** 2
                + 8.0 * a1 * a2 * y / q ** 3)
        pt = np.asarray(x, float)
        d1 = np.asarray(dx1, float)
        d2_ = np.asarray(dx2, float)
        dd = np.asarray(ddx, float)
        for p in self.parts:
            dd = p.d2(pt, d1, d2_, dd)
            d1 = p.d(pt, d1)
            d2_ = p.d(pt, d2_)
            pt = p.apply(pt)
        return dd

    def inverse(self) -> "MoebiusMap":
        if self.kind == "translation":
            return translation([-v for v in self.vector])
        if self.kind == "homothety":
            return homothety(1.0 / self.ratio)
        if self.kind == "inversion":
            return self  # involution
        return MoebiusMap(kind="composition",
                          parts=tuple(p.inverse()
                                      for p in reversed(self.parts)))

    def inversion_factors(self) -> list:
        if self.kind == "inversion":
            return [self]
        if self.kind == "composition":
            out = []
            for p in self.parts:
                out.extend(p.inversion_factors())
            return out
        return []


def translation(vector) -> MoebiusMap:
    return MoebiusMap(kind="translation",
                      vector=tuple(float(v) for v in vector))


def homothety(ratio: float) -> MoebiusMap:
    if not ratio > 0:
        raise InvalidParams("homothety ratio must be positive")
    return MoebiusMap(kind="homothety", ratio=float(ratio))


def inversion(center, radius: float = 1.0) -> MoebiusMap:
    if not radius > 0:
        raise InvalidParams("inversion radius must be positive")
    return MoebiusMap(kind="inversion",
                      center=tuple(float(c) for c in center),
                      radius=float(radius))


def compose(*maps: MoebiusMap) -> MoebiusMap:
    """Composition applying the factors left to right."""
    return MoebiusMap(kind="composition", parts=tuple(maps))


# ---------------------------------------------------------------------------
# transport of shapes

MARGIN_FACTOR = 0.3


def _sample_points(shape) -> np.ndarray:
    if isinstance(shape, Curve):
        return shape.point(shape.grid(512))
    if isinstance(shape, Surface):
        u, _, v, _ = shape.quad_grid(64, 64)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        return shape.point(uu.ravel(), vv.ravel())
    if isinstance(shape, Domain):
        return _sample_points(shape.boundary)
    raise UnsupportedDimension(f"cannot sample {type(shape)!r}")


def _check_margin(T: MoebiusMap, shape) -> None:
    factors = T.inversion_factors()
    if not factors:
        return
    pts = _sample_points(shape)
    diam = shape.diameter()
    for f in factors:
        c = np.asarray(f.center)
        dist = np.sqrt(((pts - c) ** 2).sum(-1)).min()
        if isinstance(shape, Domain) and bool(np.any(shape.contains(c))):
            raise CenterTooClose(
                "inversion center lies inside the domain; image unbounded")
        if dist < MARGIN_FACTOR * diam:
            raise CenterTooClose(
                f"inversion center at distance {dist:.3g} < "
                f"{MARGIN_FACTOR} x diameter {diam:.3g}")


def _is_revolution_image(s: Surface, tol: float = 1e-10) -> bool:
    """Chord lengths may depend on the u's only through their difference."""
    rng = np.random.default_rng(7)
    u1 = rng.uniform(0, TWO_PI, 8)
    u2 = rng.uniform(0, TWO_PI, 8)
    v1 = rng.uniform(0.2, 2.8, 8)
    v2 = rng.uniform(0.2, 2.8, 8)
    shift = rng.uniform(0, TWO_PI, 8)
    d_a = np.linalg.norm(s.point(u1, v1) - s.point(u2, v2), axis=-1)
    d_b = np.linalg.norm(s.point(u1 + shift, v1) - s.point(u2 + shift, v2),
                         axis=-1)
    scale = float(np.abs(d_a).max()) + 1e-300
    return bool(np.abs(d_a - d_b).max() < tol * scale)


def transform_shape(T: MoebiusMap, shape):
    """The Moebius image, with derivatives transported by the chain rule.

    Curves are re-expanded in Fourier modes of the composed map;
    surfaces keep the chart and get exact pushed-forward first and
    second derivatives.  The orientation convention of surfaces is
    carried over unchanged: an odd number of inversions flips it, but
    every curvature integral used downstream is invariant under the
    global flip.
    """
    _check_margin(T, shape)
    if isinstance(shape, Curve):
        meta = {"name": "moebius-image", "of": dict(shape.meta)}
        return shape.transformed(T.apply, n=2048, meta=meta)
    if isinstance(shape, Surface):
        base = shape

        def ev(u, v):
            return T.apply(base.point(u, v))

        def d1(u, v):
            x = base.point(u, v)
            su, sv = base._d1(np.asarray(u, float), np.asarray(v, float))
            return T.d(x, su), T.d(x, sv)

        def d2(u, v):
            x = base.point(u, v)
            su, sv = base._d1(np.asarray(u, float), np.asarray(v, float))
            suu, suv, svv = base._d2(np.asarray(u, float),
                                     np.asarray(v, float))
            return (T.d2(x, su, su, suu), T.d2(x, su, sv, suv),
                    T.d2(x, sv, sv, svv))

        out = Surface(ev, d1, d2, v_polar=base.v_polar,
                      orientation_sign=base.orientation_sign,
                      meta={"name": "moebius-image", "of": dict(base.meta)},
                      revolution=False)
        if base.revolution:
            out.revolution = _is_revolution_image(out)
        return out
    if isinstance(shape, Domain):
        if shape.dim != 2:
            raise UnsupportedDimension(
                "domain transport is implemented for planar domains")
        bd = transform_shape(T, shape.boundary)
        Tinv = T.inverse()
        base_contains = shape.contains

        def contains(x):
            return base_contains(Tinv.apply(np.asarray(x, dtype=float)))

        th = bd.grid(4096)
        pts = bd.point(th)
        dd = bd.deriv(th, 1)
        area = 0.5 * float(np.sum(pts[:, 0] * dd[:, 1]
                                  - pts[:, 1] * dd[:, 0]) * TWO_PI / 4096)
        return Domain(dim=2, boundary=bd, contains=contains,
                      volume=abs(area),
                      meta={"name": "moebius-image-domain",
                            "of": dict(shape.meta)})
    raise UnsupportedDimension(f"cannot transform {type(shape)!r}")


# ---------------------------------------------------------------------------
# invariance harness


def _closed_value(shape, z: complex, n_outer: int | None):
    """Energy of a closed curve/surface; pole-removed on the pole set."""
    prof = pair_profile(shape, n_outer=n_outer) if n_outer else \
        get_profile(shape)
    k = int(round(-z.real))
    if abs(z - (-k)) < 1e-12 and residue_table(shape).get(-k) is not None:
        rep = energy_at_pole(shape, k, profile=prof)
    else:
        rep = energy(shape, z, profile=prof)
    return complex(rep.value), complex(rep.residue)


def _domain_value(domain: Domain, z: complex, n_outer: int | None):
    """Boundary-route domain energy with pole removal, at a set grid."""
    prof = boundary_pair_profile(domain, n_outer=n_outer) if n_outer \
        else boundary_pair_profile(domain)
    n = domain.dim

    def F(w):
        w = complex(w)
        rv = finite_part_cumulative(prof, w + 2.0)
        return complex(-rv.finite_part / ((w + 2.0) * (w + n)))

    res = domain_residues(domain)
    k = int(round(-z.real))
    if abs(z - (-k)) < 1e-12 and -k in res:
        return complex(pole_removed_value(F, k, res[-k])), complex(res[-k])
    if abs(z - (-2.0)) < 1e-12 and n > 2:
        return complex(pole_removed_value(F, 2, 0.0)), 0.0 + 0.0j
    rv = finite_part_cumulative(prof, z + 2.0)
    pref = -1.0 / ((z + 2.0) * (z + n))
    return complex(pref * rv.finite_part), complex(pref * rv.residue)


def _value_and_error(shape, z: complex):
    """Energy with a grid-halving error estimate.

    Exact closed-form profiles ignore the grid size; a small floor
    stands in for their quadrature tolerance.
    """
    fn = _domain_value if isinstance(shape, Domain) else _closed_value
    coarse_n = 32 if isinstance(shape, Surface) else 128
    full, res = fn(shape, z, None)
    half, _ = fn(shape, z, coarse_n)
    err = abs(full - half) + 1e-9 * (abs(full) + 1.0)
    return full, res, err


def invariance_check(shape, z, T: MoebiusMap) -> dict:
    """Compare E(S) and E(T(S)) at exponent z, with error budget.

    Returns both energies, their error estimates, the defect, the pass
    bound (three times the root-sum-square of the estimates), and for
    homotheties the exact predicted image value
    c^(2m+z) (E + log c * R).
    """
    z = complex(z)
    m = shape.dim if isinstance(shape, Domain) else shape_dimension(shape)
    image = transform_shape(T, shape)
    e0, res0, err0 = _value_and_error(shape, z)
    e1, _, err1 = _value_and_error(image, z)
    defect = abs(e1 - e0)
    bound = 3.0 * math.hypot(err0, err1)
    out = {
        "z": z, "dim": m,
        "value_original": e0, "value_image": e1,
        "residue_original": res0,
        "error_original": err0, "error_image": err1,
        "defect": defect, "bound": bound,
        "passed": bool(defect < bound),
    }
    if T.kind == "homothety":
        c = T.ratio
        predicted = c ** (2 * m + z) * (e0 + math.log(c) * res0)
        out["predicted_image"] = predicted
        out["predicted_defect"] = abs(predicted - e0)
        out["prediction_error"] = abs(e1 - predicted)
    return out
