"""Regularized Riesz energies of closed curves and closed surfaces.

The energy at exponent z is the finite part of int t^z dPsi(t) where
Psi is the cumulative pair profile; equivalently the meromorphic
continuation in z of the absolutely convergent double integral
int int |x - y|^z.  Simple poles sit at z = -m - 2j (m the dimension of
the shape) with residues given by curvature integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import (ExponentNotConvergent, MethodsDisagree, PoleAt,
                     UnsupportedDimension)
from .extrinsic import pair_profile
from .regularize import (POLE_TOL, PsiProfile, RegularizedValue,
                         cutoff_integral_cumulative, default_eps_schedule,
                         finite_part_cumulative, laurent_fit,
                         pole_removed_value)
from .shapes import (Curve, Surface, builtin_shape, curvature_integrals)

TWO_PI = 2.0 * math.pi

__all__ = [
    "EnergyReport", "shape_dimension", "energy", "continuation",
    "energy_at_pole", "residue_table", "beta_sphere_closed_form",
    "sphere_beta_poles", "scaled_shape", "scaling_check",
    "cutoff_integral", "cutoff_integral_direct_curve",
]

_profile_cache: dict[int, PsiProfile] = {}


def get_profile(shape, **kwargs) -> PsiProfile:
    """Pair profile of the shape, cached per shape instance."""
    key = id(shape)
    if key not in _profile_cache or kwargs:
        prof = pair_profile(shape, **kwargs)
        if not kwargs:
            _profile_cache[key] = prof
        return prof
    return _profile_cache[key]


def shape_dimension(shape) -> int:
    if isinstance(shape, Curve):
        return 1
    if isinstance(shape, Surface):
        return 2
    raise UnsupportedDimension(f"not a closed shape: {type(shape)!r}")


@dataclass
class EnergyReport:
    """One regularized energy evaluation."""

    z: complex
    value: complex
    residue: complex
    has_log: bool
    method: str
    shape_meta: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


def _report(shape, rv: RegularizedValue, method: str) -> EnergyReport:
    return EnergyReport(z=rv.z, value=rv.finite_part, residue=rv.residue,
                        has_log=rv.has_log, method=method,
                        shape_meta=dict(getattr(shape, "meta", {})),
                        diagnostics=dict(rv.diagnostics))


def energy(shape, z, *, method: str = "hadamard", cross_check: bool = False,
           check_tol: float = 1e-6, profile: PsiProfile | None = None
           ) -> EnergyReport:
    """Regularized energy of a closed curve or surface at exponent z.

    ``method="hadamard"`` computes the finite part directly;
    ``method="direct"`` requires the convergent regime Re z > -m and
    returns the plain integral; ``method="cutoff"`` extrapolates cutoff
    integrals via a Laurent fit.  With ``cross_check`` the Hadamard and
    cutoff routes are compared and must agree within ``check_tol``.
    """
    z = complex(z)
    m = shape_dimension(shape)
    prof = profile if profile is not None else get_profile(shape)

    if method == "direct":
        if z.real <= -m:
            raise ExponentNotConvergent(
                f"direct evaluation needs Re z > {-m}")
        rv = finite_part_cumulative(prof, z)
        return _report(shape, rv, "direct")

    if method == "cutoff":
        rv = _cutoff_extrapolated(prof, z)
        return _report(shape, rv, "cutoff")

    if method != "hadamard":
        raise ValueError(f"unknown method {method!r}")

    rv = finite_part_cumulative(prof, z)
    report = _report(shape, rv, "hadamard")
    if cross_check:
        alt = _cutoff_extrapolated(prof, z)
        diff = abs(alt.finite_part - rv.finite_part)
        scale = abs(rv.finite_part) + 1.0
        report.diagnostics["cutoff_value"] = alt.finite_part
        report.diagnostics["cross_check_diff"] = diff
        if diff > check_tol * scale:
            raise MethodsDisagree(
                f"hadamard {rv.finite_part:.12g} vs cutoff "
                f"{alt.finite_part:.12g} at z={z}")
    return report


def _cutoff_sample(prof: PsiProfile, z: float, eps: float) -> float:
    """One cutoff integral, by the crossing engine when one is attached.

    The engine route integrates dist^z over the smooth outside runs
    directly; the cumulative fallback (integration by parts against
    Psi) is reserved for closed-form profiles, which are smooth in t.
    """
    eng = getattr(prof, "engine", None)
    if eng is not None and hasattr(eng, "cutoff_energy"):
        return float(eng.cutoff_energy(z, eps))
    return complex(cutoff_integral_cumulative(prof, z, eps)).real


def _cutoff_extrapolated(prof: PsiProfile, z: complex) -> RegularizedValue:
    """Finite part from cutoff integrals I(eps) via a Laurent fit."""
    if abs(z.imag) > 0:
        raise ValueError("the cutoff route handles real exponents only")
    zr = z.real
    eps = default_eps_schedule(prof.d, n=14)
    samples = [(e, _cutoff_sample(prof, zr, e)) for e in eps]
    k_req = max(0, math.ceil(-zr - POLE_TOL))
    fit = laurent_fit(samples, zr, k_max=k_req + 5)
    rv = RegularizedValue(
        z=z, finite_part=fit.constant, residue=fit.residue,
        has_log=abs(fit.log_coeff) > 1e-7 * (abs(fit.constant) + 1.0),
        diagnostics={"fit_residual": fit.residual,
                     "condition_number": fit.condition_number})
    return rv


def cutoff_integral(shape, z, eps: float,
                    profile: PsiProfile | None = None) -> float:
    """Chord-cutoff energy int_{|x-y| >= eps} |x - y|^z."""
    prof = profile if profile is not None else get_profile(shape)
    return _cutoff_sample(prof, float(z), eps)


def cutoff_integral_direct_curve(curve: Curve, z: float, eps: float,
                                 n_outer: int = 512,
                                 n_inner: int = 4096) -> float:
    """Cutoff energy of a curve by direct double quadrature.

    Independent of the profile machinery: the inner integral runs over
    the grid with exact treatment of the |x - y| = eps crossings, the
    outer over the base point.  Used to cross-validate the cutoff route.
    """
    from .extrinsic import _CurveEngine

    eng = _CurveEngine(curve, weight="arclength", n_outer=n_outer,
                       inner_factor=max(1, n_inner // n_outer))
    # For every outer node integrate dist^z * speed over the outside set.
    # The integrand is smooth away from dist = eps; split the periodic
    # trapezoid at the refined crossing parameters for accuracy.
    from scipy.integrate import quad

    total = 0.0
    phi_grid = eng.s_grid
    for i in range(eng.n_outer):
        x = eng.X[i]
        dist_row = eng.D[i]
        outside = dist_row > eps
        flips = np.nonzero(outside != np.roll(outside, -1))[0]
        h = TWO_PI / eng.n_inner

        def f(s):
            s = np.atleast_1d(s)
            p = curve.point(s + eng.offset)
            dd = np.linalg.norm(p - x, axis=-1)
            return dd ** z * curve.speed(s + eng.offset)

        if len(flips) == 0:
            val = 0.0 if not outside.any() else \
                quad(lambda s: float(f(s)[0]), 0.0, TWO_PI, limit=200)[0]
        else:
            # refine crossings by bisection
            a = phi_grid[flips]
            b = a + h
            sa = outside[flips]
            for _ in range(45):
                mid = 0.5 * (a + b)
                pm = curve.point(mid + eng.offset)
                sm = np.linalg.norm(pm - x, axis=-1) > eps
                take_a = sm == sa
                a = np.where(take_a, mid, a)
                b = np.where(take_a, b, mid)
            cr = np.sort(0.5 * (a + b))
            nodes = np.concatenate([cr, [cr[0] + TWO_PI]])
            val = 0.0
            for aa, bb in zip(nodes[:-1], nodes[1:]):
                smid = 0.5 * (aa + bb)
                pmid = curve.point(np.array([smid % TWO_PI]) + eng.offset)
                if np.linalg.norm(pmid[0] - x) > eps:
                    val += quad(lambda s: float(f(np.array([s % TWO_PI]))[0]),
                                aa, bb, limit=200)[0]
        total += eng.w_outer[i] * val
    return total


def continuation(shape, profile: PsiProfile | None = None):
    """The energy as a function of z, suitable for pole removal."""
    prof = profile if profile is not None else get_profile(shape)

    def F(z):
        return complex(finite_part_cumulative(prof, complex(z)).finite_part)

    return F


def residue_table(shape) -> dict[int, float]:
    """Residues of the energy at its poles, from curvature integrals.

    Curves: residue 2 L at z = -1 and (1/4) int kappa^2 ds at z = -3.
    Surfaces: 2 pi A at z = -2 and (pi/8) int (k1 - k2)^2 dA at z = -4.
    """
    ci = curvature_integrals(shape)
    if isinstance(shape, Curve):
        return {-1: 2.0 * ci.total_measure,
                -3: 0.25 * ci.integral_kappa_sq}
    if isinstance(shape, Surface):
        return {-2: TWO_PI * ci.total_measure,
                -4: math.pi / 8.0 * ci.integral_umbilic_defect}
    raise UnsupportedDimension("residue tables: curves and surfaces")


def energy_at_pole(shape, k: int, profile: PsiProfile | None = None,
                   check_tol: float = 1e-3) -> EnergyReport:
    """Pole-removed energy at z = -k (simple pole subtracted).

    Averages the continuation symmetrically around the pole and
    Richardson-extrapolates; the curvature-integral residue is verified
    against the antisymmetric part on the way.
    """
    prof = profile if profile is not None else get_profile(shape)
    res = residue_table(shape).get(-k)
    if res is None:
        rv = finite_part_cumulative(prof, complex(-k))
        return _report(shape, rv, "hadamard")
    F = continuation(shape, prof)
    value = pole_removed_value(F, k, res, check_tol=check_tol)
    return EnergyReport(z=complex(-k), value=value, residue=res,
                        has_log=True, method="pole-removed",
                        shape_meta=dict(getattr(shape, "meta", {})))


# ---------------------------------------------------------------------------
# sphere closed form


def _omega(n: int) -> float:
    """Surface measure of the unit n-sphere in R^(n+1)."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / special.gamma((n + 1) / 2.0)


_sphere_factor_cache: dict[int, float] = {}


def _sphere_raw(n: int, z: float) -> float:
    return 2.0 ** (z + n) * _omega(n - 1) * _omega(n) * \
        float(special.beta((z + n) / 2.0, n / 2.0))


def _sphere_calibration(n: int) -> float:
    """Normalization fixed at z = 0 where the energy is area squared."""
    if n not in _sphere_factor_cache:
        area = _omega(n)
        _sphere_factor_cache[n] = area * area / _sphere_raw(n, 0.0)
    return _sphere_factor_cache[n]


def beta_sphere_closed_form(n: int, z: float, radius: float = 1.0) -> float:
    """Energy of the round n-sphere of the given radius at exponent z.

    Proportional to 2^(z+n) B((z+n)/2, n/2); the constant is calibrated
    once per dimension against the elementary value at z = 0.  Raises
    PoleAt on the (finitely many, for even n) poles.
    """
    z = float(z)
    x = (z + n) / 2.0
    if x <= POLE_TOL and abs(x - round(x)) < POLE_TOL:
        j = int(round(-x))
        if n % 2 == 1 or j < n // 2:
            raise PoleAt(z)
    val = _sphere_calibration(n) * 2.0 ** (z + n) * _omega(n - 1) * \
        _omega(n) * special.beta(x, n / 2.0)
    return float(val) * radius ** (2 * n + z)


def sphere_beta_poles(n: int, j_max: int = 6) -> list[tuple[float, float]]:
    """Pole locations and residues of the sphere energy.

    For odd n the poles z = -n - 2j continue forever; for even n the
    Beta function is rational and only the first n/2 poles survive.
    """
    out = []
    j_top = (n // 2 - 1) if n % 2 == 0 else j_max
    h = 1e-6
    for j in range(j_top + 1):
        z0 = -n - 2 * j
        res = (beta_sphere_closed_form(n, z0 + h)
               - beta_sphere_closed_form(n, z0 - h)) * h / 2.0
        out.append((float(z0), float(res)))
    return out


# ---------------------------------------------------------------------------
# scaling


def scaled_shape(shape, lam: float):
    """The image of a builtin or generic shape under x -> lam x."""
    meta = dict(getattr(shape, "meta", {}))
    name = meta.pop("name", None)
    scalable = {
        "circle": lambda p: {"r": p["r"] * lam},
        "ellipse": lambda p: {"a": p["a"] * lam, "b": p["b"] * lam},
        "trefoil": lambda p: {"scale": p["scale"] * lam},
        "sphere": lambda p: {"r": p["r"] * lam},
        "torus": lambda p: {"R": p["R"] * lam, "r": p["r"] * lam},
    }
    if name in scalable:
        return builtin_shape(name, scalable[name](meta))
    if isinstance(shape, Curve):
        return shape.transformed(lambda p: lam * p,
                                 meta={"scaled_from": name, "lam": lam})
    raise UnsupportedDimension(f"cannot scale {name!r}")


def scaling_check(shape, z: float, lam: float,
                  profile: PsiProfile | None = None) -> dict:
    """Verify E_{lam M}(z) = lam^(2m+z) (E_M(z) + R log(lam) at poles).

    Returns the two values, the prediction, and the defect.  At a pole
    of the energy the pole-removed values satisfy the same law with a
    logarithmic anomaly proportional to the residue.
    """
    m = shape_dimension(shape)
    big = scaled_shape(shape, lam)
    k = -z if abs(z - round(z)) < POLE_TOL and z <= -m else None
    if k is not None and -int(round(k)) in residue_table(shape):
        k = int(round(k))
        small_rep = energy_at_pole(shape, k, profile=profile)
        big_rep = energy_at_pole(big, k)
        anomaly = small_rep.residue * math.log(lam)
    else:
        small_rep = energy(shape, z, profile=profile)
        big_rep = energy(big, z)
        anomaly = small_rep.residue * math.log(lam) if small_rep.has_log \
            else 0.0
    predicted = lam ** (2 * m + z) * (small_rep.value + anomaly)
    defect = abs(big_rep.value - predicted)
    return {"value": small_rep.value, "scaled_value": big_rep.value,
            "predicted": predicted, "defect": float(defect),
            "anomaly": anomaly, "exponent": 2 * m + z}
