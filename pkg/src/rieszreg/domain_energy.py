"""Regularized Riesz energies of compact domains with smooth boundary.

Two complementary routes are implemented.  The volume route is the
finite part of int t^z dPsi_Omega(t) with Psi_Omega the cumulative
volume pair profile (closed forms exist for disks and balls).  The
boundary route divides out the divergence-theorem prefactor,

    E_Omega(z) = -1/((z+2)(z+n)) Pf int t^(z+2) dPsi_rho(t),

with Psi_rho the normal-weighted boundary profile; it extends the
boundary double integral to all exponents and carries the poles at
z = -n and z = -n-1-2j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import (ExcludedExponent, ExponentNotConvergent,
                     ExponentOutOfRange, MethodsDisagree, PoleAt,
                     UnsupportedDimension)
from .extrinsic import boundary_pair_profile, domain_pair_profile
from .regularize import (POLE_TOL, PsiProfile, cutoff_integral_cumulative,
                         finite_part_cumulative, pole_removed_value)
from .shapes import Domain, builtin_shape, curvature_integrals

TWO_PI = 2.0 * math.pi

__all__ = [
    "DomainEnergyReport", "domain_energy_direct", "domain_energy_boundary",
    "domain_energy", "domain_continuation", "fractional_perimeter",
    "domain_residues", "residues_dim4", "regularized_minus2n_energy",
    "planar_energy", "beta_ball_closed_form", "ball_beta_poles",
    "log_kernel_residue", "power_kernel_residue", "scaled_domain",
]

_bnd_cache: dict[int, PsiProfile] = {}
_vol_cache: dict[int, PsiProfile] = {}


def _boundary_profile(domain: Domain) -> PsiProfile:
    key = id(domain)
    if key not in _bnd_cache:
        _bnd_cache[key] = boundary_pair_profile(domain)
    return _bnd_cache[key]


def _volume_profile(domain: Domain) -> PsiProfile:
    key = id(domain)
    if key not in _vol_cache:
        _vol_cache[key] = domain_pair_profile(domain)
    return _vol_cache[key]


@dataclass
class DomainEnergyReport:
    """One regularized domain-energy evaluation."""

    z: complex
    value: complex
    method: str  # volume-direct | boundary-integral | profile-continuation
    #              | closed-form
    residue: complex = 0.0
    has_log: bool = False
    chi: int | None = None  # Euler characteristic, planar domains only
    domain_meta: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


def _near(z: complex, target: float) -> bool:
    return abs(z - target) < POLE_TOL


def domain_energy_direct(domain: Domain, z) -> DomainEnergyReport:
    """Convergent-regime energy from the volume pair profile.

    Requires Re z > -n; disks and balls only (the shapes with a
    closed-form volume profile).
    """
    z = complex(z)
    n = domain.dim
    if z.real <= -n:
        raise ExponentNotConvergent(f"volume-direct needs Re z > {-n}")
    rv = finite_part_cumulative(_volume_profile(domain), z)
    return DomainEnergyReport(z=z, value=rv.finite_part,
                              method="volume-direct",
                              domain_meta=dict(domain.meta),
                              diagnostics=dict(rv.diagnostics))


def domain_energy_boundary(domain: Domain, z) -> DomainEnergyReport:
    """Energy through the boundary profile, valid off z = -2, -n.

    For Re z > -n this reproduces the boundary double integral; for
    other exponents it is the finite-part continuation of the same
    formula.  The excluded exponents are handled by domain_energy.
    """
    z = complex(z)
    n = domain.dim
    if _near(z, -2.0) or _near(z, float(-n)):
        raise ExcludedExponent(
            f"boundary formula is singular at z = -2 and z = {-n}; "
            "use domain_energy")
    prof = _boundary_profile(domain)
    rv = finite_part_cumulative(prof, z + 2.0)
    pref = -1.0 / ((z + 2.0) * (z + n))
    method = "boundary-integral" if z.real > -n else "profile-continuation"
    return DomainEnergyReport(
        z=z, value=pref * rv.finite_part, residue=pref * rv.residue,
        has_log=rv.has_log, method=method, domain_meta=dict(domain.meta),
        diagnostics=dict(rv.diagnostics))


def domain_continuation(domain: Domain):
    """The domain beta function as a callable, for pole removal."""
    prof = _boundary_profile(domain)
    n = domain.dim

    def F(z):
        z = complex(z)
        rv = finite_part_cumulative(prof, z + 2.0)
        return complex(-rv.finite_part / ((z + 2.0) * (z + n)))

    return F


def domain_energy(domain: Domain, z, *, chi: int = 1,
                  check_tol: float = 1e-3) -> DomainEnergyReport:
    """Regularized energy of a domain at any exponent.

    Routes through the boundary profile; at the poles the residue is
    subtracted (pole removal), and at the analytic excluded point
    z = -2 (n > 2) the value is filled in by symmetric averaging.
    """
    z = complex(z)
    n = domain.dim
    if n == 4:
        # no parametric boundary in R^4: closed form for the ball
        r = domain.meta["r"]
        value = beta_ball_closed_form(4, float(z.real), radius=r)
        return DomainEnergyReport(z=z, value=value, method="closed-form",
                                  domain_meta=dict(domain.meta))
    residues = domain_residues(domain)
    k = int(round(-z.real))
    F = domain_continuation(domain)
    if _near(z, -float(k)) and -k in residues:
        value = pole_removed_value(F, k, residues[-k], check_tol=check_tol)
        return DomainEnergyReport(z=z, value=value, residue=residues[-k],
                                  has_log=True, method="profile-continuation",
                                  chi=chi if n == 2 else None,
                                  domain_meta=dict(domain.meta))
    if _near(z, -2.0) and n > 2:
        # analytic point excluded only by the prefactor; fill by symmetry
        value = pole_removed_value(F, 2, 0.0, check_tol=check_tol)
        return DomainEnergyReport(z=z, value=value, method="boundary-integral",
                                  domain_meta=dict(domain.meta))
    rep = domain_energy_boundary(domain, z)
    if n == 2:
        rep.chi = chi
    return rep


def fractional_perimeter(domain: Domain, z) -> float:
    """P_Omega(z) = int over Omega x exterior of |x - y|^z.

    Convergent exactly on the strip -n-1 < Re z < -n, where it equals
    minus the boundary-route energy.
    """
    z = complex(z)
    n = domain.dim
    if not (-n - 1.0 < z.real < -n):
        raise ExponentOutOfRange(
            f"fractional perimeter converges for {-n - 1} < Re z < {-n}")
    return -complex(domain_energy_boundary(domain, z).value).real


def domain_residues(domain: Domain) -> dict[int, float]:
    """Residues of the first three poles, from curvature integrals."""
    n = domain.dim
    if n == 2:
        ci = curvature_integrals(domain)
        return {-2: TWO_PI * domain.volume,
                -3: -2.0 * ci.total_measure,
                -5: ci.integral_kappa_sq / 12.0}
    if n == 3:
        ci = curvature_integrals(domain)
        return {-3: 4.0 * math.pi * domain.volume,
                -4: -math.pi * ci.total_measure,
                -6: math.pi / 24.0 * ci.integral_3H2_minus_K}
    if n == 4:
        r = domain.meta.get("r")
        if domain.meta.get("name") != "ball" or r is None:
            raise UnsupportedDimension("dimension 4: ball only")
        # unit 3-sphere of radius r: H = 1/r, K = 3/r^2
        hk = 15.0 / (r * r) * domain.meta["boundary_volume"]
        return residues_dim4(domain.volume, domain.meta["boundary_volume"],
                             hk)
    raise UnsupportedDimension(f"residues known for n in 2..4, got {n}")


def residues_dim4(v4: float, v3: float,
                  integral_27h2_minus_4k: float) -> dict[int, float]:
    """Dimension-4 residue formulas as a pure evaluator.

    Takes the 4-volume, the boundary 3-volume, and the boundary
    integral of 27 H^2 - 4 K explicitly.
    """
    return {-4: 2.0 * math.pi ** 2 * v4,
            -5: -4.0 * math.pi / 3.0 * v3,
            -7: math.pi / 90.0 * integral_27h2_minus_4k}


# ---------------------------------------------------------------------------
# cutoff route with exact counterterms at z = -2n


def _counterterms(domain: Domain, eps: float) -> float:
    """The exact divergent counterterms of the -2n cutoff energy."""
    n = domain.dim
    res = domain_residues(domain)
    if n == 2:
        ci = curvature_integrals(domain)
        return (-math.pi / eps ** 2 * domain.volume
                + 2.0 / eps * ci.total_measure)
    if n == 3:
        ci = curvature_integrals(domain)
        return (-4.0 * math.pi / (3.0 * eps ** 3) * domain.volume
                + math.pi / (2.0 * eps ** 2) * ci.total_measure
                + math.pi * math.log(eps) / 24.0 * ci.integral_3H2_minus_K)
    if n == 4:
        v3 = domain.meta["boundary_volume"]
        return (-math.pi ** 2 / (2.0 * eps ** 4) * domain.volume
                + 4.0 * math.pi / (9.0 * eps ** 3) * v3
                - 1.0 / eps * res[-7])
    raise UnsupportedDimension(f"counterterms known for n in 2..4, got {n}")


def _cutoff_extrapolation(domain: Domain, prof: PsiProfile) -> float:
    """eps -> 0 limit of cutoff integral plus counterterms at z = -2n.

    The corrected values approach the limit with a smooth expansion in
    eps; a small polynomial fit removes the remaining orders.
    """
    n = domain.dim
    z0 = float(-2 * n)
    eps = prof.d / 4.0 * 2.0 ** (-0.5 * np.arange(10))
    vals = np.array([
        complex(cutoff_integral_cumulative(prof, z0, e)).real
        + _counterterms(domain, e) for e in eps])
    deg = 4
    A = eps[:, None] ** np.arange(deg + 1)[None, :]
    sol, *_ = np.linalg.lstsq(A, vals, rcond=None)
    return float(sol[0])


def regularized_minus2n_energy(domain: Domain, *, chi: int = 1,
                               check_tol: float = 1e-5
                               ) -> DomainEnergyReport:
    """E_Omega(-2n): scale invariant for even n, pole-removed for odd.

    The primary value comes from the profile continuation (closed form
    in dimension 4); where a volume profile exists the eps-cutoff route
    with exact counterterms must agree.
    """
    n = domain.dim
    z0 = float(-2 * n)
    rep = domain_energy(domain, z0, chi=chi)
    rep = DomainEnergyReport(z=rep.z, value=rep.value, method=rep.method,
                             residue=rep.residue, has_log=rep.has_log,
                             chi=chi if n == 2 else None,
                             domain_meta=rep.domain_meta,
                             diagnostics=dict(rep.diagnostics))
    try:
        vol = _volume_profile(domain)
    except UnsupportedDimension:
        vol = None
    if vol is not None:
        alt = _cutoff_extrapolation(domain, vol)
        diff = abs(alt - complex(rep.value).real)
        rep.diagnostics["cutoff_value"] = alt
        rep.diagnostics["cross_check_diff"] = diff
        if diff > check_tol * (abs(complex(rep.value)) + 1.0):
            raise MethodsDisagree(
                f"continuation {complex(rep.value).real:.10g} vs "
                f"cutoff-counterterm {alt:.10g} at z = {z0}")
    return rep


def planar_energy(domain: Domain, chi: int = 1) -> float:
    """The Moebius-invariant planar energy E_Omega(-4) + (pi^2/4) chi."""
    if domain.dim != 2:
        raise UnsupportedDimension("planar energy needs a domain in R^2")
    rep = regularized_minus2n_energy(domain, chi=chi)
    return float(complex(rep.value).real + math.pi ** 2 / 4.0 * chi)


# ---------------------------------------------------------------------------
# ball closed form


def _omega(k: int) -> float:
    """Surface measure of the unit k-sphere in R^(k+1)."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / special.gamma((k + 1) / 2.0)


_ball_factor_cache: dict[int, float] = {}


def _ball_raw(n: int, z: float) -> float:
    return (2.0 ** (z + n) * _omega(n - 1) * _omega(n - 2)
            / ((n - 1) * (z + n))
            * float(special.beta((z + n + 1) / 2.0, (n + 1) / 2.0)))


def _ball_calibration(n: int) -> float:
    """Normalization fixed at z = 0 where the energy is volume squared."""
    if n not in _ball_factor_cache:
        vol = _omega(n - 1) / n
        _ball_factor_cache[n] = vol * vol / _ball_raw(n, 0.0)
    return _ball_factor_cache[n]


def _ball_is_pole(n: int, z: float) -> bool:
    if abs(z + n) < POLE_TOL:
        return True
    x = (z + n + 1) / 2.0
    if x <= POLE_TOL and abs(x - round(x)) < POLE_TOL:
        j = int(round(-x))
        # for odd n the Beta function is rational: deep poles cancel
        return n % 2 == 0 or j < (n + 1) // 2
    return False


def beta_ball_closed_form(n: int, z: float, radius: float = 1.0) -> float:
    """Energy of the n-ball of the given radius at exponent z.

    Proportional to 2^(z+n) B((z+n+1)/2, (n+1)/2) / (z+n); calibrated
    once per dimension against the elementary value at z = 0.  Poles:
    infinitely many for even n; exactly (n+3)/2, ending at -2n, for
    odd n.
    """
    z = float(z)
    if _ball_is_pole(n, z):
        raise PoleAt(z)
    val = _ball_calibration(n) * _ball_raw(n, z)
    return float(val) * radius ** (2 * n + z)


def ball_beta_poles(n: int, j_max: int = 6) -> list[tuple[float, float]]:
    """Pole locations and residues of the ball energy.

    The pole set is {-n} together with -n-1-2j; for odd n only
    j < (n+1)/2 survive, so there are exactly (n+3)/2 poles in total.
    """
    locs = [float(-n)]
    j_top = ((n + 1) // 2 - 1) if n % 2 == 1 else j_max
    locs += [float(-n - 1 - 2 * j) for j in range(j_top + 1)]
    h = 1e-6
    return [(z0, (beta_ball_closed_form(n, z0 + h)
                  - beta_ball_closed_form(n, z0 - h)) * h / 2.0)
            for z0 in locs]


# ---------------------------------------------------------------------------
# boundary-kernel residue identities


def log_kernel_residue(domain: Domain) -> float:
    """-int log|x-y| <n_x, n_y> over the boundary pairs (n = 2).

    Equals the residue 2 pi A at z = -2.  By parts against the
    boundary profile: the boundary term at t_max vanishes because the
    normal weight integrates to zero over all pairs.
    """
    if domain.dim != 2:
        raise UnsupportedDimension("log kernel identity is planar")
    prof = _boundary_profile(domain)
    from .regularize import _quad
    top = float(prof(np.asarray([prof.t_max]))[0])
    val = _quad(lambda t: prof(t) / t, 0.0, prof.t_max)
    return float(complex(val).real) - math.log(prof.t_max) * top


def power_kernel_residue(domain: Domain) -> float:
    """(1/(n-2)) int |x-y|^(2-n) <n_x, n_y> over boundary pairs (n = 3).

    Equals the residue o_{n-1} V at z = -n; the integral is convergent
    since the normal weight gains two orders of vanishing.
    """
    n = domain.dim
    if n != 3:
        raise UnsupportedDimension("power kernel identity implemented "
                                   "for n = 3")
    prof = _boundary_profile(domain)
    rv = finite_part_cumulative(prof, complex(2.0 - n))
    return float(complex(rv.finite_part).real) / (n - 2)


def scaled_domain(domain: Domain, lam: float) -> Domain:
    """The image of a builtin domain under x -> lam x."""
    meta = dict(domain.meta)
    name = meta.pop("name", None)
    if name == "disk":
        return builtin_shape("disk", {"r": meta["r"] * lam})
    if name == "ball":
        return builtin_shape("ball", {"n": meta["n"], "r": meta["r"] * lam})
    if name == "superellipse-domain":
        return builtin_shape("superellipse-domain",
                             {"p": meta["p"], "scale": meta["scale"] * lam})
    raise UnsupportedDimension(f"cannot scale domain {name!r}")
