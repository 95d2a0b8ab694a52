"""Named validation checks over the whole library.

Each check exercises one verifiable claim end to end — closed forms,
residue tables, scaling laws, invariance — and reports the worst
measured deviation against its tolerance.  The CLI ``validate`` command
and the acceptance test suite both run these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closed_energy import (beta_sphere_closed_form, energy, get_profile,
                            residue_table, scaling_check, sphere_beta_poles)
from .domain_energy import (ball_beta_poles, beta_ball_closed_form,
                            domain_energy, domain_energy_boundary,
                            domain_energy_direct, domain_residues,
                            fractional_perimeter, scaled_domain)
from .extrinsic import (b_jet_numeric, boundary_pair_profile,
                        domain_pair_profile, pair_profile)
from .moebius import homothety, invariance_check, inversion
from .regularize import (TaylorJet, cutoff_integral_cumulative,
                         default_eps_schedule, finite_part_cumulative,
                         finite_part_jet, laurent_fit)
from .shapes import builtin_shape, curvature_integrals, make_ellipsoid, \
    make_sphere, make_torus

TWO_PI = 2.0 * math.pi


@dataclass
class CheckResult:
    """Outcome of one validation check."""

    name: str
    passed: bool
    measured: float   # worst deviation observed (relative where sensible)
    tolerance: float
    details: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: measured {self.measured:.3e} "
                f"vs tolerance {self.tolerance:.3e}"
                + (f" ({self.details})" if self.details else ""))


def _rel(got, want) -> float:
    return abs(got - want) / max(abs(want), 1e-300)


def check_finite_part_exactness() -> CheckResult:
    """Pf of monomials against the closed forms d^(z+1)/(z+1), log d."""
    one = TaylorJet((1.0,))
    worst = 0.0
    for d in (0.5, 1.0, 2.0):
        for z in (-0.5, -2.5):
            got = complex(finite_part_jet(one, d, z).finite_part)
            worst = max(worst, abs(got - d ** (z + 1) / (z + 1)))
        got = complex(finite_part_jet(one, d, -1.0).finite_part)
        worst = max(worst, abs(got - math.log(d)))
    return CheckResult("finite-part exactness", worst < 1e-12, worst, 1e-12)


def check_basic_residues() -> CheckResult:
    """Residues of Pf int t^(-k) phi from fitted cutoff integrals."""
    from scipy import integrate
    cases = {
        "exp": (np.exp, [1.0, 1.0, 1.0]),
        "cos": (np.cos, [1.0, 0.0, -1.0]),
        "geom": (lambda t: 1.0 / (1.0 + t), [1.0, -1.0, 2.0]),
    }
    worst = 0.0
    for fn, derivs in cases.values():
        for k in (1, 2, 3):
            expected = derivs[k - 1] / math.factorial(k - 1)
            eps_grid = 0.1 * (2.0 ** -0.5) ** np.arange(18)
            samples = [
                (eps, integrate.quad(
                    lambda t: t ** float(-k) * float(fn(t)), eps, 1.0,
                    limit=200, epsabs=1e-14, epsrel=1e-12)[0])
                for eps in eps_grid]
            fit = laurent_fit(samples, z=float(-k), k_max=k + 5)
            worst = max(worst, abs(fit.residue - expected))
    return CheckResult("basic residue formula", worst < 1e-8, worst, 1e-8)


def check_circle_profile_jet() -> CheckResult:
    """Fitted small-t coefficients of the unit-circle profile: 2, 1/12."""
    prof = pair_profile(builtin_shape("circle", {"r": 1.0}), exact=False)
    fitted = b_jet_numeric(prof, orders=[1, 3, 5, 7])
    length = TWO_PI
    worst = max(_rel(fitted[1] / length, 2.0),
                _rel(fitted[3] / length, 1.0 / 12.0))
    return CheckResult("circle profile jet", worst < 1e-4, worst, 1e-4,
                       "coefficients at orders 1 and 3")


def check_circle_moebius_energy() -> CheckResult:
    """E(-2) of the unit circle against the value 4, two methods.

    With the chord-distance cutoff used throughout this package the
    two independent methods agree closely; the check compares their
    common value to 4.
    """
    circle = builtin_shape("circle", {"r": 1.0})
    a = complex(energy(circle, -2.0, method="hadamard").value).real
    b = complex(energy(circle, -2.0, method="cutoff").value).real
    agree = abs(a - b)
    dev = abs(a - 4.0)
    return CheckResult(
        "circle energy at -2", dev < 1e-4 and agree < 1e-6, dev, 1e-4,
        f"hadamard {a:.6g}, cutoff {b:.6g}, methods agree to {agree:.1e}")


def _parity_log_fit(samples, k: int, parity_start: int,
                    jmax: int = 12) -> float:
    """Log coefficient of a cutoff integral with known-parity expansion.

    Fits ``sum_j a_j eps^(j-k) + b log(1/eps) + c`` with j running over
    one parity class only; restricting the basis keeps the huge
    eps^(-k) terms from swamping the log coefficient.
    """
    eps = np.array([e for e, _ in samples])
    val = np.array([v for _, v in samples])
    x = eps / eps.max()
    js = [j for j in range(parity_start, jmax + 1, 2) if j != k]
    cols = [x ** (j - k) for j in js] + [np.log(1.0 / x), np.ones_like(x)]
    a = np.stack(cols, axis=1)
    s = np.abs(a).max(axis=0)
    coef, *_ = np.linalg.lstsq(a / s, val, rcond=None)
    return float((coef / s)[len(js)])


def _residue_check(shape, ks, parity_start: int, name: str) -> CheckResult:
    prof = get_profile(shape)
    tab = residue_table(shape)
    eng = prof.engine
    worst = 0.0
    for k in ks:
        # stay at moderate cutoffs: going much below d only amplifies
        # the singular terms relative to the log term being extracted
        eps_grid = [prof.d * 2.0 ** (-0.25 * i) for i in range(14)]
        samples = [(e, complex(eng.cutoff_energy(float(-k), e)).real)
                   for e in eps_grid]
        got = _parity_log_fit(samples, k, parity_start)
        worst = max(worst, _rel(got, tab[-k]))
    return CheckResult(name, worst < 1e-3, worst, 1e-3)


def check_knot_residues() -> CheckResult:
    """Ellipse(2,1): fitted log coefficients vs 2L and (1/4) int kappa^2."""
    ellipse = builtin_shape("ellipse", {"a": 2.0, "b": 1.0})
    return _residue_check(ellipse, (1, 3), 1, "knot residues")


def check_surface_residues() -> CheckResult:
    """Torus(2, 0.5): cutoff-fitted residues vs curvature integrals."""
    return _residue_check(make_torus(2.0, 0.5), (2, 4), 2,
                          "surface residues")


def check_closed_forms() -> CheckResult:
    """Sphere and ball Beta closed forms vs direct quadrature + poles."""
    worst = 0.0
    sphere = make_sphere(1.0)
    sprof = pair_profile(sphere, exact=False)
    for z in (-0.5, -1.0, -1.5, -2.5, -3.0):
        got = complex(energy(sphere, z, profile=sprof).value).real
        worst = max(worst, _rel(got, beta_sphere_closed_form(2, z)))
    ball = builtin_shape("ball", {"n": 3, "r": 1.0})
    vol = domain_pair_profile(ball)
    for z in (-0.5, -1.5, -2.0, -2.5, -5.0):
        got = complex(finite_part_cumulative(vol, complex(z)).finite_part)
        worst = max(worst, _rel(got.real, beta_ball_closed_form(3, z)))
    pole_ok = (len(sphere_beta_poles(2)) == 1
               and len(ball_beta_poles(3)) == 3
               and len(ball_beta_poles(5)) == 4)
    return CheckResult(
        "sphere/ball closed forms", worst < 1e-6 and pole_ok, worst, 1e-6,
        "pole counts " + ("match" if pole_ok else "MISMATCH"))


def check_boundary_identity() -> CheckResult:
    """Boundary double integral vs volume route; sign bridge at -2.5."""
    worst = 0.0
    for dom in (builtin_shape("disk", {"r": 1.0}),
                builtin_shape("ball", {"n": 3, "r": 1.0})):
        for z in (0.0, -0.5, -1.0):
            a = complex(domain_energy_direct(dom, z).value)
            b = complex(domain_energy_boundary(dom, z).value)
            worst = max(worst, _rel(b, a))
    passed = worst < 1e-6
    disk = builtin_shape("disk", {"r": 1.0})
    vol = domain_pair_profile(disk)
    cont = complex(finite_part_cumulative(vol, complex(-2.5)).finite_part)
    bridge = _rel(fractional_perimeter(disk, -2.5), -cont.real)
    return CheckResult("boundary-integral identity",
                       passed and bridge < 1e-5, max(worst, bridge), 1e-5,
                       f"routes {worst:.1e}, sign bridge {bridge:.1e}")


def check_domain_residues() -> CheckResult:
    """First three domain poles: curvature formulas vs cutoff fits."""
    worst = 0.0
    for dom in (builtin_shape("disk", {"r": 1.0}),
                builtin_shape("ball", {"n": 3, "r": 1.0})):
        vol = domain_pair_profile(dom)
        for k, want in domain_residues(dom).items():
            eps_grid = default_eps_schedule(vol.d, 18)
            samples = [
                (e, complex(cutoff_integral_cumulative(
                    vol, float(k), e)).real) for e in eps_grid]
            fit = laurent_fit(samples, z=float(k), k_max=-k + 5)
            worst = max(worst, _rel(fit.residue, want))
    return CheckResult("domain residues", worst < 1e-3, worst, 1e-3)


def check_moebius_invariance() -> CheckResult:
    """Curve and domain inversions plus the surface homothety defect."""
    ellipse = builtin_shape("ellipse", {"a": 2.0, "b": 1.0})
    ratios = []
    ok = True
    for center in ((4.0, 1.0), (-1.0, 3.5)):
        out = invariance_check(ellipse, -2.0, inversion(center, 1.0))
        ok = ok and out["passed"]
        ratios.append(out["defect"] / out["bound"])
    sup = builtin_shape("superellipse-domain", {"p": 4.0})
    out = invariance_check(sup, -4.0, inversion((3.0, 0.5), 1.0))
    ok = ok and out["passed"]
    ratios.append(out["defect"] / out["bound"])
    surf = make_ellipsoid(2.0, 1.0, 1.0)
    out = invariance_check(surf, -4.0, homothety(2.0))
    ci = curvature_integrals(surf)
    pred = math.pi * math.log(2.0) / 8.0 * ci.integral_umbilic_defect
    defect_rel = _rel(out["defect"], pred)
    ok = ok and defect_rel < 1e-3
    worst = max(max(ratios), defect_rel)
    return CheckResult("moebius invariance", ok, worst, 1.0,
                       f"defect/bound ratios {[f'{r:.2g}' for r in ratios]}, "
                       f"homothety defect rel {defect_rel:.1e}")


def check_scaling_law() -> CheckResult:
    """E_(cM)(z) = c^(2m+z) (E + log c R) for each shape class."""
    worst = 0.0
    for shape in (builtin_shape("ellipse", {"a": 2.0, "b": 1.0}),
                  make_torus(2.0, 0.5)):
        for lam, z in ((2.0, -1.5), (0.5, -3.0)):
            out = scaling_check(shape, z, lam)
            worst = max(worst, out["defect"] / abs(out["predicted"]))
    disk = builtin_shape("disk", {"r": 1.0})
    for lam, z in ((2.0, -1.5), (0.5, -3.0)):
        rep0 = domain_energy(disk, z)
        rep1 = domain_energy(scaled_domain(disk, lam), z)
        anomaly = complex(rep0.residue) * math.log(lam) if rep0.has_log \
            else 0.0
        predicted = lam ** (4.0 + z) * (complex(rep0.value) + anomaly)
        worst = max(worst,
                    abs(complex(rep1.value) - predicted) / abs(predicted))
    return CheckResult("scaling law", worst < 1e-4, worst, 1e-4)


def check_parity() -> CheckResult:
    """Parity-forbidden fitted coefficients vanish across the catalog."""
    worst = 0.0
    shapes = [builtin_shape("circle", {"r": 1.0}),
              builtin_shape("ellipse", {"a": 2.0, "b": 1.0}),
              builtin_shape("trefoil", {}),
              make_sphere(1.0),
              make_torus(2.0, 0.5),
              make_ellipsoid(2.0, 1.0, 1.0)]
    # compare coefficients scale-free: c_m d^(m-start) all have the
    # dimensions of the leading coefficient
    for shape in shapes:
        prof = pair_profile(shape, exact=False)
        start = 1 if prof.jet.parity == "odd" else 2
        fitted = b_jet_numeric(prof, constrain_parity=False)
        lead = abs(fitted[start])
        for order, c in fitted.items():
            if (order - start) % 2 == 1:
                worst = max(worst,
                            abs(c) * prof.d ** (order - start) / lead)
    # planar domain boundary profile: same odd parity as curves
    sup = builtin_shape("superellipse-domain", {"p": 4.0})
    prof = boundary_pair_profile(sup)
    fitted = b_jet_numeric(prof, constrain_parity=False)
    lead = abs(fitted[1])
    for order, c in fitted.items():
        if order % 2 == 0:
            worst = max(worst, abs(c) * prof.d ** (order - 1) / lead)
    # volume profiles: beyond order n only odd offsets n+1+2j survive
    for dom, forbidden in ((builtin_shape("disk", {"r": 1.0}), (4, 6)),
                           (builtin_shape("ball", {"n": 3, "r": 1.0}),
                            (5, 7))):
        vol = domain_pair_profile(dom)
        n = dom.dim
        orders = list(range(n, n + 10))
        t = np.geomspace(vol.d * 1e-3, vol.d * 0.5, 80)
        y = np.asarray(vol(t), dtype=float)
        A = t[:, None] ** np.asarray(orders, float)[None, :]
        col = np.linalg.norm(A, axis=0)
        w = 1.0 / np.maximum(np.abs(y), 1e-300)
        sol, *_ = np.linalg.lstsq((A / col) * w[:, None], y * w, rcond=None)
        coeffs = dict(zip(orders, sol / col))
        lead = abs(coeffs[n])
        for order in forbidden:
            worst = max(worst,
                        abs(coeffs[order]) * vol.d ** (order - n) / lead)
    return CheckResult("parity of fitted coefficients", worst < 1e-6,
                       worst, 1e-6)


ALL_CHECKS = [
    check_finite_part_exactness,
    check_basic_residues,
    check_circle_profile_jet,
    check_circle_moebius_energy,
    check_knot_residues,
    check_surface_residues,
    check_closed_forms,
    check_boundary_identity,
    check_domain_residues,
    check_moebius_invariance,
    check_scaling_law,
    check_parity,
]


def run_all(names: list[str] | None = None) -> list[CheckResult]:
    """Run the validation checks (all, or those whose name matches)."""
    out = []
    for fn in ALL_CHECKS:
        label = fn.__name__.removeprefix("check_").replace("_", " ")
        if names and not any(n.replace("-", " ") in label for n in names):
            continue
        out.append(fn())
    return out
