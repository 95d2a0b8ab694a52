"""One-dimensional regularization engine.

Implements the two standard regularizations of the divergent integral
``int_0^d t^z phi(t) dt`` for smooth ``phi``:

* Hadamard's finite part: drop the divergent powers of the cutoff
  ``eps`` (and a possible ``log eps``) and keep the constant term.
* Meromorphic continuation in the exponent ``z``, whose simple poles at
  negative integers ``-k`` carry residue ``phi^{(k-1)}(0)/(k-1)!``.

Both views are exposed: closed-form finite parts of Taylor polynomials,
finite parts of sampled radial profiles, Laurent-coefficient extraction
from cutoff samples, and pole removal of a numerically continued
function.  All operations are pure functions of their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import IllConditionedFit, InsufficientJetOrder, NonSimplePole

__all__ = [
    "TaylorJet",
    "PsiProfile",
    "RegularizedValue",
    "LaurentSeries",
    "finite_part_jet",
    "finite_part_profile",
    "finite_part_cumulative",
    "cutoff_integral_cumulative",
    "laurent_fit",
    "pole_removed_value",
]

# A complex exponent this close to a negative integer is treated as a pole.
POLE_TOL = 1e-12

# |residue| below this fraction of the finite-part scale counts as zero
# when setting the has_log flag.
RESIDUE_REL_TOL = 1e-7

_GAUSS64 = np.polynomial.legendre.leggauss(64)


def _negative_integer_order(z: complex) -> int | None:
    """Return k >= 1 if z == -k for a (numerical) negative integer, else None."""
    zr = complex(z)
    k = round(-zr.real)
    if k >= 1 and abs(zr - (-k)) < POLE_TOL:
        return k
    return None


@dataclass(frozen=True)
class TaylorJet:
    """Truncated Taylor coefficients of a smooth radial profile at t = 0.

    ``coeffs[i]`` is the i-th Taylor coefficient ``f^(i)(0)/i!``.  The
    declared ``parity`` refers to the smooth extension of the profile
    through 0; coefficients at parity-forbidden orders are zeroed exactly
    on construction.
    """

    coeffs: tuple[float, ...]
    parity: str = "none"  # "even" | "odd" | "none"

    def __post_init__(self):
        if self.parity not in ("even", "odd", "none"):
            raise ValueError(f"unknown parity {self.parity!r}")
        coeffs = tuple(float(c) for c in self.coeffs)
        if len(coeffs) < 1:
            raise ValueError("jet needs at least one coefficient")
        if self.parity != "none":
            forbidden = 1 if self.parity == "even" else 0
            coeffs = tuple(
                0.0 if i % 2 == forbidden else c for i, c in enumerate(coeffs)
            )
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def __call__(self, t):
        """Evaluate the Taylor polynomial at t (scalar or array)."""
        return np.polynomial.polynomial.polyval(t, self.coeffs)

    def truncated(self, k: int) -> "TaylorJet":
        """Jet of the first k coefficients (k >= 1)."""
        k = max(1, min(k, self.order))
        return TaylorJet(self.coeffs[:k], parity=self.parity)

    def derivative(self) -> "TaylorJet":
        """Jet of the derivative profile; parity flips."""
        if self.order == 1:
            dc = (0.0,)
        else:
            dc = tuple((i + 1) * c for i, c in enumerate(self.coeffs[1:]))
        flip = {"even": "odd", "odd": "even", "none": "none"}
        return TaylorJet(dc, parity=flip[self.parity])

    def antiderivative(self) -> "TaylorJet":
        """Jet of the antiderivative vanishing at 0; parity flips."""
        ac = (0.0,) + tuple(c / (i + 1) for i, c in enumerate(self.coeffs))
        flip = {"even": "odd", "odd": "even", "none": "none"}
        return TaylorJet(ac, parity=flip[self.parity])

    def extended(self, extra: Sequence[float]) -> "TaylorJet":
        """Append higher-order coefficients (e.g. numerically fitted guards)."""
        return TaylorJet(self.coeffs + tuple(float(c) for c in extra),
                         parity=self.parity)


@dataclass(frozen=True)
class PsiProfile:
    """A radial profile t -> f(t) on [0, t_max], smooth on [0, d].

    ``values`` evaluates the profile (vectorized over t); ``jet`` is its
    Taylor jet at t = 0, possibly extended by fitted guard coefficients.
    Geometric profiles (volumes of growing intersections) are
    nondecreasing, vanish at 0, and are constant for t >= t_max; generic
    profiles used by the regularization tests need not satisfy this.
    """

    d: float
    t_max: float
    jet: TaylorJet
    values: Callable[[np.ndarray], np.ndarray]
    samples: np.ndarray | None = None  # optional (N, 2) grid for serialization

    def __post_init__(self):
        if not (0.0 < self.d <= self.t_max):
            raise ValueError("need 0 < d <= t_max")

    def __call__(self, t):
        return self.values(np.asarray(t, dtype=float))

    def check_monotone(self, n: int = 400, tol: float = 1e-9) -> bool:
        """Sampled check that the profile is nondecreasing on [0, t_max]."""
        t = np.linspace(0.0, self.t_max, n)
        v = self(t)
        return bool(np.all(np.diff(v) >= -tol * (abs(v[-1]) + 1.0)))


@dataclass
class RegularizedValue:
    """Finite part, residue, and log-term flag at one exponent z."""

    z: complex
    finite_part: complex
    residue: complex = 0.0
    has_log: bool = False
    diagnostics: dict = field(default_factory=dict)


@dataclass
class LaurentSeries:
    """Coefficients fitted to cutoff samples I(eps).

    The model is ``I(eps) ~ sum_j a_j eps^(z+j) + b log(eps) + c``.  The
    constant ``c`` is the numerical finite part.  With the cutoff
    convention used throughout this package the residue of the
    continuation equals ``-b``.
    """

    z: complex
    powers: tuple[float, ...]
    power_coeffs: tuple[float, ...]
    log_coeff: float
    constant: float
    condition_number: float
    residual: float

    @property
    def residue(self) -> float:
        return -self.log_coeff

    def coefficient(self, power: float, tol: float = 1e-9) -> float:
        """Fitted coefficient of eps**power (0.0 if the power is absent)."""
        for p, a in zip(self.powers, self.power_coeffs):
            if abs(p - power) < tol:
                return a
        return 0.0


def finite_part_jet(jet: TaylorJet, d: float, z: complex) -> RegularizedValue:
    """Closed-form finite part of int_0^d t^z P(t) dt for the jet polynomial P.

    Each monomial contributes ``c_j d^(z+j+1)/(z+j+1)``; the term with
    ``z+j+1 = 0`` contributes ``c_j log d`` instead.  Exact, no quadrature.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    z = complex(z)
    total = 0.0 + 0.0j
    for j, c in enumerate(jet.coeffs):
        e = z + j + 1
        if abs(e) < POLE_TOL:
            total += c * math.log(d)
        else:
            total += c * d ** e / e
    k = _negative_integer_order(z)
    residue = 0.0 + 0.0j
    if k is not None and k - 1 < jet.order:
        residue = complex(jet.coeffs[k - 1])
    scale = abs(total) + 1.0
    has_log = abs(residue) > RESIDUE_REL_TOL * scale
    return RegularizedValue(z=z, finite_part=total, residue=residue,
                            has_log=has_log)


def _quad(f: Callable, a: float, b: float, *, points=None,
          epsabs: float = 1e-13, epsrel: float = 1e-11) -> complex:
    """Adaptive quadrature that tolerates complex-valued integrands."""
    if a == b:
        return 0.0
    probe = np.asarray(f(np.asarray([(a + b) / 2.0])))
    kw = dict(limit=200, epsabs=epsabs, epsrel=epsrel)
    if points is not None:
        kw["points"] = [p for p in points if a < p < b]
        if not kw["points"]:
            del kw["points"]

    def scalar(g):
        return integrate.quad(lambda t: float(g(np.asarray([t]))[0]), a, b, **kw)[0]

    if np.iscomplexobj(probe):
        re = scalar(lambda t: np.real(f(t)))
        im = scalar(lambda t: np.imag(f(t)))
        return re + 1j * im
    return scalar(f)


def finite_part_profile(profile: PsiProfile, z: complex,
                        k: int | None = None) -> RegularizedValue:
    """Hadamard finite part of int_0^infty t^z phi(t) dt for a sampled profile.

    Splits ``t^z phi = t^z P_{k-1} + h_z`` with ``P_{k-1}`` the jet
    polynomial, takes the polynomial part in closed form, integrates the
    smooth remainder ``h_z`` on [0, d] numerically, and adds the
    convergent tail on [d, t_max].
    """
    z = complex(z)
    k_req = max(0, math.ceil(-z.real - POLE_TOL))
    if profile.jet.order < k_req:
        raise InsufficientJetOrder(
            f"jet order {profile.jet.order} < required {k_req} for z={z}")
    if k is None:
        # Two orders beyond integrability so the remainder is C^1 near 0.
        k = min(profile.jet.order, k_req + 2)
    k = max(k, min(k_req, profile.jet.order))

    jet_k = profile.jet.truncated(k) if k >= 1 else None
    if jet_k is not None:
        head = finite_part_jet(jet_k, profile.d, z)
        poly = jet_k
    else:
        head = RegularizedValue(z=z, finite_part=0.0)
        poly = None

    def h_z(t):
        p = poly(t) if poly is not None else 0.0
        return t ** z * (profile(t) - p)

    remainder = _quad(h_z, 0.0, profile.d)
    tail = 0.0
    if profile.t_max > profile.d:
        tail = _quad(lambda t: t ** z * profile(t), profile.d, profile.t_max)

    # Residue from the full jet (independent of the truncation order used).
    kk = _negative_integer_order(z)
    residue = 0.0 + 0.0j
    if kk is not None and kk - 1 < profile.jet.order:
        residue = complex(profile.jet.coeffs[kk - 1])

    fp = head.finite_part + remainder + tail
    scale = abs(fp) + 1.0
    return RegularizedValue(
        z=z, finite_part=fp, residue=residue,
        has_log=abs(residue) > RESIDUE_REL_TOL * scale,
        diagnostics={"subtraction_order": k})


def finite_part_cumulative(profile: PsiProfile, z: complex,
                           k: int | None = None,
                           t_lo: float | None = None) -> RegularizedValue:
    """Finite part of int_0^infty t^z Psi'(t) dt given the cumulative Psi.

    Works directly from values of Psi via integration by parts, avoiding
    numerical differentiation.  ``profile.jet`` is the jet of Psi itself;
    it should carry at least two coefficients beyond the subtraction
    order (fitted guards are fine) so the small-t region can be handled
    by the jet alone.
    """
    z = complex(z)
    phi_jet = profile.jet.derivative()
    k_req = max(0, math.ceil(-z.real - POLE_TOL))
    if phi_jet.order < k_req:
        raise InsufficientJetOrder(
            f"cumulative jet supports phi order {phi_jet.order} < {k_req}")
    if k is None:
        k = min(phi_jet.order, k_req + 2)
    k = max(k, k_req)

    d, t_max = profile.d, profile.t_max
    if t_lo is None:
        t_lo = d / 8.0

    head = finite_part_jet(phi_jet.truncated(max(k, 1)), d, z) if k >= 1 else \
        RegularizedValue(z=z, finite_part=0.0)

    # Q = antiderivative of the subtracted polynomial: Q(t) = sum_{i<=k} c_i t^i.
    c = profile.jet.coeffs
    Q = TaylorJet(c[: k + 1]) if k >= 0 else TaylorJet((0.0,))

    # int_0^d t^z (Psi' - Q') dt = -d^z Q(d) + d^z Psi(d)... assembled below via
    # parts:  = d^z (Psi(d) - Q(d)) - z int_0^d t^(z-1) (Psi - Q) dt.
    # On [0, t_lo] the difference Psi - Q is represented by the jet tail.
    tail_coeffs = c[k + 1:]
    small = 0.0 + 0.0j
    for i, ci in enumerate(tail_coeffs, start=k + 1):
        e = z + i
        small += ci * t_lo ** e / e  # e = z + i > 0 since i > k >= -Re z
    small *= -z

    def mid_integrand(t):
        return t ** (z - 1.0) * (profile(t) - Q(t))

    eng = getattr(profile, "engine", None)
    if eng is not None:
        # numeric profiles: point evaluations are expensive and carry
        # cancellation noise near t_lo; the integrand is analytic on
        # [t_lo, d], so fixed Gauss panels beat adaptive refinement
        xg, wg = _GAUSS64
        edges = t_lo * (d / t_lo) ** np.linspace(0.0, 1.0, 4)
        mid = 0.0 + 0.0j
        for a, b in zip(edges[:-1], edges[1:]):
            t = 0.5 * (b - a) * xg + 0.5 * (a + b)
            mid += 0.5 * (b - a) * np.sum(wg * mid_integrand(t))
        mid *= -z
    else:
        mid = -z * _quad(mid_integrand, t_lo, d)
    boundary = d ** z * (profile(np.asarray([d]))[0] - Q(d))

    tail = 0.0 + 0.0j
    if t_max > d:
        eng = getattr(profile, "engine", None)
        if eng is not None and hasattr(eng, "cutoff_energy"):
            # int_d^{t_max} t^z dPsi is the cutoff integral over
            # {dist > d}; the engine evaluates it on smooth runs directly,
            # bypassing the kinks of the aggregate Psi.
            tail = eng.cutoff_energy(z, d)
        else:
            tail = (t_max ** z * profile(np.asarray([t_max]))[0]
                    - d ** z * profile(np.asarray([d]))[0]
                    - z * _quad(lambda t: t ** (z - 1.0) * profile(t),
                                d, t_max))

    kk = _negative_integer_order(z)
    residue = 0.0 + 0.0j
    if kk is not None and kk - 1 < phi_jet.order:
        residue = complex(phi_jet.coeffs[kk - 1])

    fp = head.finite_part + boundary + small + mid + tail
    scale = abs(fp) + 1.0
    return RegularizedValue(
        z=z, finite_part=fp, residue=residue,
        has_log=abs(residue) > RESIDUE_REL_TOL * scale,
        diagnostics={"subtraction_order": k, "t_lo": t_lo})


def cutoff_integral_cumulative(profile: PsiProfile, z: complex,
                               eps: float) -> complex:
    """int_eps^infty t^z Psi'(t) dt from the cumulative profile Psi.

    Uses integration by parts so only values of Psi are needed; the
    profile is constant beyond t_max so the integral terminates there.
    """
    z = complex(z)
    t_max = profile.t_max
    if eps >= t_max:
        return 0.0
    val = (t_max ** z * profile(np.asarray([t_max]))[0]
           - eps ** z * profile(np.asarray([eps]))[0]
           - z * _quad(lambda t: t ** (z - 1.0) * profile(t), eps, t_max))
    return val


def laurent_fit(samples: Sequence[tuple[float, float]], z: complex,
                k_max: int, cond_bound: float = 1e10) -> LaurentSeries:
    """Least-squares Laurent-coefficient extraction from cutoff samples.

    Fits ``I(eps) ~ sum_{j=1..k_max} a_j eps^(z+j) + b log(eps) + c``.
    When z is a negative integer the power coinciding with eps^0 is
    dropped and the log column carries that slot.  Columns are scaled to
    unit norm before solving; the condition number of the scaled matrix
    is reported and checked against ``cond_bound``.
    """
    eps = np.asarray([s[0] for s in samples], dtype=float)
    vals = np.asarray([s[1] for s in samples], dtype=float)
    if eps.size < k_max + 3:
        raise ValueError("need at least k_max + 3 samples")
    z = complex(z)
    if abs(z.imag) > POLE_TOL:
        raise ValueError("laurent_fit supports real exponents only")
    zr = z.real

    powers = []
    include_log = False
    for j in range(1, k_max + 1):
        e = zr + j
        if abs(e) < POLE_TOL:
            include_log = True
        else:
            powers.append(e)

    cols = [eps ** p for p in powers]
    if include_log:
        cols.append(np.log(eps))
    cols.append(np.ones_like(eps))
    A = np.column_stack(cols)
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    As = A / scale
    coef_s, _, _, sv = np.linalg.lstsq(As, vals, rcond=None)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    if cond > cond_bound:
        raise IllConditionedFit(
            f"condition number {cond:.3g} exceeds bound {cond_bound:.3g}; "
            "widen the eps range")
    coef = coef_s / scale
    residual = float(np.linalg.norm(As @ coef_s - vals))

    npow = len(powers)
    log_coeff = float(coef[npow]) if include_log else 0.0
    constant = float(coef[-1])
    return LaurentSeries(
        z=z, powers=tuple(powers), power_coeffs=tuple(coef[:npow]),
        log_coeff=log_coeff, constant=constant,
        condition_number=float(cond), residual=residual)


def default_eps_schedule(d: float, n: int = 12, eps0: float | None = None,
                         ratio: float = 2.0 ** -0.5) -> np.ndarray:
    """Geometric cutoff schedule eps_i = eps0 * ratio^i (default eps0 = d/4)."""
    if eps0 is None:
        eps0 = d / 4.0
    return eps0 * ratio ** np.arange(n)


def pole_removed_value(continuation: Callable[[complex], complex], k: int,
                       residue: complex,
                       h_values: Sequence[float] = (1e-2, 5e-3, 2.5e-3),
                       check_tol: float = 1e-3) -> complex:
    """lim_{z->-k} (F(z) - residue/(z+k)) by symmetric evaluation.

    The symmetric average (F(-k+h) + F(-k-h))/2 cancels the simple-pole
    term and all odd orders, leaving the limit plus O(h^2); Richardson
    extrapolation in h^2 removes the leading corrections.  The residue
    estimated from the antisymmetric part is checked against the one
    supplied; a mismatch or diverging extrapolation raises NonSimplePole.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    hs = np.asarray(sorted(h_values, reverse=True), dtype=float)
    sym = []
    anti = []
    for h in hs:
        fp = continuation(-k + h)
        fm = continuation(-k - h)
        sym.append(0.5 * (fp + fm))
        anti.append(0.5 * (fp - fm) * h)
    sym = np.asarray(sym, dtype=complex)
    anti = np.asarray(anti, dtype=complex)

    # Divergence check: a non-simple pole makes the symmetric averages blow
    # up like 1/h^2 as h shrinks.
    scale = max(abs(sym[0]), abs(residue), 1.0)
    diffs = np.abs(np.diff(sym))
    if (len(diffs) >= 2 and diffs[-1] > 1.5 * diffs[0]
            and diffs[-1] > check_tol * scale):
        raise NonSimplePole("symmetric averages diverge; pole is not simple")

    def richardson(vals):
        vals = list(vals)
        level = vals
        m = 1
        while len(level) > 1:
            ratio = (hs[0] / hs[1]) ** (2 * m)
            level = [(ratio * level[i + 1] - level[i]) / (ratio - 1.0)
                     for i in range(len(level) - 1)]
            m += 1
        return level[0]

    res_est = richardson(anti)
    if abs(res_est - residue) > check_tol * scale:
        raise NonSimplePole(
            f"estimated residue {res_est:.6g} disagrees with supplied "
            f"{complex(residue):.6g}")
    value = richardson(sym)
    if abs(complex(value).imag) < 1e-300:
        value = complex(value).real
    return value
