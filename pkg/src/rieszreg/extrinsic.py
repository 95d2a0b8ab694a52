"""Chord-distance profiles of shapes and their small-distance jets.

The central object is the cumulative pair profile

    Psi(t) = (mu x mu){ (x, y) : |x - y| <= t },

where mu is arclength (curves) or area (surfaces); for planar domain
boundaries a normal-weighted variant with density <n_x, n_y> is provided.
Energies are finite parts of int t^z dPsi(t), so everything downstream
only needs Psi values plus its Taylor jet at t = 0.

Profiles are computed by resolving, for each base point x, the exact
crossing parameters where |y - x| = t (vectorized bisection on a dense
parameter grid), then reading off the enclosed measure from spectrally
accurate cumulative antiderivatives.  Surfaces must be surfaces of
revolution: for those the azimuthal coordinate integrates in closed form
and only a one-dimensional crossing problem remains.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import optimize

from .errors import (FitUnstable, InvalidParams, UnsupportedDimension)
from .regularize import PsiProfile, TaylorJet
from .shapes import Curve, Domain, Surface

TWO_PI = 2.0 * math.pi

_GL64 = np.polynomial.legendre.leggauss(64)

__all__ = [
    "smoothness_radius", "pair_profile", "boundary_pair_profile",
    "domain_pair_profile", "psi_domain_jet",
    "point_jet", "aggregate_jet", "psi_pointwise", "b_jet_numeric",
    "fit_guard_coefficients",
]


def _fourier_antiderivative(samples: np.ndarray):
    """Antiderivative of a smooth 2pi-periodic function from samples.

    ``samples`` lives on the uniform grid 2 pi j / n, shape (n,) or
    (n, m).  Returns ``(F, period)`` with F(0) = 0 and
    F(s + 2 pi) = F(s) + period.
    """
    arr = np.asarray(samples, dtype=float)
    one_d = arr.ndim == 1
    if one_d:
        arr = arr[:, None]
    n = arr.shape[0]
    c = np.fft.rfft(arr, axis=0) / n
    mean = c[0].real.copy()
    k = np.arange(1, c.shape[0])
    coef = c[1:] * (2.0 / (1j * k))[:, None]
    if n % 2 == 0:
        coef[-1] *= 0.5  # the Nyquist mode is not doubled
    # smooth samples have rapidly decaying modes; drop the negligible ones
    mags = np.abs(coef).max(axis=1)
    scale = max(float(np.abs(mean).max()), float(mags.max()), 1e-300)
    keep = mags > 1e-16 * scale
    if keep.any():
        last = int(np.nonzero(keep)[0].max()) + 1
        k, coef = k[:last], coef[:last]
    else:
        k, coef = k[:1], coef[:1]
    osc0 = np.real(coef.sum(axis=0))

    def F(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        osc = np.real(np.exp(1j * np.outer(s, k)) @ coef)
        return (mean[None, :] * s[:, None] + osc - osc0[None, :])[
            :, 0] if one_d else \
            mean[None, :] * s[:, None] + osc - osc0[None, :]

    period = float(mean[0]) * TWO_PI if one_d else mean * TWO_PI
    return F, period


def _gauss(f, a, b, rule=_GL64):
    x, w = rule
    t = 0.5 * (b - a) * x + 0.5 * (a + b)
    return 0.5 * (b - a) * float(np.sum(w * f(t)))


def _gauss_sqrt_ends(f, a, b, rule=_GL64):
    """Gauss rule after a sine substitution clustering at both endpoints.

    Integrands with sqrt(v - a) / sqrt(b - v) behavior become analytic
    under v = mid + half * sin(s), so plain Gauss in s converges fast.
    """
    x, w = rule
    s = 0.5 * math.pi * x  # map [-1, 1] to [-pi/2, pi/2]
    v = 0.5 * (a + b) + 0.5 * (b - a) * np.sin(s)
    dv = 0.5 * (b - a) * np.cos(s) * 0.5 * math.pi
    return float(np.sum(w * f(v) * dv))


# ---------------------------------------------------------------------------
# smoothness radius


def _curve_kappa_max(curve: Curve, n: int = 1024) -> float:
    return float(curve.curvature(curve.grid(n)).max())


def smoothness_radius(shape) -> float:
    """Radius d below which the small-t jet of the profile is valid.

    Set by the curvature scale and the narrowest nonlocal neck: chords
    shorter than d always connect parameter-nearby points, so the local
    Taylor expansion of the profile applies on [0, d].
    """
    if isinstance(shape, Domain):
        return smoothness_radius(shape.boundary)
    if isinstance(shape, Curve):
        n = 1024
        th = shape.grid(n)
        kmax = float(shape.curvature(th).max())
        cand = [1.0 / kmax]
        # nonlocal pairs: arclength separation beyond a half turn
        sp = shape.speed(th)
        S = np.cumsum(sp) * TWO_PI / n
        L = S[-1]
        arc = np.abs(S[:, None] - S[None, :])
        arc = np.minimum(arc, L - arc)
        p = shape.point(th)
        chord = np.sqrt(((p[:, None, :] - p[None, :, :]) ** 2).sum(-1))
        mask = arc >= math.pi / kmax
        if mask.any():
            cand.append(float(chord[mask].min()))
        d = 0.4 * min(cand)
        return min(d, 0.45 * shape.diameter())
    if isinstance(shape, Surface):
        u, _, v, _ = shape.quad_grid(64, 64)
        if shape.v_polar:
            v = v  # Gauss nodes already avoid the poles
        uu, vv = np.meshgrid(u, v, indexing="ij")
        k1, k2 = shape.principal_curvatures(uu.ravel(), vv.ravel())
        kmax = float(np.maximum(np.abs(k1), np.abs(k2)).max())
        cand = [1.0 / kmax]
        # necks: close chords between points whose normals oppose
        p = shape.point(uu.ravel(), vv.ravel())
        nrm = shape.normal(uu.ravel(), vv.ravel())
        chord = np.sqrt(((p[:, None, :] - p[None, :, :]) ** 2).sum(-1))
        opp = (nrm @ nrm.T) < 0.5
        np.fill_diagonal(opp, False)
        far = opp & (chord > 1e-9)
        if far.any():
            cand.append(float(chord[far].min()))
        d = 0.4 * min(cand)
        return min(d, 0.45 * shape.diameter())
    raise UnsupportedDimension(f"no smoothness radius for {type(shape)!r}")


# ---------------------------------------------------------------------------
# pointwise jets


def point_jet(shape, *where) -> TaylorJet:
    """Taylor jet of the pointwise profile psi_x(t) at t = 0.

    Curves: psi_x = 2 t + (kappa^2 / 12) t^3 + O(t^5).
    Surfaces: psi_x = pi t^2 + (pi/32) (k1 - k2)^2 t^4 + O(t^6).
    """
    if isinstance(shape, Curve):
        kap = float(shape.curvature(np.atleast_1d(where[0]))[0])
        return TaylorJet((0.0, 2.0, 0.0, kap ** 2 / 12.0, 0.0), parity="odd")
    if isinstance(shape, Surface):
        u, v = (np.atleast_1d(where[0]), np.atleast_1d(where[1]))
        k1, k2 = shape.principal_curvatures(u, v)
        c4 = math.pi / 32.0 * float((k1[0] - k2[0]) ** 2)
        return TaylorJet((0.0, 0.0, math.pi, 0.0, c4, 0.0), parity="even")
    raise UnsupportedDimension("pointwise jets exist for curves and surfaces")


def boundary_normal_point_jet(curve: Curve, theta) -> TaylorJet:
    """Jet of the normal-weighted boundary profile of a planar domain.

    psi_rho,x(t) = 2 t - (kappa^2 / 4) t^3 + O(t^5) with the signed
    curvature of the (counterclockwise) boundary at x.
    """
    kap = float(curve.signed_curvature(np.atleast_1d(theta))[0])
    return TaylorJet((0.0, 2.0, 0.0, -kap ** 2 / 4.0, 0.0), parity="odd")


# ---------------------------------------------------------------------------
# curve engine


def _graded_edges(a: float, b: float, scale: float, cap: float) -> np.ndarray:
    """Panel edges on [a, b], dyadically refined toward both endpoints.

    Cutoff integrands have a boundary layer of the given scale at the
    crossing endpoints; dyadic panels keep every Gauss rule on a piece
    over which the integrand varies by a bounded factor.  Interior
    panels are capped at the given width.
    """
    L = b - a
    d = min(max(scale, 1e-9 * max(L, 1.0)), 0.25 * L)
    offs = [0.0]
    x = d
    while x < 0.5 * L:
        offs.append(x)
        x *= 2.0
    rel = np.asarray(offs)
    edges = np.unique(np.concatenate([a + rel, [a + 0.5 * L], b - rel]))
    out = [edges[0]]
    for u, v in zip(edges[:-1], edges[1:]):
        n = int(np.ceil((v - u) / cap))
        if n > 1:
            out.extend(np.linspace(u, v, n + 1)[1:])
        else:
            out.append(v)
    return np.asarray(out)


def _graded_panel_arrays(aa, bb, scale, cap):
    """Vector-assembled graded panels for all runs: (start, width, run)."""
    pa, wd, rw = [], [], []
    for q in range(len(aa)):
        e = _graded_edges(float(aa[q]), float(bb[q]), scale, cap)
        pa.append(e[:-1])
        wd.append(np.diff(e))
        rw.append(np.full(len(e) - 1, q, dtype=int))
    if not pa:
        z = np.zeros(0)
        return z, z, np.zeros(0, dtype=int)
    return np.concatenate(pa), np.concatenate(wd), np.concatenate(rw)


class _CurveEngine:
    """Crossing-resolved profiles psi_x(t) on a closed curve.

    Outer nodes are a subset of the dense inner grid so each base point
    coincides with a grid node and its own component is always detected.
    """

    def __init__(self, curve: Curve, weight: str = "arclength",
                 n_outer: int = 256, inner_factor: int = 32,
                 offset: float = 0.0):
        self.curve = curve
        self.weight = weight
        self.offset = float(offset)
        self.n_outer = n_outer
        self.n_inner = n_outer * inner_factor
        self.s_grid = TWO_PI * np.arange(self.n_inner) / self.n_inner
        phi = self.s_grid + self.offset
        self.P = curve.point(phi)
        step = inner_factor
        self.outer_idx = np.arange(0, self.n_inner, step)
        self.theta = phi[self.outer_idx]
        self.X = self.P[self.outer_idx]
        diff = self.X[:, None, :] - self.P[None, :, :]
        self.D = np.sqrt((diff ** 2).sum(-1))
        sp = curve.speed(phi)
        self.sp = sp
        self.w_outer = sp[self.outer_idx] * TWO_PI / n_outer
        if weight == "arclength":
            self.F, self.period = _fourier_antiderivative(sp)
        elif weight == "normal":
            nrm = curve.normal2d(phi)
            self.nrm = nrm
            self.F, self.period = _fourier_antiderivative(nrm * sp[:, None])
            self.n_out_vec = nrm[self.outer_idx]
        else:
            raise InvalidParams(f"unknown weight {weight!r}")

    def t_max(self) -> float:
        i, j = np.unravel_index(np.argmax(self.D), self.D.shape)
        th0 = np.array([self.theta[i], self.s_grid[j] + self.offset])

        def neg_dist(ab):
            p = self.curve.point(np.asarray(ab))
            return -float(np.linalg.norm(p[0] - p[1]))

        res = optimize.minimize(neg_dist, th0, method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-14})
        return max(float(self.D.max()), -float(res.fun))

    def psi_rows(self, t: float) -> np.ndarray:
        """psi_x(t) for every outer node, exact up to crossing refinement."""
        inside = self.D <= t
        flips = inside != np.roll(inside, -1, axis=1)
        i_arr, j_arr = np.nonzero(flips)
        h = TWO_PI / self.n_inner
        a = self.s_grid[j_arr]
        b = a + h
        state_a = inside[i_arr, j_arr]
        X = self.X[i_arr]
        for _ in range(45):
            m = 0.5 * (a + b)
            pm = self.curve.point(m + self.offset)
            in_m = np.linalg.norm(pm - X, axis=-1) <= t
            take_a = in_m == state_a
            a = np.where(take_a, m, a)
            b = np.where(take_a, b, m)
        c = 0.5 * (a + b)
        sign = np.where(state_a, 1.0, -1.0)  # inside before flip -> exit
        Fc = self.F(c)
        psi = np.zeros(self.n_outer)
        if self.weight == "arclength":
            if len(i_arr):
                np.add.at(psi, i_arr, sign * Fc)
            psi += self.period * inside[:, 0]
        else:
            if len(i_arr):
                contrib = sign * np.einsum("cd,cd->c", Fc,
                                           self.n_out_vec[i_arr])
                np.add.at(psi, i_arr, contrib)
            # the vector antiderivative is periodic: no wrap term
        return psi

    def aggregate(self, t: float) -> float:
        return float(np.dot(self.w_outer, self.psi_rows(t)))

    def aggregate_jet_coeffs(self):
        """Analytic jet of the aggregate, summed with the outer rule.

        Using the same rule as the aggregate itself makes scaling-defect
        computations benefit from cancellation of the rule error.
        """
        if self.weight == "arclength":
            kap = self.curve.curvature(self.theta)
            b1 = 2.0 * float(self.w_outer.sum())
            b3 = float(np.dot(self.w_outer, kap ** 2)) / 12.0
        else:
            kap = self.curve.signed_curvature(self.theta)
            b1 = 2.0 * float(self.w_outer.sum())
            b3 = -float(np.dot(self.w_outer, kap ** 2)) / 4.0
        return (0.0, b1, 0.0, b3, 0.0)

    def total(self) -> float:
        if self.weight == "arclength":
            return float(self.w_outer.sum()) * self.period
        return 0.0  # integral of <n_x, n_y> over all pairs vanishes

    def cutoff_energy(self, z: float, eps: float) -> float:
        """Weighted integral of dist^z over the pairs with dist > eps.

        Per outer node the outside set is a union of parameter runs
        bounded by bisection-refined crossings; each run is integrated
        with panelled Gauss rules, so the only error sources are the
        spectral outer rule and the analytic-panel Gauss error.
        """
        zc = complex(z)
        z = zc.real if zc.imag == 0.0 else zc
        cdtype = float if zc.imag == 0.0 else complex
        outside = self.D > eps
        flips = outside != np.roll(outside, -1, axis=1)
        i_arr, j_arr = np.nonzero(flips)
        h = TWO_PI / self.n_inner
        a = self.s_grid[j_arr]
        b = a + h
        state_a = outside[i_arr, j_arr]
        X = self.X[i_arr]
        for _ in range(45):
            m = 0.5 * (a + b)
            pm = self.curve.point(m + self.offset)
            out_m = np.linalg.norm(pm - X, axis=-1) > eps
            take_a = out_m == state_a
            a = np.where(take_a, m, a)
            b = np.where(take_a, b, m)
        c = 0.5 * (a + b)

        psi = np.zeros(self.n_outer, dtype=cdtype)
        counts = np.bincount(i_arr, minlength=self.n_outer)
        # crossing-free rows: whole period in or out; trapezoid is spectral
        free = np.nonzero((counts == 0) & outside[:, 0])[0]
        if len(free):
            base = self.D[free] ** z
            if self.weight == "arclength":
                w_in = self.sp[None, :]
            else:
                w_in = (self.nrm @ self.n_out_vec[free].T).T * \
                    self.sp[None, :]
            psi[free] = h * (base * w_in).sum(axis=1)

        if len(i_arr):
            order = np.lexsort((c, i_arr))
            i_s, c_s = i_arr[order], c[order]
            offs = np.concatenate([[0], np.cumsum(counts[counts > 0])])
            idx = np.arange(len(c_s))
            row_pos = np.searchsorted(offs, idx, side="right") - 1
            is_last = idx == offs[row_pos + 1] - 1
            nxt = np.where(is_last, c_s[offs[row_pos]] + TWO_PI,
                           c_s[np.minimum(idx + 1, len(c_s) - 1)])
            aa, bb = c_s, nxt
            mid = 0.5 * (aa + bb)
            pm = self.curve.point(mid + self.offset)
            keep = np.linalg.norm(pm - self.X[i_s], axis=-1) > eps
            keep &= bb - aa > 1e-12
            aa, bb, rr = aa[keep], bb[keep], i_s[keep]
            # graded panels: near the crossings dist ~ eps and dist^z
            # has a boundary layer of parameter width ~ eps / speed
            scale = eps / float(self.sp.max())
            pa, width, run_of = _graded_panel_arrays(aa, bb, scale, 0.8)
            rows = run_of
            half = 0.5 * width
            xg, wg = _GL64
            nodes = (pa + half)[:, None] + half[:, None] * xg[None, :]
            phi = nodes.ravel() + self.offset
            p = self.curve.point(phi)
            xrow = rr[rows]
            d = np.linalg.norm(
                p.reshape(nodes.shape + (-1,))
                - self.X[xrow][:, None, :], axis=-1)
            f = d ** z * self.curve.speed(phi).reshape(nodes.shape)
            if self.weight == "normal":
                f *= np.einsum("pgd,pd->pg",
                               self.curve.normal2d(phi).reshape(
                                   nodes.shape + (-1,)),
                               self.n_out_vec[xrow])
            np.add.at(psi, xrow, half * (f @ wg))
        val = np.dot(self.w_outer, psi)
        return float(val) if cdtype is float else complex(val)


# ---------------------------------------------------------------------------
# revolution-surface engine


class _RevolutionEngine:
    """Profiles on surfaces of revolution.

    With x fixed on the u = 0 meridian, the squared chord to y(u', v')
    is C(v') - D(v') cos u', so the u'-inclusion set is |u'| <= u* with
    cos u* = (C - t^2)/D; only a one-dimensional crossing problem in v'
    remains.  C and D follow from the chords at u' = 0 and u' = pi, so
    no shape-specific formulas are needed.
    """

    def __init__(self, surface: Surface, n_outer: int = 64,
                 n_grid: int = 1024):
        if not surface.revolution:
            raise UnsupportedDimension(
                "pair profiles need a surface of revolution")
        self.surface = surface
        self.polar = surface.v_polar
        if self.polar:
            x, w = np.polynomial.legendre.leggauss(n_outer)
            self.v_out = 0.5 * math.pi * (x + 1.0)
            w_base = 0.5 * math.pi * w
            self.v_grid = np.linspace(0.0, math.pi, n_grid + 1)
        else:
            self.v_out = TWO_PI * np.arange(n_outer) / n_outer
            w_base = np.full(n_outer, TWO_PI / n_outer)
            self.v_grid = TWO_PI * np.arange(n_grid) / n_grid
        self.n_outer = n_outer
        zeros_out = np.zeros_like(self.v_out)
        self.J_out = surface.area_element(zeros_out, self.v_out)
        self.w_outer = w_base * TWO_PI * self.J_out
        self.X = surface.point(zeros_out, self.v_out)
        zeros_g = np.zeros_like(self.v_grid)
        self.P0 = surface.point(zeros_g, self.v_grid)
        self.Ppi = surface.point(zeros_g + math.pi, self.v_grid)
        self.d0 = np.sqrt(((self.X[:, None, :]
                            - self.P0[None, :, :]) ** 2).sum(-1))
        self.dpi = np.sqrt(((self.X[:, None, :]
                             - self.Ppi[None, :, :]) ** 2).sum(-1))

    def t_max(self) -> float:
        i, j = np.unravel_index(np.argmax(self.dpi), self.dpi.shape)
        vv0 = np.array([self.v_out[i], self.v_grid[j]])

        def neg_dist(ab):
            px = self.surface.point(np.zeros(1), np.asarray([ab[0]]))[0]
            py = self.surface.point(np.asarray([math.pi]),
                                    np.asarray([ab[1]]))[0]
            return -float(np.linalg.norm(px - py))

        res = optimize.minimize(neg_dist, vv0, method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-14})
        return max(float(self.dpi.max()), -float(res.fun))

    def _dist(self, x, u_const: float, v):
        p = self.surface.point(np.full_like(v, u_const), v)
        return np.linalg.norm(p - x, axis=-1)

    def _refine_batch(self, x, u_const: float, va, vb, t):
        """Bisect dist(x_c, y(u_const, v)) = t on the brackets [va, vb]."""
        a, b = va.copy(), vb.copy()
        sa = (self._dist(x, u_const, va) - t) > 0
        for _ in range(45):
            m = 0.5 * (a + b)
            sm = (self._dist(x, u_const, m) - t) > 0
            take_a = sm == sa
            a = np.where(take_a, m, a)
            b = np.where(take_a, b, m)
        return 0.5 * (a + b)

    def psi_point(self, i: int, t: float) -> float:
        """psi_x(t) for outer node i: area of the chord-t neighborhood."""
        return float(self._psi_batch(np.array([i]), t)[0])

    def psi_rows(self, t: float) -> np.ndarray:
        return self._psi_batch(np.arange(self.n_outer), t)

    def _intervals(self, rows: np.ndarray, t: float):
        """Smooth v'-subintervals for each row at chord radius t.

        Breakpoints (where the chord range crosses t on either the near
        or the far meridian) are bisection-refined for all rows at once;
        returns (interval_row, a, b) with a, b the interval endpoints.
        """
        grid = self.v_grid
        lo, hi = (0.0, math.pi) if self.polar else (0.0, TWO_PI)
        idx_parts = [np.repeat(np.arange(len(rows)), 2)]
        val_parts = [np.tile([lo, hi], len(rows))]
        for mat, u_const in ((self.d0, 0.0), (self.dpi, math.pi)):
            s = mat[rows] > t
            if self.polar:
                ii, jj = np.nonzero(s[:, :-1] != s[:, 1:])
                va, vb = grid[jj], grid[jj + 1]
            else:
                ii, jj = np.nonzero(s != np.roll(s, -1, axis=1))
                va = grid[jj]
                vb = va + (grid[1] - grid[0])
            if len(ii):
                roots = self._refine_batch(self.X[rows[ii]], u_const,
                                           va, vb, t)
                idx_parts.append(ii)
                val_parts.append(roots)
        # the near meridian touches dist = 0 at v' = v_x: for small t the
        # inside window fits between grid nodes and leaves no sign flip,
        # so bracket it explicitly from the diagonal outward
        vx = self.v_out[rows]
        dv = grid[1] - grid[0]
        for side in (-1.0, 1.0):
            vb_ = np.clip(vx + side * dv, lo, hi)
            db = self._dist(self.X[rows], 0.0, vb_)
            sel = (db > t) & (np.abs(vb_ - vx) > 1e-15)
            if sel.any():
                roots = self._refine_batch(self.X[rows[sel]], 0.0,
                                           vx[sel], vb_[sel], t)
                idx_parts.append(np.nonzero(sel)[0])
                val_parts.append(roots)
        I = np.concatenate(idx_parts)
        V = np.concatenate(val_parts)
        order = np.lexsort((V, I))
        I, V = I[order], V[order]
        same = I[:-1] == I[1:]
        pos = np.nonzero(same)[0]
        int_row, a, b = I[pos], V[pos], V[pos + 1]
        keep = b - a > 1e-13
        return int_row[keep], a[keep], b[keep]

    def _psi_batch(self, rows: np.ndarray, t: float) -> np.ndarray:
        """psi_x(t) for the given outer rows, fully vectorized.

        The smooth subintervals are classified by their midpoint chord
        range and integrated with Gauss rules in one batch per regime.
        """
        t2 = t * t
        int_row, a, b = self._intervals(rows, t)
        vm = 0.5 * (a + b)
        xm = self.X[rows[int_row]]
        dm0 = self._dist(xm, 0.0, vm)
        dmpi = self._dist(xm, math.pi, vm)
        full = dmpi < t
        mixed = (~full) & (dm0 <= t)

        psi = np.zeros(len(rows))
        xg, wg = _GL64
        if full.any():
            af, bf, rf = a[full], b[full], int_row[full]
            half = 0.5 * (bf - af)
            nodes = half[:, None] * xg[None, :] + 0.5 * (af + bf)[:, None]
            J = self.surface.area_element(np.zeros_like(nodes.ravel()),
                                          nodes.ravel()).reshape(nodes.shape)
            np.add.at(psi, rf, TWO_PI * half * (J @ wg))
        if mixed.any():
            am, bm, rm = a[mixed], b[mixed], int_row[mixed]
            half = 0.5 * (bm - am)
            s = 0.5 * math.pi * xg
            nodes = 0.5 * (am + bm)[:, None] + half[:, None] * \
                np.sin(s)[None, :]
            dv = half[:, None] * (0.5 * math.pi * np.cos(s))[None, :]
            flat = nodes.ravel()
            xr = np.repeat(self.X[rows[rm]], len(xg), axis=0)
            dd0 = self._dist(xr, 0.0, flat)
            ddpi = self._dist(xr, math.pi, flat)
            C = 0.5 * (dd0 ** 2 + ddpi ** 2)
            Dco = np.maximum(0.5 * (ddpi ** 2 - dd0 ** 2), 1e-300)
            arg = np.clip((C - t2) / Dco, -1.0, 1.0)
            J = self.surface.area_element(np.zeros_like(flat), flat)
            integ = (2.0 * np.arccos(arg) * J).reshape(nodes.shape)
            np.add.at(psi, rm, (integ * dv) @ wg)
        return psi

    def cutoff_energy(self, z: float, eps: float) -> float:
        """Integral of dist^z over the pairs with dist > eps.

        The u'-integral over the outside part of each parallel circle,
        2 int_{u*}^{pi} (C - D cos u)^(z/2) du with cos u* clipped from
        (C - eps^2)/D, is done by an inner Gauss rule at every node of
        the sqrt-endpoint-mapped v'-rule on each smooth subinterval.
        """
        zc = complex(z)
        z = zc.real if zc.imag == 0.0 else zc
        cdtype = float if zc.imag == 0.0 else complex
        t2 = eps * eps
        rows = np.arange(self.n_outer)
        int_row, a, b = self._intervals(rows, eps)
        vm = 0.5 * (a + b)
        dmpi = self._dist(self.X[int_row], math.pi, vm)
        keep = dmpi >= eps  # fully-inside circles contribute nothing
        am, bm, rm = a[keep], b[keep], int_row[keep]
        psi = np.zeros(self.n_outer, dtype=cdtype)
        if len(am):
            # graded v-panels: near the interval ends the u*-boundary
            # layer has width ~ eps in v
            # grade well below eps: the partial-circle integral has a
            # sqrt cusp in v at the interval endpoints
            pa, width, run_of = _graded_panel_arrays(am, bm, 1e-5 * eps, 0.35)
            xg, wg = np.polynomial.legendre.leggauss(32)
            half = 0.5 * width
            nodes = (pa + half)[:, None] + half[:, None] * xg[None, :]
            flat = nodes.ravel()
            xr = np.repeat(self.X[rm[run_of]], len(xg), axis=0)
            dd0 = self._dist(xr, 0.0, flat)
            ddpi = self._dist(xr, math.pi, flat)
            C = 0.5 * (dd0 ** 2 + ddpi ** 2)
            Dco = np.maximum(0.5 * (ddpi ** 2 - dd0 ** 2), 1e-300)
            ustar = np.arccos(np.clip((C - t2) / Dco, -1.0, 1.0))
            # inner u-rule on [u*, pi], dyadic toward u* where the
            # integrand peaks at scale eps^2 / D
            iu = np.zeros(len(C), dtype=cdtype)
            uh_tot = math.pi - ustar
            m_lev = 24
            xi_edges = np.concatenate(
                [[0.0], 2.0 ** np.arange(1 - m_lev, 1, dtype=float)])
            xgi, wgi = np.polynomial.legendre.leggauss(16)
            for lo, hi in zip(xi_edges[:-1], xi_edges[1:]):
                hw = 0.5 * (hi - lo)
                xi = lo + hw * (xgi + 1.0)
                um = ustar[:, None] + uh_tot[:, None] * xi[None, :]
                base = np.maximum(C[:, None] - Dco[:, None] * np.cos(um),
                                  1e-300)
                iu += uh_tot * hw * (base ** (0.5 * z) @ wgi)
            J = self.surface.area_element(np.zeros_like(flat), flat)
            integ = (2.0 * iu * J).reshape(nodes.shape)
            np.add.at(psi, rm[run_of], half * (integ @ wg))
        val = np.dot(self.w_outer, psi)
        return float(val) if cdtype is float else complex(val)

    def aggregate(self, t: float) -> float:
        return float(np.dot(self.w_outer, self.psi_rows(t)))

    def aggregate_jet_coeffs(self):
        k1, k2 = self.surface.principal_curvatures(
            np.zeros_like(self.v_out), self.v_out)
        b2 = math.pi * float(self.w_outer.sum())
        b4 = math.pi / 32.0 * float(np.dot(self.w_outer, (k1 - k2) ** 2))
        return (0.0, 0.0, b2, 0.0, b4, 0.0)


# ---------------------------------------------------------------------------
# guard-coefficient fitting


def fit_guard_coefficients(values: Callable[[np.ndarray], np.ndarray],
                           jet: TaylorJet, d: float,
                           orders: tuple[int, ...],
                           n_samples: int = 40,
                           window: tuple[float, float] = (1.0 / 12.0, 0.5),
                           rel_resid_bound: float = 1e-3):
    """Fit the next jet coefficients from samples below the radius d.

    Returns the coefficients at ``orders`` fitted to values - jet on the
    window [d * window[0], d * window[1]].
    """
    t = np.geomspace(d * window[0], d * window[1], n_samples)
    resid = np.asarray(values(t), dtype=float) - jet(t)
    A = t[:, None] ** np.asarray(orders, dtype=float)[None, :]
    col = np.linalg.norm(A, axis=0)
    sol, *_ = np.linalg.lstsq(A / col, resid, rcond=None)
    coeffs = sol / col
    model = A @ coeffs
    err = np.linalg.norm(resid - model)
    scale = np.linalg.norm(resid) + 1e-300
    if err > rel_resid_bound * scale + 1e-11:
        raise FitUnstable(
            f"guard fit residual {err:.3g} vs signal {scale:.3g}")
    return tuple(float(c) for c in coeffs), float(err)


def _extend_with_guards(base: tuple, parity: str, guards: dict) -> TaylorJet:
    top = max(guards)
    coeffs = list(base) + [0.0] * (top + 1 - len(base))
    for p, cval in guards.items():
        coeffs[p] = cval
    return TaylorJet(tuple(coeffs), parity=parity)


def _memoized(fn):
    cache = {}

    def values(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        for i, ti in enumerate(t):
            key = float(ti)
            if key not in cache:
                cache[key] = fn(key)
            out[i] = cache[key]
        return out

    return values


# ---------------------------------------------------------------------------
# closed-form profiles


def _circle_pair_profile(r: float) -> PsiProfile:
    """Psi for a circle of radius r: 8 pi r^2 arcsin(t / 2r), exactly."""
    L = TWO_PI * r
    total = L * L

    def values(t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 2.0 * r, total,
                        8.0 * math.pi * r * r
                        * np.arcsin(np.clip(t / (2.0 * r), 0.0, 1.0)))

    # arcsin(u) = sum (2k)! / (4^k (k!)^2 (2k+1)) u^(2k+1), u = t / 2r
    coeffs = [0.0] * 10
    for k in range(5):
        p = 2 * k + 1
        a = math.factorial(2 * k) / (4 ** k * math.factorial(k) ** 2
                                     * (2 * k + 1))
        coeffs[p] = 8.0 * math.pi * r * r * a / (2.0 * r) ** p
    d = min(0.4 * r, 0.45 * 2.0 * r)
    return PsiProfile(d=d, t_max=2.0 * r,
                      jet=TaylorJet(tuple(coeffs), parity="odd"),
                      values=values)


def _sphere_pair_profile(r: float) -> PsiProfile:
    """Psi for a sphere of radius r: 4 pi^2 r^2 t^2 exactly (cap areas)."""
    total = (4.0 * math.pi * r * r) ** 2

    def values(t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 2.0 * r, total,
                        4.0 * math.pi ** 2 * r * r * t * t)

    jet = TaylorJet((0.0, 0.0, 4.0 * math.pi ** 2 * r * r, 0.0, 0.0, 0.0,
                     0.0), parity="even")
    return PsiProfile(d=0.4 * r, t_max=2.0 * r, jet=jet, values=values)


def _disk_boundary_profile(r: float) -> PsiProfile:
    """Normal-weighted boundary profile of a disk, exactly.

    Pointwise 2 t sqrt(1 - t^2 / 4 r^2); aggregated over the circle.
    """
    L = TWO_PI * r

    def values(t):
        t = np.asarray(t, dtype=float)
        u2 = np.clip(t * t / (4.0 * r * r), 0.0, 1.0)
        return L * 2.0 * t * np.sqrt(1.0 - u2) * (t < 2.0 * r)

    # sqrt(1 - u) = sum binom(1/2, k) (-u)^k
    coeffs = [0.0] * 10
    term = 1.0
    for k in range(5):
        coeffs[2 * k + 1] = L * 2.0 * term / (4.0 * r * r) ** k
        term *= -(0.5 - k) / (k + 1.0)
    return PsiProfile(d=0.4 * r, t_max=2.0 * r,
                      jet=TaylorJet(tuple(coeffs), parity="odd"),
                      values=values)


def _sphere_boundary_profile(r: float) -> PsiProfile:
    """Normal-weighted boundary profile of a ball in R^3, exactly.

    Pointwise pi (t^2 - t^4 / 4 r^2); aggregated over the sphere.
    """
    A = 4.0 * math.pi * r * r

    def values(t):
        t = np.asarray(t, dtype=float)
        return A * math.pi * (t * t - t ** 4 / (4.0 * r * r)) * (t < 2.0 * r)

    jet = TaylorJet((0.0, 0.0, A * math.pi, 0.0,
                     -A * math.pi / (4.0 * r * r), 0.0, 0.0), parity="even")
    return PsiProfile(d=0.4 * r, t_max=2.0 * r, jet=jet, values=values)


# ---------------------------------------------------------------------------
# public profile builders


_GUARD_ORDERS = {"odd": (5, 7), "even": (6, 8)}


def _build_profile(engine, base_coeffs: tuple, parity: str,
                   guard: bool) -> PsiProfile:
    shape = engine.curve if hasattr(engine, "curve") else engine.surface
    d = smoothness_radius(shape)
    t_max = engine.t_max()
    d = min(d, 0.45 * t_max)
    values = _memoized(engine.aggregate)
    jet = TaylorJet(base_coeffs, parity=parity)
    if guard:
        orders = _GUARD_ORDERS[parity]
        coeffs, _ = fit_guard_coefficients(values, jet, d, orders)
        jet = _extend_with_guards(base_coeffs, parity,
                                  dict(zip(orders, coeffs)))
    profile = PsiProfile(d=d, t_max=t_max, jet=jet, values=values)
    object.__setattr__(profile, "engine", engine)  # frozen dataclass
    return profile


def pair_profile(shape, *, exact: bool = True, guard: bool = True,
                 n_outer: int | None = None) -> PsiProfile:
    """Cumulative pair profile Psi of a closed curve or surface.

    ``exact=True`` uses closed forms for circles and spheres; otherwise
    (and for every other shape) the crossing-resolved machinery runs.
    """
    meta = getattr(shape, "meta", {})
    if exact and meta.get("name") == "circle":
        return _circle_pair_profile(meta["r"])
    if exact and meta.get("name") == "sphere":
        return _sphere_pair_profile(meta["r"])
    if isinstance(shape, Curve):
        eng = _CurveEngine(shape, weight="arclength",
                           n_outer=n_outer or 256)
        return _build_profile(eng, eng.aggregate_jet_coeffs(), "odd", guard)
    if isinstance(shape, Surface):
        eng = _RevolutionEngine(shape, n_outer=n_outer or 64)
        return _build_profile(eng, eng.aggregate_jet_coeffs(), "even", guard)
    raise UnsupportedDimension(
        "pair profiles exist for curves and surfaces; "
        "domains use boundary_pair_profile")


def boundary_pair_profile(domain: Domain, *, exact: bool = True,
                          guard: bool = True,
                          n_outer: int | None = None) -> PsiProfile:
    """Normal-weighted boundary profile Psi_rho of a compact domain."""
    meta = getattr(domain, "meta", {})
    if exact and meta.get("name") == "disk":
        return _disk_boundary_profile(meta["r"])
    if exact and meta.get("name") == "ball" and domain.dim == 3:
        return _sphere_boundary_profile(meta["r"])
    if domain.dim == 2:
        eng = _CurveEngine(domain.boundary, weight="normal",
                           n_outer=n_outer or 256)
        return _build_profile(eng, eng.aggregate_jet_coeffs(), "odd", guard)
    if domain.dim == 3:
        raise UnsupportedDimension(
            "numeric boundary profiles in R^3 cover only the ball")
    raise UnsupportedDimension(f"no boundary profile in dimension "
                               f"{domain.dim}")


def _sphere_measure(k: int) -> float:
    """Surface measure of the unit k-sphere in R^(k+1)."""
    from scipy.special import gamma
    return 2.0 * math.pi ** ((k + 1) / 2.0) / gamma((k + 1) / 2.0)


def _disk_pair_profile(r: float) -> PsiProfile:
    """Volume pair profile of a disk, in closed form.

    Integrating 2 pi t times the disk covariogram
    2 arccos(t/2) - (t/2) sqrt(4 - t^2) gives, for the unit disk,
    Psi(t) = 2 pi t^2 arccos(t/2) + 2 pi arcsin(t/2)
             - (pi t / 4)(2 + t^2) sqrt(4 - t^2).
    """
    def unit(t):
        t = np.clip(t, 0.0, 2.0)
        return (TWO_PI * t * t * np.arccos(0.5 * t)
                + TWO_PI * np.arcsin(0.5 * t)
                - 0.25 * math.pi * t * (2.0 + t * t) * np.sqrt(4.0 - t * t))

    def values(t):
        return r ** 4 * unit(np.asarray(t, dtype=float) / r)

    # t^2, t^3, t^5, t^7 of the closed form; even orders beyond 2 vanish
    coeffs = [0.0] * 9
    coeffs[2] = math.pi ** 2 * r * r
    coeffs[3] = -4.0 * math.pi * r / 3.0
    coeffs[5] = math.pi / (30.0 * r)
    coeffs[7] = math.pi / (1120.0 * r ** 3)
    return PsiProfile(d=r, t_max=2.0 * r,
                      jet=TaylorJet(tuple(coeffs)), values=values)


def _ball3_pair_profile(r: float) -> PsiProfile:
    """Volume pair profile of a ball in R^3: an exact polynomial.

    The covariogram of the unit ball is the cubic
    (4 pi / 3)(1 - 3t/4 + t^3/16), so Psi is polynomial on [0, 2].
    """
    def unit(t):
        t = np.clip(t, 0.0, 2.0)
        return (16.0 * math.pi ** 2 / 9.0 * t ** 3 - math.pi ** 2 * t ** 4
                + math.pi ** 2 / 18.0 * t ** 6)

    def values(t):
        return r ** 6 * unit(np.asarray(t, dtype=float) / r)

    coeffs = [0.0] * 8
    coeffs[3] = 16.0 * math.pi ** 2 / 9.0 * r ** 3
    coeffs[4] = -math.pi ** 2 * r * r
    coeffs[6] = math.pi ** 2 / 18.0
    return PsiProfile(d=r, t_max=2.0 * r,
                      jet=TaylorJet(tuple(coeffs)), values=values)


def _ball4_pair_profile(r: float) -> PsiProfile:
    """Volume pair profile of a ball in R^4.

    Psi'(t) = o_3 t^3 g(t) with the covariogram g(t) =
    V_4 I_x(5/2, 1/2), x = 1 - t^2/4 (regularized incomplete beta);
    the t integral is done from the plateau end, Psi = V^2 - tail,
    with a sin map absorbing the (2 - s)^(5/2) endpoint behavior.
    """
    from scipy.special import betainc
    v4 = math.pi ** 2 / 2.0
    total = v4 * v4

    def dpsi_unit(s):
        g = v4 * betainc(2.5, 0.5, np.clip(1.0 - 0.25 * s * s, 0.0, 1.0))
        return 2.0 * math.pi ** 2 * s ** 3 * g

    xg, wg = _GL64

    def unit(t):
        t = np.clip(np.atleast_1d(t), 0.0, 2.0)
        s_ang = 0.5 * math.pi * xg
        # small t: integrate the head directly (the plateau difference
        # would lose all relative accuracy to cancellation)
        head_half = 0.5 * t
        head_nodes = head_half[:, None] * (xg[None, :] + 1.0)
        head = head_half * (dpsi_unit(head_nodes) @ wg)
        mid, half = 0.5 * (t + 2.0), 0.5 * (2.0 - t)
        tail_nodes = mid[:, None] + half[:, None] * np.sin(s_ang)[None, :]
        dv = half[:, None] * (0.5 * math.pi * np.cos(s_ang))[None, :]
        tail = total - (dpsi_unit(tail_nodes) * dv) @ wg
        return np.where(t < 1.0, head, tail)

    def values(t):
        t = np.asarray(t, dtype=float)
        return r ** 8 * unit(t / r)

    coeffs = [0.0] * 9
    coeffs[4] = math.pi ** 4 / 4.0 * r ** 4
    coeffs[5] = -8.0 * math.pi ** 3 / 15.0 * r ** 3
    coeffs[7] = math.pi ** 3 / 21.0 * r
    return PsiProfile(d=r, t_max=2.0 * r,
                      jet=TaylorJet(tuple(coeffs)), values=values)


def domain_pair_profile(domain: Domain) -> PsiProfile:
    """Volume pair profile Psi_Omega of a compact domain.

    Closed forms exist for disks and balls (the only rotationally
    symmetric builtins); other domains go through the boundary route.
    """
    meta = getattr(domain, "meta", {})
    name = meta.get("name")
    if name == "disk":
        return _disk_pair_profile(meta["r"])
    if name == "ball" and domain.dim == 3:
        return _ball3_pair_profile(meta["r"])
    if name == "ball" and domain.dim == 4:
        return _ball4_pair_profile(meta["r"])
    raise UnsupportedDimension(
        "volume pair profiles exist for disks and balls; use the "
        "boundary profile for other domains")


def psi_domain_jet(domain: Domain) -> TaylorJet:
    """Leading jet of Psi_Omega from volume, area and curvature.

    Orders n and n+1 carry o_{n-1} V / n and
    -o_{n-2} A / ((n+1)(n-1)); order n+2 vanishes, and order n+3 is
    residue(-n-3)/(n+3) with the curvature-integral residue.
    """
    from .shapes import curvature_integrals
    n = domain.dim
    meta = getattr(domain, "meta", {})
    coeffs = [0.0] * (n + 4)
    coeffs[n] = _sphere_measure(n - 1) * domain.volume / n
    if n == 4:
        area = meta["boundary_volume"]
        r = meta["r"]
        # unit 3-sphere: H = 1/r, K = 3/r^2, so 27H^2 - 4K = 15/r^2
        hk = 15.0 / (r * r) * area
        coeffs[n + 3] = math.pi / 90.0 * hk / (n + 3)
    else:
        ci = curvature_integrals(domain)
        area = ci.total_measure
        if n == 2:
            coeffs[n + 3] = ci.integral_kappa_sq / 12.0 / (n + 3)
        else:
            coeffs[n + 3] = math.pi / 24.0 * ci.integral_3H2_minus_K / (n + 3)
    coeffs[n + 1] = -_sphere_measure(n - 2) * area / ((n + 1) * (n - 1))
    return TaylorJet(tuple(coeffs))


def psi_pointwise(shape, where, t, *, inner_factor: int = 8192,
                  n_grid: int = 1024) -> np.ndarray:
    """Pointwise profile psi_x(t) at the parameter point ``where``.

    Curves: ``where`` is the angle theta.  Revolution surfaces:
    ``where`` is the latitude v (the profile is u-independent).
    ``inner_factor`` / ``n_grid`` control the curve and surface grid
    resolutions; evaluating twice at different resolutions gives an
    error estimate.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if isinstance(shape, Curve):
        eng = _CurveEngine(shape, n_outer=1, inner_factor=inner_factor,
                           offset=float(where))
        return np.array([eng.psi_rows(ti)[0] for ti in t])
    if isinstance(shape, Surface):
        eng = _RevolutionEngine(shape, n_outer=2, n_grid=n_grid)
        eng.v_out = np.array([float(where), float(where)])
        eng.X = shape.point(np.zeros(2), eng.v_out)
        zeros_g = np.zeros_like(eng.v_grid)
        eng.d0 = np.sqrt(((eng.X[:, None, :]
                           - shape.point(zeros_g, eng.v_grid)[None]) ** 2
                          ).sum(-1))
        eng.dpi = np.sqrt(((eng.X[:, None, :]
                            - shape.point(zeros_g + math.pi,
                                          eng.v_grid)[None]) ** 2).sum(-1))
        return np.array([eng.psi_point(0, ti) for ti in t])
    raise UnsupportedDimension("pointwise profiles: curves and surfaces")


def aggregate_jet(shape) -> TaylorJet:
    """Analytic jet of the aggregate pair profile from curvature integrals.

    Curves: (2 L) t + (1/12) (int kappa^2 ds) t^3 + ...
    Surfaces: (pi A) t^2 + (pi/32) (int (k1 - k2)^2 dA) t^4 + ...
    """
    from .shapes import curvature_integrals
    ci = curvature_integrals(shape)
    if isinstance(shape, Curve):
        return TaylorJet((0.0, 2.0 * ci.total_measure, 0.0,
                          ci.integral_kappa_sq / 12.0, 0.0), parity="odd")
    if isinstance(shape, Surface):
        return TaylorJet((0.0, 0.0, math.pi * ci.total_measure, 0.0,
                          math.pi / 32.0 * ci.integral_umbilic_defect,
                          0.0), parity="even")
    raise UnsupportedDimension("aggregate jets: curves and surfaces")


def b_jet_numeric(profile: PsiProfile, orders=None, *,
                  constrain_parity: bool = True,
                  window: tuple[float, float] = (1e-3, 0.25),
                  n_samples: int = 60) -> dict:
    """Fit the leading jet coefficients of a profile from samples.

    With ``constrain_parity`` only the parity-allowed powers are in the
    basis; without it all powers are fitted, and the forbidden ones
    should come out numerically zero.  Returns {order: coefficient}.
    """
    parity = profile.jet.parity
    if orders is None:
        start = 1 if parity == "odd" else 2
        allowed = list(range(start, start + 8, 2))
        orders = allowed if constrain_parity else list(range(1, start + 8))
    t = np.geomspace(profile.t_max * window[0], profile.d * window[1] * 4.0,
                     n_samples)
    t = t[t <= profile.t_max]
    y = np.asarray(profile(t), dtype=float)
    A = t[:, None] ** np.asarray(orders, dtype=float)[None, :]
    col = np.linalg.norm(A, axis=0)
    # weight rows so small-t samples count despite their small magnitude
    w = 1.0 / np.maximum(np.abs(y), 1e-300)
    sol, *_ = np.linalg.lstsq((A / col) * w[:, None], y * w, rcond=None)
    coeffs = sol / col
    return {int(p): float(c) for p, c in zip(orders, coeffs)}
