"""Global solves and optimization for polynomials restricted to circles.

For n = 2 every question this package asks on a sphere |x| = r reduces to
univariate root-finding through the half-angle substitution
tau = tan(theta/2).  A polynomial p of total degree D restricted to the
circle becomes T(tau) / (1 + tau^2)^D with T polynomial of degree <= 2D, so
crossings, tangencies, and stationary points along the circle are all roots
of explicit polynomials.  Two rotated charts avoid the ill-conditioned region
near theta = pi.

This is what makes constrained minima reliable here: the minimizer of
|x| |grad f| on a fiber sits where the fiber is tangent to the circle, which
angle sampling cannot see but a companion matrix finds.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from polyfib.poly import Polynomial, gradient

TWO_PI = 2.0 * math.pi


def rotational_derivative(p: Polynomial) -> Polynomial:
    """d/dtheta of p along circles: x * dp/dy - y * dp/dx (exact)."""
    if p.nvars != 2:
        raise ValueError("rotational derivative is a planar operator")
    x = Polynomial.variable(2, 0)
    y = Polynomial.variable(2, 1)
    return x * p.partial(1) - y * p.partial(0)


def _tau_coefficients(p: Polynomial, r: float, reflected: bool) -> np.ndarray:
    """Ascending coeffs of (1+tau^2)^D * p(x(tau), y(tau)) on the circle |x|=r.

    Standard chart: x = r(1-t^2)/(1+t^2), y = 2rt/(1+t^2).  The reflected
    chart substitutes (-x, -y), i.e. covers angles near pi.
    """
    D = max(p.degree(), 0)
    one_minus = np.array([1.0, 0.0, -1.0])  # 1 - t^2, ascending
    one_plus = np.array([1.0, 0.0, 1.0])  # 1 + t^2
    two_t = np.array([0.0, 2.0])

    pow_minus = [np.array([1.0])]
    pow_plus = [np.array([1.0])]
    pow_two_t = [np.array([1.0])]
    for _ in range(D):
        pow_minus.append(np.convolve(pow_minus[-1], one_minus))
        pow_plus.append(np.convolve(pow_plus[-1], one_plus))
        pow_two_t.append(np.convolve(pow_two_t[-1], two_t))

    acc = np.zeros(2 * D + 1)
    for (i, j), coef in p.terms.items():
        c = float(coef) * r ** (i + j)
        if reflected and (i + j) % 2 == 1:
            c = -c
        part = np.convolve(np.convolve(pow_minus[i], pow_two_t[j]), pow_plus[D - i - j])
        acc[: len(part)] += c * part
    return acc


def _chart_roots(coeffs_ascending: np.ndarray, keep: float = 1.02) -> np.ndarray:
    cs = np.array(coeffs_ascending, dtype=float)
    scale = np.max(np.abs(cs))
    if scale == 0.0 or not np.isfinite(scale):
        return np.array([])
    cs /= scale
    nz = np.nonzero(np.abs(cs) > 1e-14)[0]
    if len(nz) == 0:
        return np.array([])
    cs = cs[: nz[-1] + 1]
    if len(cs) <= 1:
        return np.array([])
    roots = np.roots(cs[::-1])
    # Keep near-real roots loosely; the caller gates on the actual residual.
    real = roots[np.abs(roots.imag) <= 3e-6 * (1.0 + np.abs(roots.real))].real
    return real[np.abs(real) <= keep]


class CircleAnalyzer:
    """Reusable circle-restriction toolkit for one planar polynomial map.

    Precompiles f, its gradient, |grad f|^2, the rotational derivatives that
    define stationary angles of |grad f| and of the radial ratio
    <grad f, x>^2 / (r^2 |grad f|^2), and caches nothing per radius (the tau
    coefficients are cheap to rebuild).
    """

    def __init__(self, f: Polynomial):
        if f.nvars != 2:
            raise ValueError("CircleAnalyzer requires a polynomial in two variables")
        self.f = f
        fx, fy = gradient(f)
        self.fx, self.fy = fx, fy
        self._f = f.compiled()
        self._fabs = Polynomial(2, {e: abs(c) for e, c in f.terms.items()}).compiled()
        self._fx = fx.compiled()
        self._fy = fy.compiled()
        self._df_dtheta = rotational_derivative(f).compiled()
        self.gradnorm2 = fx * fx + fy * fy
        self._gradnorm2 = self.gradnorm2.compiled()
        self.gradnorm2_stat = rotational_derivative(self.gradnorm2)
        x = Polynomial.variable(2, 0)
        y = Polynomial.variable(2, 1)
        radial = x * fx + y * fy
        self.radial = radial
        self._radial = radial.compiled()
        a = radial * radial
        b = self.gradnorm2
        self.ratio_stat = rotational_derivative(a) * b - a * rotational_derivative(b)

    # -- root machinery -------------------------------------------------

    def _angles(self, p: Polynomial, r: float, value: float) -> list[float]:
        """All theta in [-pi, pi) with p = value on the circle of radius r."""
        if p.is_zero():
            return []
        shifted = p - value if value != 0.0 else p
        angles: list[float] = []
        for reflected in (False, True):
            taus = _chart_roots(_tau_coefficients(shifted, r, reflected))
            for t in taus:
                th = 2.0 * math.atan(t)
                if reflected:
                    th += math.pi
                angles.append(math.remainder(th, TWO_PI))
        angles.sort()
        out: list[float] = []
        for th in angles:
            if not out or min(
                abs(th - out[-1]), TWO_PI - abs(th - out[-1])
            ) > 1e-9:
                out.append(th)
        if len(out) > 1 and abs((out[0] + TWO_PI) - out[-1]) <= 1e-9:
            out.pop()
        return out

    def fiber_angles(self, r: float, value: float, polish: bool = True) -> list[float]:
        """Angles where f = value on the circle of radius r, Newton-polished.

        Tangential (double) contacts are kept; residual acceptance is scaled
        by the magnitude of f on the circle.
        """
        cand = self._angles(self.f, r, value)
        if not cand:
            return []
        out = []
        for th in cand:
            if polish:
                th = self._polish_fiber_angle(th, r, value)
            x, y = r * math.cos(th), r * math.sin(th)
            # Acceptance is scaled by the local term-magnitude sum, the honest
            # measure of what double precision can resolve at this point.
            scale = max(1.0, abs(value), self._fabs(abs(x), abs(y)))
            if abs(self._f(x, y) - value) <= 1e-9 * scale:
                out.append(th)
        return _dedup_angles(out)

    def _polish_fiber_angle(self, th: float, r: float, value: float) -> float:
        for _ in range(40):
            x, y = r * math.cos(th), r * math.sin(th)
            g = self._f(x, y) - value
            dg = self._df_dtheta(x, y)
            if dg == 0.0:
                break
            step = g / dg
            if abs(step) > 0.1:
                break
            th -= step
            if abs(step) < 1e-15:
                break
        return th

    def gradnorm_stationary_angles(self, r: float) -> list[float]:
        return self._angles(self.gradnorm2_stat, r, 0.0)

    def ratio_stationary_angles(self, r: float) -> list[float]:
        return self._angles(self.ratio_stat, r, 0.0)

    # -- evaluation helpers ----------------------------------------------

    def point(self, r: float, th: float) -> tuple[float, float]:
        return r * math.cos(th), r * math.sin(th)

    def f_at(self, r: float, th: float) -> float:
        return self._f(*self.point(r, th))

    def gradnorm_at(self, r: float, th: float) -> float:
        return math.sqrt(max(self._gradnorm2(*self.point(r, th)), 0.0))

    def radial_ratio_at(self, r: float, th: float) -> float:
        """|d_r f| / |grad f| at the circle point, in [0, 1]."""
        x, y = self.point(r, th)
        g2 = self._gradnorm2(x, y)
        if g2 <= 0.0:
            return 0.0
        val = abs(self._radial(x, y)) / (r * math.sqrt(g2))
        return min(val, 1.0)

    # -- constrained optimization on one circle ---------------------------

    def min_scaled_gradient_on_fiber(
        self, r: float, value: float
    ) -> tuple[float, tuple[float, float]] | None:
        """min of r |grad f| over {|x| = r, f = value}; None if infeasible."""
        angles = self.fiber_angles(r, value)
        if not angles:
            return None
        best, arg = math.inf, None
        for th in angles:
            v = r * self.gradnorm_at(r, th)
            if v < best:
                best, arg = v, self.point(r, th)
        return best, arg

    def min_scaled_gradient_on_slab(
        self, r: float, lo: float, hi: float
    ) -> tuple[float, tuple[float, float]] | None:
        """min of r |grad f| over {|x| = r, lo <= f <= hi}; None if empty.

        Candidates are the slab boundary crossings plus the stationary
        angles of |grad f|^2 along the circle, so the global minimum over
        the feasible arcs is attained at one of them.
        """
        cand = self.fiber_angles(r, lo) + self.fiber_angles(r, hi)
        cand += self.gradnorm_stationary_angles(r)
        if not cand and not (lo <= self.f_at(r, 0.0) <= hi):
            return None
        best, arg = math.inf, None
        for th in cand + [0.0, math.pi / 2, math.pi, -math.pi / 2]:
            fv = self.f_at(r, th)
            if lo - 1e-12 * max(1, abs(lo)) <= fv <= hi + 1e-12 * max(1, abs(hi)):
                v = r * self.gradnorm_at(r, th)
                if v < best:
                    best, arg = v, self.point(r, th)
        if arg is None:
            return None
        return best, arg

    def max_radial_ratio_on_slab(
        self, r: float, lo: float, hi: float
    ) -> tuple[float, tuple[float, float]] | None:
        """max of |d_r f|/|grad f| over {|x| = r, lo <= f <= hi}."""
        cand = self.fiber_angles(r, lo) + self.fiber_angles(r, hi)
        cand += self.ratio_stationary_angles(r)
        best, arg = -1.0, None
        for th in cand + [0.0, math.pi / 2, math.pi, -math.pi / 2]:
            fv = self.f_at(r, th)
            if lo - 1e-12 * max(1, abs(lo)) <= fv <= hi + 1e-12 * max(1, abs(hi)):
                v = self.radial_ratio_at(r, th)
                if v > best:
                    best, arg = v, self.point(r, th)
        if arg is None:
            return None
        return best, arg


def _dedup_angles(angles: Sequence[float], tol: float = 1e-9) -> list[float]:
    out: list[float] = []
    for th in sorted(angles):
        if not out or min(abs(th - out[-1]), TWO_PI - abs(th - out[-1])) > tol:
            out.append(th)
    if len(out) > 1 and min(abs(out[0] - out[-1]), TWO_PI - abs(out[0] - out[-1])) <= tol:
        out.pop()
    return out


def vertical_line_roots(f: Polynomial, x: float, value: float) -> list[float]:
    """Real y with f(x, y) = value, for planar f (exact coefficient build)."""
    if f.nvars != 2:
        raise ValueError("vertical_line_roots requires a planar polynomial")
    dy = max((e[1] for e in f.terms), default=0)
    coeffs = np.zeros(dy + 1)
    for (i, j), coef in f.terms.items():
        coeffs[j] += float(coef) * x**i
    coeffs[0] -= value
    from polyfib.poly import real_roots

    return real_roots(coeffs)


def roots_along_line(
    f: Polynomial, base: Sequence[float], direction: Sequence[float], value: float
) -> list[float]:
    """Real t with f(base + t * direction) = value, any dimension.

    Coefficients of the univariate restriction are recovered from
    evaluations at Chebyshev nodes, which is stable at desk-scale degrees.
    """
    base = np.asarray(base, dtype=float)
    direction = np.asarray(direction, dtype=float)
    d = max(f.degree(), 0)
    k = np.arange(d + 1)
    nodes = np.cos((2 * k + 1) * math.pi / (2 * (d + 1)))
    fn = f.compiled()
    pts = base[None, :] + nodes[:, None] * direction[None, :]
    vals = np.array([fn(*p) for p in pts]) - value
    coeffs = np.polynomial.polynomial.polyfit(nodes, vals, d)
    from polyfib.poly import real_roots

    return real_roots(coeffs)
