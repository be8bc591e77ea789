"""Tests for the exact polynomial core."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyfib.poly import (
    ParseError,
    Polynomial,
    gradient,
    hessian,
    homogeneous_components,
    parse_polynomial,
    radial_spherical_split,
    real_roots,
    resultant_bivariate,
    univariate_gcd,
)

XY = ["x", "y"]
KTZ_TEXT = "-y*(2*x^2*y^2 - 9*x*y + 12)"


def random_polynomial(rng, nvars=2, degree=5, nterms=6):
    terms = {}
    for _ in range(nterms):
        exp = tuple(int(e) for e in rng.integers(0, degree + 1, size=nvars))
        if sum(exp) > degree:
            continue
        terms[exp] = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5)))
    return Polynomial(nvars, terms)


class TestParse:
    def test_simple_sum(self):
        p = parse_polynomial("x^2 + y^2", XY)
        assert p.terms == {(2, 0): 1, (0, 2): 1}
        assert p.degree() == 2

    def test_ktz_expansion(self):
        # hand expansion: -y(2x^2y^2 - 9xy + 12) = -2x^2y^3 + 9xy^2 - 12y
        p = parse_polynomial(KTZ_TEXT, XY)
        assert p.terms == {(2, 3): -2, (1, 2): 9, (0, 1): -12}
        assert p.degree() == 5

    def test_degree_readoff(self):
        p = parse_polynomial("x + x^2*y", XY)
        assert p.degree() == 3
        assert len(p.terms) == 2

    def test_decimal_literals_exact(self):
        p = parse_polynomial("0.5*x + 0.25", XY)
        assert p.terms == {(1, 0): Fraction(1, 2), (0, 0): Fraction(1, 4)}

    def test_rational_literal(self):
        p = parse_polynomial("3/2*x^2 - 1/3", XY)
        assert p.terms == {(2, 0): Fraction(3, 2), (0, 0): Fraction(-1, 3)}

    def test_unicode_minus(self):
        p = parse_polynomial("x − y", XY)
        assert p.terms == {(1, 0): 1, (0, 1): -1}

    def test_double_star_power(self):
        assert parse_polynomial("x**3", XY) == parse_polynomial("x^3", XY)

    def test_syntax_error_position(self):
        with pytest.raises(ParseError) as err:
            parse_polynomial("x^2 + + ", XY)
        assert err.value.position > 0

    def test_unknown_variable(self):
        with pytest.raises(ParseError, match="unknown variable"):
            parse_polynomial("x + t", XY)

    def test_negative_exponent_rejected(self):
        with pytest.raises(ParseError, match="nonnegative"):
            parse_polynomial("x^-2", XY)

    def test_fractional_exponent_rejected(self):
        with pytest.raises(ParseError, match="integer"):
            parse_polynomial("x^1.5", XY)

    def test_stray_division_rejected(self):
        with pytest.raises(ParseError, match="integer literals"):
            parse_polynomial("x/2", XY)

    def test_roundtrip_ktz(self):
        p = parse_polynomial(KTZ_TEXT, XY)
        assert parse_polynomial(p.to_text(), XY).terms == p.terms

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_roundtrip_random(self, seed):
        rng = np.random.default_rng(seed)
        p = random_polynomial(rng)
        assert parse_polynomial(p.to_text(), XY) == p


class TestEvaluation:
    def test_exact_matches_float_battery(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            p = random_polynomial(rng, nvars=2, degree=5)
            for _ in range(10):
                pt = [
                    Fraction(int(rng.integers(-1000, 1000)), int(rng.integers(1, 7)))
                    for _ in range(2)
                ]
                exact = float(p.eval_exact(pt))
                approx = p.eval_float([float(v) for v in pt])
                scale = max(1.0, abs(exact))
                assert abs(exact - approx) <= 1e-10 * scale

    def test_compiled_broadcasts(self):
        p = parse_polynomial("x^2*y - 3*y", XY)
        xs = np.linspace(-2, 2, 11)
        ys = np.linspace(0, 1, 11)
        vals = p.compiled()(xs, ys)
        expected = xs**2 * ys - 3 * ys
        assert np.allclose(vals, expected, rtol=1e-13)


class TestCalculus:
    def test_gradient_simple(self):
        f = parse_polynomial("x^2 + y^2", XY)
        gx, gy = gradient(f)
        assert gx == parse_polynomial("2*x", XY)
        assert gy == parse_polynomial("2*y", XY)

    def test_gradient_linear(self):
        f = parse_polynomial("x", XY)
        gx, gy = gradient(f)
        assert gx == Polynomial.constant(2, 1)
        assert gy.is_zero()

    def test_gradient_ktz(self):
        # term-by-term differentiation of -2x^2y^3 + 9xy^2 - 12y
        f = parse_polynomial(KTZ_TEXT, XY)
        gx, gy = gradient(f)
        assert gx == parse_polynomial("-4*x*y^3 + 9*y^2", XY)
        assert gy == parse_polynomial("-6*x^2*y^2 + 18*x*y - 12", XY)

    def test_hessian_simple(self):
        f = parse_polynomial("x^2 + y^2", XY)
        h = hessian(f)
        assert h[0][0] == Polynomial.constant(2, 2)
        assert h[1][1] == Polynomial.constant(2, 2)
        assert h[0][1].is_zero()

    def test_hessian_offdiag(self):
        f = parse_polynomial("x*y", XY)
        h = hessian(f)
        assert h[0][1] == Polynomial.constant(2, 1)
        assert h[0][0].is_zero()

    def test_gradient_hessian_match_finite_differences(self):
        rng = np.random.default_rng(11)
        step = 1e-4
        for _ in range(5):
            f = random_polynomial(rng, nvars=2, degree=3)
            grads = gradient(f)
            hess = hessian(f)
            for _ in range(4):
                pt = rng.uniform(-10, 10, size=2)
                for i in range(2):
                    e = np.zeros(2)
                    e[i] = step
                    fd = (f.eval_float(pt + e) - f.eval_float(pt - e)) / (2 * step)
                    ex = grads[i].eval_float(pt)
                    assert abs(fd - ex) <= 1e-6 * max(1.0, abs(ex))
                    for j in range(2):
                        ej = np.zeros(2)
                        ej[j] = step
                        fdh = (
                            grads[i].eval_float(pt + ej) - grads[i].eval_float(pt - ej)
                        ) / (2 * step)
                        exh = hess[i][j].eval_float(pt)
                        assert abs(fdh - exh) <= 1e-6 * max(1.0, abs(exh))


class TestHomogeneous:
    def test_readoff(self):
        f = parse_polynomial("x + x^2*y", XY)
        comps = homogeneous_components(f)
        assert comps[3] == parse_polynomial("x^2*y", XY)
        assert comps[2].is_zero()
        assert comps[1] == parse_polynomial("x", XY)
        assert comps[0].is_zero()

    def test_ktz_components(self):
        f = parse_polynomial(KTZ_TEXT, XY)
        comps = homogeneous_components(f)
        assert comps[5] == parse_polynomial("-2*x^2*y^3", XY)
        assert comps[4].is_zero()
        assert comps[3] == parse_polynomial("9*x*y^2", XY)
        assert comps[2].is_zero()
        assert comps[1] == parse_polynomial("-12*y", XY)

    def test_constant(self):
        f = parse_polynomial("7", XY)
        comps = homogeneous_components(f)
        assert comps == [Polynomial.constant(2, 7)]

    def test_sum_and_euler_identity(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            nvars = int(rng.integers(2, 4))
            f = random_polynomial(rng, nvars=nvars, degree=5, nterms=7)
            comps = homogeneous_components(f)
            total = Polynomial.zero(nvars)
            for c in comps:
                total = total + c
            assert total == f
            for k, comp in enumerate(comps):
                if comp.is_zero():
                    continue
                grads = gradient(comp)
                for _ in range(20):
                    pt = rng.uniform(-2, 2, size=nvars)
                    lhs = sum(g.eval_float(pt) * pt[i] for i, g in enumerate(grads))
                    rhs = k * comp.eval_float(pt)
                    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))


class TestRadialSplit:
    def test_radial_field(self):
        f = parse_polynomial("x^2 + y^2", XY)
        s = radial_spherical_split(f, (3.0, 4.0))
        assert abs(s.radial - 10.0) < 1e-12
        assert np.allclose(s.spherical, 0.0, atol=1e-12)

    def test_linear_field(self):
        f = parse_polynomial("x", XY)
        s = radial_spherical_split(f, (0.0, 2.0))
        assert abs(s.radial) < 1e-12
        assert np.allclose(s.spherical, [1.0, 0.0], atol=1e-12)

    def test_ktz_reconstruction(self):
        f = parse_polynomial(KTZ_TEXT, XY)
        s = radial_spherical_split(f, (1.0, 1.0))
        x = np.array([1.0, 1.0])
        recon = s.radial * x / np.linalg.norm(x) + s.spherical
        assert np.allclose(recon, [5.0, 0.0], atol=1e-12)
        assert abs(s.spherical @ x) <= 1e-12 * max(
            1.0, float(np.linalg.norm(s.spherical)) * float(np.linalg.norm(x))
        )

    def test_zero_point_rejected(self):
        f = parse_polynomial("x^2 + y^2", XY)
        with pytest.raises(ValueError):
            radial_spherical_split(f, (0.0, 0.0))

    def test_split_invariants_random(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            f = random_polynomial(rng, nvars=3, degree=4, nterms=8)
            pt = rng.uniform(-5, 5, size=3)
            if np.linalg.norm(pt) < 1e-3:
                continue
            s = radial_spherical_split(f, pt)
            g = np.array([p.eval_float(pt) for p in gradient(f)])
            recon = s.radial * pt / np.linalg.norm(pt) + s.spherical
            scale = max(1.0, float(np.linalg.norm(g)))
            assert np.linalg.norm(recon - g) <= 1e-12 * scale
            sp_scale = float(np.linalg.norm(s.spherical)) * float(np.linalg.norm(pt))
            assert abs(s.spherical @ pt) <= 1e-12 * max(1.0, sp_scale)


class TestUnivariateTools:
    def test_gcd_common_factor(self):
        # (t-1)(t-2) and (t-1)(t+3) share (t-1)
        a = [Fraction(2), Fraction(-3), Fraction(1)]
        b = [Fraction(-3), Fraction(2), Fraction(1)]
        g = univariate_gcd(a, b)
        assert g == [Fraction(-1), Fraction(1)]

    def test_gcd_coprime(self):
        a = [Fraction(1), Fraction(1)]
        b = [Fraction(2), Fraction(1)]
        g = univariate_gcd(a, b)
        assert len(g) == 1

    def test_real_roots_cubic(self):
        # (t-1)(t+2)t = t^3 + t^2 - 2t
        roots = real_roots([0, -2, 1, 1])
        assert np.allclose(roots, [-2.0, 0.0, 1.0], atol=1e-10)

    def test_resultant_detects_common_root(self):
        x = Polynomial.variable(2, 0)
        y = Polynomial.variable(2, 1)
        p = (x - y) * (x + y)  # zero iff x = +-y
        q = x - y * y
        res = resultant_bivariate(p, q, eliminate=1)
        # Res vanishes at x where the curves intersect: y=x & x=y^2 -> x in {0, 1};
        # y=-x & x=y^2 -> x in {0, 1}
        roots = real_roots(res)
        assert any(abs(r) < 1e-8 for r in roots)
        assert any(abs(r - 1) < 1e-8 for r in roots)
