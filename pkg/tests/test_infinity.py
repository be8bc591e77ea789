"""Tests for the singular-directions-at-infinity module."""

import math

import numpy as np
import pytest

from polyfib.infinity import (
    FiberDirectionSet,
    ProjDirection,
    fiber_directions,
    set_A,
    sisi_certificate,
)
from polyfib.poly import Polynomial, gradient, homogeneous_components, parse_polynomial

XY = ["x", "y"]
KTZ = parse_polynomial("-y*(2*x^2*y^2 - 9*x*y + 12)", XY)


def directions_match(infset, expected, tol=1e-9):
    if len(infset.points) != len(expected):
        return False
    for e in expected:
        d = ProjDirection.from_vector(e)
        if not any(p.angle_to(d) <= tol for p in infset.points):
            return False
    return True


def scan_oracle_planar(f, n=100_000):
    """Independent check: dense direction scan ranking the defining residual,
    local minima refined by Newton on the residual gradient."""
    d = f.degree()
    comps = homogeneous_components(f)
    fd, fdm1 = comps[d], comps[d - 1]
    grads = gradient(fd)
    theta = np.linspace(0.0, math.pi, n, endpoint=False)
    pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    score = np.zeros(n)
    for g in grads:
        score += np.abs(g.compiled()(pts[:, 0], pts[:, 1]))
    if not fdm1.is_zero():
        score += np.abs(fdm1.compiled()(pts[:, 0], pts[:, 1]))
    eqs = [g for g in grads if not g.is_zero()]
    if not fdm1.is_zero():
        eqs.append(fdm1)
    minima = [
        i
        for i in range(n)
        if score[i] <= score[(i - 1) % n] and score[i] <= score[(i + 1) % n]
    ]
    roots = []
    for i in minima:
        th = theta[i]
        for _ in range(80):
            x = np.array([math.cos(th), math.sin(th)])
            tangent = np.array([-x[1], x[0]])
            val = np.array([e.eval_float(x) for e in eqs])
            der = np.array(
                [sum(g.eval_float(x) * tangent[k] for k, g in enumerate(gradient(e))) for e in eqs]
            )
            denom = der @ der
            if denom == 0:
                break
            step = (val @ der) / denom
            th -= step
            if abs(step) < 1e-15:
                break
        x = np.array([math.cos(th), math.sin(th)])
        if sum(abs(e.eval_float(x)) for e in eqs) < 1e-9:
            roots.append(ProjDirection.from_vector(x))
    dedup = []
    for r in roots:
        if not any(r.angle_to(o) < 1e-6 for o in dedup):
            dedup.append(r)
    return dedup


class TestProjDirection:
    def test_antipodal_identification(self):
        a = ProjDirection.from_vector([0.6, 0.8])
        b = ProjDirection.from_vector([-0.6, -0.8])
        assert a == b

    def test_canonicalization_idempotent(self):
        a = ProjDirection.from_vector([-3.0, 4.0])
        b = ProjDirection.from_vector(a.coords)
        assert a == b
        assert abs(np.linalg.norm(a.as_array()) - 1.0) < 1e-12

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            ProjDirection.from_vector([0.0, 0.0])


class TestSetA:
    def test_definite_quadratic(self):
        f = parse_polynomial("x^2 + y^2", XY)
        a = set_A(f)
        assert a.points == []
        assert a.status == "certified-finite"

    def test_broughton(self):
        f = parse_polynomial("x + x^2*y", XY)
        a = set_A(f)
        assert a.status == "certified-finite"
        assert directions_match(a, [(0.0, 1.0)])

    def test_ktz(self):
        a = set_A(KTZ)
        assert a.status == "certified-finite"
        assert directions_match(a, [(1.0, 0.0), (0.0, 1.0)])

    def test_x2y2(self):
        f = parse_polynomial("x^2*y^2", XY)
        a = set_A(f)
        assert a.status == "certified-finite"
        assert directions_match(a, [(1.0, 0.0), (0.0, 1.0)])

    def test_degree_guard(self):
        with pytest.raises(ValueError):
            set_A(parse_polynomial("x", XY))

    def test_residuals_below_tolerance(self):
        for f in (KTZ, parse_polynomial("x + x^2*y", XY)):
            a = set_A(f)
            assert max(a.residuals.values(), default=0.0) < 1e-9

    def test_scaling_invariance(self):
        a1 = set_A(KTZ)
        a2 = set_A(KTZ * 2)
        assert len(a1.points) == len(a2.points)
        for p in a1.points:
            assert any(p.angle_to(q) < 1e-9 for q in a2.points)

    def test_permutation_covariance(self):
        swapped = Polynomial(2, {(j, i): c for (i, j), c in KTZ.terms.items()})
        a1 = set_A(KTZ)
        a2 = set_A(swapped)
        for p in a1.points:
            flipped = ProjDirection.from_vector(p.as_array()[::-1])
            assert any(flipped.angle_to(q) < 1e-9 for q in a2.points)

    def test_agrees_with_scan_oracle(self):
        for text in ("x^2 + y^2", "x + x^2*y", "-y*(2*x^2*y^2 - 9*x*y + 12)", "x^2*y^2"):
            f = parse_polynomial(text, XY)
            computed = set_A(f)
            oracle = scan_oracle_planar(f)
            assert len(computed.points) == len(oracle)
            for p in computed.points:
                assert any(p.angle_to(q) < 1e-6 for q in oracle)

    def test_surface_sphere(self):
        f = parse_polynomial("x^2 + y^2 + z^2", ["x", "y", "z"])
        a = set_A(f)
        assert a.status == "certified-finite"
        assert a.points == []

    def test_surface_axis_point(self):
        # f4 = (x^2+y^2) z^2 has grad zero exactly on the z-axis direction;
        # f3 = 0 imposes nothing.
        f = parse_polynomial("(x^2 + y^2)*z^2 + x", ["x", "y", "z"])
        a = set_A(f)
        assert a.status == "certified-finite"
        assert directions_match(a, [(0.0, 0.0, 1.0)], tol=1e-7)

    def test_high_dimension_unresolved(self):
        f = parse_polynomial("x0^2 + x1^2 + x2^2 + x3^2", ["x0", "x1", "x2", "x3"])
        a = set_A(f)
        assert a.status == "unresolved"


class TestSisiCertificate:
    def test_circle_holds(self):
        verdict, a = sisi_certificate(parse_polynomial("x^2 + y^2", XY))
        assert verdict == "holds-at-all-regular-values"
        assert a.points == []

    def test_ktz_holds(self):
        verdict, a = sisi_certificate(KTZ)
        assert verdict == "holds-at-all-regular-values"
        assert len(a.points) == 2

    def test_x2y2_holds(self):
        verdict, _ = sisi_certificate(parse_polynomial("x^2*y^2", XY))
        assert verdict == "holds-at-all-regular-values"


class TestFiberDirections:
    def test_vertical_line(self):
        f = parse_polynomial("x", XY)
        fd = fiber_directions(f, 0.0, [10.0, 50.0, 200.0])
        assert len(fd.clusters) == 1
        assert fd.clusters[0].direction.angle_to((0.0, 1.0)) < 1e-9

    def test_ktz_axis(self):
        # level 0 is exactly the x-axis: 2u^2 - 9u + 12 has negative
        # discriminant (81 - 96 < 0), so no other branch exists
        fd = fiber_directions(KTZ, 0.0, [20.0, 100.0, 400.0])
        assert len(fd.clusters) == 1
        assert fd.clusters[0].direction.angle_to((1.0, 0.0)) < 1e-9

    def test_broughton_two_directions(self):
        f = parse_polynomial("x + x^2*y", XY)
        fd = fiber_directions(f, 0.0, [20.0, 100.0, 400.0])
        dirs = sorted(
            c.direction.angle_to((1.0, 0.0)) for c in fd.clusters
        )
        assert len(fd.clusters) == 2
        assert dirs[0] < 1e-3  # hyperbola branch along the x-axis
        assert abs(dirs[1] - math.pi / 2) < 1e-3  # the line x = 0

    def test_bounded_fiber_empty(self):
        f = parse_polynomial("x^2 + y^2", XY)
        fd = fiber_directions(f, 1.0, [10.0, 100.0])
        assert fd.is_empty()
        assert fd.solve_counts == [0, 0]

    def test_asymptote_accuracy_and_spread_trend(self):
        # x^2 - y^2 = 1 has asymptotic directions (1, 1)/sqrt(2) and (1, -1)/sqrt(2)
        f = parse_polynomial("x^2 - y^2", XY)
        fd = fiber_directions(f, 1.0, [10.0, 100.0, 1000.0])
        assert len(fd.clusters) == 2
        for c in fd.clusters:
            best = min(
                c.direction.angle_to(v) for v in [(1.0, 1.0), (1.0, -1.0)]
            )
            assert best < 1e-3
        devs = [d[2] for d in fd.radius_diagnostics if d[1] > 0]
        assert devs[-1] <= devs[0] + 1e-9

    def test_serialization_roundtrip(self):
        fd = fiber_directions(KTZ, 0.0, [20.0, 100.0])
        blob = fd.to_json()
        assert blob["value"] == 0.0
        assert blob["clusters"][0]["count"] == fd.clusters[0].count
