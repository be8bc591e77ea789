"""Singular directions at infinity and fiber directions at infinity.

The central object is the direction set A: common projective zeros of the
gradient of the top homogeneous component f_d together with the zeros of
f_{d-1}.  Finiteness of A certifies that every limit of tangent hyperplanes
along the fiber at infinity contains its limit direction, away from at most
finitely many directions, for every regular value.

For n = 2 the set is computed exactly through binary-form gcds; for n = 3 by
resultant elimination per projective chart with Gauss-Newton refinement; for
n > 3 only a sampling scan is offered and the status stays unresolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from polyfib.circle import CircleAnalyzer
from polyfib.poly import (
    Polynomial,
    gradient,
    homogeneous_components,
    real_roots,
    resultant_bivariate,
    univariate_gcd,
)

RESIDUAL_TOL = 1e-9
CLUSTER_ANGLE = 0.05


@dataclass(frozen=True)
class ProjDirection:
    """A point of the hyperplane at infinity: a unit vector up to sign.

    Canonical representative: first coordinate of magnitude above 1e-12 is
    positive, so construction from u and from -u coincide.
    """

    coords: tuple[float, ...]

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "ProjDirection":
        u = np.asarray(v, dtype=float)
        norm = float(np.linalg.norm(u))
        if norm == 0.0:
            raise ValueError("cannot canonicalize the zero vector")
        u = u / norm
        for c in u:
            if abs(c) > 1e-12:
                if c < 0:
                    u = -u
                break
        return cls(tuple(float(c) for c in u))

    def as_array(self) -> np.ndarray:
        return np.array(self.coords)

    def angle_to(self, other: "ProjDirection | Sequence[float]") -> float:
        """Projective angular distance (angle between lines, in [0, pi/2])."""
        v = other.as_array() if isinstance(other, ProjDirection) else np.asarray(other, float)
        v = v / np.linalg.norm(v)
        dot = abs(float(self.as_array() @ v))
        return math.acos(min(dot, 1.0))

    def __str__(self):
        inner = ":".join(f"{c:.12g}" for c in self.coords)
        return f"[{inner}]"


@dataclass
class InfinitySet:
    """Computed singular directions at infinity with solution status."""

    points: list[ProjDirection]
    status: str  # certified-finite | positive-dimensional | unresolved
    residuals: dict[str, float]
    witness: list[tuple[float, ...]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def contains_direction(self, v: Sequence[float], tol: float = CLUSTER_ANGLE) -> bool:
        try:
            d = ProjDirection.from_vector(v)
        except ValueError:
            return False
        return any(p.angle_to(d) <= tol for p in self.points)

    def to_json(self) -> dict:
        return {
            "points": [list(p.coords) for p in self.points],
            "status": self.status,
            "residuals": self.residuals,
            "witness": [list(w) for w in self.witness],
            "notes": list(self.notes),
        }


@dataclass
class FiberCluster:
    direction: ProjDirection
    count: int
    spread: float  # radians, max member deviation from the representative


@dataclass
class FiberDirectionSet:
    """Clustered directions of fiber points found at a radius schedule."""

    value: float
    radii: list[float]
    clusters: list[FiberCluster]
    solve_counts: list[int]  # fiber points found per radius
    radius_diagnostics: list[tuple[float, int, float]] = field(default_factory=list)
    # (radius, points found, max angular deviation from assigned cluster)

    def is_empty(self) -> bool:
        return not self.clusters

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "radii": list(self.radii),
            "clusters": [
                {
                    "direction": list(c.direction.coords),
                    "count": c.count,
                    "spread": c.spread,
                }
                for c in self.clusters
            ],
            "solve_counts": list(self.solve_counts),
            "radius_diagnostics": [list(t) for t in self.radius_diagnostics],
        }


# ---------------------------------------------------------------------------
# Binary forms (n = 2)


def _binary_form_profile(p: Polynomial, degree: int):
    """Dehomogenized coefficients (chart y = 1) and vanishing at [1:0]."""
    coeffs = [Fraction(0)] * (degree + 1)
    for (i, j), coef in p.terms.items():
        coeffs[i] += coef
    at_infinity = coeffs[degree] == 0 if degree >= 0 else False
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs, at_infinity


def _set_a_planar(f: Polynomial) -> InfinitySet:
    d = f.degree()
    comps = homogeneous_components(f)
    fd, fdm1 = comps[d], comps[d - 1]
    gx, gy = fd.partial(0), fd.partial(1)

    # The three constraint forms; a zero form imposes no constraint.
    forms = [(g, d - 1) for g in (gx, gy) if not g.is_zero()]
    if not fdm1.is_zero():
        forms.append((fdm1, d - 1))
    # gx and gy cannot both vanish (Euler identity with fd != 0).

    profiles = [_binary_form_profile(g, deg) for g, deg in forms]
    common = profiles[0][0]
    at_inf = profiles[0][1]
    for coeffs, inf_root in profiles[1:]:
        common = univariate_gcd(common, coeffs)
        at_inf = at_inf and inf_root
        if not common and not at_inf:
            break

    points: list[ProjDirection] = []
    if common and len(common) > 1:
        for t in real_roots(common):
            points.append(ProjDirection.from_vector((t, 1.0)))
    if at_inf:
        points.append(ProjDirection.from_vector((1.0, 0.0)))

    res = _direction_residuals(points, [gx, gy], fdm1)
    status = "certified-finite"
    notes = []
    if max(res.values(), default=0.0) > RESIDUAL_TOL:
        status = "unresolved"
        notes.append("refinement left residuals above tolerance")
    return InfinitySet(points=points, status=status, residuals=res, notes=notes)


def _direction_residuals(
    points: list[ProjDirection], grad_fd: list[Polynomial], fdm1: Polynomial
) -> dict[str, float]:
    worst_grad = 0.0
    worst_low = 0.0
    for p in points:
        u = p.as_array()
        g = math.sqrt(sum(q.eval_float(u) ** 2 for q in grad_fd))
        worst_grad = max(worst_grad, g)
        if not fdm1.is_zero():
            worst_low = max(worst_low, abs(fdm1.eval_float(u)))
    return {"grad_fd": worst_grad, "f_dm1": worst_low}


# ---------------------------------------------------------------------------
# Projective surface case (n = 3)


def _chart_restrict(p: Polynomial, chart: int) -> Polynomial:
    """Restrict a trivariate polynomial to the chart x_chart = 1 (bivariate)."""
    keep = [i for i in range(3) if i != chart]
    out: dict[tuple[int, int], Fraction] = {}
    for exp, coef in p.terms.items():
        key = (exp[keep[0]], exp[keep[1]])
        out[key] = out.get(key, Fraction(0)) + coef
    return Polynomial(2, out)


def _chart_to_sphere(chart: int, u: float, v: float) -> np.ndarray:
    w = [0.0, 0.0, 0.0]
    keep = [i for i in range(3) if i != chart]
    w[chart] = 1.0
    w[keep[0]] = u
    w[keep[1]] = v
    w = np.array(w)
    return w / np.linalg.norm(w)


def _gauss_newton_direction(
    eqs: list[Polynomial], grads: list[list[Polynomial]], x: np.ndarray, iters: int = 40
) -> np.ndarray | None:
    """Gauss-Newton for an overdetermined homogeneous system on the sphere."""
    x = x / np.linalg.norm(x)
    for _ in range(iters):
        r = np.array([e.eval_float(x) for e in eqs])
        J = np.array([[g.eval_float(x) for g in row] for row in grads])
        # Restrict steps to the tangent space of the sphere.
        J = J - np.outer(J @ x, x)
        try:
            step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        except np.linalg.LinAlgError:
            return None
        step = step - (step @ x) * x
        x = x + step
        x /= np.linalg.norm(x)
        if np.linalg.norm(step) < 1e-15:
            break
    return x


def _set_a_surface(f: Polynomial) -> InfinitySet:
    d = f.degree()
    comps = homogeneous_components(f)
    fd, fdm1 = comps[d], comps[d - 1]
    grads = gradient(fd)
    eqs = [g for g in grads if not g.is_zero()]
    if not fdm1.is_zero():
        eqs.append(fdm1)
    eq_grads = [gradient(e) for e in eqs]

    seeds: list[np.ndarray] = []
    degenerate_charts = 0
    for chart in range(3):
        restricted = [_chart_restrict(g, chart) for g in grads]
        restricted = [g for g in restricted if not g.is_zero()]
        pairs = [
            (restricted[i], restricted[j])
            for i in range(len(restricted))
            for j in range(i + 1, len(restricted))
        ]
        found_pair = False
        for a, b in pairs:
            if not any(e[1] for e in a.terms) and not any(e[1] for e in b.terms):
                continue
            try:
                res = resultant_bivariate(a, b, eliminate=1)
            except ValueError:
                continue
            if not res:
                continue  # identically zero: common factor for this pair
            found_pair = True
            for u in real_roots(res):
                vcands: list[float] = []
                for poly in (a, b):
                    vcands.extend(real_roots(_univariate_in_second(poly, u)))
                if not vcands:
                    vcands = [0.0]
                for v in vcands:
                    seeds.append(_chart_to_sphere(chart, u, v))
            break
        if not found_pair and pairs:
            degenerate_charts += 1

    points: list[ProjDirection] = []
    for seed in seeds:
        x = _gauss_newton_direction(eqs, eq_grads, seed)
        if x is None:
            continue
        resid = math.sqrt(sum(e.eval_float(x) ** 2 for e in eqs))
        if resid <= RESIDUAL_TOL:
            cand = ProjDirection.from_vector(x)
            if not any(cand.angle_to(p) < 1e-7 for p in points):
                points.append(cand)

    res = _direction_residuals(points, grads, fdm1)
    if degenerate_charts == 3:
        witness = _sample_common_zero_curve(grads)
        if witness and _vanishes_on(fdm1, witness):
            return InfinitySet(
                points=points,
                status="positive-dimensional",
                residuals=res,
                witness=witness,
                notes=["gradient of the top form vanishes along a curve"],
            )
        return InfinitySet(
            points=points,
            status="unresolved",
            residuals=res,
            witness=witness,
            notes=["pairwise resultants vanished identically in every chart"],
        )
    return InfinitySet(points=points, status="certified-finite", residuals=res)


def _univariate_in_second(p: Polynomial, u: float) -> list[float]:
    deg = max((e[1] for e in p.terms), default=0)
    out = [0.0] * (deg + 1)
    for (i, j), coef in p.terms.items():
        out[j] += float(coef) * u**i
    return out


def _sample_common_zero_curve(grads: list[Polynomial], n: int = 24) -> list[tuple[float, ...]]:
    eqs = [g for g in grads if not g.is_zero()]
    eq_grads = [gradient(e) for e in eqs]
    rng = np.random.default_rng(0)
    out = []
    for _ in range(n * 6):
        seed = rng.normal(size=3)
        x = _gauss_newton_direction(eqs, eq_grads, seed)
        if x is None:
            continue
        resid = math.sqrt(sum(e.eval_float(x) ** 2 for e in eqs))
        if resid <= RESIDUAL_TOL:
            out.append(tuple(float(c) for c in x))
        if len(out) >= n:
            break
    return out


def _vanishes_on(p: Polynomial, samples: list[tuple[float, ...]]) -> bool:
    if p.is_zero():
        return True
    return all(abs(p.eval_float(s)) <= 1e-7 for s in samples)


def _set_a_sampled(f: Polynomial, samples: int = 20000, seed: int = 0) -> InfinitySet:
    d = f.degree()
    comps = homogeneous_components(f)
    fd, fdm1 = comps[d], comps[d - 1]
    grads = gradient(fd)
    eqs = [g for g in grads if not g.is_zero()]
    if not fdm1.is_zero():
        eqs.append(fdm1)
    eq_grads = [gradient(e) for e in eqs]
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(samples, f.nvars))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    score = np.zeros(samples)
    for e in eqs:
        fn = e.compiled()
        score += np.abs(fn(*pts.T))
    order = np.argsort(score)[:64]
    points: list[ProjDirection] = []
    for idx in order:
        x = _gauss_newton_direction(eqs, eq_grads, pts[idx])
        if x is None:
            continue
        resid = math.sqrt(sum(e.eval_float(x) ** 2 for e in eqs))
        if resid <= RESIDUAL_TOL:
            cand = ProjDirection.from_vector(x)
            if not any(cand.angle_to(p) < 1e-6 for p in points):
                points.append(cand)
    res = _direction_residuals(points, grads, fdm1)
    return InfinitySet(
        points=points,
        status="unresolved",
        residuals=res,
        notes=["n > 3: sampling scan only, completeness not certified"],
    )


def set_A(f: Polynomial) -> InfinitySet:
    """Common projective zeros of grad f_d and f_{d-1} (degree >= 2 only)."""
    if f.degree() < 2:
        raise ValueError("the direction set at infinity requires degree >= 2")
    if f.nvars == 2:
        return _set_a_planar(f)
    if f.nvars == 3:
        return _set_a_surface(f)
    return _set_a_sampled(f)


def sisi_certificate(f: Polynomial) -> tuple[str, InfinitySet]:
    """Certify isolated singular directions at infinity.

    Returns ("holds-at-all-regular-values", A) exactly when the direction
    set A is certified finite; the finite A doubles as the exceptional
    direction witness used downstream.  Otherwise ("unknown", A).
    """
    a = set_A(f)
    if a.status == "certified-finite":
        return "holds-at-all-regular-values", a
    return "unknown", a


# ---------------------------------------------------------------------------
# Fiber directions at infinity


def fiber_directions(
    f: Polynomial,
    c: float,
    radii: Sequence[float],
    samples_per_radius: int = 64,
    seed: int = 0,
) -> FiberDirectionSet:
    """Cluster the directions of fiber points f = c found at growing radii.

    Planar polynomials use complete circle solves; higher dimensions shoot
    random great circles (seeded, deterministic).  Empty output distinguishes
    "no fiber point at any radius" through the per-radius solve counts.
    """
    radii = sorted(float(r) for r in radii)
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")

    found: list[tuple[float, np.ndarray]] = []  # (radius, unit direction)
    solve_counts: list[int] = []
    if f.nvars == 2:
        ca = CircleAnalyzer(f)
        for r in radii:
            angles = ca.fiber_angles(r, c)
            solve_counts.append(len(angles))
            for th in angles:
                found.append((r, np.array([math.cos(th), math.sin(th)])))
    else:
        rng = np.random.default_rng(seed)
        fn = f.compiled()
        for r in radii:
            count = 0
            for _ in range(samples_per_radius):
                frame = np.linalg.qr(rng.normal(size=(f.nvars, 2)))[0]
                e1, e2 = frame[:, 0], frame[:, 1]
                thetas = np.linspace(-math.pi, math.pi, 1024, endpoint=False)
                pts = r * (np.outer(np.cos(thetas), e1) + np.outer(np.sin(thetas), e2))
                vals = fn(*pts.T) - c
                sign_flips = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
                for i in sign_flips:
                    lo, hi = thetas[i], thetas[i + 1]
                    for _ in range(60):
                        mid = 0.5 * (lo + hi)
                        pm = r * (math.cos(mid) * e1 + math.sin(mid) * e2)
                        if (fn(*pm) - c) * (vals[i]) <= 0:
                            hi = mid
                        else:
                            lo = mid
                    th = 0.5 * (lo + hi)
                    found.append(
                        (r, math.cos(th) * e1 + math.sin(th) * e2)
                    )
                    count += 1
            solve_counts.append(count)

    clusters = _greedy_cluster(found)
    diagnostics = _radius_diagnostics(found, clusters, radii)
    return FiberDirectionSet(
        value=c,
        radii=list(radii),
        clusters=clusters,
        solve_counts=solve_counts,
        radius_diagnostics=diagnostics,
    )


def _greedy_cluster(found: list[tuple[float, np.ndarray]]) -> list[FiberCluster]:
    """Greedy angular clustering at the configured threshold.

    Representatives are taken from the largest radius in each cluster, which
    is the best available proxy for the limit direction.
    """
    if not found:
        return []
    ordered = sorted(found, key=lambda t: -t[0])
    reps: list[ProjDirection] = []
    members: list[list[tuple[float, ProjDirection]]] = []
    for r, vec in ordered:
        d = ProjDirection.from_vector(vec)
        placed = False
        for k, rep in enumerate(reps):
            if rep.angle_to(d) <= CLUSTER_ANGLE:
                members[k].append((r, d))
                placed = True
                break
        if not placed:
            reps.append(d)
            members.append([(r, d)])
    out = []
    for rep, mem in zip(reps, members):
        spread = max(rep.angle_to(d) for _, d in mem)
        out.append(FiberCluster(direction=rep, count=len(mem), spread=spread))
    return out


def _radius_diagnostics(found, clusters, radii) -> list[tuple[float, int, float]]:
    out = []
    for r in radii:
        at_r = [d for rr, d in ((rr, vec) for rr, vec in found) if rr == r]
        if not at_r:
            out.append((r, 0, 0.0))
            continue
        devs = []
        for vec in at_r:
            d = ProjDirection.from_vector(vec)
            devs.append(min(c.direction.angle_to(d) for c in clusters))
        out.append((r, len(at_r), max(devs)))
    return out
