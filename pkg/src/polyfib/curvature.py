"""Level-curve tracing and total curvature of planar polynomial level sets.

Pointwise Gauss-Kronecker curvature works in any dimension through the
bordered Hessian determinant.  The quantitative machinery (tracing,
arclength integration of |k|, the Gauss-map multiplicity histogram, and the
one-sided discontinuity scan over the level parameter) is planar.

Tracing notes.  Near values where curvature escapes to infinity the level
curves develop folds whose turning is concentrated on arcs of length 1e-8
and below while the surrounding curve is essentially straight.  The stepper
therefore adapts on the rotation of the unit normal per step, rejects steps
whose corrected tangent reverses (the signature of a corrector jump onto an
adjacent fold sheet), and shrinks the step when approaching the start point
so that loop closure cannot be spoofed by a nearby sheet.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from polyfib.poly import (
    Polynomial,
    compile_evaluator,
    gradient,
    hessian,
    real_roots,
    resultant_bivariate,
)

BoxType = tuple[float, float, float, float]  # xmin, xmax, ymin, ymax


class TraceError(RuntimeError):
    pass


@dataclass
class CurveTrace:
    """Ordered polyline sample of one connected piece of a level curve."""

    points: np.ndarray  # (m, 2)
    f_residuals: np.ndarray  # |f - t| per point
    arclength: np.ndarray  # cumulative, arclength[0] = 0
    curvature: np.ndarray  # signed Gauss-Kronecker curvature per point
    normals: np.ndarray  # unit gradient per point, orients the curve
    closed: bool
    escaped: bool
    step: float  # nominal (maximal) step
    step_targets: np.ndarray  # accepted step target per segment, (m-1,)

    def length(self) -> float:
        return float(self.arclength[-1])

    def to_csv_rows(self):
        for i in range(len(self.points)):
            yield (
                self.points[i, 0],
                self.points[i, 1],
                self.arclength[i],
                self.curvature[i],
                self.f_residuals[i],
            )


@dataclass
class CurvatureResult:
    value: float
    error_est: float
    truncated: bool
    component_count: int
    box: BoxType
    boundary_density: float  # outer-band share of the absolute integral


@dataclass
class CurvatureProfile:
    """Total curvature functions sampled on a grid of level values."""

    t_grid: list[float]
    abs_total: list[float]
    signed_total: list[float]
    error_est: list[float]
    component_count: list[int]
    flags: list[list[str]]
    box: BoxType

    def to_csv_rows(self):
        for i, t in enumerate(self.t_grid):
            yield (
                t,
                self.abs_total[i],
                self.signed_total[i],
                self.error_est[i],
                self.component_count[i],
                ";".join(self.flags[i]),
            )


@dataclass
class HistogramResult:
    directions: np.ndarray  # (N, 2) unit vectors
    counts: np.ndarray  # preimage count per direction
    abs_estimate: float
    signed_estimate: float
    degenerate_components: int


@dataclass
class ScanVerdict:
    kind: str  # continuous | jump | inconclusive
    left_limit: float | None
    right_limit: float | None
    value_at_c: float | None
    jump_size: float
    detail: str = ""


# ---------------------------------------------------------------------------
# Pointwise curvature


def gauss_kronecker(f: Polynomial, x: Sequence[float], grad_floor: float = 1e-10) -> float:
    """Gauss-Kronecker curvature of the level set of f through x.

    Bordered-Hessian form: k = -det([[H, g], [g^T, 0]]) / |g|^(n+1), with the
    orientation induced by the unit gradient.  Rejects near-critical points.
    """
    x = np.asarray(x, dtype=float)
    n = f.nvars
    g = np.array([p.eval_float(x) for p in gradient(f)])
    norm = float(np.linalg.norm(g))
    if norm <= grad_floor:
        raise ValueError("level-set curvature is undefined near a critical point")
    H = np.array([[h.eval_float(x) for h in row] for row in hessian(f)])
    bordered = np.zeros((n + 1, n + 1))
    bordered[:n, :n] = H
    bordered[:n, n] = g
    bordered[n, :n] = g
    return float(-np.linalg.det(bordered) / norm ** (n + 1))


def _planar_jets(f: Polynomial):
    fx, fy = gradient(f)
    h = hessian(f)
    vg = compile_evaluator([f, fx, fy])
    hs = compile_evaluator([h[0][0], h[0][1], h[1][1]])
    fabs = Polynomial(2, {e: abs(c) for e, c in f.terms.items()}).compiled()
    return vg, hs, fabs


def _kappa(gx, gy, hxx, hxy, hyy):
    g2 = gx * gx + gy * gy
    if g2 <= 0.0:
        return 0.0
    return (hxx * gy * gy - 2.0 * hxy * gx * gy + hyy * gx * gx) / g2**1.5


# ---------------------------------------------------------------------------
# Seeding


def _seed_points(f: Polynomial, t: float, box: BoxType, resolution: int):
    xmin, xmax, ymin, ymax = box
    fn = f.compiled()
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    F = fn(X, Y) - t
    S = np.sign(F)

    seeds = []
    # Vertical edges: sign change along y.
    flips = np.nonzero(np.diff(S, axis=1))
    for i, j in zip(*flips):
        seeds.append(_bisect_edge(fn, t, (X[i, j], Y[i, j]), (X[i, j + 1], Y[i, j + 1])))
    # Horizontal edges: sign change along x.
    flips = np.nonzero(np.diff(S, axis=0))
    for i, j in zip(*flips):
        seeds.append(_bisect_edge(fn, t, (X[i, j], Y[i, j]), (X[i + 1, j], Y[i + 1, j])))
    return [s for s in seeds if s is not None]


def _bisect_edge(fn, t, a, b):
    fa = fn(*a) - t
    fb = fn(*b) - t
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if math.copysign(1.0, fa) == math.copysign(1.0, fb):
        return None
    lo, hi = a, b
    for _ in range(60):
        mid = (0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]))
        fm = fn(*mid) - t
        if fm == 0.0:
            return mid
        if math.copysign(1.0, fm) == math.copysign(1.0, fa):
            lo, fa = mid, fm
        else:
            hi = mid
    return (0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]))


# ---------------------------------------------------------------------------
# Tracing


def _sphere_tangency_waypoints(f: Polynomial, t: float, box: BoxType) -> np.ndarray:
    """Points of the level f = t where it is tangent to a centered circle.

    These radius-extrema are where level curves near an atypical value fold
    back on themselves with extreme curvature packed into a short arc; the
    tracer caps its step near them so that fold sheets are never jumped.
    Solved exactly: common zeros of f - t and x f_y - y f_x via a resultant.
    """
    from polyfib.circle import rotational_derivative, vertical_line_roots

    df = rotational_derivative(f)
    if df.is_zero():
        return np.zeros((0, 2))
    shifted = f - Polynomial.constant(2, Fraction(t).limit_denominator(10**9))
    try:
        res = resultant_bivariate(shifted, df, eliminate=1)
    except ValueError:
        return np.zeros((0, 2))
    if not res:
        return np.zeros((0, 2))

    vg_t = compile_evaluator([f, *gradient(f)])
    vg_d = compile_evaluator([df, *gradient(df)])
    pts = []
    pad = 0.05 * max(box[1] - box[0], box[3] - box[2])
    for xr in real_roots(res):
        for yr in vertical_line_roots(f, xr, t):
            x, y = xr, yr
            for _ in range(30):  # Newton on the square system (f - t, df)
                fv, gx, gy = vg_t(x, y)
                dv, dx_, dy_ = vg_d(x, y)
                det = gx * dy_ - gy * dx_
                if det == 0.0 or not math.isfinite(det):
                    break
                sx = ((fv - t) * dy_ - dv * gy) / det
                sy = (gx * dv - dx_ * (fv - t)) / det
                x, y = x - sx, y - sy
                if abs(sx) + abs(sy) < 1e-14 * (1.0 + abs(x) + abs(y)):
                    break
            fv, _, _ = vg_t(x, y)
            dv, _, _ = vg_d(x, y)
            scale = max(1.0, abs(t))
            if abs(fv - t) < 1e-7 * scale and (
                box[0] - pad <= x <= box[1] + pad and box[2] - pad <= y <= box[3] + pad
            ):
                if not any(abs(x - p[0]) + abs(y - p[1]) < 1e-9 * (1 + abs(x)) for p in pts):
                    pts.append((x, y))
    return np.array(pts) if pts else np.zeros((0, 2))


def _newton_project(vg, fabs, t, x, y, grad_floor=1e-13):
    """Newton steps along the gradient onto f = t.  Returns point or None."""
    for _ in range(14):
        fv, gx, gy = vg(x, y)
        r = fv - t
        scale = max(1.0, abs(t), fabs(abs(x), abs(y)))
        g2 = gx * gx + gy * gy
        if g2 <= grad_floor * grad_floor * scale * scale:
            return None
        if abs(r) <= 1e-13 * scale:
            return x, y, abs(r)
        x -= r * gx / g2
        y -= r * gy / g2
    fv, gx, gy = vg(x, y)
    scale = max(1.0, abs(t), fabs(abs(x), abs(y)))
    r = abs(fv - t)
    if r <= 1e-10 * scale:
        return x, y, r
    return None


def _in_box(x, y, box: BoxType) -> bool:
    return box[0] <= x <= box[1] and box[2] <= y <= box[3]


def _trace_one_direction(
    vg,
    hs,
    fabs,
    t: float,
    seed: tuple[float, float],
    tau0: tuple[float, float],
    box: BoxType,
    nominal: float,
    theta_max: float,
    max_points: int,
    waypoints: np.ndarray | None = None,
):
    """March from the seed along tau0 until box exit or loop closure.

    Returns (arrays, closed_flag).
    """
    cos_cap = math.cos(theta_max)
    x, y = seed
    fv, gx, gy = vg(x, y)
    gn = math.hypot(gx, gy)
    if gn == 0.0:
        raise TraceError("seed sits on a critical point")
    nx, ny = gx / gn, gy / gn
    tx, ty = ny, -nx
    if tx * tau0[0] + ty * tau0[1] < 0.0:
        tx, ty = -tx, -ty

    pts_x, pts_y = [x], [y]
    res = [abs(fv - t)]
    nxs, nys = [nx], [ny]
    steps_acc: list[float] = []
    h = nominal
    closed = False
    escaped = False
    start_tx, start_ty = tx, ty

    while len(pts_x) < max_points:
        dist_start = math.hypot(x - pts_x[0], y - pts_y[0])
        h_dyn = h
        if len(pts_x) > 8 and dist_start < 3.0 * h:
            h = min(h, max(0.5 * dist_start, 1e-3 * nominal))
        if waypoints is not None and len(waypoints):
            d_wp = float(
                np.min(np.hypot(waypoints[:, 0] - x, waypoints[:, 1] - y))
            )
            h = min(h, 0.25 * d_wp + 1e-5 * nominal)
        # The smallest meaningful step produces a representable displacement
        # along the current tangent; near a fold the motion is along the
        # small coordinate, so the floor must be directional.
        h_floor = 1e-13 * (abs(x * tx) + abs(y * ty)) + 1e-250
        h = max(h, h_floor)

        px, py = x + h * tx, y + h * ty
        proj = _newton_project(vg, fabs, t, px, py)
        ok = proj is not None
        if ok:
            qx, qy, qres = proj
            fv2, gx2, gy2 = vg(qx, qy)
            gn2 = math.hypot(gx2, gy2)
            ok = gn2 > 0.0
        if ok:
            nx2, ny2 = gx2 / gn2, gy2 / gn2
            tx2, ty2 = ny2, -nx2
            if tx2 * tx + ty2 * ty < 0.0:
                tx2, ty2 = -tx2, -ty2
            seg = math.hypot(qx - x, qy - y)
            turn_ok = nx * nx2 + ny * ny2 >= cos_cap
            heading_ok = (qx - x) * tx + (qy - y) * ty > 0.3 * seg
            spacing_ok = 0.2 * h <= seg <= 2.0 * nominal
            ok = turn_ok and heading_ok and spacing_ok and seg > 0.0
        if ok:
            # Midpoint coherence: a same-branch chord of turn dtheta leaves
            # its midpoint within ~dtheta * seg / 8 of the curve.  A
            # corrector jump onto a neighboring fold sheet can keep normals,
            # heading, and spacing plausible, but its midpoint sits between
            # branches, far off-level on this scale.
            mx, my = 0.5 * (x + qx), 0.5 * (y + qy)
            fm, gmx, gmy = vg(mx, my)
            gmn = math.hypot(gmx, gmy)
            scale_m = max(1.0, abs(t), fabs(abs(mx), abs(my)))
            dturn = math.acos(max(-1.0, min(1.0, nx * nx2 + ny * ny2)))
            dist_mid = abs(fm - t) / max(gmn, 1e-300)
            # Noise floor: endpoints sit off-level by the corrector tolerance,
            # which maps to distance through the local gradient norm.
            noise = 3.0 * (1e-13 * scale_m) / max(gmn, 1e-300) + 1e-13 * (
                1.0 + abs(mx) + abs(my)
            )
            bound = 4.0 * dturn * seg / 8.0 + noise
            ok = dist_mid <= bound
        if not ok:
            h *= 0.5
            if h < h_floor:
                break  # step collapse: stop this direction here
            continue

        # Accept.
        pts_x.append(qx)
        pts_y.append(qy)
        res.append(qres)
        nxs.append(nx2)
        nys.append(ny2)
        steps_acc.append(h)
        x, y, nx, ny, tx, ty = qx, qy, nx2, ny2, tx2, ty2
        h = min(1.4 * h, nominal)

        if not _in_box(x, y, box):
            escaped = True
            break

        if len(pts_x) > 8:
            d0 = math.hypot(x - pts_x[0], y - pts_y[0])
            if d0 < 0.6 * h_dyn and tx * start_tx + ty * start_ty > 0.7:
                mx, my = 0.5 * (x + pts_x[0]), 0.5 * (y + pts_y[0])
                fm, gmx, gmy = vg(mx, my)
                gmn = math.hypot(gmx, gmy)
                if gmn > 0.0 and abs(fm - t) <= 0.05 * gmn * max(d0, 1e-30):
                    closed = True
                    pts_x.append(pts_x[0])
                    pts_y.append(pts_y[0])
                    res.append(res[0])
                    nxs.append(nxs[0])
                    nys.append(nys[0])
                    steps_acc.append(max(d0, min_h))
                    break
    else:
        raise TraceError("trace exceeded the point budget; increase the step")

    arrays = (
        np.array(pts_x),
        np.array(pts_y),
        np.array(res),
        np.array(nxs),
        np.array(nys),
        np.array(steps_acc) if steps_acc else np.zeros(0),
    )
    return arrays, closed, escaped


def _assemble_trace(vg, hs, fwd, bwd, closed, escaped, nominal) -> CurveTrace:
    if bwd is not None:
        bx, by, bres, bnx, bny, bsteps = bwd
        fxs, fys, fres, fnx, fny, fsteps = fwd
        X = np.concatenate([bx[::-1], fxs[1:]])
        Y = np.concatenate([by[::-1], fys[1:]])
        R = np.concatenate([bres[::-1], fres[1:]])
        NX = np.concatenate([bnx[::-1], fnx[1:]])
        NY = np.concatenate([bny[::-1], fny[1:]])
        S = np.concatenate([bsteps[::-1], fsteps])
    else:
        X, Y, R, NX, NY, S = fwd

    seg = np.hypot(np.diff(X), np.diff(Y))
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    hxx, hxy, hyy = hs(X, Y)
    # Second fundamental form contracted on the unit normal; trace_level
    # divides by |grad f| afterwards to finish k = II / |grad f|.
    kappa = hxx * NY * NY - 2.0 * hxy * NX * NY + hyy * NX * NX
    return CurveTrace(
        points=np.stack([X, Y], axis=1),
        f_residuals=R,
        arclength=arc,
        curvature=kappa,  # placeholder; fixed by caller with gradient norms
        normals=np.stack([NX, NY], axis=1),
        closed=closed,
        escaped=escaped,
        step=nominal,
        step_targets=S,
    )


def trace_level(
    f: Polynomial,
    t: float,
    box: BoxType,
    step: float | None = None,
    *,
    theta_max: float = 0.05,
    seed_resolution: int = 96,
    max_points: int = 400_000,
    critical_values: Sequence[float] | None = None,
    max_seed_refinements: int = 2,
) -> list[CurveTrace]:
    """All components of the level set f = t inside an axis-aligned box.

    Components are found from grid-edge sign changes, traced by adaptive
    predictor-corrector continuation with Newton projection back to the
    level, and deduplicated.  The seed grid is refined until the component
    count is stable; a count that keeps changing raises TraceError.
    """
    if f.nvars != 2:
        raise ValueError("trace_level is a planar operation")
    if critical_values is not None and any(abs(t - c) <= 1e-8 for c in critical_values):
        warnings.warn(
            f"level {t} is within 1e-8 of a critical value; tracing may stall",
            stacklevel=2,
        )
    xmin, xmax, ymin, ymax = box
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("empty box")
    extent = max(xmax - xmin, ymax - ymin)
    nominal = step if step is not None else extent / 400.0

    vg, hs, fabs = _planar_jets(f)
    gradnorm_fn = compile_evaluator(gradient(f))
    waypoints = _sphere_tangency_waypoints(f, t, box)

    traces: list[CurveTrace] = []
    resolution = seed_resolution
    for refinement in range(max_seed_refinements + 1):
        new_components = 0
        for seed in _seed_points(f, t, box, resolution):
            proj = _newton_project(vg, fabs, t, seed[0], seed[1])
            if proj is None:
                continue
            sx, sy, _ = proj
            if not _in_box(sx, sy, box):
                continue
            if _near_existing(traces, sx, sy, nominal):
                continue
            trace = _trace_component(
                vg, hs, fabs, t, (sx, sy), box, nominal, theta_max, max_points, waypoints
            )
            if trace is not None:
                traces.append(trace)
                new_components += 1
        if refinement > 0 and new_components > 0 and refinement == max_seed_refinements:
            raise TraceError(
                "component count is unstable under seed refinement; "
                "use a finer seed grid"
            )
        if refinement > 0 and new_components == 0:
            break
        resolution *= 2

    # Final curvature values: contract the Hessian on unit normals and divide
    # by the gradient norm at each point.
    for tr in traces:
        gxv, gyv = gradnorm_fn(tr.points[:, 0], tr.points[:, 1])
        gn = np.hypot(gxv, gyv)
        gn[gn == 0.0] = np.inf
        tr.curvature = tr.curvature / gn
    return traces


def _near_existing(traces: list[CurveTrace], x: float, y: float, nominal: float) -> bool:
    p = np.array([x, y])
    for tr in traces:
        a = tr.points[:-1]
        b = tr.points[1:]
        ab = b - a
        denom = np.einsum("ij,ij->i", ab, ab)
        denom[denom == 0.0] = 1.0
        tpar = np.clip(np.einsum("ij,ij->i", p - a, ab) / denom, 0.0, 1.0)
        proj = a + tpar[:, None] * ab
        d = np.min(np.hypot(proj[:, 0] - x, proj[:, 1] - y))
        if d < 0.35 * nominal:
            return True
    return False


def _trace_component(
    vg, hs, fabs, t, seed, box, nominal, theta_max, max_points, waypoints=None
):
    fv, gx, gy = vg(*seed)
    gn = math.hypot(gx, gy)
    if gn == 0.0:
        return None
    tau = (gy / gn, -gx / gn)
    fwd, closed, escaped_f = _trace_one_direction(
        vg, hs, fabs, t, seed, tau, box, nominal, theta_max, max_points, waypoints
    )
    if closed:
        return _assemble_trace(vg, hs, fwd, None, True, False, nominal)
    bwd, _, escaped_b = _trace_one_direction(
        vg, hs, fabs, t, seed, (-tau[0], -tau[1]), box, nominal, theta_max,
        max_points, waypoints,
    )
    return _assemble_trace(
        vg, hs, fwd, bwd, False, escaped_f or escaped_b, nominal
    )


# ---------------------------------------------------------------------------
# Integration


def _integrate_traces(traces: list[CurveTrace], signed: bool) -> float:
    total = 0.0
    for tr in traces:
        k = tr.curvature if signed else np.abs(tr.curvature)
        ds = np.diff(tr.arclength)
        total += float(np.sum(0.5 * (k[:-1] + k[1:]) * ds))
    return total


def _outer_band_share(traces: list[CurveTrace], box: BoxType) -> float:
    """Share of the absolute curvature integral carried by escaped-trace
    samples in the outer decade of the box."""
    half = 0.5 * max(box[1] - box[0], box[3] - box[2])
    cx, cy = 0.5 * (box[0] + box[1]), 0.5 * (box[2] + box[3])
    inner_total = 0.0
    outer_total = 0.0
    for tr in traces:
        k = np.abs(tr.curvature)
        ds = np.diff(tr.arclength)
        seg = 0.5 * (k[:-1] + k[1:]) * ds
        if not tr.escaped:
            inner_total += float(np.sum(seg))
            continue
        mid = 0.5 * (tr.points[:-1] + tr.points[1:])
        rad = np.maximum(np.abs(mid[:, 0] - cx), np.abs(mid[:, 1] - cy))
        outer = rad > half / 10.0  # last decade of the box
        outer_total += float(np.sum(seg[outer]))
        inner_total += float(np.sum(seg[~outer]))
    total = inner_total + outer_total
    if total <= 1e-12:
        return 0.0
    return outer_total / total


def _level_curvature(
    f: Polynomial,
    t: float,
    box: BoxType,
    step: float | None,
    *,
    theta_max: float = 0.05,
    auto_enlarge: bool = True,
    tail_share: float = 0.005,
    max_enlargements: int = 4,
    critical_values: Sequence[float] | None = None,
):
    """Trace, integrate (abs and signed), estimate error by step halving."""
    work_box = box
    flags: list[str] = []
    for attempt in range(max_enlargements + 1):
        traces = trace_level(
            f, t, work_box, step, theta_max=theta_max, critical_values=critical_values
        )
        share = _outer_band_share(traces, work_box)
        if share <= tail_share or not auto_enlarge or attempt == max_enlargements:
            if share > tail_share:
                flags.append("truncated")
            break
        cx, cy = 0.5 * (work_box[0] + work_box[1]), 0.5 * (work_box[2] + work_box[3])
        half = max(work_box[1] - work_box[0], work_box[3] - work_box[2])
        work_box = (cx - half, cx + half, cy - half, cy + half)
        step = None  # rescale with the box

    abs_val = _integrate_traces(traces, signed=False)
    signed_val = _integrate_traces(traces, signed=True)

    fine = trace_level(
        f,
        t,
        work_box,
        (step if step is not None else max(work_box[1] - work_box[0], work_box[3] - work_box[2]) / 400.0) / 2.0,
        theta_max=theta_max / 2.0,
        critical_values=critical_values,
    )
    abs_fine = _integrate_traces(fine, signed=False)
    signed_fine = _integrate_traces(fine, signed=True)
    err = abs(abs_fine - abs_val)

    return {
        "abs": abs_fine,
        "signed": signed_fine,
        "error": err,
        "flags": flags,
        "components": len(fine),
        "box": work_box,
        "boundary_density": _outer_band_share(fine, work_box),
        "traces": fine,
    }


def total_abs_curvature(
    f: Polynomial,
    t: float,
    box: BoxType,
    step: float | None = None,
    **kwargs,
) -> CurvatureResult:
    """Integral of |k| over the traced level inside the box.

    The box is enlarged until the outer decade of escaped components carries
    less than the configured share of the integral; a persistent excess
    flags the result as truncated.  The error estimate comes from halving
    the step and the per-step turn cap.
    """
    data = _level_curvature(f, t, box, step, **kwargs)
    return CurvatureResult(
        value=data["abs"],
        error_est=data["error"],
        truncated="truncated" in data["flags"],
        component_count=data["components"],
        box=data["box"],
        boundary_density=data["boundary_density"],
    )


def total_curvature(
    f: Polynomial,
    t: float,
    box: BoxType,
    step: float | None = None,
    **kwargs,
) -> CurvatureResult:
    """Signed total curvature with the orientation induced by the gradient."""
    data = _level_curvature(f, t, box, step, **kwargs)
    return CurvatureResult(
        value=data["signed"],
        error_est=data["error"],
        truncated="truncated" in data["flags"],
        component_count=data["components"],
        box=data["box"],
        boundary_density=data["boundary_density"],
    )


# ---------------------------------------------------------------------------
# Gauss-map multiplicity histogram (independent route to |K|)


def gauss_map_histogram(
    f: Polynomial,
    t: float,
    directions: int,
    box: BoxType,
    step: float | None = None,
    traces: list[CurveTrace] | None = None,
) -> HistogramResult:
    """Count Gauss-map preimages per direction along the traced level.

    |K| is estimated as (mean preimage count) * 2pi, the area formula for
    the Gauss map; the signed estimate weights each hit by the sign of the
    local curvature (the local degree).  A component with an essentially
    constant normal is degenerate and contributes nothing.
    """
    if traces is None:
        traces = trace_level(f, t, box, step)
    phis = (np.arange(directions) + 0.5) * (2.0 * math.pi / directions)
    U = np.stack([np.cos(phis), np.sin(phis)], axis=1)
    counts = np.zeros(directions, dtype=float)
    signed = np.zeros(directions, dtype=float)
    degenerate = 0

    for tr in traces:
        N = tr.normals
        if len(N) < 2:
            continue
        if np.max(np.abs(N - N[0])) < 1e-9:
            degenerate += 1
            continue
        # For direction u: hits of nu = u are zeros of <nu, u_perp> with
        # <nu, u> > 0.  Work on all directions at once, chunked.
        K = tr.curvature
        for lo in range(0, directions, 64):
            hi = min(lo + 64, directions)
            u = U[lo:hi]
            dot_perp = N @ np.stack([-u[:, 1], u[:, 0]], axis=1).T  # (m, chunk)
            dot_par = N @ u.T
            s = np.sign(dot_perp)
            flips = (s[:-1] * s[1:]) < 0
            par_pos = 0.5 * (dot_par[:-1] + dot_par[1:]) > 0.0
            hits = flips & par_pos
            counts[lo:hi] += hits.sum(axis=0)
            ksign = np.sign(0.5 * (K[:-1] + K[1:]))[:, None]
            signed[lo:hi] += (hits * ksign).sum(axis=0)

    abs_est = float(counts.mean() * 2.0 * math.pi)
    signed_est = float(signed.mean() * 2.0 * math.pi)
    return HistogramResult(
        directions=U,
        counts=counts,
        abs_estimate=abs_est,
        signed_estimate=signed_est,
        degenerate_components=degenerate,
    )


# ---------------------------------------------------------------------------
# Profiles and the discontinuity scan


def curvature_profile(
    f: Polynomial,
    t_grid: Sequence[float],
    box: BoxType,
    step: float | None = None,
    critical_values: Sequence[float] | None = None,
    **kwargs,
) -> CurvatureProfile:
    """Per-level totals with error estimates and component counts."""
    abs_total, signed_total, errs, comps, flags = [], [], [], [], []
    used_box = box
    for t in t_grid:
        data = _level_curvature(
            f, t, box, step, critical_values=critical_values, **kwargs
        )
        abs_total.append(data["abs"])
        signed_total.append(data["signed"])
        errs.append(data["error"])
        comps.append(data["components"])
        flags.append(data["flags"])
        used_box = data["box"]
    return CurvatureProfile(
        t_grid=[float(t) for t in t_grid],
        abs_total=abs_total,
        signed_total=signed_total,
        error_est=errs,
        component_count=comps,
        flags=flags,
        box=used_box,
    )


def geometric_grid(c: float, delta: float, levels: int = 8, include_center: bool = True):
    """c +- delta * 2^-k for k = 0..levels-1, plus c itself."""
    ts = []
    for k in range(levels):
        d = delta * 2.0**-k
        ts.extend([c - d, c + d])
    if include_center:
        ts.append(c)
    return sorted(ts)


def _one_sided_limit(ts: np.ndarray, vs: np.ndarray) -> tuple[float, float] | None:
    """Extrapolated limit and error estimate from a geometric sequence.

    ``ts`` are distances to the target (decreasing), ``vs`` the values.
    Aitken acceleration on the last terms; a flat sequence returns itself.
    """
    if len(vs) < 3:
        if len(vs) == 0:
            return None
        return float(vs[-1]), float(np.ptp(vs)) if len(vs) > 1 else 0.0
    order = np.argsort(-ts)
    vs = vs[order]

    def aitken(a, b, c):
        den = c - 2 * b + a
        if abs(den) < 1e-14 * max(1.0, abs(c)):
            return c
        return c - (c - b) ** 2 / den

    est2 = aitken(vs[-3], vs[-2], vs[-1])
    if len(vs) >= 4:
        est1 = aitken(vs[-4], vs[-3], vs[-2])
        err = abs(est2 - est1) + abs(vs[-1] - est2) * 0.5
    else:
        est1 = est2
        err = abs(vs[-1] - vs[-2])
    return float(est2), float(err)


def discontinuity_scan(
    profile: CurvatureProfile, c: float, jump_tol: float
) -> ScanVerdict:
    """One-sided limits of |K| at c by extrapolation on a geometric grid.

    Declares a jump when the one-sided limits disagree, or when they agree
    but differ from the value at c, beyond jump_tol plus three times the
    propagated error estimate.
    """
    ts = np.array(profile.t_grid)
    vs = np.array(profile.abs_total)
    errs = np.array(profile.error_est)

    left = ts < c - 1e-15
    right = ts > c + 1e-15
    at_c = np.isclose(ts, c, rtol=0.0, atol=1e-12)
    if not left.any() or not right.any():
        return ScanVerdict("inconclusive", None, None, None, 0.0, "c is not interior to the grid")

    dl, vl = c - ts[left], vs[left]
    dr, vr = ts[right] - c, vs[right]
    lim_l = _one_sided_limit(dl, vl)
    lim_r = _one_sided_limit(dr, vr)
    if lim_l is None or lim_r is None:
        return ScanVerdict("inconclusive", None, None, None, 0.0, "missing side")
    L, eL = lim_l
    R, eR = lim_r
    grid_err = float(np.max(errs)) if len(errs) else 0.0
    tol_eff = jump_tol + 3.0 * (eL + eR + grid_err)

    value_at_c = float(vs[at_c][0]) if at_c.any() else None
    sides_differ = abs(L - R) > tol_eff
    center_differs = value_at_c is not None and abs(0.5 * (L + R) - value_at_c) > tol_eff

    # Non-converging one-sided sequences are inconclusive.
    if eL > max(1.0, abs(L)) or eR > max(1.0, abs(R)):
        return ScanVerdict("inconclusive", L, R, value_at_c, 0.0, "extrapolation did not settle")

    if sides_differ or center_differs:
        size = abs(L - R)
        if value_at_c is not None:
            size = max(size, abs(0.5 * (L + R) - value_at_c))
        return ScanVerdict("jump", L, R, value_at_c, size)
    return ScanVerdict("continuous", L, R, value_at_c, 0.0)
