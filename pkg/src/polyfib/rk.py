"""Adaptive Runge-Kutta integration for fiber-transport flows.

One embedded Bogacki-Shampine 3(2) stepper drives both the normalized
gradient flow and the trivializing flow.  Both flows advance the function
value at unit rate by construction, so the stepper supports an optional
per-step projection hook that Newton-corrects the state back onto the
expected fiber, keeping the value drift near roundoff over long paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# Bogacki-Shampine 3(2) tableau (FSAL).
_A21 = 0.5
_A32 = 0.75
_B1, _B2, _B3 = 2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0
_E1, _E2, _E3, _E4 = (
    2.0 / 9.0 - 7.0 / 24.0,
    1.0 / 3.0 - 1.0 / 4.0,
    4.0 / 9.0 - 1.0 / 3.0,
    -1.0 / 8.0,
)


@dataclass
class FlowPath:
    """Result of integrating one trajectory."""

    s: list[float] = field(default_factory=list)
    points: list[np.ndarray] = field(default_factory=list)
    status: str = "ok"  # ok | guard:<reason> | step-collapse | step-budget
    max_norm: float = 0.0
    steps: int = 0

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]


def integrate_flow(
    rhs: Callable[[float, np.ndarray], np.ndarray | None],
    x0,
    s_end: float,
    *,
    rtol: float = 1e-9,
    atol: float = 1e-11,
    project: Callable[[float, np.ndarray], np.ndarray | None] | None = None,
    guard: Callable[[float, np.ndarray], str | None] | None = None,
    max_steps: int = 200_000,
    first_step: float | None = None,
    min_step: float = 1e-14,
    record: bool = True,
) -> FlowPath:
    """Integrate dx/ds = rhs(s, x) from s = 0 to s = s_end.

    ``rhs`` may return None to signal that the field is not defined at the
    queried state (treated as step collapse after retries).  ``project`` is
    applied to every accepted state; ``guard`` can abort with a reason.
    """
    x = np.array(x0, dtype=float)
    path = FlowPath()
    path.points.append(x.copy())
    path.s.append(0.0)
    path.max_norm = float(np.linalg.norm(x))

    s = 0.0
    direction = 1.0 if s_end >= 0 else -1.0
    span = abs(s_end)
    h = first_step if first_step is not None else min(1e-3, span / 16 + 1e-15)
    k1 = rhs(s, x)
    if k1 is None:
        path.status = "step-collapse"
        return path

    while abs(s) < span:
        h = min(h, span - abs(s))
        if h < min_step:
            path.status = "step-collapse"
            return path
        hs = direction * h
        k2 = rhs(s + _A21 * hs, x + (_A21 * hs) * k1)
        k3 = rhs(s + _A32 * hs, x + (_A32 * hs) * k2) if k2 is not None else None
        if k3 is None:
            h *= 0.25
            continue
        x_new = x + hs * (_B1 * k1 + _B2 * k2 + _B3 * k3)
        k4 = rhs(s + hs, x_new)
        if k4 is None:
            h *= 0.25
            continue
        err_vec = hs * (_E1 * k1 + _E2 * k2 + _E3 * k3 + _E4 * k4)
        scale = atol + rtol * np.maximum(np.abs(x), np.abs(x_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if err > 1.0:
            h = max(0.2 * h, 0.9 * h * err ** (-1.0 / 3.0))
            continue

        s_new = s + hs
        if project is not None:
            projected = project(s_new, x_new)
            if projected is None:
                h *= 0.25
                continue
            x_new = projected
        if guard is not None:
            reason = guard(s_new, x_new)
            if reason:
                path.status = f"guard:{reason}"
                path.points.append(x_new.copy())
                path.s.append(s_new)
                path.max_norm = max(path.max_norm, float(np.linalg.norm(x_new)))
                return path

        x, s = x_new, s_new
        path.steps += 1
        path.max_norm = max(path.max_norm, float(np.linalg.norm(x)))
        if record:
            path.points.append(x.copy())
            path.s.append(s)
        else:
            path.points[-1] = x.copy()
            path.s[-1] = s
        k1_next = rhs(s, x)
        if k1_next is None:
            path.status = "step-collapse"
            return path
        k1 = k1_next
        if err > 0.0:
            h = min(5.0 * h, 0.9 * h * err ** (-1.0 / 3.0))
        else:
            h = 5.0 * h
        if path.steps >= max_steps:
            path.status = "step-budget"
            return path
    if not record:
        path.points.append(x.copy())
        path.s.append(s)
    return path


def newton_to_level(
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x: np.ndarray,
    target: float,
    *,
    tol: float = 1e-12,
    max_iter: int = 8,
) -> np.ndarray | None:
    """Project x onto {f = target} by Newton steps along grad f."""
    x = np.array(x, dtype=float)
    for _ in range(max_iter):
        v, g = value_and_grad(x)
        r = v - target
        g2 = float(g @ g)
        if g2 <= 0.0 or not math.isfinite(g2):
            return None
        if abs(r) <= tol * max(1.0, abs(target)):
            return x
        x = x - (r / g2) * g
    v, _ = value_and_grad(x)
    if abs(v - target) <= 1e-8 * max(1.0, abs(target)):
        return x
    return None
