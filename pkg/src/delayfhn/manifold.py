"""Critical manifold of the fast subsystem and equilibria of the leaky variant.

Equilibria of the fast equation solve ``x - x**3/3 + y = 0``; they are
computed in closed form (Cardano) and polished by a Newton step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .errors import DegenerateParameters, DomainError, InvalidInput

__all__ = [
    "CriticalPoint",
    "GeneralEquilibrium",
    "critical_roots",
    "branch_eval",
    "general_equilibria",
    "FOLD_Y",
]

FOLD_Y = 2.0 / 3.0
_FOLD_BAND = 1e-9

Branch = Literal["lower", "middle", "upper", "unique"]


@dataclass(frozen=True)
class CriticalPoint:
    x: float
    branch: Branch
    multiplicity: Literal["simple", "double"] = "simple"


@dataclass(frozen=True)
class GeneralEquilibrium:
    x: float
    y: float
    discriminant: float


def _cbrt(v: float) -> float:
    return math.copysign(abs(v) ** (1.0 / 3.0), v)


def _newton_cubic(x: float, p: float, q: float) -> float:
    """One Newton step on ``x**3 + p x + q``; skipped at a double root."""
    d = 3.0 * x * x + p
    if d == 0.0:
        return x
    return x - (x**3 + p * x + q) / d


def _depressed_cubic(p: float, q: float) -> tuple[list[float], float]:
    """Real roots of ``x**3 + p x + q`` (ascending) and ``(q/2)**2 + (p/3)**3``."""
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0:
        s = math.sqrt(disc)
        # Subtractive cancellation guard: form the larger radical first.
        u = _cbrt(-q / 2.0 - s) if q > 0 else _cbrt(-q / 2.0 + s)
        x = u - p / (3.0 * u) if u != 0.0 else 0.0
        return [_newton_cubic(x, p, q)], disc
    if p == 0.0:
        return [0.0], disc
    r = 2.0 * math.sqrt(-p / 3.0)
    c = (3.0 * q / (p * r))
    c = max(-1.0, min(1.0, c))
    phi = math.acos(c) / 3.0
    roots = sorted(r * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3))
    return [_newton_cubic(x, p, q) for x in roots], disc


def critical_roots(y: float) -> list[CriticalPoint]:
    """Equilibria of the fast subsystem at frozen ``y``, sorted ascending.

    Returns three points (lower, middle, upper) for ``|y| < 2/3``, one
    point otherwise. At ``y = +-2/3`` the double root is reported once
    with ``multiplicity="double"``.
    """
    if not math.isfinite(y):
        raise InvalidInput(f"y must be finite, got {y!r}")
    ay = abs(y)
    sign = 1.0 if y >= 0 else -1.0
    if ay == FOLD_Y:
        # y = 2/3: double root -1 (x_- meets x_0), simple root 2.
        dbl = CriticalPoint(-sign, "lower" if sign > 0 else "upper", "double")
        simple = CriticalPoint(2.0 * sign, "upper" if sign > 0 else "lower")
        return [dbl, simple] if sign > 0 else [simple, dbl]
    if ay > FOLD_Y:
        xs, _ = _depressed_cubic(-3.0, -3.0 * y)
        # within rounding of the fold the discriminant may come out <= 0;
        # the surviving root is the one away from the fold
        return [CriticalPoint(xs[-1] if sign > 0 else xs[0], "unique")]
    if FOLD_Y - ay < _FOLD_BAND:
        # Trigonometric form loses digits here; expand about the fold.
        delta = math.sqrt(FOLD_Y - ay)
        near = [-sign * (1.0 + delta), -sign * (1.0 - delta)]
        near = [_newton_cubic(x, -3.0, -3.0 * y) for x in near]
        trig, _ = _depressed_cubic(-3.0, -3.0 * y)
        far = trig[-1] if sign > 0 else trig[0]
        xs = sorted(near + [far])
    else:
        xs, _ = _depressed_cubic(-3.0, -3.0 * y)
    labels: tuple[Branch, ...] = ("lower", "middle", "upper")
    return [CriticalPoint(x, lab) for x, lab in zip(xs, labels)]


def branch_eval(branch: str, y: float) -> float:
    """Value of one branch of the critical manifold.

    ``upper`` is defined for ``y >= -2/3``, ``lower`` for ``y <= 2/3`` and
    ``middle`` for ``|y| <= 2/3``.
    """
    if branch in ("upper", "+", "x+"):
        if y < -FOLD_Y:
            raise DomainError(f"upper branch undefined for y={y} < -2/3")
        return critical_roots(y)[-1].x
    if branch in ("lower", "-", "x-"):
        if y > FOLD_Y:
            raise DomainError(f"lower branch undefined for y={y} > 2/3")
        return critical_roots(y)[0].x
    if branch in ("middle", "0", "x0"):
        if abs(y) > FOLD_Y:
            raise DomainError(f"middle branch undefined for |y|={abs(y)} > 2/3")
        roots = critical_roots(y)
        if len(roots) == 2:  # fold: middle coincides with the double root
            return next(r.x for r in roots if r.multiplicity == "double")
        return roots[1].x
    raise DomainError(f"unknown branch {branch!r}")


def general_equilibria(a: float, b: float, gamma: float) -> list[GeneralEquilibrium]:
    """Equilibria of the full system with slow equation ``eps (a + b x + gamma y)``.

    The slow nullcline gives ``y = -(a + b x)/gamma`` and ``x`` solves the
    depressed cubic ``x**3 - 3 (1 - b/gamma) x + 3 a/gamma = 0``. The
    reported discriminant is ``(q/2)**2 + (p/3)**3`` of that cubic: a
    positive value means a unique equilibrium.
    """
    if gamma == 0:
        raise DegenerateParameters("gamma = 0: use critical_roots with x = -a/b")
    if b == 0:
        raise DegenerateParameters("b = 0 decouples x from the slow equation")
    for name, v in (("a", a), ("b", b), ("gamma", gamma)):
        if not math.isfinite(v):
            raise InvalidInput(f"{name} must be finite")
    p = -3.0 * (1.0 - b / gamma)
    q = 3.0 * a / gamma
    xs, disc = _depressed_cubic(p, q)
    return [GeneralEquilibrium(x, -(a + b * x) / gamma, disc) for x in xs]
