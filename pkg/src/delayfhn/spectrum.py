"""Characteristic equations of the linearized delayed system and their roots.

Fast subsystem at an equilibrium ``x*``::

    xi - (1 - x*^2 + J) + J exp(-xi tau) = 0

whose roots are ``A + W_k(-tau J exp(-tau A)) / tau`` with
``A = 1 - x*^2 + J``. The full system at ``(a, a^3/3 - a)``::

    xi (xi - 1 + a^2 - J (1 - exp(-xi tau))) + eps = 0

has no closed form; its roots are located by the argument principle on
rectangles and polished by Newton.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .errors import BranchDomain, ContourOnRoot, InvalidInput, NoConvergence

__all__ = [
    "CharacteristicRoot",
    "StabilityReport",
    "TOL_MARGINAL",
    "char_fn_fast",
    "char_fn_fast_prime",
    "char_fn_full",
    "char_fn_full_prime",
    "char_fn_general",
    "lambert_w",
    "fast_roots",
    "fast_stability",
    "full_rightmost_root",
    "count_zeros",
    "roots_in_rect",
    "newton_polish",
    "roots_to_csv",
]

TOL_MARGINAL = 1e-8
_INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class CharacteristicRoot:
    value: complex
    branch: int | None
    residual: float


@dataclass
class StabilityReport:
    rightmost_real_part: float
    roots_found: list[CharacteristicRoot] = field(default_factory=list)
    verdict: Literal["stable", "unstable", "marginal"] = "stable"

    @classmethod
    def from_roots(cls, roots: list[CharacteristicRoot], tol: float = TOL_MARGINAL):
        re = max(r.value.real for r in roots)
        if abs(re) <= tol:
            verdict = "marginal"
        elif re < 0:
            verdict = "stable"
        else:
            verdict = "unstable"
        return cls(re, roots, verdict)


# ---------------------------------------------------------------------------
# characteristic functions


def char_fn_fast(xi, x_star: float, J: float, tau: float):
    return xi - (1.0 - x_star**2 + J) + J * np.exp(-xi * tau)


def char_fn_fast_prime(xi, x_star: float, J: float, tau: float):
    return 1.0 - J * tau * np.exp(-xi * tau)


def char_fn_full(xi, a: float, J: float, tau: float, epsilon: float):
    return xi * (xi - 1.0 + a**2 - J * (1.0 - np.exp(-xi * tau))) + epsilon


def char_fn_full_prime(xi, a: float, J: float, tau: float, epsilon: float):
    e = np.exp(-xi * tau)
    return 2.0 * xi - (1.0 - a**2 + J) + J * e - J * tau * xi * e


def char_fn_general(xi, x_star: float, J: float, tau: float, epsilon: float,
                    gamma: float, b: float = -1.0):
    """``det(xi I - M(xi))`` for the slow equation ``eps (a + b x + gamma y)``.

    ``M = [[1 - x*^2 + J (1 - e^{-xi tau}), 1], [b eps, gamma eps]]``. With
    ``gamma = 0, b = -1`` this is exactly :func:`char_fn_full`.
    """
    A = 1.0 - x_star**2 + J * (1.0 - np.exp(-xi * tau))
    return (xi - A) * (xi - gamma * epsilon) - b * epsilon


# ---------------------------------------------------------------------------
# Lambert W


def _lambert_branch_of(w: complex, z: complex) -> int:
    # W_k(z) satisfies w + log(w) = log(z) + 2 pi i k (principal logs).
    return round(((w + cmath.log(w)) - cmath.log(z)).imag / (2.0 * math.pi))


def _lambert_seed(k: int, z: complex) -> complex:
    near_bp = abs(z + _INV_E) < 0.25
    if near_bp and (k == 0 or (k == -1 and z.imag >= 0) or (k == 1 and z.imag < 0)):
        p = cmath.sqrt(2.0 * (math.e * z + 1.0))
        if k != 0:
            p = -p
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    if k == 0 and abs(z) < 0.5:
        return z * (1.0 - z + 1.5 * z * z)
    if k == 0 and abs(z) < 3.0 and not (z.imag == 0 and z.real < -_INV_E):
        return cmath.log(1.0 + z)
    L1 = cmath.log(z) + 2j * math.pi * k
    L2 = cmath.log(L1)
    return L1 - L2 + L2 / L1 + L2 * (L2 - 2.0) / (2.0 * L1 * L1)


def _halley(w: complex, z: complex, maxiter: int = 100) -> complex:
    for _ in range(maxiter):
        ew = cmath.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        if wp1 == 0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w = w - step
        if abs(step) <= 1e-15 * (1.0 + abs(w)):
            break
    return w


def lambert_w(k: int, z: complex) -> complex:
    """Branch ``k`` of the Lambert W function, ``w exp(w) = z``.

    Standard branch cuts. Halley iteration from series seeds near the
    branch point and the origin, asymptotic seeds elsewhere.

    Raises
    ------
    BranchDomain
        For ``z = 0`` on a branch ``k != 0`` (where ``W_k`` diverges) or a
        non-finite argument.
    """
    k = int(k)
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise BranchDomain(f"non-finite argument {z!r}")
    if z == 0:
        if k == 0:
            return 0j
        raise BranchDomain(f"W_{k}(0) is unbounded")
    if k == 0 and z == -_INV_E:
        return complex(-1.0)
    if k == -1 and z == -_INV_E:
        return complex(-1.0)
    w = _halley(_lambert_seed(k, z), z)
    if abs(z + _INV_E) > 1e-6 and _lambert_branch_of(w, z) != k:
        # seed landed on a neighbouring branch: restart from the asymptotic seed
        L1 = cmath.log(z) + 2j * math.pi * k
        w = _halley(L1 - cmath.log(L1), z)
    return w


# ---------------------------------------------------------------------------
# fast subsystem spectrum

_DEFAULT_K = 8


def fast_roots(x_star: float, J: float, tau: float, K: int = _DEFAULT_K
               ) -> list[CharacteristicRoot]:
    """All Lambert-branch roots ``k = -K..K``, by descending real part.

    Branches ``k`` and ``-k`` give conjugate roots (the Lambert argument is
    real), so the list is closed under conjugation.
    """
    if tau <= 0:
        raise InvalidInput("tau must be positive")
    A = 1.0 - x_star**2 + J
    if J == 0:
        return [CharacteristicRoot(complex(A), 0, 0.0)]
    z = -tau * J * math.exp(-tau * A)
    out = []
    for k in range(-K, K + 1):
        xi = A + lambert_w(k, z) / tau
        res = abs(char_fn_fast(xi, x_star, J, tau))
        out.append(CharacteristicRoot(complex(xi), k, float(res)))
    out.sort(key=lambda r: (-r.value.real, -r.value.imag))
    if K >= 2:
        outer = max(r.value.real for r in out if abs(r.branch) == K)
        inner = max(r.value.real for r in out if r.branch in (0, -1))
        if outer > inner:
            raise NoConvergence(
                f"branch |k|={K} root right of the principal pair; increase K")
    return out


def fast_stability(x_star: float, J: float, tau: float, K: int = _DEFAULT_K,
                   tol: float = TOL_MARGINAL) -> StabilityReport:
    return StabilityReport.from_roots(fast_roots(x_star, J, tau, K), tol)


# ---------------------------------------------------------------------------
# argument-principle machinery


def _edge_phase(F, z0: complex, z1: complex, scale: float, n0: int = 32,
                max_points: int = 200_000) -> float:
    """Total change of arg F along the segment z0 -> z1."""
    s = np.linspace(0.0, 1.0, n0 + 1)
    while True:
        pts = z0 + (z1 - z0) * s
        vals = F(pts)
        if np.any(np.abs(vals) <= 1e-13 * scale):
            raise ContourOnRoot(f"root on contour segment {z0}->{z1}")
        dphi = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(dphi) > math.pi / 4
        if not bad.any():
            return float(dphi.sum())
        if len(s) > max_points:
            raise ContourOnRoot("phase unresolved: contour passes too close to a root")
        mids = 0.5 * (s[:-1][bad] + s[1:][bad])
        # refine only where the phase jumps; neighbouring cells get the same
        extra = np.concatenate([mids, 0.5 * (s[:-1][bad] + mids), 0.5 * (mids + s[1:][bad])])
        s = np.unique(np.concatenate([s, extra]))


def count_zeros(F: Callable, rect: tuple[float, float, float, float],
                scale: float = 1.0) -> int:
    """Number of zeros of the entire function ``F`` inside ``rect``.

    ``rect = (re_min, re_max, im_min, im_max)``.
    """
    x0, x1, y0, y1 = rect
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    total = 0.0
    for i in range(4):
        total += _edge_phase(F, corners[i], corners[(i + 1) % 4], scale)
    n = total / (2.0 * math.pi)
    m = round(n)
    if abs(n - m) > 0.05:
        raise ContourOnRoot(f"non-integer winding number {n:.4f}")
    return int(m)


def newton_polish(F: Callable, dF: Callable, xi0: complex, tol: float = 1e-14,
                  maxiter: int = 60) -> tuple[complex, bool]:
    xi = complex(xi0)
    for _ in range(maxiter):
        f = complex(F(xi))
        d = complex(dF(xi))
        if d == 0:
            return xi, False
        step = f / d
        xi -= step
        if not (math.isfinite(xi.real) and math.isfinite(xi.imag)):
            return xi, False
        if abs(step) <= tol * max(1.0, abs(xi)):
            return xi, True
    return xi, abs(F(xi)) < 1e-10 * max(1.0, abs(xi))


def _inside(z: complex, rect, pad: float = 0.0) -> bool:
    x0, x1, y0, y1 = rect
    return x0 - pad <= z.real <= x1 + pad and y0 - pad <= z.imag <= y1 + pad


def roots_in_rect(F: Callable, dF: Callable, rect, scale: float = 1.0,
                  min_size: float = 1e-7, _depth: int = 0) -> list[complex]:
    """All zeros of ``F`` in ``rect`` by recursive counting and Newton."""
    n = count_zeros(F, rect, scale)
    if n == 0:
        return []
    x0, x1, y0, y1 = rect
    w, h = x1 - x0, y1 - y0
    if n == 1:
        seeds = [complex(x0 + w * fx, y0 + h * fy)
                 for fx, fy in ((0.5, 0.5), (0.3, 0.3), (0.7, 0.7), (0.3, 0.7), (0.7, 0.3))]
        for s in seeds:
            z, ok = newton_polish(F, dF, s)
            if ok and _inside(z, rect, pad=1e-9 * max(1.0, abs(z))):
                return [z]
    if max(w, h) < min_size or _depth > 80:
        z, _ = newton_polish(F, dF, complex(x0 + w / 2, y0 + h / 2))
        return [z] * n
    # split the longer side slightly off-centre; jitter if the cut hits a root
    for frac in (0.5123, 0.4871, 0.5379, 0.4613):
        if w >= h:
            c = x0 + frac * w
            halves = ((x0, c, y0, y1), (c, x1, y0, y1))
        else:
            c = y0 + frac * h
            halves = ((x0, x1, y0, c), (x0, x1, c, y1))
        try:
            out = []
            for sub in halves:
                out.extend(roots_in_rect(F, dF, sub, scale, min_size, _depth + 1))
            return out
        except ContourOnRoot:
            continue
    raise ContourOnRoot("could not place a cut avoiding the roots")


def full_rightmost_root(a: float, J: float, tau: float, epsilon: float,
                        tol: float = TOL_MARGINAL, max_expansions: int = 10
                        ) -> StabilityReport:
    """Stability of the full-system equilibrium from its rightmost roots.

    Every root with ``Re xi >= alpha0`` satisfies
    ``|xi| <= |B| + J exp(-alpha0 tau) + eps + 1`` (``B = 1 - a^2 + J``), so
    the rectangle ``[alpha0, R] x [-R, R]`` holds all of them. ``alpha0`` is
    pushed left until at least one root is enclosed.
    """
    if epsilon <= 0:
        raise InvalidInput("full_rightmost_root requires epsilon > 0")
    B = 1.0 - a * a + J
    F = lambda xi: char_fn_full(xi, a, J, tau, epsilon)
    dF = lambda xi: char_fn_full_prime(xi, a, J, tau, epsilon)
    scale = 1.0 + abs(B) + J + epsilon
    c = 0.25
    for _ in range(max_expansions):
        alpha0 = -c / tau
        R = abs(B) + J * math.exp(c) + epsilon + 1.0
        for jitter in (0.0, 0.0137, -0.0291, 0.0443):
            rect = (alpha0 * (1.0 + jitter), R, -R * (1.0 + 0.0071 + jitter), R * (1.0 + 0.0113))
            try:
                zs = roots_in_rect(F, dF, rect, scale)
                break
            except ContourOnRoot:
                continue
        else:
            raise ContourOnRoot("every jittered rectangle hit a root")
        if zs:
            roots = [CharacteristicRoot(z, None, float(abs(F(z)))) for z in zs]
            roots.sort(key=lambda r: (-r.value.real, -r.value.imag))
            return StabilityReport.from_roots(roots, tol)
        c *= 2.0
    raise NoConvergence(f"no root found after {max_expansions} expansions")


def roots_to_csv(roots: list[CharacteristicRoot], path) -> None:
    """Write ``re,im,branch,residual`` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("re,im,branch,residual\n")
        for r in roots:
            br = "" if r.branch is None else str(r.branch)
            fh.write(f"{r.value.real:.17g},{r.value.imag:.17g},{br},{r.residual:.17g}\n")
