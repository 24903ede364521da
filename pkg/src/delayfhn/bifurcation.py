"""Closed-form bifurcation objects of the delayed system.

Fast subsystem Hopf family (equilibrium ``x*``, ``1 < |x*| < sqrt(1+2J)``)::

    zeta = sqrt(x*^2 - 1) sqrt(2J + 1 - x*^2)
    tau_f^k = (arccos((1 - x*^2 + J)/J) + 2 k pi) / zeta

Full system, equilibrium ``x = a``, ``A = sqrt((a^2-1)(1+2J-a^2))``::

    zeta_{1,2} = (-A -+ sqrt(A^2 + 4 eps)) / 2
    tau_1^k = 2/(A + sqrt(A^2+4eps)) (arccos(1 + (1-a^2)/J) + 2 k pi)
    tau_2^k = 2/(A - sqrt(A^2+4eps)) (arccos(1 + (1-a^2)/J) - 2 (k+1) pi)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import manifold
from .errors import DomainError, NoSignChange
from .spectrum import char_fn_fast, char_fn_fast_prime

__all__ = [
    "HopfPointFast",
    "HopfPointFull",
    "BifurcationCurve",
    "tau_fast_hopf",
    "tau_full_hopf",
    "saddle_node_lines",
    "bt_points",
    "bt_homoclinic_approx",
    "bt_homoclinic_leading",
    "fold_expansion_coefficient",
    "hopf_tangency_residual",
    "bautin_locate",
    "full_curve_continuity_check",
    "chebyshev_grid",
    "fast_hopf_curve",
    "full_hopf_curves",
    "curves_to_csv",
]

_ACOS_GUARD = 1e-12


def _acos(v: float) -> float:
    if v > 1.0:
        if v - 1.0 > _ACOS_GUARD:
            raise DomainError(f"arccos argument {v!r} > 1")
        v = 1.0
    elif v < -1.0:
        if -1.0 - v > _ACOS_GUARD:
            raise DomainError(f"arccos argument {v!r} < -1")
        v = -1.0
    return math.acos(v)


@dataclass(frozen=True)
class HopfPointFast:
    x_star: float
    zeta: float
    tau: float
    k: int
    y: float


@dataclass(frozen=True)
class HopfPointFull:
    a: float
    A: float
    zeta1: float
    zeta2: float
    tau1_k: float
    tau2_k: float
    k: int


@dataclass
class BifurcationCurve:
    """Sampled curve; ``samples`` rows are ``(param, tau, y)``."""

    label: str
    k: int | None
    samples: np.ndarray
    meta: dict = field(default_factory=dict)


def tau_fast_hopf(x_star: float, J: float, k: int = 0) -> HopfPointFast:
    """Hopf delay of branch ``k`` at the fast equilibrium ``x_star``."""
    x2 = x_star * x_star
    if not (1.0 < x2 < 1.0 + 2.0 * J):
        raise DomainError(f"need 1 < |x*| < sqrt(1+2J); got x*={x_star}, J={J}")
    zeta = math.sqrt(x2 - 1.0) * math.sqrt(2.0 * J + 1.0 - x2)
    tau = (_acos((1.0 - x2 + J) / J) + 2.0 * math.pi * k) / zeta
    return HopfPointFast(x_star, zeta, tau, k, x_star**3 / 3.0 - x_star)


def tau_full_hopf(a: float, J: float, epsilon: float, k: int = 0) -> HopfPointFull:
    """Both Hopf branches ``tau_1^k``, ``tau_2^k`` of the full system at input ``a``."""
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    a2 = a * a
    top = 1.0 + 2.0 * J
    if not (1.0 - 1e-12 <= a2 <= top * (1.0 + 1e-12)):
        raise DomainError(f"need 1 <= |a| <= sqrt(1+2J); got a={a}")
    a2 = min(max(a2, 1.0), top)
    A = math.sqrt(max(0.0, (a2 - 1.0) * (top - a2)))
    root = math.sqrt(A * A + 4.0 * epsilon)
    zeta1 = 0.5 * (-A - root)
    zeta2 = 0.5 * (-A + root)
    ac = _acos(1.0 + (1.0 - a2) / J)
    tau1 = 2.0 / (A + root) * (ac + 2.0 * math.pi * k)
    tau2 = 2.0 / (A - root) * (ac - 2.0 * math.pi * (k + 1))
    return HopfPointFull(a, A, zeta1, zeta2, tau1, tau2, k)


def saddle_node_lines() -> tuple[BifurcationCurve, BifurcationCurve]:
    """The tau-independent folds ``y = +-2/3``."""
    taus = np.array([0.0, np.inf])
    out = []
    for sgn, lab in ((1.0, "SaddleNode(+)"), (-1.0, "SaddleNode(-)")):
        y = sgn * manifold.FOLD_Y
        x = -sgn  # the double root
        rows = np.column_stack([np.full(2, x), taus, np.full(2, y)])
        out.append(BifurcationCurve(lab, None, rows, {"tau_independent": True}))
    return tuple(out)


def bt_points(J: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Bogdanov-Takens points ``(tau, y)`` at ``J tau = 1``, ``y = +-2/3``."""
    if J <= 0:
        raise DomainError("J must be positive")
    return (1.0 / J, manifold.FOLD_Y), (1.0 / J, -manifold.FOLD_Y)


def bt_homoclinic_approx(J: float, tau: float) -> float:
    """Quadratic local approximation of the saddle-homoclinic curve near BT.

    Returns ``y = 2/3 - (98/25) (J tau - 1)^2 / tau``; the mirror branch is
    ``-y``.
    """
    nu = J * tau - 1.0
    if nu < 0:
        raise DomainError("the homoclinic branch exists for J tau >= 1 only")
    return manifold.FOLD_Y - 98.0 / 25.0 * nu * nu / tau


def bt_homoclinic_leading(J: float, tau: float) -> float:
    """Leading-order saddle-homoclinic curve from the Bogdanov-Takens unfolding.

    Returns ``y = 2/3 - (441/100) J^2 (J tau - 1)^2``. It follows from the
    square-root Hopf curve ``2/3 - y = (9/4) J^2 (J tau - 1)^2`` and the
    universal ratio ``49/25`` between the homoclinic and Hopf distances to
    the fold; the mirror branch is ``-y``.
    """
    nu = J * tau - 1.0
    if nu < 0:
        raise DomainError("the homoclinic branch exists for J tau >= 1 only")
    return manifold.FOLD_Y - 4.41 * J * J * nu * nu


def fold_expansion_coefficient(J: float) -> float:
    """Slope ``d tau_f^0 / d(x*^2)`` at ``x* -> 1+``: ``1/(3 J^2)``."""
    return 1.0 / (3.0 * J * J)


def hopf_tangency_residual(J: float, x_star: float) -> float:
    """``tau_f^0(x*) - [1/J + (x*^2 - 1)/(3 J^2)]``; ``O((x*^2-1)^2)``."""
    if abs(x_star) <= 1.0:
        if abs(x_star) == 1.0:
            return 0.0
        raise DomainError("x_star must satisfy |x*| > 1")
    tau = tau_fast_hopf(x_star, J, 0).tau
    return tau - (1.0 / J + (x_star * x_star - 1.0) * fold_expansion_coefficient(J))


def chebyshev_grid(lo: float, hi: float, n: int = 256) -> np.ndarray:
    """Chebyshev-Lobatto points on ``[lo, hi]``, ascending, endpoints included."""
    j = np.arange(n)
    t = -np.cos(np.pi * j / (n - 1))
    return lo + (hi - lo) * (t + 1.0) / 2.0


def fast_hopf_curve(J: float, k: int = 0, n: int = 256, upper: bool = True
                    ) -> BifurcationCurve:
    """``tau_f^k`` sampled in ``x*`` over ``(1, sqrt(1+2J))``.

    Endpoints take their analytic limits (``1/J`` for ``k = 0`` at
    ``x* = 1``, infinity otherwise).
    """
    xs = chebyshev_grid(1.0, math.sqrt(1.0 + 2.0 * J), n)
    rows = []
    for i, x in enumerate(xs):
        if i == 0:
            tau = 1.0 / J if k == 0 else math.inf
        elif i == n - 1:
            tau = math.inf
        else:
            tau = tau_fast_hopf(x, J, k).tau
        xv = x if upper else -x
        rows.append((xv, tau, xv**3 / 3.0 - xv))
    return BifurcationCurve(f"HopfFast({k})", k, np.array(rows), {"J": J, "n": n})


def full_hopf_curves(J: float, epsilon: float, k: int = 0, n: int = 256
                     ) -> tuple[BifurcationCurve, BifurcationCurve]:
    """``tau_1^k`` and ``tau_2^k`` sampled in ``a`` over ``[1, sqrt(1+2J)]``."""
    a_s = chebyshev_grid(1.0, math.sqrt(1.0 + 2.0 * J), n)
    r1, r2 = [], []
    for a in a_s:
        h = tau_full_hopf(a, J, epsilon, k)
        y = a**3 / 3.0 - a
        r1.append((a, h.tau1_k, y))
        r2.append((a, h.tau2_k, y))
    meta = {"J": J, "epsilon": epsilon, "n": n}
    return (BifurcationCurve(f"HopfFull1({k})", k, np.array(r1), meta),
            BifurcationCurve(f"HopfFull2({k})", k, np.array(r2), meta))


def curves_to_csv(curves: Iterable[BifurcationCurve], path, meta: dict | None = None) -> None:
    """CSV ``label,k,param,tau,y`` preceded by a ``# {json}`` metadata line."""
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(meta or {}, sort_keys=True) + "\n")
        fh.write("label,k,param,tau,y\n")
        for c in curves:
            k = "" if c.k is None else str(c.k)
            for p, t, y in c.samples:
                fh.write(f"{c.label},{k},{p:.17g},{t:.17g},{y:.17g}\n")


def bautin_locate(J: float, epsilon: float, tol: float = 1e-4,
                  tau_range: tuple[float, float] | None = None, n_scan: int = 48) -> float:
    """Delay where the first Lyapunov coefficient changes sign along ``tau_1^0``.

    The curve is parameterized by ``a``. By default the scan covers the whole
    branch ``1 < a < sqrt(1 + 2J)`` on a Chebyshev grid; ``tau_range``
    restricts it. The first sign change of ``lyap1_full`` in increasing
    ``tau`` is refined by bisection until the bracket in ``tau`` is below
    ``tol``.
    """
    from .normal_form import lyap1_full  # circular at import time

    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    t_of_a = lambda a: tau_full_hopf(a, J, epsilon, 0).tau1_k
    if tau_range is None:
        grid = chebyshev_grid(1.0, math.sqrt(1.0 + 2.0 * J), n_scan + 2)[1:-1]
        where = "the whole tau_1^0 branch"
    else:
        grid = np.linspace(_a_on_tau1(J, epsilon, tau_range[0]),
                           _a_on_tau1(J, epsilon, tau_range[1]), n_scan)
        where = f"tau in [{tau_range[0]}, {tau_range[1]}]"
    signs = [math.copysign(1.0, lyap1_full(J, epsilon, a).ell1) for a in grid]
    for i in range(len(grid) - 1):
        if signs[i] != signs[i + 1]:
            lo, hi, s_lo = grid[i], grid[i + 1], signs[i]
            break
    else:
        raise NoSignChange(f"ell1 keeps one sign on {where}")
    while abs(t_of_a(hi) - t_of_a(lo)) > tol:
        mid = 0.5 * (lo + hi)
        if math.copysign(1.0, lyap1_full(J, epsilon, mid).ell1) == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (t_of_a(lo) + t_of_a(hi))


def _a_on_tau1(J: float, epsilon: float, tau: float) -> float:
    """Invert ``tau_1^0(a) = tau`` on the rising part of the branch."""
    from scipy.optimize import brentq

    a_top = math.sqrt(1.0 + 2.0 * J)
    t_top = tau_full_hopf(a_top, J, epsilon, 0).tau1_k
    if not 0.0 < tau < t_top:
        raise DomainError(f"tau={tau} outside (0, {t_top}) covered by tau_1^0")
    return brentq(lambda a: tau_full_hopf(a, J, epsilon, 0).tau1_k - tau, 1.0, a_top,
                  xtol=1e-15, rtol=1e-15)


@dataclass
class ContinuityReport:
    k: int
    top_gap: float            # |tau_1^k - tau_2^k| at a = sqrt(1+2J)
    bottom_gap: float         # |tau_2^k - tau_1^(k+1)| at a = 1
    top_value: float
    bottom_value: float
    top_slopes: tuple[float, float]
    bottom_slopes: tuple[float, float]
    ok: bool


def full_curve_continuity_check(J: float, epsilon: float, k: int = 0,
                                tol: float = 1e-10) -> ContinuityReport:
    """Endpoint matching and square-root turning behaviour of the Hopf branches.

    Near each turning point ``tau(a) - tau_end ~ c sqrt(|a - a_end|)``; the
    two branches meeting there must have finite slopes ``c`` of opposite
    sign and equal magnitude, so that ``a`` is a smooth function of ``tau``.
    """
    a_top = math.sqrt(1.0 + 2.0 * J)
    top1 = tau_full_hopf(a_top, J, epsilon, k).tau1_k
    top2 = tau_full_hopf(a_top, J, epsilon, k).tau2_k
    bot2 = tau_full_hopf(1.0, J, epsilon, k).tau2_k
    bot1 = tau_full_hopf(1.0, J, epsilon, k + 1).tau1_k

    def slope(fn, a_end, sgn):
        ds = [1e-8, 1e-10]
        vals = []
        for d in ds:
            a = a_end + sgn * d
            vals.append((fn(a) - fn(a_end)) / math.sqrt(d))
        return vals[-1], abs(vals[0] - vals[1])

    s_t1, e1 = slope(lambda a: tau_full_hopf(a, J, epsilon, k).tau1_k, a_top, -1)
    s_t2, e2 = slope(lambda a: tau_full_hopf(a, J, epsilon, k).tau2_k, a_top, -1)
    s_b2, e3 = slope(lambda a: tau_full_hopf(a, J, epsilon, k).tau2_k, 1.0, +1)
    s_b1, e4 = slope(lambda a: tau_full_hopf(a, J, epsilon, k + 1).tau1_k, 1.0, +1)
    gap_top = abs(top1 - top2)
    gap_bot = abs(bot2 - bot1)
    slopes_ok = all(math.isfinite(s) for s in (s_t1, s_t2, s_b1, s_b2))
    mirror = (abs(s_t1 + s_t2) <= 1e-3 * max(1.0, abs(s_t1))
              and abs(s_b1 + s_b2) <= 1e-3 * max(1.0, abs(s_b1)))
    ok = gap_top <= tol * max(1.0, top1) and gap_bot <= tol * max(1.0, bot1) and slopes_ok and mirror
    return ContinuityReport(k, gap_top, gap_bot, top1, bot1, (s_t1, s_t2), (s_b2, s_b1), ok)


def bt_double_root(J: float) -> tuple[complex, complex, complex]:
    """``F(0), F'(0), F''(0)`` of the fast characteristic function at BT."""
    tau = 1.0 / J
    F0 = char_fn_fast(0.0, 1.0, J, tau)
    F1 = char_fn_fast_prime(0.0, 1.0, J, tau)
    F2 = J * tau * tau  # d2/dxi2 of J exp(-xi tau) at xi = 0
    return complex(F0), complex(F1), complex(F2)
