"""Fixed-step method-of-steps integrator for the single-delay system.

The step is ``h = tau/m`` with integer ``m >= 4``, so the delayed argument
of every mesh node is itself a mesh node. The classical RK4 stages need the
delayed value at half steps; those come from the cubic Hermite interpolant
built on stored values and derivatives, which keeps the scheme fourth
order. The same interpolant gives dense output and event location.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence, Union

import numpy as np
from numba import njit
from scipy.optimize import brentq

from .errors import Blowup, InvalidConfig, OutOfRange
from .model import FastParams, State, SystemParams

__all__ = [
    "SolverConfig",
    "EventSpec",
    "Trajectory",
    "Crossing",
    "integrate",
    "dense_eval",
    "detect_crossings",
    "default_h_max",
    "default_t_discard",
    "BLOWUP_BOUND",
]

BLOWUP_BOUND = 1e6

HistoryLike = Union[State, Sequence[float], float, Callable]


def default_h_max(tau: float) -> float:
    return min(tau / 20.0, 1e-2)


def default_t_discard(p: SystemParams | FastParams) -> float:
    if isinstance(p, SystemParams) and p.epsilon > 0:
        return max(50.0 / p.epsilon, 10.0 * p.tau)
    return 20.0 * p.tau


@dataclass(frozen=True)
class SolverConfig:
    """Integration settings.

    ``history`` is a constant state (``State``, ``(x, y)`` or, for the fast
    subsystem, a float ``x``) or a callable ``t -> (x, y)`` / ``t -> x`` on
    ``[-tau, 0]``. A callable may carry a ``derivative`` attribute with the
    same signature; otherwise central differences are used.
    ``h_max`` and ``T_discard`` default to :func:`default_h_max` and
    :func:`default_t_discard`.
    """

    T: float
    h_max: float | None = None
    T_discard: float | None = None
    history: HistoryLike = (0.0, 0.0)

    def resolved(self, p: SystemParams | FastParams) -> "SolverConfig":
        h_max = default_h_max(p.tau) if self.h_max is None else self.h_max
        t_disc = default_t_discard(p) if self.T_discard is None else self.T_discard
        if not (h_max > 0 and math.isfinite(h_max)):
            raise InvalidConfig(f"h_max must be positive, got {h_max}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise InvalidConfig(f"T must be positive, got {self.T}")
        if not (0 <= t_disc < self.T):
            raise InvalidConfig(f"need 0 <= T_discard < T; got {t_disc}, T={self.T}")
        return SolverConfig(self.T, h_max, t_disc, self.history)


@dataclass(frozen=True)
class EventSpec:
    coordinate: Literal["x", "y", "x_delayed"]
    level: float
    direction: Literal["up", "down", "both"] = "up"

    def __post_init__(self):
        if not math.isfinite(self.level):
            raise InvalidConfig("event level must be finite")
        if self.coordinate not in ("x", "y", "x_delayed"):
            raise InvalidConfig(f"unknown coordinate {self.coordinate!r}")
        if self.direction not in ("up", "down", "both"):
            raise InvalidConfig(f"unknown direction {self.direction!r}")


@dataclass(frozen=True)
class Crossing:
    t: float
    state: State
    x_delayed: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Mesh solution on ``[-tau, T]`` with derivatives at every node.

    Nodes ``0..m`` hold the initial history (node ``m`` is ``t = 0``).
    ``dx[m]`` is the right derivative at ``t = 0``; the history's left
    derivative there is ``hist_end``.
    """

    params: SystemParams | FastParams
    h: float
    m: int
    x: np.ndarray
    y: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    hist_end: tuple[float, float]
    t_discard: float
    T: float

    @property
    def tau(self) -> float:
        return self.params.tau

    @property
    def t(self) -> np.ndarray:
        return (np.arange(self.x.size) - self.m) * self.h

    @property
    def t_end(self) -> float:
        return (self.x.size - 1 - self.m) * self.h

    def x_delayed(self) -> np.ndarray:
        """``x(t - tau)`` aligned with the solution nodes ``m..end``."""
        return self.x[: self.x.size - self.m]

    def index_of(self, t: float) -> int:
        return int(round(t / self.h)) + self.m

    def segment(self, t0: float | None = None) -> slice:
        """Slice of solution nodes with ``t >= t0`` (default ``t_discard``)."""
        t0 = self.t_discard if t0 is None else t0
        return slice(max(self.m, self.m + int(math.ceil(t0 / self.h - 1e-9))), self.x.size)

    def to_csv(self, path, t0: float | None = None) -> None:
        """Write ``t,x,y,x_delayed`` rows (17 significant digits) from ``t0``."""
        sl = slice(self.m, self.x.size) if t0 is None else self.segment(t0)
        t = self.t[sl]
        x, y = self.x[sl], self.y[sl]
        xd = self.x[sl.start - self.m: sl.stop - self.m]
        data = np.column_stack([t, x, y, xd])
        np.savetxt(path, data, delimiter=",", header="t,x,y,x_delayed", comments="",
                   fmt="%.17g")


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _rk4_kernel(x, y, dx, dy, m, n_steps, h, J, a, eps, gamma, b, hend_dx, bound):
    """Advance in place; returns -1 or the node index where |state| > bound."""
    half = 0.5 * h
    for n in range(n_steps):
        i = m + n
        j = n  # node at t_i - tau
        xd0 = x[j]
        xd1 = x[j + 1]
        d0 = dx[j]
        d1 = hend_dx if j + 1 == m else dx[j + 1]
        xdm = 0.5 * (xd0 + xd1) + h * (d0 - d1) / 8.0
        xi = x[i]
        yi = y[i]
        k1x = dx[i]
        k1y = dy[i]
        u = xi + half * k1x
        v = yi + half * k1y
        k2x = u - u * u * u / 3.0 + v + J * (u - xdm)
        k2y = eps * (a + b * u + gamma * v)
        u = xi + half * k2x
        v = yi + half * k2y
        k3x = u - u * u * u / 3.0 + v + J * (u - xdm)
        k3y = eps * (a + b * u + gamma * v)
        u = xi + h * k3x
        v = yi + h * k3y
        k4x = u - u * u * u / 3.0 + v + J * (u - xd1)
        k4y = eps * (a + b * u + gamma * v)
        xn = xi + h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
        yn = yi + h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
        x[i + 1] = xn
        y[i + 1] = yn
        dx[i + 1] = xn - xn * xn * xn / 3.0 + yn + J * (xn - xd1)
        dy[i + 1] = eps * (a + b * xn + gamma * yn)
        if not (abs(xn) <= bound and abs(yn) <= bound):
            return i + 1
    return -1


def _coefficients(p):
    if isinstance(p, FastParams):
        return p.J, 0.0, 0.0, 0.0, 0.0
    return p.J, p.a, p.epsilon, p.gamma, p.b


def _history_arrays(p, history, ts):
    """Values and derivatives of the initial history on the nodes ``ts``."""
    fast = isinstance(p, FastParams)
    n = ts.size
    if callable(history):
        vals = [history(float(t)) for t in ts]
        deriv = getattr(history, "derivative", None)
        if fast:
            xs = np.array([float(v) for v in vals])
            ys = np.full(n, p.y)
        else:
            xs = np.array([float(v[0]) for v in vals])
            ys = np.array([float(v[1]) for v in vals])
        if deriv is not None:
            dvals = [deriv(float(t)) for t in ts]
            if fast:
                dxs = np.array([float(v) for v in dvals])
                dys = np.zeros(n)
            else:
                dxs = np.array([float(v[0]) for v in dvals])
                dys = np.array([float(v[1]) for v in dvals])
        else:
            step = 1e-6 * max(1.0, p.tau)

            def fd(t):
                lo, hi = max(t - step, -p.tau), min(t + step, 0.0)
                a0, a1 = history(lo), history(hi)
                if fast:
                    return (float(a1) - float(a0)) / (hi - lo), 0.0
                return ((float(a1[0]) - float(a0[0])) / (hi - lo),
                        (float(a1[1]) - float(a0[1])) / (hi - lo))

            d = [fd(float(t)) for t in ts]
            dxs = np.array([v[0] for v in d])
            dys = np.array([v[1] for v in d]) if not fast else np.zeros(n)
        return xs, ys, dxs, dys
    if fast:
        x0 = float(history[0]) if isinstance(history, (tuple, list, State)) else float(history)
        return np.full(n, x0), np.full(n, p.y), np.zeros(n), np.zeros(n)
    x0, y0 = (float(v) for v in history)
    return np.full(n, x0), np.full(n, y0), np.zeros(n), np.zeros(n)


def step_count(tau: float, h_max: float) -> int:
    return max(4, int(math.ceil(tau / h_max - 1e-12)))


def integrate(p: SystemParams | FastParams, cfg: SolverConfig) -> Trajectory:
    """Integrate the full system or the fast subsystem over ``[0, cfg.T]``.

    Raises
    ------
    Blowup
        If ``|x|`` or ``|y|`` exceeds ``1e6``.
    InvalidConfig
        For inconsistent step, horizon or transient settings.
    """
    cfg = cfg.resolved(p)
    m = step_count(p.tau, cfg.h_max)
    h = p.tau / m
    n_steps = int(math.ceil(cfg.T / h - 1e-9))
    size = m + n_steps + 1
    x = np.empty(size)
    y = np.empty(size)
    dx = np.empty(size)
    dy = np.empty(size)
    ts = (np.arange(m + 1) - m) * h
    hx, hy, hdx, hdy = _history_arrays(p, cfg.history, ts)
    x[: m + 1], y[: m + 1], dx[: m + 1], dy[: m + 1] = hx, hy, hdx, hdy
    hist_end = (float(hdx[-1]), float(hdy[-1]))
    J, a, eps, gamma, b = _coefficients(p)
    x0, y0 = x[m], y[m]
    dx[m] = x0 - x0**3 / 3.0 + y0 + J * (x0 - x[0])
    dy[m] = eps * (a + b * x0 + gamma * y0)
    status = _rk4_kernel(x, y, dx, dy, m, n_steps, h, J, a, eps, gamma, b,
                         hist_end[0], BLOWUP_BOUND)
    if status >= 0:
        raise Blowup((status - m) * h, BLOWUP_BOUND)
    return Trajectory(p, h, m, x, y, dx, dy, hist_end, cfg.T_discard, cfg.T)


# ---------------------------------------------------------------------------
# dense output and events


def _hermite(v0, v1, d0, d1, h, s):
    s2 = s * s
    s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * v0 + (s3 - 2 * s2 + s) * h * d0
            + (-2 * s3 + 3 * s2) * v1 + (s3 - s2) * h * d1)


def _right_derivs(tr: Trajectory, idx: np.ndarray, which: str) -> np.ndarray:
    d = tr.dx if which == "x" else tr.dy
    out = d[idx + 1].copy()
    at0 = idx + 1 == tr.m
    if np.any(at0):
        out[at0] = tr.hist_end[0] if which == "x" else tr.hist_end[1]
    return out


def dense_eval_arrays(tr: Trajectory, t) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized cubic Hermite evaluation of ``(x, y)`` at times ``t``."""
    t = np.asarray(t, dtype=float)
    lo, hi = -tr.tau, tr.t_end
    tol = 1e-12 * max(1.0, abs(hi))
    if np.any(t < lo - tol) or np.any(t > hi + tol):
        raise OutOfRange(f"t outside [{lo}, {hi}]")
    u = (np.clip(t, lo, hi) + tr.tau) / tr.h
    idx = np.minimum(np.floor(u).astype(np.int64), tr.x.size - 2)
    s = u - idx
    xs = _hermite(tr.x[idx], tr.x[idx + 1], tr.dx[idx], _right_derivs(tr, idx, "x"), tr.h, s)
    ys = _hermite(tr.y[idx], tr.y[idx + 1], tr.dy[idx], _right_derivs(tr, idx, "y"), tr.h, s)
    # exact at nodes
    on = s == 0.0
    if np.any(on):
        xs = np.where(on, tr.x[idx], xs)
        ys = np.where(on, tr.y[idx], ys)
    return xs, ys


def dense_eval(tr: Trajectory, t: float) -> State:
    """State at time ``t`` in ``[-tau, T]`` from the Hermite interpolant."""
    xs, ys = dense_eval_arrays(tr, np.array([t]))
    return State(float(xs[0]), float(ys[0]))


def _coordinate(tr: Trajectory, coordinate: str):
    """Values/derivatives of the event coordinate on solution nodes."""
    m = tr.m
    if coordinate == "x":
        return tr.x[m:], tr.dx[m:], m
    if coordinate == "y":
        return tr.y[m:], tr.dy[m:], m
    n = tr.x.size - m
    d = tr.dx[:n].copy()
    # interval [m-1, m] of the history uses the left derivative at 0
    return tr.x[:n], d, 0


def detect_crossings(tr: Trajectory, ev: EventSpec, t_min: float | None = None
                     ) -> list[Crossing]:
    """Level crossings of one coordinate after ``t_min`` (default ``T_discard``).

    Crossing times are roots of the cubic Hermite interpolant, found by
    Brent's method to ``1e-10`` relative tolerance.
    """
    t_min = tr.t_discard if t_min is None else t_min
    vals, ders, base = _coordinate(tr, ev.coordinate)
    g = vals - ev.level
    start = max(0, int(math.floor(t_min / tr.h)))
    above = g >= 0
    sl = np.arange(start, g.size - 1)
    if ev.direction == "up":
        hits = sl[(~above[sl]) & above[sl + 1]]
    elif ev.direction == "down":
        hits = sl[above[sl] & (~above[sl + 1])]
    else:
        hits = sl[above[sl] != above[sl + 1]]
    out = []
    h = tr.h
    for k in hits:
        v0, v1 = vals[k], vals[k + 1]
        d0 = ders[k]
        d1 = ders[k + 1]
        if ev.coordinate == "x_delayed" and k + 1 == tr.m:
            d1 = tr.hist_end[0]
        f = lambda s: _hermite(v0, v1, d0, d1, h, s) - ev.level
        if g[k + 1] == 0.0:
            s = 1.0
        else:
            s = brentq(f, 0.0, 1.0, xtol=1e-14)
        t = (k + s) * h
        if t < t_min:
            continue
        st = dense_eval(tr, t)
        xd = dense_eval(tr, t - tr.tau).x
        out.append(Crossing(t, st, xd))
    return out
