"""Simulation-driven global analysis of the full system and its fast subsystem.

Regime classification of long orbits, averaging of fast cycles, basin
bisection locators (fold of limit cycles, unstable cycles, saddle
homoclinic proxies), Poincare sections, divergence rates and
``(x(t - tau), x(t))`` portraits.

The homoclinic and unstable-cycle locators are basin-boundary constructs:
they bracket a change in the fate of trajectories, not a continued
invariant manifold, and their results carry ``approximate=True``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Literal, Sequence

import numpy as np
from numba import njit
from scipy.integrate import simpson
from scipy.optimize import brentq

from . import bifurcation, manifold
from .errors import (DomainError, EmptySection, InvalidConfig, NoCycleAtStart, NonConvergent,
                     NotBistable)
from .model import FastParams, SystemParams
from .solver import (BLOWUP_BOUND, EventSpec, SolverConfig, Trajectory, _rk4_kernel,
                     default_t_discard, dense_eval_arrays, detect_crossings, integrate)
from .spectrum import fast_roots, fast_stability

__all__ = [
    "Thresholds",
    "OrbitStats",
    "RegimeLabel",
    "LABELS",
    "classify",
    "classify_config",
    "divergence_rate",
    "poincare_sequence",
    "poincare_period",
    "cycle_average",
    "CycleAverage",
    "AugmentedSlowManifold",
    "augmented_manifold",
    "predict_regime",
    "flc_locate",
    "unstable_cycle_bracket",
    "CycleBracket",
    "homoclinic_proxy",
    "homoclinic_proxy_y",
    "HomoclinicProxy",
    "portrait",
    "saddle_histories",
    "sweep",
    "atlas_to_csv",
    "ATLAS_COLUMNS",
]

LABELS = ("Stationary", "SmallCycle", "Relaxation", "MMO", "FastSpiking", "Bursting",
          "TorusCanardLike", "Chaotic", "Unclassified")


@dataclass(frozen=True)
class Thresholds:
    """Decision constants of the classifier (all overridable)."""

    large: float = 2.0              # peak-to-peak x of a LARGE oscillation
    small_lo: float = 1e-3          # SMALL oscillation band
    small_hi: float = 0.5
    fold: float = 1.0               # |x| of the folds, used for mid-size swings
    spike_gap_taus: float = 5.0     # inter-peak interval in a fast epoch, in tau
    quiet_taus: float = 10.0        # minimal quiescent stretch, in tau
    burst_min_peaks: int = 3
    spiking_y_excursion: float = 0.1
    chaos_rate: float = 1e-2
    max_period: int = 32
    period_tol: float = 1e-3        # relative to the orbit amplitude
    torus_modulation: float = 0.2
    equilibrium_radius: float = 0.5


@dataclass(frozen=True)
class OrbitStats:
    large_count: int
    small_count: int
    mid_count: int
    period: float | None
    section_period: int | None
    amplitude: float
    mean_x: float
    interpeak_mean: float | None
    interpeak_max: float | None
    lambda_hat: float | None
    n_returns: int


@dataclass(frozen=True)
class RegimeLabel:
    label: str
    stats: OrbitStats
    reason: str = ""

    def __str__(self) -> str:
        return self.label


# ---------------------------------------------------------------------------
# divergence rate


@njit(cache=True)
def _divergence_kernel(xr, yr, dxr, xp, yp, dxp, dyp, m, i0, n_seg, h, J, a, eps, gamma, b,
                       d0, bound):
    """Advance the perturbed copy one delay at a time, renormalizing to ``d0``."""
    total = 0.0
    for s in range(n_seg):
        i = i0 + s * m
        status = _rk4_kernel(xp[i - m:], yp[i - m:], dxp[i - m:], dyp[i - m:], m, m, h,
                             J, a, eps, gamma, b, dxp[i], bound)
        if status >= 0:
            return math.nan, s
        e = i + m
        acc = 0.0
        for k in range(i + 1, e + 1):
            dd = xp[k] - xr[k]
            acc += dd * dd
        dy = yp[e] - yr[e]
        dist = math.sqrt(acc / m + dy * dy)
        if dist == 0.0:
            return -math.inf, s
        total += math.log(dist / d0)
        f = d0 / dist
        for k in range(i + 1, e + 1):
            xp[k] = xr[k] + (xp[k] - xr[k]) * f
            dxp[k] = dxr[k] + (dxp[k] - dxr[k]) * f
        yp[e] = yr[e] + dy * f
        u = xp[e]
        v = yp[e]
        dxp[e] = u - u * u * u / 3.0 + v + J * (u - xp[e - m])
        dyp[e] = eps * (a + b * u + gamma * v)
    return total, n_seg


def divergence_rate(p: SystemParams, cfg: SolverConfig | None = None,
                    tr: Trajectory | None = None, perturbation: float = 1e-8,
                    min_renorm: int = 200) -> float:
    """Two-trajectory estimate of the largest Lyapunov exponent.

    A copy of the reference orbit has ``x`` shifted by ``perturbation`` over
    the whole delay segment ending at ``T_discard``. Both are advanced one
    delay at a time; after each step the separation (RMS of ``x`` over the
    last segment combined with ``y``) is logged and reset to
    ``perturbation``. Uses every full delay segment after the transient.
    """
    if p.epsilon <= 0:
        raise DomainError("divergence_rate needs epsilon > 0")
    if tr is None:
        tr = integrate(p, cfg or classify_config(p))
    m, h = tr.m, tr.h
    i0 = tr.m + int(math.ceil(tr.t_discard / h - 1e-9))
    n_seg = (tr.x.size - 1 - i0) // m
    if n_seg < min_renorm:
        raise InvalidConfig(f"only {n_seg} renormalizations after the transient; "
                            f"need {min_renorm}")
    xp, yp, dxp, dyp = tr.x.copy(), tr.y.copy(), tr.dx.copy(), tr.dy.copy()
    xp[i0 - m:i0 + 1] += perturbation
    u, v = xp[i0], yp[i0]
    dxp[i0] = u - u**3 / 3.0 + v + p.J * (u - xp[i0 - m])
    total, done = _divergence_kernel(tr.x, tr.y, tr.dx, xp, yp, dxp, dyp, m, i0, n_seg, h,
                                     p.J, p.a, p.epsilon, p.gamma, p.b, perturbation,
                                     BLOWUP_BOUND)
    if not math.isfinite(total):
        return total if total < 0 else math.nan
    return total / (done * m * h)


# ---------------------------------------------------------------------------
# orbit features


def _extrema(x: np.ndarray, dx: np.ndarray) -> np.ndarray:
    s = np.sign(dx)
    return np.where(s[:-1] * s[1:] < 0)[0] + 1


def _oscillations(x: np.ndarray, idx: np.ndarray, th: Thresholds):
    """Pair each maximum with the next minimum; returns (start index, amp, kind)."""
    out = []
    for j in range(idx.size - 1):
        i, k = idx[j], idx[j + 1]
        if x[i] <= x[k]:
            continue  # minimum first
        hi, lo = x[i], x[k]
        amp = hi - lo
        if amp > th.large:
            kind = "large"
        elif th.small_lo < amp < th.small_hi:
            kind = "small"
        elif amp <= th.small_lo:
            kind = "none"
        elif hi > th.fold and lo < -th.fold:
            kind = "large"
        elif lo > th.fold or hi < -th.fold or (hi < th.fold and lo > -th.fold):
            kind = "small"
        else:
            kind = "mid"
        out.append((i, amp, kind))
    return out


def poincare_sequence(tr: Trajectory, level: float, t_min: float | None = None) -> np.ndarray:
    """``x(t_n - tau)`` at the upward crossings ``y(t_n) = level`` after the transient."""
    cr = detect_crossings(tr, EventSpec("y", level, "up"), t_min)
    if not cr:
        raise EmptySection(f"no upward crossing of y={level}")
    return np.array([c.x_delayed for c in cr])


def poincare_period(states: np.ndarray, tol: float, max_period: int = 32) -> int | None:
    """Smallest ``p <= max_period`` with ``|s_n - s_(n-p)| < tol`` on the tail.

    ``states`` has one row per return. The last ``max(8, 2p)`` returns (or
    all available) must match.
    """
    n = len(states)
    states = np.asarray(states).reshape(n, -1)
    for p in range(1, max_period + 1):
        k = min(n - p, max(8, 2 * p))
        if k < 4:
            return None
        d = np.abs(states[n - k:] - states[n - k - p:n - p]).max()
        if d < tol:
            return p
    return None


def classify_config(p: SystemParams, window: float | None = None,
                    history=(0.0, 0.0)) -> SolverConfig:
    """Default settings for :func:`classify`: transient plus an analysis window."""
    t_disc = default_t_discard(p)
    window = window if window is not None else max(4000.0, 250.0 * p.tau)
    return SolverConfig(T=t_disc + window, T_discard=t_disc, history=history)


def _stats_window(tr: Trajectory):
    sl = tr.segment()
    return tr.t[sl], tr.x[sl], tr.y[sl], tr.dx[sl]


def _fast_epochs(peaks_t: np.ndarray, gap: float, min_peaks: int):
    epochs, start = [], 0
    for j in range(1, peaks_t.size + 1):
        if j == peaks_t.size or peaks_t[j] - peaks_t[j - 1] >= gap:
            if j - start >= min_peaks:
                epochs.append((start, j))
            start = j
    return epochs


def _bursting(t, x, y, idx, oscs, tau, th: Thresholds) -> tuple[bool, str]:
    peaks = np.array([i for i, _, k in oscs if k == "large"], dtype=int)
    if peaks.size < th.burst_min_peaks:
        return False, "too few large peaks"
    epochs = _fast_epochs(t[peaks], th.spike_gap_taus * tau, th.burst_min_peaks)
    if len(epochs) < 2:
        return False, "fewer than two fast epochs"
    sig = [idx[j] for j in range(idx.size - 1) if abs(x[idx[j + 1]] - x[idx[j]]) > th.small_lo]
    sig = np.array(sig, dtype=int)
    quiet = [(sig[j], sig[j + 1]) for j in range(sig.size - 1)
             if t[sig[j + 1]] - t[sig[j]] > th.quiet_taus * tau]
    if len(quiet) < 2:
        return False, "fewer than two quiescent epochs"
    # alternation: a quiescent stretch between consecutive fast epochs
    for (s0, e0), (s1, _) in zip(epochs, epochs[1:]):
        t_end, t_next = t[peaks[e0 - 1]], t[peaks[s1]]
        if not any(t_end <= t[a] and t[b] <= t_next for a, b in quiet):
            return False, "fast epochs not separated by quiescence"
    for s0, e0 in epochs:
        dy = np.diff(y[peaks[s0:e0]])
        if not (np.all(dy > 0) or np.all(dy < 0)):
            return False, "y not monotone within a fast epoch"
    for a, b in quiet:
        dy = np.diff(y[a:b + 1])
        if not (np.all(dy >= -1e-12) or np.all(dy <= 1e-12)):
            return False, "y not monotone within a quiescent epoch"
    return True, f"{len(epochs)} fast epochs, {len(quiet)} quiescent epochs"


def classify(p: SystemParams, cfg: SolverConfig | None = None,
             thresholds: Thresholds | None = None) -> RegimeLabel:
    """Label the attractor reached from ``cfg.history``.

    Decision order: Stationary, Chaotic, Bursting, then the periodic labels
    (SmallCycle, MMO, FastSpiking, Relaxation), TorusCanardLike, and
    Unclassified when no rule applies.
    """
    if p.epsilon <= 0:
        raise DomainError("classify needs epsilon > 0")
    th = thresholds or Thresholds()
    cfg = cfg or classify_config(p)
    tr = integrate(p, cfg)
    t, x, y, dx = _stats_window(tr)
    mean_x = float(np.mean(x))
    # orient by sign(a) so that labels respect (x, y, a) -> (-x, -y, -a)
    sgn = 1.0 if p.a >= 0 else -1.0
    x, y, dx = sgn * x, sgn * y, sgn * dx
    amp = float(np.ptp(x))
    q = max(1, x.size // 4)
    amp_first, amp_last = float(np.ptp(x[:q])), float(np.ptp(x[-q:]))
    try:
        lam = divergence_rate(p, tr=tr)
    except InvalidConfig:
        lam = None
    idx = _extrema(x, dx)
    oscs = _oscillations(x, idx, th)
    peaks = np.array([i for i, _, k in oscs if k in ("large", "small", "mid")], dtype=int)
    gaps = np.diff(t[peaks]) if peaks.size > 1 else np.empty(0)

    # Poincare returns on the mean-y section, state (x, x(t - tau))
    period = sec_p = None
    n_ret = 0
    level = sgn * float(np.mean(y))
    direction = "up" if sgn > 0 else "down"
    cr = detect_crossings(tr, EventSpec("y", level, direction)) if amp > th.small_lo else []
    n_ret = len(cr)
    if n_ret >= 6:
        states = sgn * np.array([[c.state.x, c.x_delayed] for c in cr])
        sec_p = poincare_period(states, th.period_tol * max(amp, th.small_lo), th.max_period)
        if sec_p is not None:
            period = cr[-1].t - cr[-1 - sec_p].t
    if period is not None and oscs:
        # one full period ending at the last complete oscillation
        t_last = t[oscs[-1][0]]
        per = [o for o in oscs if t_last - period + 0.5 * tr.h < t[o[0]] <= t_last]
    else:
        per = oscs
    counts = {k: sum(1 for o in per if o[2] == k) for k in ("large", "small", "mid")}
    stats = OrbitStats(counts["large"], counts["small"], counts["mid"], period, sec_p, amp,
                       mean_x, float(gaps.mean()) if gaps.size else None,
                       float(gaps.max()) if gaps.size else None, lam, n_ret)

    def out(label, reason):
        return RegimeLabel(label, stats, reason)

    if amp_last < th.small_lo:
        return out("Stationary", "x settles within the small-oscillation floor")
    if amp_last < 0.5 * amp_first and lam is not None and lam < 0:
        return out("Stationary", "decaying oscillation with negative divergence rate")
    if sec_p is None and lam is not None and lam > th.chaos_rate:
        return out("Chaotic", f"no section period <= {th.max_period}, lambda={lam:.3g}")
    burst, why = _bursting(t, x, y, idx, oscs, p.tau, th)
    if burst:
        return out("Bursting", why)
    if sec_p is not None:
        L, S = counts["large"], counts["small"]
        if L == 0 and S > 0:
            x_eq = p.equilibrium.x if p.gamma == 0 else mean_x
            if abs(mean_x - x_eq) < th.equilibrium_radius:
                return out("SmallCycle", "periodic, small oscillations around the equilibrium")
            return out("Unclassified", "small periodic orbit away from the equilibrium")
        if L > 0 and S > 0:
            return out("MMO", f"{L} large and {S} small oscillations per period")
        if L > 0:
            ypp = float(np.ptp(y[t >= t[-1] - period]))
            spiking = (stats.interpeak_max is not None
                       and stats.interpeak_max < th.spike_gap_taus * p.tau
                       and ypp < th.spiking_y_excursion)
            if spiking:
                return out("FastSpiking", "periodic large oscillations with frozen y")
            return out("Relaxation", "periodic, large oscillations only")
        return out("Unclassified", "periodic orbit made of mid-size oscillations only")
    maxima = np.array([x[i] for i, _, k in oscs if k != "none"])
    if (maxima.size > 10 and stats.interpeak_max is not None
            and stats.interpeak_max < th.spike_gap_taus * p.tau):
        mod = np.ptp(maxima) / max(abs(np.mean(maxima)), 1e-12)
        if mod > th.torus_modulation:
            return out("TorusCanardLike", f"fast oscillation with {mod:.0%} envelope modulation")
    return out("Unclassified", "aperiodic without a positive divergence rate")


# ---------------------------------------------------------------------------
# fast subsystem: averages and locators


@dataclass(frozen=True)
class CycleAverage:
    m: float
    kind: Literal["fixed_point", "cycle"]
    period: float | None


def _fast_tail(tr: Trajectory, span: float):
    n = max(2, int(round(span / tr.h)))
    return tr.x[-n:]


def cycle_average(fp: FastParams, cfg: SolverConfig | None = None, t_max: float | None = None,
                  match_tol: float = 1e-6) -> CycleAverage:
    """Long-time average of ``x`` for the fast subsystem at frozen ``y``.

    A fixed point (``x`` constant to ``1e-10`` over the last ``10 tau``)
    returns its value. Otherwise the orbit must return to the Poincare
    section ``x = mean`` with matching delayed value to ``match_tol``; the
    average is taken over one detected period. The horizon doubles up to
    ``t_max`` before :class:`NonConvergent` is raised.
    """
    cfg = cfg or SolverConfig(T=400.0 * fp.tau + 200.0, T_discard=200.0 * fp.tau + 100.0,
                              history=3.0)
    t_max = t_max or 16.0 * cfg.T
    T, T_disc = cfg.T, cfg.T_discard if cfg.T_discard is not None else 0.5 * cfg.T
    while True:
        tr = integrate(fp, replace(cfg, T=T, T_discard=T_disc))
        tail = _fast_tail(tr, 10.0 * fp.tau)
        if np.ptp(tail) < 1e-10:
            return CycleAverage(float(tr.x[-1]), "fixed_point", None)
        sl = tr.segment()
        level = float(np.mean(tr.x[sl]))
        cr = detect_crossings(tr, EventSpec("x", level, "up"))
        if len(cr) >= 4:
            xd = np.array([c.x_delayed for c in cr])
            p = poincare_period(xd, match_tol, 8)
            if p is not None:
                t1, t0 = cr[-1].t, cr[-1 - p].t
                n = max(64, int(math.ceil((t1 - t0) / tr.h)) * 8)
                ts = np.linspace(t0, t1, n + 1)
                xs, _ = dense_eval_arrays(tr, ts)
                m = simpson(xs, x=ts) / (t1 - t0)
                return CycleAverage(float(m), "cycle", t1 - t0)
        if T >= t_max:
            raise NonConvergent(f"no fixed point or periodic orbit by T={T:g}")
        T_disc, T = T, 2.0 * T


@dataclass
class AugmentedSlowManifold:
    """Critical branches and fast-cycle averages over a grid of frozen ``y``."""

    J: float
    tau: float
    y: np.ndarray
    branches: dict            # name -> x values (nan where absent)
    branch_stable: dict       # name -> bool array
    cycle_m: np.ndarray       # average of x on a stable cycle (nan if none)
    cycle_m_alt: np.ndarray   # second coexisting cycle average, if any
    failed: np.ndarray        # per-point NonConvergent flags

    def rows(self):
        for i, yy in enumerate(self.y):
            yield {"y": yy,
                   **{f"x_{k}": v[i] for k, v in self.branches.items()},
                   **{f"stable_{k}": bool(v[i]) for k, v in self.branch_stable.items()},
                   "cycle_m": self.cycle_m[i], "cycle_m_alt": self.cycle_m_alt[i],
                   "failed": bool(self.failed[i])}


def augmented_manifold(J: float, tau: float, y_grid: Sequence[float] | None = None,
                       large: float = 3.0) -> AugmentedSlowManifold:
    """Critical manifold with stability flags plus averages of stable fast cycles.

    At each ``y`` the fast subsystem is started from a small offset of every
    stable equilibrium and from the large constant histories ``+-large``;
    every run ending on a cycle contributes its average.
    """
    ys = np.linspace(-2.0, 2.0, 81) if y_grid is None else np.asarray(y_grid, float)
    names = ("lower", "middle", "upper")
    br = {k: np.full(ys.size, np.nan) for k in names}
    st = {k: np.zeros(ys.size, bool) for k in names}
    cm = np.full(ys.size, np.nan)
    cm2 = np.full(ys.size, np.nan)
    failed = np.zeros(ys.size, bool)
    for i, yy in enumerate(ys):
        starts = [large, -large]
        for r in manifold.critical_roots(float(yy)):
            name = r.branch if r.branch != "unique" else ("upper" if r.x > 0 else "lower")
            br[name][i] = r.x
            stable = fast_stability(r.x, J, tau).verdict == "stable"
            st[name][i] = stable
            if stable:
                starts.append(r.x + 1e-2)
        ms = []
        for h0 in starts:
            try:
                ca = cycle_average(FastParams(J, tau, float(yy)),
                                   SolverConfig(T=400.0 * tau + 200.0,
                                                T_discard=200.0 * tau + 100.0, history=h0))
            except NonConvergent:
                failed[i] = True
                continue
            if ca.kind == "cycle" and all(abs(ca.m - v) > 1e-4 for v in ms):
                ms.append(ca.m)
        ms.sort()
        if ms:
            cm[i] = ms[0]
        if len(ms) > 1:
            cm2[i] = ms[1]
    return AugmentedSlowManifold(J, tau, ys, br, st, cm, cm2, failed)


def predict_regime(aug: AugmentedSlowManifold, a: float) -> str:
    """Regime suggested by where the slow nullcline ``x = a`` meets the diagram.

    Meeting a stable critical branch gives ``Stationary``; meeting the
    cycle-average curve gives ``FastSpiking``; both gives ``Bistable``;
    neither gives ``Bursting``.
    """
    y_eq = a**3 / 3.0 - a
    on_point = False
    if aug.y[0] <= y_eq <= aug.y[-1]:
        for r in manifold.critical_roots(y_eq):
            if abs(r.x - a) < 1e-9 and fast_stability(r.x, aug.J, aug.tau).verdict == "stable":
                on_point = True
    on_cycle = False
    for series in (aug.cycle_m, aug.cycle_m_alt):
        g = series - a
        for i in range(g.size - 1):
            if np.isfinite(g[i]) and np.isfinite(g[i + 1]) and (g[i] == 0 or g[i] * g[i + 1] < 0):
                on_cycle = True
        if np.any(g == 0):
            on_cycle = True
    if on_point and on_cycle:
        return "Bistable"
    if on_point:
        return "Stationary"
    if on_cycle:
        return "FastSpiking"
    return "Bursting"


def _has_large_cycle(fp: FastParams, history: float, threshold: float = 2.0,
                     settle_taus: float = 200.0) -> bool:
    T_disc = settle_taus * fp.tau + 100.0
    tr = integrate(fp, SolverConfig(T=T_disc + 20.0 * fp.tau + 20.0, T_discard=T_disc,
                                    history=history))
    return bool(np.ptp(tr.x[tr.segment()]) > threshold)


def flc_locate(J: float, tau: float, side: int = 1, tol: float = 1e-4,
               y_max: float = 3.0, large: float = 3.0) -> float:
    """Fold of limit cycles: largest ``|y|`` with a sustained large fast cycle.

    Bisection in ``y`` (toward ``side``) on whether a run from the constant
    history ``side * large`` still has ``x`` peak-to-peak above 2 after the
    transient.
    """
    side = 1 if side >= 0 else -1
    ok = lambda yy: _has_large_cycle(FastParams(J, tau, side * yy), side * large)
    if not ok(0.0):
        raise NoCycleAtStart(f"no large cycle at y=0 for J={J}, tau={tau}")
    lo, hi = 0.0, y_max
    if ok(hi):
        raise NoCycleAtStart(f"large cycle persists up to |y|={y_max}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return side * 0.5 * (lo + hi)


@dataclass(frozen=True)
class CycleBracket:
    lo: float
    hi: float
    stable_x: float
    approximate: bool = True


def _settles_to(fp: FastParams, history, target: float, T: float, tol: float = 1e-3) -> bool:
    tr = integrate(fp, SolverConfig(T=T, T_discard=0.5 * T, history=history))
    tail = _fast_tail(tr, max(20.0, 10.0 * fp.tau))
    return bool(np.max(np.abs(tail - target)) < tol)


def unstable_cycle_bracket(fp: FastParams, c_max: float = 3.0, tol: float = 1e-4,
                           T: float | None = None) -> CycleBracket:
    """Basin-boundary proxy for an unstable cycle around a stable equilibrium.

    Constant histories ``x_s + c`` (``x_s`` the stable outer equilibrium)
    are bisected in ``c`` between convergence to ``x_s`` and convergence to
    a cycle. Approximate by construction.

    Raises
    ------
    NotBistable
        If ``x_s`` is unstable, no history up to ``c_max`` leaves its basin,
        or the competing attractor is another equilibrium.
    """
    cands = [r.x for r in manifold.critical_roots(fp.y)
             if fast_stability(r.x, fp.J, fp.tau).verdict == "stable"]
    if not cands:
        raise NotBistable("no stable equilibrium")
    xs = max(cands)
    T = T or 400.0 * fp.tau + 200.0
    direction = 1.0 if xs > 0 else -1.0
    to_point = lambda c: _settles_to(fp, xs + direction * c, xs, T)
    if not to_point(1e-3):
        raise NotBistable("small offsets do not return to the equilibrium")
    if to_point(c_max):
        raise NotBistable("no competing attractor within the history range")
    tr = integrate(fp, SolverConfig(T=T, T_discard=0.5 * T, history=xs + direction * c_max))
    if np.ptp(_fast_tail(tr, max(20.0, 10.0 * fp.tau))) < 1e-3:
        raise NotBistable("the competing attractor is an equilibrium, not a cycle")
    lo, hi = 1e-3, c_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if to_point(mid):
            lo = mid
        else:
            hi = mid
    return CycleBracket(lo, hi, xs)


@dataclass(frozen=True)
class HomoclinicProxy:
    """Delays where a saddle unstable-manifold branch changes its fate."""

    J: float
    y: float
    taus: tuple[float, ...]
    branches: tuple[int, ...]
    approximate: bool = True

    @property
    def tau(self) -> float:
        return self.taus[0]


def saddle_histories(fp: FastParams, delta: float = 1e-6):
    """Histories leaving the middle equilibrium along its unstable eigenfunction.

    Returns ``(x0, [history(+), history(-)])``; each history is
    ``x0 +- delta exp(lambda theta)`` with the real unstable root ``lambda``
    and carries its exact derivative.
    """
    roots = manifold.critical_roots(fp.y)
    if len(roots) != 3:
        raise DomainError("the saddle exists for |y| < 2/3 only")
    x0 = roots[1].x
    lam = fast_roots(x0, fp.J, fp.tau)[0].value.real
    out = []
    for s in (1.0, -1.0):
        def h(t, s=s):
            return x0 + s * delta * math.exp(lam * t)

        h.derivative = lambda t, s=s: s * delta * lam * math.exp(lam * t)
        out.append(h)
    return x0, out


def _branch_returns(J: float, y: float, tau: float, side: int, T: float) -> bool:
    """Does the ``side`` branch of the saddle's unstable manifold end on the
    neighbouring equilibrium?"""
    fp = FastParams(J, tau, y)
    roots = manifold.critical_roots(y)
    target = roots[2].x if side > 0 else roots[0].x
    _, hs = saddle_histories(fp)
    return _settles_to(fp, hs[0] if side > 0 else hs[1], target, T)


def _first_switch(f: Callable[[float], bool], grid: np.ndarray, tol: float) -> float | None:
    vals = [f(g) for g in grid]
    for i in range(len(grid) - 1):
        if vals[i] != vals[i + 1]:
            lo, hi, vlo = grid[i], grid[i + 1], vals[i]
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if f(mid) == vlo:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
    return None


def homoclinic_proxy(J: float, y: float, tau_range: tuple[float, float] | None = None,
                     n_scan: int = 24, tol: float = 1e-4, T: float = 600.0) -> HomoclinicProxy:
    """Approximate saddle-homoclinic delays of the fast subsystem at frozen ``y``.

    For each branch of the saddle's one-dimensional unstable manifold the
    delay is bisected on whether the branch ends on the neighbouring stable
    equilibrium. Up to one estimate per branch; at ``y = 0`` both coincide
    (double homoclinic). Approximate: basin bisection, no continuation.
    """
    if not abs(y) < manifold.FOLD_Y:
        raise DomainError("homoclinic_proxy needs |y| < 2/3")
    roots = manifold.critical_roots(y)
    taus, sides = [], []
    for side, r in ((1, roots[2]), (-1, roots[0])):
        lo, hi = tau_range or (0.05, None)
        if hi is None:
            x2 = r.x * r.x
            hi = (bifurcation.tau_fast_hopf(r.x, J, 0).tau if 1 < x2 < 1 + 2 * J
                  else 4.0 / J)
            hi *= 0.999
        grid = np.linspace(lo, hi, n_scan)
        est = _first_switch(lambda t: _branch_returns(J, y, t, side, T), grid, tol)
        if est is not None:
            taus.append(est)
            sides.append(side)
    if not taus:
        raise NotBistable(f"no change of saddle-branch fate on the scanned delays at y={y}")
    order = np.argsort(taus)
    taus = [taus[i] for i in order]
    sides = [sides[i] for i in order]
    if len(taus) == 2 and abs(taus[1] - taus[0]) < 2 * tol:
        taus, sides = [0.5 * (taus[0] + taus[1])], [0]
    return HomoclinicProxy(J, y, tuple(taus), tuple(sides))


def homoclinic_proxy_y(J: float, tau: float, side: int = 1, tol: float = 1e-7,
                       n_scan: int = 40, T: float = 800.0) -> float:
    """Frozen ``y`` of the saddle homoclinic near the fold ``y = side * 2/3``.

    For ``J tau > 1`` the outer equilibrium next to the fold loses stability
    at a subcritical Hopf point ``y_H``; between it and the homoclinic value
    the saddle's unstable branch escapes, beyond it the branch returns. The
    distance ``s = 2/3 - |y|`` is bisected from ``s_H`` outward.
    """
    side = 1 if side >= 0 else -1
    if J * tau <= 1:
        raise DomainError("the homoclinic branch near the fold needs J tau > 1")
    branch = "lower" if side > 0 else "upper"
    hopf_gap = lambda s: bifurcation.tau_fast_hopf(
        manifold.branch_eval(branch, side * (manifold.FOLD_Y - s)), J, 0).tau - tau
    try:
        s_H = brentq(hopf_gap, 1e-14, manifold.FOLD_Y - 1e-9)
    except ValueError as exc:
        raise DomainError(f"no Hopf point between the fold and y=0 for tau={tau}") from exc
    returns = lambda s: _branch_returns(J, side * (manifold.FOLD_Y - s), tau, -side, T)
    grid = s_H + (manifold.FOLD_Y - 1e-3 - s_H) * np.linspace(1e-6, 1.0, n_scan) ** 2
    s = _first_switch(returns, grid, tol)
    if s is None:
        raise NotBistable(f"no homoclinic switch between y_H and y=0 for tau={tau}")
    return side * (manifold.FOLD_Y - s)


# ---------------------------------------------------------------------------
# portraits


def portrait(fp: FastParams, histories: Iterable, T: float | None = None,
             t_discard: float | None = None) -> list[np.ndarray]:
    """Post-transient ``(x(t - tau), x(t))`` samples, one array per history.

    The projection of an infinite-dimensional phase space to two delay
    coordinates is a visualization aid only; curves may cross.
    """
    T = T or 60.0 * fp.tau + 60.0
    t_discard = 0.0 if t_discard is None else t_discard
    out = []
    for h in histories:
        tr = integrate(fp, SolverConfig(T=T, T_discard=t_discard, history=h))
        sl = tr.segment()
        out.append(np.column_stack([tr.x[sl.start - tr.m:sl.stop - tr.m], tr.x[sl]]))
    return out


# ---------------------------------------------------------------------------
# sweeps


ATLAS_COLUMNS = ("J", "epsilon", "a", "tau", "label", "large_count", "small_count", "period",
                 "lambda_hat")


def _classify_row(args):
    p, window, history = args
    lab = classify(p, classify_config(p, window, history))
    s = lab.stats
    return {"J": p.J, "epsilon": p.epsilon, "a": p.a, "tau": p.tau, "label": lab.label,
            "large_count": s.large_count, "small_count": s.small_count,
            "period": "" if s.period is None else s.period,
            "lambda_hat": "" if s.lambda_hat is None else s.lambda_hat}


def sweep(points: Sequence[SystemParams], workers: int = 1, window: float | None = None,
          history=(0.0, 0.0)) -> list[dict]:
    """Classify every parameter point; rows are returned in input order."""
    tasks = [(p, window, history) for p in points]
    if workers <= 1 or len(tasks) <= 1:
        return [_classify_row(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_classify_row, tasks))


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def atlas_to_csv(rows: Iterable[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ATLAS_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in ATLAS_COLUMNS])
