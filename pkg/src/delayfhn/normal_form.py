"""First Lyapunov coefficient at Hopf points and related local checks.

The equilibrium is shifted to the origin and the linear part is written as
``L phi = A0 phi(0) + A1 phi(-tau)`` with characteristic matrix
``Delta(lam) = lam I - A0 - A1 exp(-lam tau)``. The nonlinearity acts on
the instantaneous ``x`` only: ``-x* u**2 - u**3/3``.

Two independent evaluations are provided.

* Characteristic-matrix projection: eigenvector and adjoint from the null
  spaces of ``Delta(i omega)``, second-order terms from ``Delta(2 i omega)``
  and ``Delta(0)``.
* Functional reduction: eigenfunction and adjoint profiles on ``[-tau, 0]``,
  normalization by the delay bilinear pairing evaluated with composite
  Simpson quadrature, explicit center-manifold profiles ``w20(theta)``,
  ``w11(theta)`` and the classical ``g20, g11, g02, g21`` assembly.

Normalization: ``ell1 = omega * Re(c1) / 4``. This is the radial cubic
coefficient after scaling the critical eigenvector's ``x`` component to
``omega / 2``; with it the classical FitzHugh-Nagumo singular Hopf point
gives ``-sqrt(eps)/8`` to leading order. Only the sign and ratios are
convention-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import bifurcation, manifold
from .errors import DomainError, IllConditioned, NotOnHopfCurve
from .model import FastParams, SystemParams
from .solver import SolverConfig, integrate
from .spectrum import (char_fn_fast, char_fn_full, fast_roots, full_rightmost_root,
                       newton_polish, char_fn_full_prime, char_fn_fast_prime)

__all__ = [
    "LyapunovResult",
    "NormalFormWorkspace",
    "ProbeResult",
    "BTReport",
    "lyap1_full",
    "lyap1_fast",
    "lyap1_linear_system",
    "criticality_probe",
    "bt_local_check",
    "simpson_weights",
]

DEFAULT_PANELS = 2**10
_COND_LIMIT = 1e8
_MARGINAL_TOL = 1e-8


@dataclass(frozen=True)
class LyapunovResult:
    ell1: float
    sign: Literal["negative", "positive"]
    criticality: Literal["supercritical", "subcritical"]
    omega: float
    tau: float
    convergence_delta: float
    ell1_projection: float  # characteristic-matrix route, for cross-checking

    @classmethod
    def build(cls, ell1, omega, tau, delta, ell1_proj):
        neg = ell1 < 0
        return cls(ell1, "negative" if neg else "positive",
                   "supercritical" if neg else "subcritical", omega, tau, delta, ell1_proj)


@dataclass
class NormalFormWorkspace:
    """Intermediate objects of the functional reduction at one Hopf point."""

    omega: float
    tau: float
    A0: np.ndarray
    A1: np.ndarray
    x_star: float
    panels: int = DEFAULT_PANELS
    theta: np.ndarray = field(init=False)
    q: np.ndarray = field(init=False)              # eigenvector, x-component 1
    q_profile: np.ndarray = field(init=False)      # q exp(i omega theta)
    adjoint: np.ndarray = field(init=False)        # row d, pairing-normalized
    pairing: np.ndarray = field(init=False)        # <Psi, Phi> after normalization
    w20: np.ndarray = field(init=False)
    w11: np.ndarray = field(init=False)
    g: dict = field(init=False)
    c1: complex = field(init=False)
    boundary_residual: float = field(init=False)
    pairing_residual: float = field(init=False)

    def __post_init__(self):
        self._reduce()

    # -- linear algebra helpers
    def delta(self, lam: complex) -> np.ndarray:
        n = self.A0.shape[0]
        return lam * np.eye(n) - self.A0 - self.A1 * np.exp(-lam * self.tau)

    def B(self, u, v) -> np.ndarray:
        out = np.zeros(self.A0.shape[0], complex)
        out[0] = -2.0 * self.x_star * u[0] * v[0]
        return out

    def C(self, u, v, w) -> np.ndarray:
        out = np.zeros(self.A0.shape[0], complex)
        out[0] = -2.0 * u[0] * v[0] * w[0]
        return out

    def pair(self, psi_row: np.ndarray, sign_psi: int, phi_vec: np.ndarray, sign_phi: int
             ) -> complex:
        """``<psi, phi>`` for ``psi(s) = row exp(-i sign_psi omega s)`` and
        ``phi(theta) = vec exp(i sign_phi omega theta)`` by Simpson quadrature."""
        w = self.omega
        th = self.theta
        integrand = (np.exp(-1j * sign_psi * w * (th + self.tau))
                     * np.exp(1j * sign_phi * w * th)) * (psi_row @ self.A1 @ phi_vec)
        return complex(psi_row @ phi_vec + np.dot(simpson_weights(self.panels, self.tau), integrand))

    def _reduce(self):
        w, tau = self.omega, self.tau
        self.theta = np.linspace(-tau, 0.0, self.panels + 1)
        D = self.delta(1j * w)
        U, s, Vh = np.linalg.svd(D)
        if s[-1] > _MARGINAL_TOL * max(1.0, s[0]):
            raise NotOnHopfCurve(f"Delta(i omega) is not singular: sigma_min={s[-1]:.3g}")
        q = Vh[-1].conj()
        q = q / q[0]
        d = U[:, -1].conj()
        raw = np.array([[self.pair(d, 1, q, 1), self.pair(d, 1, q.conj(), -1)],
                        [self.pair(d.conj(), -1, q, 1), self.pair(d.conj(), -1, q.conj(), -1)]])
        if np.linalg.cond(raw) > _COND_LIMIT:
            raise IllConditioned(f"pairing matrix condition {np.linalg.cond(raw):.3g}")
        d = d / raw[0, 0]
        self.q = q
        self.adjoint = d
        self.q_profile = np.outer(np.exp(1j * w * self.theta), q)
        self.pairing = np.array(
            [[self.pair(d, 1, q, 1), self.pair(d, 1, q.conj(), -1)],
             [self.pair(d.conj(), -1, q, 1), self.pair(d.conj(), -1, q.conj(), -1)]])
        self.pairing_residual = float(np.max(np.abs(self.pairing - np.eye(2))))

        qb = q.conj()
        Bqq, Bqqb, Bqbqb = self.B(q, q), self.B(q, qb), self.B(qb, qb)
        g20, g11, g02 = d @ Bqq, d @ Bqqb, d @ Bqbqb
        D2, D0 = self.delta(2j * w), self.delta(0.0)
        for M in (D2, D0):
            if np.linalg.cond(M) > _COND_LIMIT:
                raise IllConditioned(f"second-order solve condition {np.linalg.cond(M):.3g}")
        E1 = np.linalg.solve(D2, Bqq)
        E2 = np.linalg.solve(D0, Bqqb)
        e = np.exp(1j * w * self.theta)[:, None]
        self.w20 = ((1j * g20 / w) * q * e + (1j * np.conj(g02) / (3 * w)) * qb * e.conj()
                    + E1 * e**2)
        self.w11 = (-(1j * g11 / w) * q * e + (1j * np.conj(g11) / w) * qb * e.conj()
                    + E2 * np.ones_like(e))
        # boundary conditions at theta = 0
        L = lambda prof: self.A0 @ prof[-1] + self.A1 @ prof[0]
        r20 = 2j * w * self.w20[-1] - L(self.w20) - (Bqq - g20 * q - np.conj(g02) * qb)
        r11 = -L(self.w11) - (Bqqb - g11 * q - np.conj(g11) * qb)
        self.boundary_residual = float(max(np.max(np.abs(r20)), np.max(np.abs(r11))))
        g21 = d @ (self.C(q, q, qb) + self.B(qb, self.w20[-1]) + 2.0 * self.B(q, self.w11[-1]))
        self.g = {"g20": complex(g20), "g11": complex(g11), "g02": complex(g02),
                  "g21": complex(g21)}
        self.c1 = complex(1j / (2 * w) * (g20 * g11 - 2 * abs(g11) ** 2 - abs(g02) ** 2 / 3)
                          + g21 / 2)

    @property
    def ell1(self) -> float:
        return self.omega * self.c1.real / 4.0

    @property
    def planar_cubic(self) -> dict:
        """Real-form cubic coefficients of ``u1 + i u2 = z`` up to the Hopf normal form."""
        c = self.c1
        return {"radial": self.omega * c.real / 4.0, "angular": self.omega * c.imag / 4.0}


def simpson_weights(panels: int, length: float) -> np.ndarray:
    """Composite Simpson weights for ``panels`` (even) equal panels."""
    if panels % 2:
        raise DomainError("Simpson's rule needs an even panel count")
    h = length / panels
    wts = np.full(panels + 1, 2.0)
    wts[1::2] = 4.0
    wts[0] = wts[-1] = 1.0
    return wts * h / 3.0


def _projection_c1(A0, A1, tau, omega, x_star) -> complex:
    """``c1`` from null vectors of the characteristic matrix."""
    n = A0.shape[0]
    delta = lambda lam: lam * np.eye(n) - A0 - A1 * np.exp(-lam * tau)
    U, s, Vh = np.linalg.svd(delta(1j * omega))
    q = Vh[-1].conj()
    q = q / q[0]
    p = U[:, -1].conj()
    p = p / (p @ (np.eye(n) + tau * A1 * np.exp(-1j * omega * tau)) @ q)
    e0 = np.zeros(n, complex)

    def B(u, v):
        out = e0.copy()
        out[0] = -2.0 * x_star * u[0] * v[0]
        return out

    qb = q.conj()
    h20 = np.linalg.solve(delta(2j * omega), B(q, q))
    h11 = np.linalg.solve(delta(0.0), B(q, qb))
    cubic = e0.copy()
    cubic[0] = -2.0 * q[0] * q[0] * qb[0]
    return complex(0.5 * p @ (cubic + B(qb, h20) + 2.0 * B(q, h11)))


def lyap1_linear_system(A0, A1, tau: float, omega: float, x_star: float,
                        panels: int = DEFAULT_PANELS) -> tuple[LyapunovResult, NormalFormWorkspace]:
    """Lyapunov coefficient for a delayed system with the cubic FhN nonlinearity.

    Runs the functional reduction at ``panels`` and ``2 * panels`` Simpson
    panels; the relative change is reported as ``convergence_delta``.
    """
    A0 = np.asarray(A0, complex)
    A1 = np.asarray(A1, complex)
    ws = NormalFormWorkspace(omega, tau, A0, A1, x_star, panels)
    ws2 = NormalFormWorkspace(omega, tau, A0, A1, x_star, 2 * panels)
    delta = abs(ws2.ell1 - ws.ell1) / max(abs(ws.ell1), 1e-300)
    proj = omega * _projection_c1(A0, A1, tau, omega, x_star).real / 4.0
    return LyapunovResult.build(ws.ell1, omega, tau, delta, proj), ws


def _full_matrices(x_star, J, epsilon, gamma=0.0, b=-1.0):
    A0 = np.array([[1.0 - x_star**2 + J, 1.0], [epsilon * b, epsilon * gamma]])
    A1 = np.array([[-J, 0.0], [0.0, 0.0]])
    return A0, A1


def _polish_omega(F, dF, omegas, scale) -> float:
    best = None
    for w in omegas:
        if not (w > 0 and math.isfinite(w)):
            continue
        res = abs(F(1j * w))
        if best is None or res < best[1]:
            best = (w, res)
    if best is None or best[1] > 1e-6 * scale:
        raise NotOnHopfCurve(f"no purely imaginary root found (residual {best and best[1]:.3g})")
    xi, _ = newton_polish(F, dF, 1j * best[0])
    if abs(xi.real) > 1e-6:
        raise NotOnHopfCurve(f"polished root has Re = {xi.real:.3g}")
    return abs(xi.imag)


def lyap1_full(J: float, epsilon: float, a_on_hopf: float, k: int = 0,
               branch: Literal["tau1", "tau2"] = "tau1", tau: float | None = None,
               panels: int = DEFAULT_PANELS) -> LyapunovResult:
    """First Lyapunov coefficient of the full system on a Hopf branch.

    ``tau`` defaults to the closed-form Hopf delay ``tau_1^k(a)`` (or
    ``tau_2^k``); an explicit ``tau`` must be a Hopf delay.

    Raises
    ------
    NotOnHopfCurve
        If ``(a, tau)`` has no purely imaginary characteristic root.
    IllConditioned
        If the pairing matrix or a second-order solve is near singular.
    """
    hp = bifurcation.tau_full_hopf(a_on_hopf, J, epsilon, k)
    if tau is None:
        tau = hp.tau1_k if branch == "tau1" else hp.tau2_k
    F = lambda xi: char_fn_full(xi, a_on_hopf, J, tau, epsilon)
    dF = lambda xi: char_fn_full_prime(xi, a_on_hopf, J, tau, epsilon)
    omega = _polish_omega(F, dF, (-hp.zeta1, hp.zeta2, hp.zeta1, -hp.zeta2),
                          1.0 + abs(a_on_hopf) ** 2 + J + epsilon)
    A0, A1 = _full_matrices(a_on_hopf, J, epsilon)
    res, _ = lyap1_linear_system(A0, A1, tau, omega, a_on_hopf, panels)
    return res


def _fast_branch_point(J: float, y: float, branch: str | None) -> float:
    roots = manifold.critical_roots(y)
    if branch is None:
        branch = "lower" if y <= 0 else "upper"
    xs = [r.x for r in roots if r.branch in (branch, "unique")]
    xs = [x for x in xs if 1.0 < x * x < 1.0 + 2.0 * J]
    if not xs:
        raise NotOnHopfCurve(f"no {branch} equilibrium with a Hopf delay at y={y}")
    return xs[0]


def lyap1_fast(J: float, y_on_hopf: float, k: int = 0, branch: str | None = None,
               panels: int = DEFAULT_PANELS) -> LyapunovResult:
    """First Lyapunov coefficient of the fast subsystem at ``tau_f^k``.

    ``branch`` selects the outer equilibrium (``"lower"`` or ``"upper"``);
    by default the lower one for ``y <= 0`` and the upper one otherwise.
    """
    x_star = _fast_branch_point(J, y_on_hopf, branch)
    hp = bifurcation.tau_fast_hopf(x_star, J, k)
    F = lambda xi: char_fn_fast(xi, x_star, J, hp.tau)
    dF = lambda xi: char_fn_fast_prime(xi, x_star, J, hp.tau)
    omega = _polish_omega(F, dF, (hp.zeta,), 1.0 + x_star**2 + J)
    A0 = np.array([[1.0 - x_star**2 + J]])
    A1 = np.array([[-J]])
    res, _ = lyap1_linear_system(A0, A1, hp.tau, omega, x_star, panels)
    return res


# ---------------------------------------------------------------------------
# simulation oracle


@dataclass(frozen=True)
class ProbeResult:
    verdict: Literal["supercritical", "subcritical", "inconclusive"]
    delta_tau: float
    final_amplitude: float
    early_rate: float
    late_rate: float
    reason: str


def _envelope(x: np.ndarray, t: np.ndarray):
    """Half peak-to-peak amplitude between consecutive extrema of ``x``."""
    d = np.diff(x)
    idx = np.where(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0] + 1
    if idx.size < 3:
        return np.empty(0), np.empty(0)
    amp = 0.5 * np.abs(np.diff(x[idx]))
    return t[idx[1:]], amp


def _fast_marginal_point(fp: FastParams) -> float:
    best = None
    for r in manifold.critical_roots(fp.y):
        re = fast_roots(r.x, fp.J, fp.tau)[0].value.real
        if best is None or abs(re) < best[1]:
            best = (r.x, abs(re))
    return best[0]


def criticality_probe(p: SystemParams | FastParams, delta_tau: float = 5e-3,
                      amplitude: float = 1e-3, escape: float = 0.5,
                      t_max: float = 3e4) -> ProbeResult:
    """Classify a Hopf point by direct simulation just past it.

    ``p.tau`` is the Hopf delay; the system is integrated at
    ``tau + delta_tau`` from the equilibrium shifted by ``amplitude`` in
    ``x``. Saturation of the oscillation envelope below ``escape`` means a
    supercritical bifurcation. Escape with a growth rate that increases
    with amplitude means subcritical. Everything else is inconclusive.
    """
    if delta_tau == 0:
        return ProbeResult("inconclusive", 0.0, float("nan"), float("nan"), float("nan"),
                           "zero offset")
    q = p.with_(tau=p.tau + delta_tau)
    if isinstance(p, SystemParams):
        x_eq, y_eq = q.equilibrium
        sigma = full_rightmost_root(q.a, q.J, q.tau, q.epsilon).rightmost_real_part
        hist = (x_eq + amplitude, y_eq)
    else:
        x_eq = _fast_marginal_point(p)
        sigma = fast_roots(x_eq, q.J, q.tau)[0].value.real
        hist = x_eq + amplitude
    if sigma <= 0:
        return ProbeResult("inconclusive", delta_tau, float("nan"), sigma, float("nan"),
                           "equilibrium is not unstable at tau + delta_tau")
    T = float(min(t_max, max(200.0 * q.tau, 12.0 * math.log(escape / amplitude) / sigma)))
    tr = integrate(q, SolverConfig(T=T, T_discard=0.0, history=hist))
    sl = tr.segment(0.0)
    t, amp = _envelope(tr.x[sl], tr.t[sl])
    if amp.size < 6:
        return ProbeResult("inconclusive", delta_tau, float("nan"), sigma, float("nan"),
                           "too few oscillations")
    rates = np.diff(np.log(amp)) / np.diff(t)
    mid_t = 0.5 * (t[1:] + t[:-1])
    mid_a = np.sqrt(amp[1:] * amp[:-1])
    early = rates[(mid_a < 3 * amplitude) & (mid_t > 2 * q.tau)]
    early_rate = float(np.median(early)) if early.size else sigma
    escaped = np.nonzero(amp > escape)[0]
    if escaped.size:
        upto = escaped[0]
        late = rates[:upto][mid_a[:upto] > max(10 * amplitude, 0.1 * escape)]
        late_rate = float(np.median(late)) if late.size else float("nan")
        if late.size and late_rate > 1.3 * max(early_rate, sigma):
            return ProbeResult("subcritical", delta_tau, float(amp[upto]), early_rate,
                               late_rate, "growth accelerates until escape")
        return ProbeResult("inconclusive", delta_tau, float(amp[upto]), early_rate, late_rate,
                           "escape without acceleration")
    tail = amp[-max(6, amp.size // 10):]
    late_rate = float(np.median(rates[-tail.size + 1:]))
    if np.ptp(tail) <= 0.02 * tail.mean():
        return ProbeResult("supercritical", delta_tau, float(tail.mean()), early_rate,
                           late_rate, "envelope saturates")
    return ProbeResult("inconclusive", delta_tau, float(amp[-1]), early_rate, late_rate,
                       "no saturation within the horizon")


# ---------------------------------------------------------------------------
# Bogdanov-Takens local form


@dataclass(frozen=True)
class BTReport:
    J: float
    F0: complex
    F1: complex
    F2: complex
    tangency_residuals: tuple[float, ...]
    tangency_order: float
    sqrt_coefficient: float
    expected_sqrt_coefficient: float
    mirror: bool


def bt_local_check(J: float, y_sign: int = -1, n: int = 12,
                   window: tuple[float, float] = (1e-4, 1e-2)) -> BTReport:
    """Verify the computable Bogdanov-Takens signatures of the fast subsystem.

    (i) ``F(0) = F'(0) = 0`` and ``F''(0) = J tau**2`` at ``x* = 1``,
    ``tau = 1/J`` for ``F(xi) = xi - (1 - x*^2 + J) + J exp(-xi tau)``;
    (ii) the Hopf curve is tangent to the fold: ``tau_f^0 - [1/J + (x*^2-1)/(3J^2)]``
    decays quadratically in ``x*^2 - 1``; (iii) the coefficient of ``sqrt(2/3 - |y|)`` in a least-squares fit
    of ``tau_f^0 - 1/J`` by ``c sqrt(s) + d s`` on a geometric sequence of
    ``s = 2/3 - |y|`` in ``window``. The leading-order value is ``2/(3 J^2)``.

    ``y_sign = -1`` uses the fold at ``y = -2/3`` (``x* = 1``), ``+1`` its
    mirror image.
    """
    if J <= 0:
        raise DomainError("J must be positive")
    F0, F1, F2 = bifurcation.bt_double_root(J)
    s = np.geomspace(window[0], window[1], n)
    branch = "upper" if y_sign < 0 else "lower"
    taus, resid, u = [], [], []
    for si in s:
        y = y_sign * (manifold.FOLD_Y - si)
        x = manifold.branch_eval(branch, y)
        taus.append(bifurcation.tau_fast_hopf(x, J, 0).tau)
        resid.append(abs(bifurcation.hopf_tangency_residual(J, x)))
        u.append(x * x - 1.0)
    taus = np.array(taus)
    root_s = np.sqrt(s)
    # two-term fit c sqrt(s) + d s; the linear term biases a one-term fit
    design = np.column_stack([root_s, s])
    coef = float(np.linalg.lstsq(design, taus - 1.0 / J, rcond=None)[0][0])
    order = float(np.polyfit(np.log(u), np.log(np.maximum(resid, 1e-300)), 1)[0])
    return BTReport(J, F0, F1, F2, tuple(resid), order, coef, 2.0 / (3.0 * J * J),
                    y_sign > 0)
