"""Desk-scale reproduction runs with pass/fail checks, one routine per figure."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import atlas, bifurcation, manifold, normal_form
from .errors import DelayFhNError
from .model import SystemParams
from .solver import integrate
from .spectrum import (char_fn_fast, char_fn_fast_prime, char_fn_full, char_fn_full_prime,
                       newton_polish)

__all__ = ["Check", "FIGURES", "run_figure"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _guard(name: str, fn: Callable[[], Check]) -> Check:
    try:
        return fn()
    except DelayFhNError as exc:
        return Check(name, False, f"{type(exc).__name__}: {exc}")


def figure_hopf() -> list[Check]:
    J, eps = 2.0, 0.01

    def polish():
        worst = 0.0
        for a in bifurcation.chebyshev_grid(1.0, math.sqrt(5.0), 22)[1:-1]:
            hp = bifurcation.tau_full_hopf(a, J, eps, 0)
            xi, _ = newton_polish(lambda z: char_fn_full(z, a, J, hp.tau1_k, eps),
                                  lambda z: char_fn_full_prime(z, a, J, hp.tau1_k, eps),
                                  1j * abs(hp.zeta1))
            worst = max(worst, abs(xi.real))
        return Check("closed-form tau_1^0 is a root", worst < 1e-6, f"max |Re xi| = {worst:.2e}")

    def ends():
        top = math.sqrt(1.0 + 2.0 * J)
        e0 = bifurcation.tau_full_hopf(1.0, J, eps, 0).tau1_k
        e1 = bifurcation.tau_full_hopf(top, J, eps, 0).tau1_k - math.pi / math.sqrt(eps)
        ok = abs(e0) < 1e-10 and abs(e1) < 1e-10
        return Check("tau_1^0 endpoints", ok, f"errors {abs(e0):.1e}, {abs(e1):.1e}")

    def matching():
        err = max(abs(bifurcation.tau_full_hopf(1.0, J, 2.0, k).tau2_k
                      - bifurcation.tau_full_hopf(1.0, J, 2.0, k + 1).tau1_k) for k in range(4))
        return Check("tau_2^k meets tau_1^(k+1) at a=1 (eps=2)", err < 1e-10, f"max {err:.1e}")

    def lyap():
        r = normal_form.lyap1_full(J, 1e-3, 1.0 + 1e-8)
        ratio = r.ell1 / (-math.sqrt(1e-3) / 8.0)
        return Check("ell1 near a=1 vs -sqrt(eps)/8 (eps=1e-3)", abs(ratio - 1) < 0.2,
                     f"ratio {ratio:.4f}")

    def bautin():
        t = bifurcation.bautin_locate(J, eps)
        return Check("Bautin point on tau_1^0 in [0.45, 0.55]", 0.45 <= t <= 0.55, f"{t:.4f}")

    return [_guard("closed-form tau_1^0 is a root", polish), _guard("tau_1^0 endpoints", ends),
            _guard("branch matching", matching), _guard("ell1 asymptotic", lyap),
            _guard("Bautin point on tau_1^0", bautin)]


def figure_regimes() -> list[Check]:
    out = []
    for tau, want in ((0.40, "SmallCycle"), (0.55, "MMO"), (0.70, "Chaotic"), (1.00, "Bursting")):
        name = f"classify tau={tau:.2f}"

        def one(tau=tau, want=want, name=name):
            lab = atlas.classify(SystemParams(2.0, 1.01, 0.05, tau))
            lam = lab.stats.lambda_hat
            return Check(name, lab.label == want,
                         f"{lab.label} (expected {want}; lambda_hat={lam:.3g})")
        out.append(_guard(name, one))
    return out


def figure_poincare() -> list[Check]:
    def seq():
        p = SystemParams(2.0, 1.01, 0.05, 0.7)
        tr = integrate(p, atlas.classify_config(p))
        s = atlas.poincare_sequence(tr, -0.4)
        amp = float(np.ptp(tr.x[tr.segment()]))
        per = atlas.poincare_period(s, 1e-3 * amp, 32)
        return Check("Poincare sequence at tau=0.7 has no period <= 32", per is None,
                     f"{s.size} returns, detected period {per}")
    return [_guard("Poincare sequence", seq)]


def figure_fast_diagram() -> list[Check]:
    J = 2.0

    def fold():
        r = manifold.critical_roots(manifold.FOLD_Y)
        ok = len(r) == 2 and any(c.multiplicity == "double" and c.x == -1.0 for c in r)
        F0, F1, F2 = bifurcation.bt_double_root(J)
        ok = ok and abs(F0) < 1e-15 and abs(F1) < 1e-15
        return Check("fold double root and BT double zero", ok, f"F(0)={abs(F0):.1e}, "
                     f"F'(0)={abs(F1):.1e}, F''(0)={F2.real:.3g}")

    def fast_roots_ok():
        worst = 0.0
        for x in bifurcation.chebyshev_grid(1.0, math.sqrt(5.0), 22)[1:-1]:
            hp = bifurcation.tau_fast_hopf(x, J, 0)
            xi, _ = newton_polish(lambda z: char_fn_fast(z, x, J, hp.tau),
                                  lambda z: char_fn_fast_prime(z, x, J, hp.tau), 1j * hp.zeta)
            worst = max(worst, abs(xi.real))
        return Check("closed-form tau_f^0 is a root", worst < 1e-6, f"max |Re xi| = {worst:.2e}")

    def sqrt_law():
        rep = normal_form.bt_local_check(J)
        rel = abs(rep.sqrt_coefficient / rep.expected_sqrt_coefficient - 1)
        return Check("Hopf curve square-root law at BT", rel < 0.05,
                     f"slope {rep.sqrt_coefficient:.5f} vs {rep.expected_sqrt_coefficient:.5f}")

    def double_homoclinic():
        t = atlas.homoclinic_proxy(J, 0.0).tau
        return Check("double homoclinic at y=0 in [0.63, 0.70]", 0.63 <= t <= 0.70, f"{t:.4f}")

    return [_guard("fold", fold), _guard("fast roots", fast_roots_ok),
            _guard("sqrt law", sqrt_law), _guard("double homoclinic", double_homoclinic)]


def figure_fast_lyapunov() -> list[Check]:
    out = []
    for y in (-1.2, -1.0, -0.8):
        name = f"fast ell1 > 0 at y={y}"
        out.append(_guard(name, lambda y=y, name=name: Check(
            name, normal_form.lyap1_fast(2.0, y).ell1 > 0,
            f"{normal_form.lyap1_fast(2.0, y).ell1:.4g}")))
    return out


def figure_averaging() -> list[Check]:
    def predict():
        aug = atlas.augmented_manifold(2.0, 1.0, np.linspace(-1.0, 1.0, 21))
        pred = atlas.predict_regime(aug, 0.0)
        p = SystemParams(2.0, 0.0, 0.01, 1.0)
        lab = atlas.classify(p, atlas.classify_config(p, history=(2.0, 0.0))).label
        return Check("a=0, tau=1: prediction and simulation", pred == lab == "FastSpiking",
                     f"prediction {pred}, classify {lab}")

    def flc():
        yp, ym = atlas.flc_locate(2.0, 1.0, 1), atlas.flc_locate(2.0, 1.0, -1)
        ok = manifold.FOLD_Y < yp < 2.0 and abs(yp + ym) < 1e-3
        return Check("fold of limit cycles beyond the saddle-node, symmetric", ok,
                     f"{yp:.4f}, {ym:.4f}")

    return [_guard("averaging prediction", predict), _guard("FLC", flc)]


FIGURES = {"1": figure_hopf, "2": figure_regimes, "3": figure_poincare,
           "4": figure_fast_diagram, "5": figure_fast_lyapunov, "7": figure_averaging}


def run_figure(fig: str) -> list[Check]:
    return FIGURES[fig]()
