import math

import numpy as np
import pytest
from scipy.optimize import brentq

from delayfhn import FastParams, SystemParams
from delayfhn import bifurcation as bf
from delayfhn import normal_form as nf
from delayfhn.errors import DomainError, NotOnHopfCurve
from delayfhn.spectrum import full_rightmost_root


def _a_on_tau1(J, eps, tau):
    return brentq(lambda a: bf.tau_full_hopf(a, J, eps, 0).tau1_k - tau,
                  1.0 + 1e-6, math.sqrt(1 + 2 * J) - 1e-9, xtol=1e-14)


def test_simpson_weights_integrate_cubics_exactly():
    w = nf.simpson_weights(8, 2.0)
    th = np.linspace(-2.0, 0.0, 9)
    assert w @ th**3 == pytest.approx(-4.0, rel=1e-13)


@pytest.mark.parametrize("a", [1.05, 1.5, 2.0])
def test_two_routes_agree_full(a):
    r = nf.lyap1_full(2.0, 0.01, a)
    assert r.ell1 == pytest.approx(r.ell1_projection, rel=1e-8)
    assert r.convergence_delta < 1e-8


@pytest.mark.parametrize("y", [-1.2, -1.0, -0.8])
def test_fast_coefficient_positive(y):
    r = nf.lyap1_fast(2.0, y)
    assert r.ell1 > 0 and r.criticality == "subcritical"
    assert r.ell1 == pytest.approx(r.ell1_projection, rel=1e-8)


def test_fast_coefficient_values():
    vals = [nf.lyap1_fast(2.0, y).ell1 for y in (-1.2, -1.0, -0.8)]
    assert vals == pytest.approx([0.1882, 0.2437, 0.2789], abs=5e-4)
    r = nf.lyap1_fast(2.0, -1.0)
    assert r.omega == pytest.approx(1.40234, abs=1e-5) and r.tau == pytest.approx(1.68615, abs=1e-5)


def test_fast_coefficient_mirror():
    lo, hi = nf.lyap1_fast(2.0, -1.0), nf.lyap1_fast(2.0, 1.0)
    assert lo.ell1 == pytest.approx(hi.ell1, rel=1e-10)


@pytest.mark.parametrize("tau,amp", [(0.6, 0.080377), (0.8, 0.067073)])
def test_cycle_amplitude_matches_normal_form(tau, amp):
    # half peak-to-peak of x on the bifurcating cycle ~ 2 sqrt(-sigma / Re c1)
    J, eps, dt = 2.0, 0.05, 1e-3
    a = _a_on_tau1(J, eps, tau)
    r = nf.lyap1_full(J, eps, a)
    sigma = full_rightmost_root(a, J, tau + dt, eps).rightmost_real_part
    predicted = 2.0 * math.sqrt(-sigma * r.omega / (4.0 * r.ell1))
    probe = nf.criticality_probe(SystemParams(J, a, eps, tau), delta_tau=dt)
    assert probe.verdict == "supercritical"
    assert probe.final_amplitude == pytest.approx(amp, rel=1e-3)
    assert probe.final_amplitude == pytest.approx(predicted, rel=0.01)
    assert probe.early_rate == pytest.approx(sigma, rel=0.02)


def test_probe_on_fast_hopf_is_not_supercritical():
    x = 2.0
    fp = FastParams(2.0, bf.tau_fast_hopf(x, 2.0).tau, x - x**3 / 3)
    pr = nf.criticality_probe(fp, delta_tau=5e-3, t_max=3000)
    assert pr.verdict in ("subcritical", "inconclusive")
    assert pr.verdict != "supercritical"


def test_probe_zero_offset_is_inconclusive():
    assert nf.criticality_probe(SystemParams(2.0, 1.5, 0.05, 0.6), 0.0).verdict == "inconclusive"


def test_not_on_hopf_curve():
    with pytest.raises(NotOnHopfCurve):
        nf.lyap1_full(2.0, 0.01, 1.5, tau=0.3)
    with pytest.raises(NotOnHopfCurve):
        nf.lyap1_fast(2.0, -3.0)


def test_bt_local_check():
    rep = nf.bt_local_check(2.0)
    assert abs(rep.F0) < 1e-15 and abs(rep.F1) < 1e-15
    assert rep.F2.real == pytest.approx(2.0 * 0.5**2)
    assert 1.9 < rep.tangency_order < 2.1
    assert rep.sqrt_coefficient == pytest.approx(rep.expected_sqrt_coefficient, rel=0.01)
    assert nf.bt_local_check(2.0, y_sign=1).sqrt_coefficient == pytest.approx(rep.sqrt_coefficient)
    with pytest.raises(DomainError):
        nf.bt_local_check(-1.0)


def test_probe_confirms_sign_change_of_coefficient():
    J, eps = 2.0, 0.01
    verdicts = []
    for tau in (3.0, 3.8):
        a = _a_on_tau1(J, eps, tau)
        ell1 = nf.lyap1_full(J, eps, a).ell1
        pr = nf.criticality_probe(SystemParams(J, a, eps, tau), delta_tau=2e-3,
                                  amplitude=1e-4, t_max=4e5)
        verdicts.append((ell1 < 0, pr.verdict))
    assert verdicts == [(True, "supercritical"), (False, "subcritical")]


def test_coefficient_sign_matches_simulation_along_branch():
    J, eps = 2.0, 0.05
    ts = bf.bautin_locate(J, eps)
    hits = total = 0
    for a in bf.chebyshev_grid(1.0, math.sqrt(5.0), 22)[1:-1]:
        tau = bf.tau_full_hopf(a, J, eps, 0).tau1_k
        if abs(tau - ts) < 1e-2:
            continue
        ell1 = nf.lyap1_full(J, eps, a).ell1
        pr = nf.criticality_probe(SystemParams(J, a, eps, tau), delta_tau=2e-3,
                                  amplitude=1e-4, t_max=4e5)
        total += 1
        hits += pr.verdict == ("supercritical" if ell1 < 0 else "subcritical")
    assert hits >= 0.95 * total
