import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.special import lambertw

from delayfhn.bifurcation import tau_fast_hopf, tau_full_hopf
from delayfhn.errors import BranchDomain, InvalidInput
from delayfhn.spectrum import (char_fn_fast, char_fn_full, char_fn_general, count_zeros,
                               fast_roots, fast_stability, full_rightmost_root, lambert_w,
                               roots_in_rect, char_fn_full_prime)


@given(st.integers(-6, 6), st.floats(-20, 20), st.floats(-20, 20))
def test_lambert_w_matches_scipy(k, re, im):
    z = complex(re, im)
    assume(abs(z) > 1e-6 and abs(z + math.exp(-1)) > 1e-6)
    w = lambert_w(k, z)
    ref = complex(lambertw(z, k))
    assert abs(w * cmath.exp(w) - z) < 1e-12 * max(1.0, abs(z))
    assert abs(w - ref) < 1e-10 * max(1.0, abs(ref))


def test_lambert_w_special_points():
    assert lambert_w(0, 0) == 0
    assert lambert_w(0, -math.exp(-1)) == -1
    assert lambert_w(0, math.e) == pytest.approx(1.0)
    with pytest.raises(BranchDomain):
        lambert_w(1, 0)


@given(st.floats(0.0, 2.4), st.floats(0.1, 4.0), st.floats(0.05, 3.0))
def test_fast_roots_are_roots(x, J, tau):
    for r in fast_roots(x, J, tau):
        scale = 1.0 + abs(r.value) + J * abs(cmath.exp(-r.value * tau))
        assert abs(char_fn_fast(r.value, x, J, tau)) < 1e-9 * scale


def test_fast_roots_match_argument_principle():
    x, J, tau = 1.3, 2.0, 0.9
    rect = (-3.0, 5.0, -40.0, 40.0)
    F = lambda z: char_fn_fast(z, x, J, tau)
    n = count_zeros(F, rect)
    inside = [r for r in fast_roots(x, J, tau, K=20)
              if rect[0] < r.value.real < rect[1] and rect[2] < r.value.imag < rect[3]]
    assert n == len(inside)


def test_general_reduces_to_full():
    xi = 0.3 + 1.7j
    assert char_fn_general(xi, 1.2, 2.0, 0.8, 0.05, 0.0) == pytest.approx(
        char_fn_full(xi, 1.2, 2.0, 0.8, 0.05))


@given(st.floats(1.001, 2.236), st.floats(1e-4, 2.0))
def test_vieta(a, eps):
    h = tau_full_hopf(a, 2.0, eps, 0)
    assert h.zeta1 * h.zeta2 == pytest.approx(-eps, abs=1e-12)
    assert h.zeta1 + h.zeta2 == pytest.approx(-h.A, abs=1e-12)


@given(st.floats(1.02, 2.2), st.floats(0.02, 0.2))
def test_fast_verdict_flips_across_hopf(x, frac):
    J = 2.0
    tau0 = tau_fast_hopf(x, J, 0).tau
    assert fast_stability(x, J, tau0 * (1 - frac)).verdict == "stable"
    assert fast_stability(x, J, tau0 * (1 + frac)).verdict == "unstable"


@pytest.mark.parametrize("a", [1.05, 1.3, 1.7, 2.1])
def test_full_verdict_flips_across_hopf(a):
    tau0 = tau_full_hopf(a, 2.0, 0.05, 0).tau1_k
    assert full_rightmost_root(a, 2.0, tau0 - 0.02, 0.05).verdict == "stable"
    assert full_rightmost_root(a, 2.0, tau0 + 0.02, 0.05).verdict == "unstable"
    at = full_rightmost_root(a, 2.0, tau0, 0.05)
    assert abs(at.rightmost_real_part) < 1e-9


def test_full_roots_in_rect_oracle():
    # eps -> tiny: full roots approach the fast roots at x* = a plus one near zero
    a, J, tau, eps = 1.4, 2.0, 0.5, 1e-9
    F = lambda z: char_fn_full(z, a, J, tau, eps)
    dF = lambda z: char_fn_full_prime(z, a, J, tau, eps)
    zs = roots_in_rect(F, dF, (-2.0, 2.0, -10.0, 10.0))
    fast = [r.value for r in fast_roots(a, J, tau, K=6)
            if -2 < r.value.real < 2 and -10 < r.value.imag < 10]
    for f in fast:
        assert min(abs(z - f) for z in zs) < 1e-6
    assert min(abs(z) for z in zs) < 1e-6


def test_rightmost_requires_positive_eps():
    with pytest.raises(InvalidInput):
        full_rightmost_root(1.2, 2.0, 0.5, 0.0)
