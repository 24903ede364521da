import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from delayfhn.errors import DegenerateParameters, DomainError, InvalidInput
from delayfhn.manifold import FOLD_Y, branch_eval, critical_roots, general_equilibria


def cubic(x, y):
    return x - x**3 / 3.0 + y


@given(st.floats(-3, 3, allow_nan=False))
def test_roots_solve_cubic(y):
    roots = critical_roots(y)
    assert [r.x for r in roots] == sorted(r.x for r in roots)
    for r in roots:
        assert abs(cubic(r.x, y)) < 1e-12 * max(1.0, abs(r.x) ** 3)
    # independent oracle: companion-matrix roots
    ref = np.roots([-1.0 / 3.0, 0.0, 1.0, y])
    real = sorted(z.real for z in ref if abs(z.imag) < 1e-7)
    if abs(abs(y) - FOLD_Y) > 1e-6:
        assert len(real) == len(roots)
        assert np.allclose(real, [r.x for r in roots], atol=1e-9)


@given(st.floats(-0.66, 0.66))
def test_mirror_symmetry(y):
    a, b = critical_roots(y), critical_roots(-y)
    assert np.allclose([r.x for r in a], [-r.x for r in reversed(b)], atol=1e-13)


def test_fold_double_root():
    for y, dbl, simple in ((FOLD_Y, -1.0, 2.0), (-FOLD_Y, 1.0, -2.0)):
        roots = critical_roots(y)
        assert len(roots) == 2
        d = [r for r in roots if r.multiplicity == "double"]
        s = [r for r in roots if r.multiplicity == "simple"]
        assert d[0].x == dbl and s[0].x == simple


def test_near_fold_accuracy():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    for s in (1e-10, 1e-12, 1e-14):
        y = FOLD_Y - s
        x = [r.x for r in critical_roots(y)]
        assert len(x) == 3
        # high-precision oracle on the exact float y; the residual has
        # round-off ~1e-16 and slope ~2 sqrt(s), which bounds the root error
        ref = sorted(float(mpmath.re(z)) for z in
                     mpmath.polyroots([mpmath.mpf(-1) / 3, 0, 1, mpmath.mpf(y)], maxsteps=200,
                                      extraprec=200))
        assert np.allclose(x, ref, rtol=0, atol=1e-15 / math.sqrt(s))


def test_branch_domains():
    assert branch_eval("upper", 0.0) == pytest.approx(math.sqrt(3.0))
    assert branch_eval("middle", 0.0) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainError):
        branch_eval("upper", -1.0)
    with pytest.raises(DomainError):
        branch_eval("lower", 0.7)
    with pytest.raises(InvalidInput):
        critical_roots(math.nan)


@given(st.floats(-2, 2), st.floats(-3, -0.1), st.floats(0.1, 3))
def test_general_equilibria(a, b, gamma):
    for e in general_equilibria(a, b, gamma):
        assert abs(cubic(e.x, e.y)) < 1e-9
        assert abs(a + b * e.x + gamma * e.y) < 1e-9


def test_general_equilibria_degenerate():
    with pytest.raises(DegenerateParameters):
        general_equilibria(1.0, -1.0, 0.0)


@pytest.mark.parametrize("y", [2 / 3 + 1e-16, -(2 / 3 + 1e-16), 1.0**3 / 3 - 1.0, 2 / 3 + 1e-15])
def test_roots_just_past_the_fold(y):
    r = critical_roots(y)
    assert 1 <= len(r) <= 2
    far = r[-1].x if y > 0 else r[0].x
    assert far == pytest.approx(2.0 * math.copysign(1.0, y), abs=1e-7)
