import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delayfhn import FastParams, SolverConfig, SystemParams, integrate, manifold
from delayfhn import atlas
from delayfhn.errors import DomainError, EmptySection, NoCycleAtStart, NotBistable

P = lambda tau, a=1.01, eps=0.05: SystemParams(2.0, a, eps, tau)


@pytest.mark.parametrize("tau,label", [(0.30, "Stationary"), (0.40, "SmallCycle"),
                                       (0.55, "MMO"), (0.62, "Chaotic"), (1.00, "Bursting")])
def test_regime_ladder(tau, label):
    assert atlas.classify(P(tau)).label == label


def test_small_cycle_statistics():
    lab = atlas.classify(P(0.40))
    s = lab.stats
    assert s.large_count == 0 and s.small_count >= 1
    assert 0.1 < s.amplitude < 0.3 and s.lambda_hat < 0


def test_mmo_signature():
    s = atlas.classify(P(0.55)).stats
    assert (s.large_count, s.small_count) == (1, 5)
    assert s.period == pytest.approx(75.8, abs=0.5)


def test_chaotic_rate_and_section():
    s = atlas.classify(P(0.62)).stats
    assert s.lambda_hat > 0.01 and s.section_period is None


def test_canard_onset_across_hopf_delay():
    from delayfhn import bifurcation as bf
    t1 = bf.tau_full_hopf(1.01, 2.0, 0.05, 0).tau1_k
    assert t1 == pytest.approx(0.3495, abs=1e-4)
    assert atlas.classify(P(t1 - 0.01)).label == "Stationary"
    assert atlas.classify(P(t1 + 0.01)).label == "SmallCycle"


def test_fast_spiking_and_relaxation():
    hist = (2.0, 0.0)
    p = SystemParams(2.0, 0.0, 0.01, 1.0)
    assert atlas.classify(p, atlas.classify_config(p, history=hist)).label == "FastSpiking"
    q = SystemParams(2.0, 0.0, 0.05, 1.0)
    assert atlas.classify(q, atlas.classify_config(q, history=hist)).label == "Relaxation"


@settings(max_examples=6)
@given(st.sampled_from([0.4, 0.55, 0.62, 1.0]), st.sampled_from([0.9, 1.01, 1.2]))
def test_input_reflection_symmetry(tau, a):
    l1, l2 = atlas.classify(P(tau, a)), atlas.classify(P(tau, -a))
    assert l1.label == l2.label
    assert l1.stats.large_count == l2.stats.large_count
    assert l1.stats.amplitude == pytest.approx(l2.stats.amplitude, rel=1e-12)


def test_divergence_rate_sign():
    assert atlas.divergence_rate(P(0.62)) > 0.01
    assert atlas.divergence_rate(P(0.40)) < 0


def test_poincare_section_and_period():
    p = P(0.55)
    tr = integrate(p, atlas.classify_config(p))
    seq = atlas.poincare_sequence(tr, -0.4)
    assert seq.size > 10
    assert atlas.poincare_period(seq, 1e-3 * np.ptp(tr.x[tr.segment()]), 32) == 1
    with pytest.raises(EmptySection):
        atlas.poincare_sequence(tr, 50.0)


def test_poincare_period_detection():
    seq = np.tile([0.1, 0.5, -0.3], 20)
    assert atlas.poincare_period(seq, 1e-9) == 3
    assert atlas.poincare_period(np.random.default_rng(0).normal(size=60), 1e-6) is None


@settings(max_examples=12)
@given(st.floats(-2.5, 2.5).filter(lambda y: abs(abs(y) - 2 / 3) > 0.05),
       st.floats(0.2, 0.45))
def test_cycle_average_fixed_point_identity(y, tau):
    # below the Hopf delay every outer equilibrium is stable, so m must be one
    ca = atlas.cycle_average(FastParams(2.0, tau, y))
    assert ca.kind == "fixed_point"
    assert ca.m**3 / 3 - ca.m == pytest.approx(y, abs=1e-9)


@settings(max_examples=6)
@given(st.floats(0.0, 1.1))
def test_cycle_average_odd_in_y(y):
    a1 = atlas.cycle_average(FastParams(2.0, 1.0, y), SolverConfig(T=600, T_discard=300,
                                                                  history=3.0))
    a2 = atlas.cycle_average(FastParams(2.0, 1.0, -y), SolverConfig(T=600, T_discard=300,
                                                                   history=-3.0))
    assert a1.kind == a2.kind
    assert a1.m == pytest.approx(-a2.m, abs=1e-9)


def test_cycle_average_symmetric_cycle():
    ca = atlas.cycle_average(FastParams(2.0, 1.0, 0.0))
    assert ca.kind == "cycle" and abs(ca.m) < 1e-8
    assert ca.period == pytest.approx(3.8972, abs=1e-3)


def test_fold_of_cycles_is_symmetric():
    yp, ym = atlas.flc_locate(2.0, 1.0, 1), atlas.flc_locate(2.0, 1.0, -1)
    assert yp == pytest.approx(1.2037, abs=2e-4) and yp == pytest.approx(-ym, abs=1e-12)
    with pytest.raises(NoCycleAtStart):
        atlas.flc_locate(2.0, 0.3, 1)


def test_unstable_cycle_bracket():
    b = atlas.unstable_cycle_bracket(FastParams(2.0, 0.655, 0.0))
    assert b.approximate and b.hi - b.lo <= 1e-4
    assert b.stable_x == pytest.approx(math.sqrt(3.0))
    assert 0.5 < b.lo < 0.8
    # the unstable cycle shrinks toward the equilibrium as the Hopf delay nears
    c = [atlas.unstable_cycle_bracket(FastParams(2.0, t, 0.0)).lo for t in (0.65, 0.655, 0.66)]
    assert c[0] > c[1] > c[2]
    with pytest.raises(NotBistable):
        atlas.unstable_cycle_bracket(FastParams(2.0, 0.4, 0.0))


def test_double_homoclinic():
    h = atlas.homoclinic_proxy(2.0, 0.0)
    assert h.branches == (0,) and h.approximate
    assert 0.63 <= h.tau <= 0.70


def test_split_homoclinics_off_symmetry():
    h = atlas.homoclinic_proxy(2.0, 0.1)
    assert h.branches == (-1, 1)
    assert h.taus == pytest.approx((0.6450, 0.6833), abs=2e-3)
    m = atlas.homoclinic_proxy(2.0, -0.1)
    assert m.taus == pytest.approx(h.taus, abs=2e-4)
    with pytest.raises(DomainError):
        atlas.homoclinic_proxy(2.0, 0.8)


def test_saddle_histories_leave_along_unstable_direction():
    fp = FastParams(2.0, 1.0, 0.0)
    x0, hs = atlas.saddle_histories(fp)
    assert x0 == 0.0
    assert hs[0](0.0) > x0 > hs[1](0.0)
    assert hs[0].derivative(0.0) > 0


def test_portrait_of_fixed_point():
    fp = FastParams(2.0, 0.5, 0.0)
    (c,) = atlas.portrait(fp, [1.0], T=200, t_discard=150)
    assert np.allclose(c, math.sqrt(3.0), atol=1e-8)


def test_predict_regime():
    aug = atlas.augmented_manifold(2.0, 1.0, np.linspace(-1.0, 1.0, 21))
    assert atlas.predict_regime(aug, 0.0) == "FastSpiking"
    assert atlas.predict_regime(aug, 2.0) == "Stationary"
    rows = list(aug.rows())
    assert len(rows) == 21 and not any(r["failed"] for r in rows)
    assert np.allclose(aug.cycle_m, -aug.cycle_m[::-1], atol=1e-8, equal_nan=True)


def test_augmented_manifold_mirror_structure():
    aug = atlas.augmented_manifold(2.0, 1.0, np.linspace(-1.0, 1.0, 9))
    up, lo = aug.branches["upper"], aug.branches["lower"]
    assert np.allclose(up, -lo[::-1], equal_nan=True)
    for i, y in enumerate(aug.y):
        n = len(manifold.critical_roots(float(y)))
        assert n == int(np.isfinite(up[i])) + int(np.isfinite(lo[i])) + int(
            np.isfinite(aug.branches["middle"][i]))


def test_sweep_and_csv(tmp_path):
    pts = [P(0.4), P(0.3)]
    rows = atlas.sweep(pts)
    assert [r["label"] for r in rows] == ["SmallCycle", "Stationary"]
    assert atlas.sweep(pts, workers=2) == rows
    f = tmp_path / "atlas.csv"
    atlas.atlas_to_csv(rows, f)
    lines = f.read_text().splitlines()
    assert lines[0].split(",") == list(atlas.ATLAS_COLUMNS) and len(lines) == 3


def test_classify_rejects_zero_eps():
    with pytest.raises(DomainError):
        atlas.classify(SystemParams(2.0, 1.01, 0.0, 0.4))
