import math

import numpy as np
import pytest

from delayfhn import SolverConfig, SystemParams, integrate
from delayfhn.errors import InvalidConfig, InvalidInput
from delayfhn.network import NetworkConfig, simulate_network, unit_noise
from delayfhn.solver import dense_eval_arrays

P = SystemParams(2.0, 1.01, 0.05, 0.4)


def _sup_error_vs_rk4(p, h_factor, T=100.0, stride=100):
    net = simulate_network(10, p, 0.0, 0, NetworkConfig(T=T, h_max=h_factor * p.tau,
                                                        history=(0.5, 0.0),
                                                        record_stride=stride))
    tr = integrate(p, SolverConfig(T=T, T_discard=0.0, h_max=h_factor * p.tau,
                                   history=(0.5, 0.0)))
    xr, _ = dense_eval_arrays(tr, net.t)
    return net, float(np.max(np.abs(net.x - xr[:, None])))


def test_noise_free_units_stay_identical():
    net, _ = _sup_error_vs_rk4(P, 1e-3, T=20.0, stride=10)
    assert np.all(net.x == net.x[:, :1]) and np.all(net.y == net.y[:, :1])


def test_euler_network_converges_at_first_order():
    errs = [_sup_error_vs_rk4(P, f, T=20.0, stride=1)[1] for f in (4e-3, 2e-3, 1e-3)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders > 0.85) & (orders < 1.15))


def _em_oracle(p, sigma, seed, h, n, x0, y0):
    """Single unit: the mean field is the unit itself."""
    m = int(round(p.tau / h))
    xs = np.empty(n + m + 1)
    xs[:m + 1] = x0
    x, y = x0, y0
    dw = unit_noise(seed, 0, 0, n)
    for k in range(n):
        xd = xs[k]
        fx = x - x**3 / 3 + y + p.J * (x - xd)
        fy = p.epsilon * (p.a - x)
        x, y = x + h * fx + sigma * math.sqrt(h) * dw[k], y + h * fy
        xs[k + m + 1] = x
    return x, y


def test_single_noisy_unit_matches_hand_loop():
    cfg = NetworkConfig(T=40.0, h_max=0.01, history=(0.2, -0.6))
    r = simulate_network(1, P, 0.05, 7, cfg)
    n = int(round(40.0 / r.h))
    x, y = _em_oracle(P, 0.05, 7, r.h, n, 0.2, -0.6)
    assert r.x[-1, 0] == pytest.approx(x, abs=1e-12) and r.y[-1, 0] == pytest.approx(y, abs=1e-12)


def test_same_seed_is_bit_identical_and_seeds_differ():
    cfg = NetworkConfig(T=30.0, h_max=0.01)
    a = simulate_network(4, P, 0.1, 3, cfg)
    b = simulate_network(4, P, 0.1, 3, cfg)
    c = simulate_network(4, P, 0.1, 4, cfg)
    assert np.array_equal(a.x, b.x) and not np.array_equal(a.x, c.x)
    assert not np.array_equal(a.x[:, 0], a.x[:, 1])


def test_noise_stream_depends_on_unit_and_step_only():
    full = unit_noise(5, 3, 0, 1000)
    assert np.array_equal(unit_noise(5, 3, 400, 600), full[400:])
    assert not np.array_equal(unit_noise(5, 2, 0, 1000), full)


def test_long_runs_cross_noise_chunks():
    # more steps than one noise chunk; the single-unit oracle pins the stream
    cfg = NetworkConfig(T=400.0, h_max=0.01, history=(0.2, -0.6), record_stride=1000)
    r = simulate_network(1, P, 0.02, 1, cfg)
    n = int(round(400.0 / r.h))
    assert n > 1 << 15
    x, _ = _em_oracle(P, 0.02, 1, r.h, n, 0.2, -0.6)
    assert r.x[-1, 0] == pytest.approx(x, abs=1e-10)


def test_per_unit_histories_and_export(tmp_path):
    hist = np.column_stack([np.linspace(-1, 1, 3), np.zeros(3)])
    r = simulate_network(3, P, 0.0, 0, NetworkConfig(T=2.0, h_max=0.01, history=hist,
                                                     record_stride=10))
    assert np.allclose(r.x[0], hist[:, 0])
    paths = r.to_csv(tmp_path / "net")
    assert len(paths) == 3 and (tmp_path / "net" / "run.json").exists()
    rows = np.loadtxt(paths[2], delimiter=",", skiprows=1)
    assert rows.shape == (r.t.size, 3)


def test_validation():
    with pytest.raises(InvalidInput):
        simulate_network(0, P, 0.0, 0, NetworkConfig(T=1.0))
    with pytest.raises(InvalidInput):
        simulate_network(2, P, -1.0, 0, NetworkConfig(T=1.0))
    with pytest.raises(InvalidConfig):
        simulate_network(2, P, 0.0, 0, NetworkConfig(T=-1.0))
    with pytest.raises(InvalidConfig):
        simulate_network(2, P, 0.0, 0, NetworkConfig(T=1.0, history=np.zeros((3, 2))))
