"""Gap-junction network of N delayed FitzHugh-Nagumo units with additive noise.

Unit ``i`` obeys::

    dx_i = (x_i - x_i**3/3 + y_i + J (x_i - mean_j x_j(t - tau))) dt + sigma dW_i
    dy_i = eps (a + b x_i + gamma y_i) dt

integrated by Euler-Maruyama with ``h = tau / m``. Without noise and with
identical histories every unit follows the self-coupled delay equation.

Noise for unit ``i`` comes from its own Philox stream keyed by
``(seed, i)``; the ``n``-th normal of that stream drives step ``n``. The
increments therefore depend on ``(seed, unit, step)`` only, not on ``N``
or on how the integration is chunked.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .errors import Blowup, InvalidConfig, InvalidInput
from .model import SystemParams
from .solver import BLOWUP_BOUND

__all__ = ["NetworkConfig", "NetworkResult", "simulate_network", "unit_noise"]

_CHUNK = 1 << 15


@dataclass(frozen=True)
class NetworkConfig:
    """Integration settings.

    ``history`` is a constant ``(x, y)`` shared by all units, an ``(N, 2)``
    array of per-unit constants, or a callable ``t -> x`` on ``[-tau, 0]``
    shared by all units (``y`` then starts at ``history_y``).
    """

    T: float
    h_max: float = 1e-3
    history: object = (0.0, 0.0)
    history_y: float = 0.0
    record_stride: int = 1

    def steps(self, tau: float) -> tuple[int, float]:
        if not (self.T > 0 and math.isfinite(self.T)):
            raise InvalidConfig("T must be positive and finite")
        if not self.h_max > 0:
            raise InvalidConfig("h_max must be positive")
        if self.record_stride < 1:
            raise InvalidConfig("record_stride must be >= 1")
        m = max(1, int(math.ceil(tau / self.h_max - 1e-9)))
        return m, tau / m


@dataclass
class NetworkResult:
    params: SystemParams
    N: int
    sigma: float
    seed: int
    h: float
    t: np.ndarray
    x: np.ndarray   # (samples, N)
    y: np.ndarray   # (samples, N)

    def unit(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self.x[:, i], self.y[:, i]

    def metadata(self) -> dict:
        return {"params": asdict(self.params), "N": self.N, "sigma": self.sigma,
                "seed": self.seed, "h": self.h, "samples": int(self.t.size)}

    def to_csv(self, directory) -> list[Path]:
        """One ``unit_XXX.csv`` (``t,x,y``) per unit plus ``run.json``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = []
        for i in range(self.N):
            p = d / f"unit_{i:03d}.csv"
            np.savetxt(p, np.column_stack([self.t, self.x[:, i], self.y[:, i]]),
                       delimiter=",", header="t,x,y", comments="", fmt="%.17g")
            paths.append(p)
        (d / "run.json").write_text(json.dumps(self.metadata(), indent=2, sort_keys=True))
        return paths


def _unit_generator(seed: int, unit: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, unit], dtype=np.uint64)))


def unit_noise(seed: int, unit: int, start: int, count: int) -> np.ndarray:
    """Standard normals ``start .. start+count-1`` of the stream of one unit."""
    gen = _unit_generator(seed, unit)
    if start:
        gen.standard_normal(start)  # deterministic skip to the step offset
    return gen.standard_normal(count)


@njit(cache=True)
def _em_kernel(x, y, mean_hist, n0, steps, m, h, J, a, eps, gamma, b, sigma_sqh, noise,
               rec_x, rec_y, rec_pos, stride, bound):
    N = x.size
    for s in range(steps):
        n = n0 + s
        md = mean_hist[n]  # mean field at t_n - tau
        acc = 0.0
        for i in range(N):
            u = x[i]
            v = y[i]
            fx = u - u * u * u / 3.0 + v + J * (u - md)
            fy = eps * (a + b * u + gamma * v)
            xn = u + h * fx + sigma_sqh * noise[s, i]
            y[i] = v + h * fy
            x[i] = xn
            if not (abs(xn) < bound):
                return n + 1
            acc += xn
        mean_hist[n + m + 1] = acc / N
        if (n + 1) % stride == 0:
            k = rec_pos[0]
            for i in range(N):
                rec_x[k, i] = x[i]
                rec_y[k, i] = y[i]
            rec_pos[0] = k + 1
    return -1


def simulate_network(N: int, p: SystemParams, sigma: float, seed: int,
                     cfg: NetworkConfig) -> NetworkResult:
    """Euler-Maruyama integration of the noisy network on ``[0, cfg.T]``.

    Raises
    ------
    InvalidInput
        For ``N < 1`` or ``sigma < 0``.
    Blowup
        If a unit leaves ``|x| < 1e6``.
    """
    if N < 1:
        raise InvalidInput("N must be >= 1")
    if not (sigma >= 0 and math.isfinite(sigma)):
        raise InvalidInput("sigma must be finite and >= 0")
    m, h = cfg.steps(p.tau)
    n_steps = int(round(cfg.T / h))
    hist = cfg.history
    # mean field on the grid t_k = (k - m) h, k = 0 .. m + n_steps
    mean_hist = np.empty(m + n_steps + 1)
    if callable(hist):
        th = (np.arange(m + 1) - m) * h
        mean_hist[:m + 1] = [float(hist(t)) for t in th]
        x = np.full(N, mean_hist[m])
        y = np.full(N, float(cfg.history_y))
    else:
        arr = np.asarray(hist, dtype=float)
        if arr.shape == (2,):
            arr = np.tile(arr, (N, 1))
        if arr.shape != (N, 2) or not np.all(np.isfinite(arr)):
            raise InvalidConfig("history must be (x, y), an (N, 2) array or a callable")
        x, y = arr[:, 0].copy(), arr[:, 1].copy()
        mean_hist[:m + 1] = x.mean()
    stride = cfg.record_stride
    n_rec = n_steps // stride + 1
    rec_x = np.empty((n_rec, N))
    rec_y = np.empty((n_rec, N))
    rec_x[0], rec_y[0] = x, y
    rec_pos = np.array([1], dtype=np.int64)
    sigma_sqh = sigma * math.sqrt(h)
    gens = [_unit_generator(seed, i) for i in range(N)] if sigma > 0 else []
    done = 0
    while done < n_steps:
        k = min(_CHUNK, n_steps - done)
        if sigma > 0:
            noise = np.column_stack([g.standard_normal(k) for g in gens])
        else:
            noise = np.zeros((k, N))
        status = _em_kernel(x, y, mean_hist, done, k, m, h, p.J, p.a, p.epsilon, p.gamma,
                            p.b, sigma_sqh, noise, rec_x, rec_y, rec_pos, stride,
                            BLOWUP_BOUND)
        if status >= 0:
            raise Blowup(status * h, BLOWUP_BOUND)
        done += k
    t = np.arange(n_rec) * stride * h
    return NetworkResult(p, N, float(sigma), int(seed), h, t, rec_x, rec_y)
