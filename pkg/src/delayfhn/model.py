"""Vector fields of the delayed FitzHugh-Nagumo system.

The full system is

    x' = x - x**3/3 + y + J (x(t) - x(t - tau))
    y' = eps (a + b x + gamma y)

with ``b = -1`` and ``gamma = 0`` by default. Freezing ``y`` (``eps = 0``)
gives the scalar fast subsystem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import InvalidInput

__all__ = ["SystemParams", "FastParams", "State", "full_rhs", "fast_rhs"]


def _check_finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise InvalidInput(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class SystemParams:
    """Parameters of the full delayed system.

    Attributes
    ----------
    J : float
        Delayed self-coupling strength.
    a : float
        Input current; the equilibrium sits at ``x = a`` when ``gamma = 0``.
    epsilon : float
        Timescale ratio, ``>= 0``.
    tau : float
        Delay, ``> 0``.
    gamma : float
        Leak of the recovery variable, entering as ``+gamma*y``.
    b : float
        Coupling of ``x`` into the slow equation.
    """

    J: float
    a: float
    epsilon: float
    tau: float
    gamma: float = 0.0
    b: float = -1.0

    def __post_init__(self):
        _check_finite(J=self.J, a=self.a, epsilon=self.epsilon, tau=self.tau,
                      gamma=self.gamma, b=self.b)
        if self.tau <= 0:
            raise InvalidInput(f"tau must be positive, got {self.tau}")
        if self.epsilon < 0:
            raise InvalidInput(f"epsilon must be >= 0, got {self.epsilon}")

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def fast(self, y: float) -> "FastParams":
        return FastParams(J=self.J, tau=self.tau, y=y)

    @property
    def equilibrium(self) -> "State":
        """Fixed point for the default slow equation (``gamma = 0``)."""
        if self.gamma != 0.0:
            raise InvalidInput("use manifold.general_equilibria when gamma != 0")
        x = -self.a / self.b
        return State(x, x**3 / 3.0 - x)


@dataclass(frozen=True)
class FastParams:
    """Fast subsystem: ``y`` frozen as a parameter."""

    J: float
    tau: float
    y: float

    def __post_init__(self):
        _check_finite(J=self.J, tau=self.tau, y=self.y)
        if self.tau <= 0:
            raise InvalidInput(f"tau must be positive, got {self.tau}")

    def with_(self, **changes) -> "FastParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class State:
    x: float
    y: float

    def __iter__(self):
        yield self.x
        yield self.y


def full_rhs(now: State, x_delayed: float, p: SystemParams) -> tuple[float, float]:
    """Right-hand side of the full system at one instant."""
    x, y = now.x, now.y
    _check_finite(x=x, y=y, x_delayed=x_delayed)
    dx = x - x**3 / 3.0 + y + p.J * (x - x_delayed)
    dy = p.epsilon * (p.a + p.b * x + p.gamma * y)
    return dx, dy


def fast_rhs(x_now: float, x_delayed: float, fp: FastParams) -> float:
    _check_finite(x_now=x_now, x_delayed=x_delayed)
    return x_now - x_now**3 / 3.0 + fp.y + fp.J * (x_now - x_delayed)
