"""
Classical fourth-order Runge-Kutta

Two forms of the same scheme: the textbook four-stage form and a
register-reuse form that keeps three stage arrays instead of four. Both
evaluate identical floating-point expressions, so their results agree bit
for bit.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..utils import ValidationError

RhsFunction = Callable[[float, np.ndarray], np.ndarray]


@dataclass
class StepWorkspace:
    """The three stage arrays of the register-reuse scheme"""

    k1: np.ndarray
    k2: np.ndarray
    k3: np.ndarray

    @classmethod
    def like(cls, values: np.ndarray) -> "StepWorkspace":
        return cls(np.zeros_like(values), np.zeros_like(values), np.zeros_like(values))

    def matches(self, values: np.ndarray) -> bool:
        return all(
            k.shape == values.shape and k.dtype == values.dtype for k in (self.k1, self.k2, self.k3)
        )


def rk4_advance(
    f: RhsFunction,
    t: float,
    v: np.ndarray,
    dt: float,
    workspace: StepWorkspace,
) -> np.ndarray:
    """
    One step of the register-reuse scheme

    k1 <- f(t, v); k2 <- f(t + dt/2, v + k1 dt/2); k1 <- k1 + 2 k2;
    k3 <- f(t + dt/2, v + k2 dt/2); k2 <- f(t + dt, v + k3 dt);
    v <- v + (k1 + 2 k3 + k2) dt/6

    Args:
        f: Right-hand side, returns a fresh array
        t: Time at the start of the step
        v: State values (not modified)
        dt: Step size
        workspace: Stage arrays shaped like v

    Returns:
        New state values
    """
    if not workspace.matches(v):
        raise ValidationError(
            f"Workspace extents {workspace.k1.shape} do not match state {v.shape}"
        )

    k1, k2, k3 = workspace.k1, workspace.k2, workspace.k3
    half = dt / 2.0

    k1[...] = f(t, v)
    np.multiply(k1, half, out=k3)
    k3 += v
    k2[...] = f(t + half, k3)
    k1 += 2 * k2

    np.multiply(k2, half, out=k3)
    k3 += v
    k3[...] = f(t + half, k3)

    np.multiply(k3, dt, out=k2)
    k2 += v
    k2[...] = f(t + dt, k2)

    return v + (k1 + 2 * k3 + k2) * (dt / 6.0)


def rk4_advance_textbook(f: RhsFunction, t: float, v: np.ndarray, dt: float) -> np.ndarray:
    """One step of the four-stage scheme v + (k1 + 2 k2 + 2 k3 + k4) dt/6"""
    half = dt / 2.0
    k1 = f(t, v)
    k2 = f(t + half, k1 * half + v)
    k3 = f(t + half, k2 * half + v)
    k4 = f(t + dt, k3 * dt + v)
    return v + (k1 + 2 * k2 + 2 * k3 + k4) * (dt / 6.0)
