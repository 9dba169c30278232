"""Explicit time steppers over flat state arrays.

First-order systems use ``f(t, u) -> du/dt``.  Second-order systems
``u'' = a(t, u)`` use :func:`newmark2`, :func:`newmark4` or
:func:`rk4_second_order`.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

Rhs = Callable[[float, np.ndarray], np.ndarray]


def _check(dt: float) -> None:
    if not dt > 0:
        raise ValueError("time step must be positive")


def euler(f: Rhs, t: float, u: np.ndarray, dt: float) -> np.ndarray:
    _check(dt)
    return u + dt * f(t, u)


def rk2(f: Rhs, t: float, u: np.ndarray, dt: float) -> np.ndarray:
    """Two-stage SSP Runge-Kutta (Heun)."""
    _check(dt)
    u1 = u + dt * f(t, u)
    return 0.5 * u + 0.5 * (u1 + dt * f(t + dt, u1))


def rk3(f: Rhs, t: float, u: np.ndarray, dt: float) -> np.ndarray:
    """Three-stage SSP Runge-Kutta in Shu-Osher form."""
    _check(dt)
    u1 = u + dt * f(t, u)
    u2 = 0.75 * u + 0.25 * (u1 + dt * f(t + dt, u1))
    return u / 3.0 + 2.0 / 3.0 * (u2 + dt * f(t + 0.5 * dt, u2))


def rk4(f: Rhs, t: float, u: np.ndarray, dt: float) -> np.ndarray:
    """Classical four-stage Runge-Kutta."""
    _check(dt)
    k1 = f(t, u)
    k2 = f(t + 0.5 * dt, u + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, u + 0.5 * dt * k2)
    k4 = f(t + dt, u + dt * k3)
    return u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


STEPPERS = {"euler": euler, "rk2": rk2, "rk3": rk3, "rk4": rk4}


def rk4_second_order(a: Rhs, t: float, u: np.ndarray, v: np.ndarray, dt: float):
    """RK4 on the first-order form ``(u, v)' = (v, a(t, u))``."""
    _check(dt)
    k1u, k1v = v, a(t, u)
    k2u, k2v = v + 0.5 * dt * k1v, a(t + 0.5 * dt, u + 0.5 * dt * k1u)
    k3u, k3v = v + 0.5 * dt * k2v, a(t + 0.5 * dt, u + 0.5 * dt * k2u)
    k4u, k4v = v + dt * k3v, a(t + dt, u + dt * k3u)
    return (u + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u),
            v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v))


def newmark2(a: Rhs, t: float, u: np.ndarray, v: np.ndarray, dt: float):
    """Second-order explicit Newmark step (velocity Verlet)."""
    _check(dt)
    a0 = a(t, u)
    u1 = u + dt * v + 0.5 * dt**2 * a0
    v1 = v + 0.5 * dt * (a0 + a(t + dt, u1))
    return u1, v1


def newmark4(a: Rhs, t: float, u_prev: np.ndarray, u: np.ndarray, dt: float,
             apply_a: Callable[[np.ndarray], np.ndarray] | None = None) -> np.ndarray:
    """Fourth-order two-step scheme for a linear ``a``.

    ``u^{n+1} = 2u^n - u^{n-1} + dt^2 a(u^n) + dt^4/12 a(a(u^n))``.
    ``apply_a`` is the linear part used for the correction (defaults to
    ``a(t, .)``).  Bootstrap the first step with :func:`taylor_start`.
    """
    _check(dt)
    au = a(t, u)
    lin = apply_a or (lambda w: a(t, w))
    return 2 * u - u_prev + dt**2 * au + dt**4 / 12.0 * lin(au)


def taylor_start(a: Rhs, t: float, u: np.ndarray, v: np.ndarray, dt: float) -> np.ndarray:
    """``u(t + dt)`` by a fourth-order Taylor series for linear ``a``."""
    _check(dt)
    au = a(t, u)
    av = a(t, v)
    return u + dt * v + dt**2 / 2 * au + dt**3 / 6 * av + dt**4 / 24 * a(t, au)


def n_steps(T: float, dt_max: float) -> tuple[int, float]:
    """Smallest step count with ``dt <= dt_max`` that lands on ``T``."""
    _check(dt_max)
    if T < 0:
        raise ValueError("final time must be nonnegative")
    n = max(int(np.ceil(T / dt_max - 1e-12)), 1 if T > 0 else 0)
    return n, (T / n if n else 0.0)
