"""Adaptive solver for ``phi_t + sum_m |phi_{x_m}| = 0`` with outflow boundaries.

One-sided gradients come from LDG matrices (two per dimension), the
Lax-Friedrichs numerical Hamiltonian is interpolated by Lagrange
multiwavelets and projected back onto the Alpert space.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..adapt import AdaptConfig, check_structure, coarsen, refine
from ..assembly import assemble_ldg_gradient, finest_h
from ..nonlinear import Interpolator
from ..solution import DGSolution
from ..timeint import euler, rk3

log = logging.getLogger(__name__)


@dataclass
class HJProblem:
    d: int = 2
    k: int = 1
    N: int = 7
    eps: float = 1e-3
    eta: float | None = None
    cfl: float = 0.1
    T: float = 0.1
    r0: float = 0.125
    N_init: int | None = None
    lagrange_P: int | None = None
    alpha: float = 1.0
    init_indicator: str = "alpert"

    def __post_init__(self):
        if self.T <= 0 or self.cfl <= 0:
            raise ValueError("final time and cfl must be positive")
        if self.eta is None:
            self.eta = 0.1 * self.eps
        if self.lagrange_P is None:
            self.lagrange_P = self.k
        if self.N_init is None:
            self.N_init = self.N

    @property
    def center(self) -> np.ndarray:
        return np.full(self.d, 0.5)


@dataclass
class HJResult:
    error: float
    dof: int
    dof_history: list
    time_per_step: float
    steps: int
    solution: DGSolution | None = field(default=None, repr=False)


def exact_hj_solution(x: np.ndarray, t: float, r0: float = 0.125, a=None) -> np.ndarray:
    """``g(|(x - a)*_t|)`` with ``c*_t = min(max(0, c - t), c + t)`` componentwise."""
    x = np.atleast_2d(np.asarray(x, float))
    a = np.full(x.shape[1], 0.5) if a is None else np.asarray(a, float)
    c = x - a
    cs = np.minimum(np.maximum(0.0, c - t), c + t)
    z2 = np.sum(cs**2, axis=1)
    return (z2 - r0**2) / r0


def regularized_hamiltonian(p: np.ndarray, delta: float) -> np.ndarray:
    """``H~(p)`` for ``H(p) = sum_m |p_m|``; gradients along the last axis.

    Below the switch ``H(p) < delta`` the value is ``H**2/(2 delta) + delta/2``,
    which matches ``H`` in value and slope at ``H = delta``.
    """
    if delta <= 0:
        raise ValueError("regularization width must be positive")
    H = np.sum(np.abs(p), axis=-1)
    return np.where(H >= delta, H, H**2 / (2 * delta) + 0.5 * delta)


def lf_hamiltonian(pm: np.ndarray, pp: np.ndarray, delta: float, alpha: float = 1.0) -> np.ndarray:
    """``H~((p- + p+)/2) - sum_m alpha (p+_m - p-_m)/2``."""
    return regularized_hamiltonian(0.5 * (pm + pp), delta) - 0.5 * alpha * np.sum(pp - pm, axis=-1)


class HJOperator:
    """Right-hand side of the semi-discrete scheme on the current index set."""

    def __init__(self, sol: DGSolution, problem: HJProblem):
        self.sol = sol
        self.problem = problem
        d = sol.d
        self.grads = [[assemble_ldg_gradient(sol, m, s).matrix for s in (-1, 1)] for m in range(d)]
        self.ip = Interpolator(sol, P=problem.lagrange_P, K=0)
        self.delta = 2.0 * finest_h(sol)

    def gradients(self, phi: np.ndarray) -> np.ndarray:
        """Coefficients ``(nel, S, d, 2)`` of ``p_m^-`` and ``p_m^+``."""
        d = self.sol.d
        S = self.sol.per_element
        out = np.empty((self.sol.n_elements, S, d, 2))
        for m in range(d):
            for j in range(2):
                out[:, :, m, j] = (self.grads[m][j] @ phi).reshape(-1, S)
        return out

    def __call__(self, t: float, phi: np.ndarray) -> np.ndarray:
        p = self.gradients(phi)
        vals = self.ip.values(p)
        H = lf_hamiltonian(vals[..., 0], vals[..., 1], self.delta, self.problem.alpha)
        if not np.all(np.isfinite(H)):
            raise FloatingPointError("non-finite Hamiltonian values")
        return -self.ip.project(self.ip.to_interp(H)).reshape(-1)

    def store_gradients(self, phi: np.ndarray) -> None:
        p = self.gradients(phi)
        d = self.sol.d
        for m in range(d):
            for j in range(2):
                self.sol.coeffs[:, 1 + 2 * m + j, :] = p[:, :, m, j]


def initial_solution(problem: HJProblem) -> DGSolution:
    p = problem
    sol = DGSolution(p.d, p.k, p.N, nvar=2 * p.d + 1, N_init=min(p.N_init, p.N))
    sol.init_adaptive_interpolation(lambda x: exact_hj_solution(x, 0.0, p.r0), p.eps,
                                    indicator=p.init_indicator)
    return sol


def run_hj(problem: HJProblem, ref_eps: float = 1e-6, check: bool = False) -> HJResult:
    """Predict, refine, restore, SSP-RK3 step and coarsen until ``T``."""
    p = problem
    cfg = AdaptConfig(p.eps, p.eta, indicator_vars=(0,))
    sol = initial_solution(p)
    t = 0.0
    steps = 0
    hist = []
    elapsed = 0.0
    while t < p.T - 1e-14:
        t0 = time.perf_counter()
        dt = p.cfl / float(np.sum(2.0 ** sol.G.max_level_vec()))
        dt = min(dt, p.T - t)
        op = HJOperator(sol, p)
        sol.predict_snapshot()
        sol.scatter(euler(op, t, sol.gather(0), dt), 0)
        refine(sol, cfg)
        sol.restore_snapshot()
        op = HJOperator(sol, p)
        phi = rk3(op, t, sol.gather(0), dt)
        sol.scatter(phi, 0)
        op.store_gradients(phi)
        coarsen(sol, cfg)
        elapsed += time.perf_counter() - t0
        t += dt
        steps += 1
        hist.append(sol.dof())
        if check:
            probs = check_structure(sol)
            if probs:
                raise AssertionError("; ".join(probs))
        log.debug("t=%.5f dof=%d", t, sol.dof())
    ref = DGSolution(p.d, p.k, p.N, N_init=min(p.N_init, p.N))
    ref.init_adaptive_interpolation(lambda x: exact_hj_solution(x, p.T, p.r0), ref_eps,
                                    indicator="alpert")
    err = sol.l2_error_against(ref)
    return HJResult(err, sol.dof(), hist, elapsed / max(steps, 1), steps, sol)
