"""Adaptive IPDG solver for ``u_tt = div(c^2 grad u)`` with piecewise-constant ``c^2``.

The coefficient jumps across ``x_1 = 1/4`` and ``x_1 = 3/4``.  Products of
``c^2`` with ``u`` or ``u_{x_m}`` are interpolated by Lagrange multiwavelets
and contracted against Alpert test functions; the penalty ``-(sigma/h)[u][v]``
is an assembled matrix.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..adapt import AdaptConfig, check_structure, coarsen, refine
from ..assembly import assemble_jump_penalty, default_sigma
from ..nonlinear import Interpolator
from ..solution import DGSolution
from ..timeint import rk4_second_order

log = logging.getLogger(__name__)

_C2_OUT = {2: 5.0 / 37.0, 3: 3.0 / 19.0}
_OMEGA = {2: np.sqrt(20.0) * np.pi, 3: np.sqrt(24.0) * np.pi}


def default_wave_cfl(k: int) -> float:
    """``dt / h`` halved per degree; about 55% of the RK4 limit at the default penalty."""
    return 0.05 / 2.0 ** (k - 1)


@dataclass
class WaveProblem:
    d: int = 2
    k: int = 1
    N: int = 8
    eps: float = 1e-1
    eta: float | None = None
    T: float = 0.01
    sigma: float | None = None
    cfl: float | None = None
    N_init: int = 2
    lagrange_P: int | None = None

    def __post_init__(self):
        if self.d not in _C2_OUT:
            raise ValueError("the heterogeneous standing wave is defined for d = 2, 3")
        if self.T <= 0:
            raise ValueError("final time must be positive")
        if self.eta is None:
            self.eta = 0.1 * self.eps
        if self.sigma is None:
            self.sigma = default_sigma(self.k)
        if self.cfl is None:
            self.cfl = default_wave_cfl(self.k)
        if self.cfl <= 0:
            raise ValueError("cfl must be positive")
        if self.lagrange_P is None:
            self.lagrange_P = self.k


@dataclass
class WaveResult:
    error: float
    dof: int
    dof_history: list
    time_per_step: float
    steps: int
    energy: list = field(default_factory=list)
    solution: DGSolution | None = field(default=None, repr=False)


def wave_speed_squared(x1: np.ndarray, d: int, side=None) -> np.ndarray:
    """``c^2`` at ``x_1``; ``side`` (-1/+1) picks the one-sided limit at jumps."""
    x1 = np.asarray(x1, float)
    if side is None:
        side = np.ones_like(x1)
    # half-open cells: a point with side -1 belongs to the cell on its left
    inside = np.where(side < 0, (x1 > 0.25) & (x1 <= 0.75), (x1 >= 0.25) & (x1 < 0.75))
    return np.where(inside, 1.0, _C2_OUT[d])


def exact_standing_wave(x: np.ndarray, t: float, d: int) -> np.ndarray:
    """Piecewise standing wave; ``cos(4 pi x_1)`` inside, ``cos(12 pi x_1)`` outside."""
    x = np.atleast_2d(np.asarray(x, float))
    if d not in _OMEGA or x.shape[1] != d:
        raise ValueError("points must have d in {2, 3} columns")
    inside = (x[:, 0] >= 0.25) & (x[:, 0] <= 0.75)
    fx = np.where(inside, np.cos(4 * np.pi * x[:, 0]), np.cos(12 * np.pi * x[:, 0]))
    rest = np.prod(np.cos(2 * np.pi * x[:, 1:]), axis=1)
    return np.sin(_OMEGA[d] * t) * fx * rest


class WaveOperator:
    """``a(u)`` with ``int u_tt v = a(u)(v)`` on the current index set."""

    def __init__(self, sol: DGSolution, problem: WaveProblem):
        self.sol = sol
        self.problem = problem
        self.ip = Interpolator(sol, P=problem.lagrange_P, K=0)
        self.penalty = assemble_jump_penalty(sol, problem.sigma).matrix
        loc, side, _ = self.ip.slot_points()
        d = sol.d
        self.c2 = wave_speed_squared(loc[..., 0], d, side[..., 0])
        # one-sided coefficient limits across x_m interfaces
        self.c2_side = {}
        for m in range(d):
            for s in (-1, 1):
                if m == 0:
                    self.c2_side[m, s] = wave_speed_squared(loc[..., 0], d, np.full_like(side[..., 0], s))
                else:
                    self.c2_side[m, s] = self.c2

    def __call__(self, t: float, u: np.ndarray) -> np.ndarray:
        ip = self.ip
        S = self.sol.per_element
        c = u.reshape(-1, S)
        uval = ip.values(c)
        out = self.penalty @ u
        for m in range(self.sol.d):
            q = ip.to_interp(self.c2 * ip.values(c, (m,)))
            out -= ip.contract_weighted(q, m, {"u_vx": 1.0, "ulft_vjp": 0.5, "urgt_vjp": 0.5}).reshape(-1)
            for s, kind in ((-1, "ujp_vxlft"), (1, "ujp_vxrgt")):
                w = ip.to_interp(self.c2_side[m, s] * uval)
                out -= 0.5 * ip.contract_weighted(w, m, {kind: 1.0}).reshape(-1)
        return out


def initial_solution(problem: WaveProblem) -> DGSolution:
    p = problem
    sol = DGSolution(p.d, p.k, p.N, nvar=2, N_init=min(p.N_init, p.N))
    om = _OMEGA[p.d]
    ut0 = lambda x: om * exact_standing_wave(x, 0.5 * np.pi / om, p.d)
    sol.init_adaptive_interpolation(ut0, p.eps, var=1, indicator="alpert")
    return sol


def energy(op: WaveOperator, u: np.ndarray, v: np.ndarray) -> float:
    """``(|v|^2 - a(u)(u)) / 2``, the conserved quantity of the semi-discrete system."""
    return 0.5 * float(v @ v - u @ op(0.0, u))


def run_wave(problem: WaveProblem, ref_eps: float = 1e-6, check: bool = False,
             track_energy: bool = False) -> WaveResult:
    """Predict, refine, restore, RK4 step and coarsen until ``T``."""
    p = problem
    cfg = AdaptConfig(p.eps, p.eta, indicator_vars=(0, 1))
    sol = initial_solution(p)
    t = 0.0
    steps = 0
    hist, en = [], []
    elapsed = 0.0
    dt0 = p.cfl * 2.0 ** (-p.N)
    nsteps = max(int(np.ceil(p.T / dt0 - 1e-9)), 1)
    dt = p.T / nsteps
    for _ in range(nsteps):
        t0 = time.perf_counter()
        op = WaveOperator(sol, p)
        sol.predict_snapshot()
        u, v = rk4_second_order(op, t, sol.gather(0), sol.gather(1), dt)
        sol.scatter(u, 0)
        sol.scatter(v, 1)
        refine(sol, cfg)
        sol.restore_snapshot()
        op = WaveOperator(sol, p)
        u, v = rk4_second_order(op, t, sol.gather(0), sol.gather(1), dt)
        sol.scatter(u, 0)
        sol.scatter(v, 1)
        coarsen(sol, cfg)
        elapsed += time.perf_counter() - t0
        t += dt
        steps += 1
        hist.append(sol.dof())
        if track_energy:
            op = WaveOperator(sol, p)
            en.append(energy(op, sol.gather(0), sol.gather(1)))
        if check:
            probs = check_structure(sol)
            if probs:
                raise AssertionError("; ".join(probs))
        log.debug("t=%.5f dof=%d", t, sol.dof())
    ref = DGSolution(p.d, p.k, p.N, N_init=min(p.N_init, p.N))
    ref.init_adaptive_interpolation(lambda x: exact_standing_wave(x, p.T, p.d), ref_eps,
                                    indicator="alpert")
    err = sol.l2_error_against(ref)
    return WaveResult(err, sol.dof(), hist, elapsed / steps, steps, en, sol)
