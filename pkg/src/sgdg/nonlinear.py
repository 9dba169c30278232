"""Nonlinear terms through interpolatory multiwavelets.

A nonlinear flux ``f(u_h)`` is handled in three fast-transform steps:
Alpert coefficients to values at the interpolation points, pointwise
application of ``f``, and values to hierarchical interpolation coefficients.
The DG residual terms are then contractions of the interpolant with
interpolatory-by-Alpert operator matrices, again by fast multiply.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .basis1d import InterpolatoryFamily, build_interpolatory_family
from .fasttransform import (TransferMatrix, alpert_to_values_matrix,
                            interp_coeffs_to_values_matrix, values_to_interp_coeffs_matrix)
from .opmat1d import build_operator_matrix
from .solution import DGSolution, interp_alpert_transfer, tensor_points

_COMBOS: dict = {}


@dataclass
class FluxDescriptor:
    """Scalar flux ``f`` with derivatives ``derivs[r-1] = f^(r)``.

    Hermite interpolation in ``d`` dimensions needs derivatives up to
    order ``d``.  ``alpha`` is the Lax-Friedrichs constant per dimension.
    """

    f: Callable
    derivs: Sequence[Callable] = ()
    alpha: float | Sequence[float] = 1.0

    def derivative(self, r: int) -> Callable:
        if r == 0:
            return self.f
        if r > len(self.derivs):
            raise ValueError(f"flux derivative of order {r} not supplied")
        return self.derivs[r - 1]

    def alpha_for(self, dim: int) -> float:
        return float(np.broadcast_to(np.asarray(self.alpha, float), (dim + 1,))[dim]) \
            if np.ndim(self.alpha) == 0 else float(self.alpha[dim])


def default_alpha(u0_values: np.ndarray, fprime: Callable, n: int = 201) -> float:
    """``max |f'|`` over the initial range widened by 10 percent each side."""
    lo, hi = float(np.min(u0_values)), float(np.max(u0_values))
    pad = 0.1 * (hi - lo)
    s = np.linspace(lo - pad, hi + pad, n)
    return float(np.max(np.abs(fprime(s))))


def _set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


class Interpolator:
    """Interpolation and residual contraction bound to one solution.

    Parameters
    ----------
    sol : DGSolution
    P, K : int
        Interpolatory family (``K = 0`` Lagrange, ``K >= 1`` Hermite).
    bc : str
        Boundary condition of the interface contraction matrices.
    """

    def __init__(self, sol: DGSolution, P: int = 1, K: int = 0, bc: str = "periodic"):
        self.sol = sol
        self.interp: InterpolatoryFamily = build_interpolatory_family(P, K, sol.N)
        if self.interp.degree < sol.k:
            raise ValueError("interpolation degree must be at least the Alpert degree")
        self.bc = bc

    @property
    def d(self) -> int:
        return self.sol.d

    @property
    def fm(self):
        return self.sol.multiplier

    # -- step 1: Alpert to point values ---------------------------------------
    def values(self, coeffs: np.ndarray, deriv_dims: Sequence[int] = (),
               slot_orders: bool = True) -> np.ndarray:
        """Values at interpolation slots of the function with ``coeffs``.

        ``coeffs`` is ``(nel, (k+1)**d)`` optionally with batch axes.
        ``deriv_dims`` adds one derivative in those dimensions.
        """
        mats = [alpert_to_values_matrix(self.sol.alpert, self.interp, int(m in deriv_dims),
                                        slot_orders) for m in range(self.d)]
        return self.fm.multiply(coeffs, mats, "auto")

    # -- step 3: point values to interpolation coefficients -------------------
    def to_interp(self, values: np.ndarray) -> np.ndarray:
        W = values_to_interp_coeffs_matrix(self.interp)
        return self.fm.multiply(values, [W] * self.d, "auto")

    def interp_values(self, icoef: np.ndarray) -> np.ndarray:
        V = interp_coeffs_to_values_matrix(self.interp)
        return self.fm.multiply(icoef, [V] * self.d, "auto")

    def slot_points(self):
        return tensor_points(self.sol.G, self.interp)

    # -- full pipeline --------------------------------------------------------
    def interpolate_nonlinear(self, flux: FluxDescriptor | Callable, var: int = 0) -> np.ndarray:
        """Interpolation coefficients of ``I[f(u_h)]`` for variable ``var``."""
        if not isinstance(flux, FluxDescriptor):
            flux = FluxDescriptor(flux)
        c = self.sol.coeffs[:, var, :]
        if self.interp.K == 0:
            vals = np.asarray(flux.f(self.values(c)), dtype=float)
        else:
            vals = self._hermite_values(flux, c)
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("non-finite flux values at interpolation points")
        return self.to_interp(vals)

    def _hermite_values(self, flux: FluxDescriptor, c: np.ndarray) -> np.ndarray:
        """Mixed derivatives of ``f(u)`` at Hermite slots by Faa di Bruno."""
        if self.interp.K != 1:
            raise NotImplementedError("Hermite mode supports first derivatives only")
        d = self.d
        subsets = [s for r in range(d + 1) for s in itertools.combinations(range(d), r)]
        du = {s: self.values(c, s, slot_orders=False) for s in subsets}
        _, _, orders = self.slot_points()
        orders = orders.reshape(len(self.sol.G), -1, d)
        out = np.zeros_like(du[()])
        u = du[()]
        for s in subsets:
            mask = np.all(orders == np.isin(np.arange(d), s).astype(int), axis=2)
            if not mask.any():
                continue
            acc = np.zeros(mask.sum())
            for part in _set_partitions(s):
                term = np.asarray(flux.derivative(len(part))(u[mask]), dtype=float)
                for block in part:
                    term = term * du[tuple(sorted(block))][mask]
                acc += term
            out[mask] = acc
        return out

    # -- residual contractions ----------------------------------------------------
    def contract(self, icoef: np.ndarray, kinds: Sequence[str]) -> np.ndarray:
        """``sum_a c_a prod_m K_m[a_m, b_m]`` for every Alpert test index ``b``."""
        mats = [interp_alpert_transfer(self.interp, self.sol.alpert, kd, self.bc) for kd in kinds]
        return self.fm.multiply(icoef, mats, "auto")

    def contract_weighted(self, icoef: np.ndarray, dim: int, weights: dict) -> np.ndarray:
        """Contraction with ``sum_kind w * kind`` in ``dim`` and ``u_v`` elsewhere."""
        key = (id(self.interp), id(self.sol.alpert), self.bc, tuple(sorted(weights.items())))
        T = _COMBOS.get(key)
        if T is None:
            ops = build_operator_matrix(self.interp, self.sol.alpert, self.bc)
            M = sum(w * ops[kd] for kd, w in weights.items())
            T = TransferMatrix(M, self.interp.per_element, self.sol.alpert.per_element, "combo")
            _COMBOS[key] = T
        uv = interp_alpert_transfer(self.interp, self.sol.alpert, "u_v", self.bc)
        return self.fm.multiply(icoef, [T if m == dim else uv for m in range(self.d)], "auto")

    def project(self, icoef: np.ndarray) -> np.ndarray:
        """Alpert coefficients of the L2 projection of an interpolant."""
        return self.contract(icoef, ["u_v"] * self.d)

    def rhs_volume(self, icoef: np.ndarray, dim: int) -> np.ndarray:
        """``int I[f] d_dim phi`` for every Alpert test function."""
        return self.contract(icoef, ["u_vx" if m == dim else "u_v" for m in range(self.d)])

    def rhs_interface(self, icoef: np.ndarray, dim: int, trace: str) -> np.ndarray:
        """``sum I[g]^trace [phi]`` across ``x_dim`` interfaces (``trace`` lft/rgt)."""
        kind = {"lft": "ulft_vjp", "rgt": "urgt_vjp"}[trace]
        return self.contract(icoef, [kind if m == dim else "u_v" for m in range(self.d)])


def interpolate_nonlinear(sol: DGSolution, flux, mode: str = "lagrange", var: int = 0,
                          P: int | None = None) -> np.ndarray:
    """Interpolation coefficients of ``I[f(u_h)]`` (Lagrange or Hermite)."""
    if mode == "lagrange":
        ip = Interpolator(sol, P=sol.k if P is None else P, K=0)
    elif mode == "hermite":
        ip = Interpolator(sol, P=1 if P is None else P, K=1)
    else:
        raise ValueError(f"unknown interpolation mode {mode!r}")
    return ip.interpolate_nonlinear(flux, var)


def conservation_rhs(ip: Interpolator, flux: FluxDescriptor, var: int = 0,
                     dims: Sequence[int] | None = None) -> np.ndarray:
    """DG residual of ``u_t + sum_m f(u)_{x_m} = 0`` with the LF flux.

    Returns ``sum_m int I[f] phi_{x_m} + sum I[f^hat] [phi]`` where
    ``f^hat = I[(f + alpha u)/2]^- + I[(f - alpha u)/2]^+``.
    """
    sol = ip.sol
    dims = range(sol.d) if dims is None else dims
    c = sol.coeffs[:, var, :]
    if ip.interp.K == 0:
        uvals = ip.values(c)
        fvals = np.asarray(flux.f(uvals), dtype=float)
        fcoef = ip.to_interp(fvals)
        ucoef = ip.to_interp(uvals)
    else:
        fcoef = ip.interpolate_nonlinear(flux, var)
        ucoef = ip.to_interp(ip.values(c))
    out = np.zeros_like(c)
    for m in dims:
        a = flux.alpha_for(m)
        out += ip.rhs_volume(fcoef, m)
        out += ip.rhs_interface(0.5 * (fcoef + a * ucoef), m, "lft")
        out += ip.rhs_interface(0.5 * (fcoef - a * ucoef), m, "rgt")
    return out
