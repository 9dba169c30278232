"""Sparse global matrices of linear DG bilinear forms over Alpert bases.

Because the Alpert mass matrix is the identity, a form acting in one
dimension reduces to the 1D operator matrix in that dimension times a
Kronecker delta in all the others.  Such a matrix is exactly one pass of the
fast transform along the acting dimension, so assembly reuses
:func:`sgdg.fasttransform.dim_operator`.

Global matrices act on the flattened coefficients of one variable and return
the right-hand side, ``rhs = A @ c``, with ``A[test, trial]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .fasttransform import TransferMatrix, dim_operator
from .opmat1d import build_operator_matrix
from .solution import DGSolution


def default_sigma(k: int) -> float:
    """IPDG penalty constant ``20 (k + 1)**2``."""
    return 20.0 * (k + 1) ** 2


@dataclass(eq=False)
class GlobalOperator:
    """Sparse operator over the DOF ordering of one solution variable."""

    matrix: sp.csr_matrix
    descriptor: dict = field(default_factory=dict)
    version: int = -1

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, vec):
        return self.matrix @ vec

    def __add__(self, other: "GlobalOperator") -> "GlobalOperator":
        return GlobalOperator(self.matrix + other.matrix, {"sum": [self.descriptor, other.descriptor]},
                              self.version)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def _acting(sol: DGSolution, A: np.ndarray, dim: int) -> sp.csr_matrix:
    p = sol.k + 1
    T = TransferMatrix(A, p, p)
    return dim_operator(sol.G, T, dim, (p,) * sol.d)


def finest_h(sol: DGSolution) -> float:
    """Mesh size ``2**-L`` of the finest active level ``L`` (at least 1)."""
    return 2.0 ** (-max(int(sol.G.max_level_vec().max()), 1))


def operator_1d(sol: DGSolution, bc: str = "periodic"):
    return build_operator_matrix(sol.alpert, sol.alpert, bc)


def assemble_hyperbolic(sol: DGSolution, speeds: Sequence[float], flux: str = "upwind",
                        alpha: float | Sequence[float] | None = None,
                        bc: str = "periodic") -> GlobalOperator:
    """Matrix of ``sum_m c_m (int u v_{x_m} + sum u^hat [v])``.

    ``flux`` is ``"upwind"`` (trace from the inflow side), ``"central"`` or
    ``"lf"`` (central plus ``-(alpha/2) [u][v]`` with ``alpha`` defaulting
    to ``|c_m|``).
    """
    if len(speeds) != sol.d:
        raise ValueError("need one speed per dimension")
    ops = operator_1d(sol, bc)
    n = sol.dof()
    mat = sp.csr_matrix((n, n))
    alphas = np.broadcast_to(np.abs(speeds) if alpha is None else np.asarray(alpha, float), (sol.d,))
    for m, c in enumerate(speeds):
        if c == 0:
            continue
        if flux == "upwind":
            A = c * (ops.u_vx + (ops.ulft_vjp if c > 0 else ops.urgt_vjp))
        elif flux in ("central", "lf"):
            A = c * (ops.u_vx + 0.5 * (ops.ulft_vjp + ops.urgt_vjp))
            if flux == "lf":
                A = A - 0.5 * alphas[m] * ops.ujp_vjp
        else:
            raise ValueError(f"unknown flux {flux!r}")
        mat = mat + _acting(sol, A, m)
    return GlobalOperator(mat.tocsr(), {"form": "hyperbolic", "speeds": tuple(speeds), "flux": flux},
                          sol.G.version)


def assemble_ipdg_diffusion(sol: DGSolution, sigma: float | None = None,
                            bc: str = "periodic") -> GlobalOperator:
    """Symmetric interior penalty form of the Laplacian.

    Per dimension ``-ux_vx - uxave_vjp - ujp_vxave - (sigma/h) ujp_vjp``
    with ``h`` the finest active mesh size.
    """
    sigma = default_sigma(sol.k) if sigma is None else float(sigma)
    if sigma <= 0:
        raise ValueError("penalty must be positive")
    ops = operator_1d(sol, bc)
    h = finest_h(sol)
    A = -ops.ux_vx - ops.uxave_vjp - ops.ujp_vxave - (sigma / h) * ops.ujp_vjp
    n = sol.dof()
    mat = sp.csr_matrix((n, n))
    for m in range(sol.d):
        mat = mat + _acting(sol, A, m)
    return GlobalOperator(mat.tocsr(), {"form": "ipdg", "sigma": sigma}, sol.G.version)


def assemble_jump_penalty(sol: DGSolution, sigma: float | None = None,
                          bc: str = "periodic") -> GlobalOperator:
    """Matrix of ``-(sigma/h) sum_m [u][v]`` across ``x_m`` interfaces."""
    sigma = default_sigma(sol.k) if sigma is None else float(sigma)
    if sigma <= 0:
        raise ValueError("penalty must be positive")
    ops = operator_1d(sol, bc)
    h = finest_h(sol)
    A = -(sigma / h) * ops.ujp_vjp
    n = sol.dof()
    mat = sp.csr_matrix((n, n))
    for m in range(sol.d):
        mat = mat + _acting(sol, A, m)
    return GlobalOperator(mat.tocsr(), {"form": "jump_penalty", "sigma": sigma}, sol.G.version)


def ldg_gradient_1d(sol: DGSolution, sign: int) -> np.ndarray:
    """1D matrix of ``int p v = -int phi v_x - sum phi^hat [v]`` with outflow.

    ``sign = -1`` takes ``phi^-`` at interior interfaces (backward-biased
    derivative), ``sign = +1`` takes ``phi^+``.  At the domain boundary the
    interior trace is used.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 or +1")
    zd = build_operator_matrix(sol.alpert, sol.alpert, "zero_dirichlet")
    ins = build_operator_matrix(sol.alpert, sol.alpert, "inside")
    flux = ins.ulft_vjp if sign < 0 else ins.urgt_vjp
    boundary = (zd.ulft_vjp - ins.ulft_vjp) + (zd.urgt_vjp - ins.urgt_vjp)
    return -ins.u_vx - flux - boundary


def assemble_ldg_gradient(sol: DGSolution, dim: int, sign: int) -> GlobalOperator:
    """Map ``phi`` coefficients to a one-sided approximation of ``phi_{x_dim}``."""
    A = ldg_gradient_1d(sol, sign)
    return GlobalOperator(_acting(sol, A, dim).tocsr(), {"form": "ldg", "dim": dim, "sign": sign},
                          sol.G.version)
