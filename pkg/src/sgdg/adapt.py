"""Refinement and coarsening of the active element set."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .solution import DGSolution

log = logging.getLogger(__name__)


@dataclass
class AdaptConfig:
    """Thresholds for refine (``> eps``) and coarsen (``< eta``).

    ``eta`` defaults to ``0.1 * eps``; a negative ``eta`` disables coarsening.
    """

    eps: float
    eta: float | None = None
    indicator_vars: Sequence[int] = (0,)

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("refine threshold must be positive")
        if self.eta is None:
            self.eta = 0.1 * self.eps
        if self.eta >= 0 and self.eta >= self.eps:
            raise ValueError("coarsen threshold must be below the refine threshold")


@dataclass
class AdaptReport:
    added: int = 0
    removed: int = 0
    dof: int = 0
    sweeps: int = 0


@dataclass
class LeafRegistry:
    """Leaf and zero-child-leaf row masks of an index set."""

    leaf: np.ndarray
    zero_child: np.ndarray

    @classmethod
    def from_solution(cls, sol: DGSolution) -> "LeafRegistry":
        present, possible = sol.G.children_present()
        return cls((present < possible) | (present == 0), present == 0)


def indicator(sol: DGSolution, vars_: Sequence[int] = (0,)) -> np.ndarray:
    """Euclidean norm of each element's Alpert coefficients over ``vars_``."""
    return sol.indicator(vars_)


def complete_ancestors(sol: DGSolution) -> int:
    """Add missing ancestors with zero coefficients so no hole remains."""
    added = 0
    miss = sol.G.missing_parents()
    while len(miss):
        added += sol.add_elements(miss)
        miss = sol.G.missing_parents()
    return added


def refine(sol: DGSolution, cfg: AdaptConfig) -> AdaptReport:
    """Give every leaf with indicator above ``eps`` all of its absent children.

    One sweep over the leaves present at call time; new elements start at
    zero and are flagged ``new_add``.
    """
    sol.new_add[:] = False
    ind = indicator(sol, cfg.indicator_vars)
    leaf = LeafRegistry.from_solution(sol).leaf
    src, kids = sol.G.child_ids()
    hot = leaf[src] & (ind[src] > cfg.eps)
    added = sol.add_elements(kids[hot]) if hot.any() else 0
    added += complete_ancestors(sol)
    rep = AdaptReport(added=added, dof=sol.dof(), sweeps=1)
    log.debug("refine: +%d elements, dof %d", added, rep.dof)
    return rep


def coarsen(sol: DGSolution, cfg: AdaptConfig) -> AdaptReport:
    """Repeatedly drop zero-child leaves with indicator below ``eta``."""
    rep = AdaptReport(dof=sol.dof())
    if cfg.eta is None or cfg.eta < 0:
        return rep
    root = np.all(sol.G.ids == 0, axis=1)
    while True:
        ind = indicator(sol, cfg.indicator_vars)
        zc = sol.G.zero_child_leaf_mask()
        root = np.all(sol.G.ids == 0, axis=1)
        kill = zc & (ind < cfg.eta) & ~root
        if not kill.any():
            break
        rep.removed += sol.remove_elements(kill)
        rep.sweeps += 1
    rep.dof = sol.dof()
    log.debug("coarsen: -%d elements, dof %d", rep.removed, rep.dof)
    return rep


def check_structure(sol: DGSolution) -> list[str]:
    """Problems found in the structural invariants (empty when consistent)."""
    problems = []
    G = sol.G
    if not G.is_downward_closed():
        problems.append("index set is not downward closed")
    if not np.all(np.diff(G.codes) > 0):
        problems.append("element order is not strictly canonical")
    if np.any(G.positions(G.ids) != np.arange(len(G))):
        problems.append("ordering is not a bijection")
    if sol.coeffs.shape[0] != len(G) or sol.rhs.shape[0] != len(G):
        problems.append("payload does not match the index set")
    reg = LeafRegistry.from_solution(sol)
    # recompute leaves from scratch with the set-based definitions
    from .grid import children
    keys = list(G.keys())
    present = set(keys)
    leaf = np.zeros(len(G), bool)
    zero = np.zeros(len(G), bool)
    for i, key in enumerate(keys):
        ch = children(key, G.N)
        have = sum(c in present for c in ch)
        leaf[i] = have < len(ch) or have == 0
        zero[i] = have == 0
    if not np.array_equal(leaf, reg.leaf) or not np.array_equal(zero, reg.zero_child):
        problems.append("leaf registry differs from its recomputation")
    if np.any(reg.zero_child & ~reg.leaf):
        problems.append("zero-child set is not inside the leaf set")
    return problems
