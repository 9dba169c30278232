"""DG solution storage, initialization, evaluation and error measurement."""
from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .basis1d import (AlpertFamily, InterpolatoryFamily, build_alpert_family,
                      build_interpolatory_family, gauss_legendre01)
from .fasttransform import (FastMultiplier, TransferMatrix, point_values_to_interp_coeffs)
from .grid import ElementKey, IndexSet, enumerate_initial, ids_to_key, key_to_ids
from .opmat1d import build_operator_matrix

log = logging.getLogger(__name__)

#: Lagrange degree used for adaptive interpolation of initial and exact data.
INIT_LAGRANGE_P = 5


def local_multi_indices(per: int, d: int) -> np.ndarray:
    """C-ordered local degree tuples, shape ``(per**d, d)``."""
    grids = np.meshgrid(*[np.arange(per)] * d, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def tensor_points(G: IndexSet, interp: InterpolatoryFamily):
    """Coordinates, sides and derivative orders of all interpolation slots.

    Returns arrays of shape ``(nel, (M+1)**d, d)``.
    """
    loc1, side1 = interp.point_table()
    ord1 = interp.deriv_orders[np.arange(interp.size) % interp.per_element]
    loc = local_multi_indices(interp.per_element, G.d)
    glob = G.ids[:, None, :] * interp.per_element + loc[None, :, :]
    return loc1[glob], side1[glob], ord1[glob]


@dataclass(eq=False)
class Element:
    """View of one element's data inside a :class:`DGSolution`."""

    key: ElementKey
    alpt_coeffs: np.ndarray
    rhs: np.ndarray
    new_add: bool


class DGSolution:
    """Alpert coefficients of ``nvar`` unknowns over an adaptive index set.

    Coefficients live in ``coeffs`` with shape ``(nel, nvar, (k+1)**d)``;
    rows follow the canonical element order of ``G`` and the local block is
    the C-ordered degree tuple.
    """

    def __init__(self, d: int, k: int, N: int, nvar: int = 1, G: IndexSet | None = None,
                 sparse: bool = True, N_init: int | None = None):
        self.d, self.k, self.N, self.nvar = int(d), int(k), int(N), int(nvar)
        self.alpert: AlpertFamily = build_alpert_family(self.k, self.N)
        if G is None:
            G = enumerate_initial(self.d, self.N if N_init is None else N_init, sparse)
            G = IndexSet(self.d, self.N, G.ids)
        if G.N != self.N or G.d != self.d:
            raise ValueError("index set does not match the solution parameters")
        self.G = G
        self.coeffs = np.zeros((len(G), self.nvar, self.per_element))
        self.rhs = np.zeros_like(self.coeffs)
        self.new_add = np.zeros(len(G), bool)
        self.predict: np.ndarray | None = None
        self._predict_codes: np.ndarray | None = None
        self._fm: FastMultiplier | None = None

    # -- layout ------------------------------------------------------------------
    @property
    def per_element(self) -> int:
        return (self.k + 1) ** self.d

    @property
    def n_elements(self) -> int:
        return len(self.G)

    def dof(self) -> int:
        """Alpert degrees of freedom of one variable."""
        return self.n_elements * self.per_element

    @property
    def multiplier(self) -> FastMultiplier:
        if self._fm is None:
            self._fm = FastMultiplier(self.G)
        return self._fm

    def gather(self, var=0) -> np.ndarray:
        """Flattened coefficient vector of one variable (or a list of them)."""
        return self.coeffs[:, var, :].reshape(-1).copy()

    def scatter(self, vec: np.ndarray, var=0) -> None:
        self.coeffs[:, var, :] = np.asarray(vec).reshape(self.n_elements, *np.shape(self.coeffs[:, var, :])[1:])

    def element(self, key: ElementKey) -> Element:
        i = self.G.position(key)
        return Element(key, self.coeffs[i], self.rhs[i], bool(self.new_add[i]))

    def elements(self):
        for i, key in enumerate(self.G.keys()):
            yield Element(key, self.coeffs[i], self.rhs[i], bool(self.new_add[i]))

    def copy(self) -> "DGSolution":
        out = DGSolution(self.d, self.k, self.N, self.nvar, self.G.copy())
        out.coeffs = self.coeffs.copy()
        out.new_add = self.new_add.copy()
        return out

    # -- structural mutation (keeps payload aligned with G) --------------------
    def add_elements(self, ids: np.ndarray) -> int:
        ids = np.asarray(ids, dtype=np.int64).reshape(-1, self.d)
        if len(ids) == 0:
            return 0
        ids = ids[self.G.positions(ids) < 0]
        ids = np.unique(ids, axis=0)
        if len(ids) == 0:
            return 0
        old = len(self.G)
        o2n = self.G.add(ids)
        coeffs = np.zeros((len(self.G), self.nvar, self.per_element))
        coeffs[o2n] = self.coeffs
        self.coeffs = coeffs
        rhs = np.zeros_like(coeffs)
        rhs[o2n] = self.rhs
        self.rhs = rhs
        flag = np.ones(len(self.G), bool)
        flag[o2n] = self.new_add
        self.new_add = flag
        return len(self.G) - old

    def remove_elements(self, mask: np.ndarray) -> int:
        mask = np.asarray(mask, bool)
        if not mask.any():
            return 0
        keep = self.G.remove(mask)
        self.coeffs = self.coeffs[keep]
        self.rhs = self.rhs[keep]
        self.new_add = self.new_add[keep]
        return int(mask.sum())

    # -- predict buffer --------------------------------------------------------
    def predict_snapshot(self) -> None:
        self.predict = self.coeffs.copy()
        self._predict_codes = self.G.codes.copy()

    def restore_snapshot(self) -> None:
        """Copy the snapshot back; elements added since keep zero coefficients."""
        if self.predict is None:
            raise RuntimeError("restore without snapshot")
        pos = self.G.positions(self._decode(self._predict_codes))
        out = np.zeros_like(self.coeffs)
        ok = pos >= 0
        out[pos[ok]] = self.predict[ok]
        self.coeffs = out
        self.predict = None
        self._predict_codes = None

    def _decode(self, codes: np.ndarray) -> np.ndarray:
        ids = np.zeros((codes.size, self.d), dtype=np.int64)
        c = codes.copy()
        for m in range(self.d - 1, -1, -1):
            ids[:, m] = c % self.G.base
            c //= self.G.base
        return ids

    # -- initialization ----------------------------------------------------------
    def _project_1d(self, f: Callable, nq: int | None = None) -> np.ndarray:
        """L2 projection of a 1D function onto every Alpert basis function."""
        G1 = max(self.N, 1)
        x, w = gauss_legendre01(self.k + 3 if nq is None else nq)
        cells = np.arange(2**G1)
        xs = ((cells[:, None] + x[None, :]) / 2.0**G1).ravel()
        ws = np.tile(w, cells.size) / 2.0**G1
        fx = np.asarray(f(xs), dtype=float)
        if not np.all(np.isfinite(fx)):
            raise FloatingPointError("non-finite function values in projection")
        B = self.alpert.evaluate(xs)
        return B @ (ws * np.broadcast_to(fx, xs.shape))

    def separable_coefficients(self, terms: Sequence[Sequence[Callable]],
                               weights: Sequence[float] | None = None) -> np.ndarray:
        """Coefficients (``nel, (k+1)**d``) of a weighted sum of separable products."""
        if weights is None:
            weights = np.ones(len(terms))
        loc = local_multi_indices(self.k + 1, self.d)
        glob = self.G.ids[:, None, :] * (self.k + 1) + loc[None, :, :]
        out = np.zeros((self.n_elements, self.per_element))
        for wt, factors in zip(weights, terms):
            if len(factors) != self.d:
                raise ValueError("each term needs one factor per dimension")
            prod = np.full(out.shape, float(wt))
            for m, fm in enumerate(factors):
                prod *= self._project_1d(fm)[glob[:, :, m]]
            out += prod
        return out

    def init_separable_sum(self, terms, weights=None, var: int = 0) -> None:
        """Project ``sum_t w_t prod_m f_{t,m}(x_m)`` onto the active set."""
        self.coeffs[:, var, :] = self.separable_coefficients(terms, weights)

    def init_adaptive_interpolation(self, f: Callable, eps: float, var: int = 0,
                                    P: int = INIT_LAGRANGE_P, indicator: str = "interp") -> int:
        """Adaptive Lagrange interpolation of ``f`` then projection to Alpert.

        ``f`` takes an ``(npts, d)`` array.  Leaves whose indicator exceeds
        ``eps`` get all admissible children until no leaf qualifies.  The
        indicator is the L2 norm of the element's interpolant part
        (``"interp"``, see :func:`interp_element_norms`) or of its projected
        Alpert coefficients (``"alpert"``, the refinement criterion used
        during time stepping).  Returns the number of elements added.
        """
        if indicator not in ("interp", "alpert"):
            raise ValueError(f"unknown indicator {indicator!r}")
        interp = build_interpolatory_family(P, 0, self.N)
        added = 0
        while True:
            icoef = self._interp_coeffs(f, interp)
            if indicator == "interp":
                ind = interp_element_norms(self.G, icoef, interp)
            else:
                ind = np.linalg.norm(self.interp_to_alpert(icoef, interp), axis=1)
            leaf = self.G.leaf_mask()
            src, kids = self.G.child_ids()
            hot = leaf[src] & (ind[src] > eps)
            new = kids[hot]
            new = new[self.G.positions(new) < 0] if len(new) else new
            if len(new) == 0:
                break
            n0 = len(self.G)
            self.add_elements(new)
            miss = self.G.missing_parents()
            while len(miss):
                self.add_elements(miss)
                miss = self.G.missing_parents()
            added += len(self.G) - n0
        if added == 0 and ind.size and (ind[leaf] > eps).any():
            warnings.warn("adaptive interpolation reached the maximum level above threshold",
                          RuntimeWarning, stacklevel=2)
        self.coeffs[:, var, :] = self.interp_to_alpert(icoef, interp)
        return added

    def _interp_coeffs(self, f: Callable, interp: InterpolatoryFamily) -> np.ndarray:
        loc, side, order = tensor_points(self.G, interp)
        vals = np.asarray(f(loc.reshape(-1, self.d)), dtype=float).reshape(loc.shape[:2])
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("non-finite function values in interpolation")
        return point_values_to_interp_coeffs(self.G, vals, interp, self.multiplier)

    def interp_to_alpert(self, icoef: np.ndarray, interp: InterpolatoryFamily) -> np.ndarray:
        """Alpert coefficients of the L2 projection of an interpolant on ``G``."""
        T = interp_alpert_transfer(interp, self.alpert, "u_v")
        return self.multiplier.multiply(icoef, [T] * self.d, "auto")

    # -- evaluation and errors -------------------------------------------------
    def eval_at(self, x: np.ndarray, var: int = 0, side=-1, chunk: int = 4096) -> np.ndarray:
        """``u_h`` at points ``x`` of shape ``(npts, d)`` (left limits by default)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.d:
            raise ValueError("points must have d columns")
        out = np.empty(x.shape[0])
        loc = local_multi_indices(self.k + 1, self.d)
        glob = self.G.ids[:, None, :] * (self.k + 1) + loc[None, :, :]
        c = self.coeffs[:, var, :]
        for s in range(0, x.shape[0], chunk):
            xs = x[s:s + chunk]
            prod = np.ones(glob.shape[:2] + (xs.shape[0],))
            for m in range(self.d):
                Bm = self.alpert.evaluate(xs[:, m], side).toarray()
                prod *= Bm[glob[:, :, m]]
            out[s:s + chunk] = np.einsum("es,esp->p", c, prod)
        return out

    def l2_norm(self, var: int = 0) -> float:
        return float(np.linalg.norm(self.coeffs[:, var, :]))

    def l2_error_against(self, reference: "DGSolution", var: int = 0, ref_var: int = 0) -> float:
        """L2 distance via coefficients over the union of both index sets."""
        if (reference.d, reference.k, reference.N) != (self.d, self.k, self.N):
            raise ValueError("solutions use different basis parameters")
        pos = reference.G.positions(self.G.ids)
        mine = self.coeffs[:, var, :]
        theirs = reference.coeffs[:, ref_var, :]
        shared = pos >= 0
        diff2 = np.sum((mine[shared] - theirs[pos[shared]]) ** 2)
        diff2 += np.sum(mine[~shared] ** 2)
        only_ref = np.ones(len(reference.G), bool)
        only_ref[pos[shared]] = False
        diff2 += np.sum(theirs[only_ref] ** 2)
        return float(np.sqrt(diff2))

    def quadrature_l2_error(self, f: Callable, var: int = 0, nq: int | None = None) -> float:
        """Direct tensor Gauss L2 error on the finest uniform mesh (small ``d``)."""
        G1 = max(self.N, 1)
        x, w = gauss_legendre01(self.k + 2 if nq is None else nq)
        cells = np.arange(2**G1)
        xs = ((cells[:, None] + x[None, :]) / 2.0**G1).ravel()
        ws = np.tile(w, cells.size) / 2.0**G1
        grids = np.meshgrid(*[xs] * self.d, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        wts = np.ones(pts.shape[0])
        for g in np.meshgrid(*[ws] * self.d, indexing="ij"):
            wts *= g.ravel()
        err = self.eval_at(pts, var) - np.asarray(f(pts), dtype=float)
        return float(np.sqrt(np.sum(wts * err**2)))

    def indicator(self, vars_: Sequence[int] = (0,)) -> np.ndarray:
        """Per-element Euclidean norm of the Alpert coefficients of ``vars_``."""
        return np.sqrt(np.sum(self.coeffs[:, list(vars_), :] ** 2, axis=(1, 2)))

    # -- export --------------------------------------------------------------------
    def export_csv(self, path) -> None:
        """Rows ``levels, supports, variable, degrees, coefficient`` (17 digits)."""
        loc = local_multi_indices(self.k + 1, self.d)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["levels", "supports", "variable", "degrees", "coefficient"])
            for i, key in enumerate(self.G.keys()):
                for v in range(self.nvar):
                    for s, deg in enumerate(loc):
                        w.writerow([" ".join(map(str, key.levels)), " ".join(map(str, key.supports)),
                                    v, " ".join(map(str, deg)), f"{self.coeffs[i, v, s]:.17g}"])

    @classmethod
    def load_csv(cls, path, k: int, N: int) -> "DGSolution":
        rows = []
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            next(r)
            for lv, sp_, v, deg, c in r:
                key = ElementKey(tuple(map(int, lv.split())), tuple(map(int, sp_.split())))
                rows.append((key_to_ids(key), int(v), tuple(map(int, deg.split())), float(c)))
        d = len(rows[0][0])
        nvar = max(r[1] for r in rows) + 1
        G = IndexSet(d, N, np.array([r[0] for r in rows]))
        sol = cls(d, k, N, nvar, G)
        pos = G.positions(np.array([r[0] for r in rows]))
        for p, (_, v, deg, c) in zip(pos, rows):
            sol.coeffs[p, v, int(np.ravel_multi_index(deg, (k + 1,) * d))] = c
        return sol


def interp_element_norms(G: IndexSet, icoef: np.ndarray, interp: InterpolatoryFamily) -> np.ndarray:
    """L2 norm of each element's share ``sum_s c_s psi_s`` of an interpolant.

    This is the interpolatory analogue of the Alpert indicator, whose
    coefficients are already orthonormal.
    """
    p = interp.per_element
    gram = build_operator_matrix(interp, interp, "periodic")["u_v"]
    ne = 2**interp.max_level
    blocks = gram.reshape(ne, p, ne, p)[np.arange(ne), :, np.arange(ne), :]
    c = np.asarray(icoef, float).reshape((len(G),) + (p,) * G.d)
    kc = c
    for m in range(G.d):
        kc = np.moveaxis(np.einsum("eij,e...j->e...i", blocks[G.ids[:, m]], np.moveaxis(kc, m + 1, -1)), -1, m + 1)
    return np.sqrt(np.maximum(np.sum((c * kc).reshape(len(G), -1), axis=1), 0.0))


def interp_alpert_transfer(interp: InterpolatoryFamily, alpert: AlpertFamily, kind: str,
                           bc: str = "periodic") -> TransferMatrix:
    """1D interpolatory-to-Alpert operator matrix wrapped for fast multiply."""
    M = build_operator_matrix(interp, alpert, bc)[kind]
    return _wrap(M, interp.per_element, alpert.per_element, kind, interp, alpert, bc)


_WRAPPED: dict = {}


def _wrap(M, p, q, kind, a, b, bc) -> TransferMatrix:
    key = (id(a), id(b), kind, bc)
    hit = _WRAPPED.get(key)
    if hit is None or hit[0] is not M:
        hit = (M, TransferMatrix(M, p, q, kind))
        _WRAPPED[key] = hit
    return hit[1]
