"""Dimension-by-dimension tensor products over downward-closed index sets.

A field on an :class:`~sgdg.grid.IndexSet` is an array of shape
``(nel, prod(sizes))`` whose per-element block is a C-ordered tensor with
``sizes[m]`` local slots in dimension ``m``.  A :class:`TransferMatrix` maps a
1D family with ``p`` functions per element (rows, the source) to one with
``q`` per element (columns, the target), so one pass along dimension ``m``
computes

    g[n'] = sum_{n in G, n_i = n'_i (i != m)} f[n] * T[n_m, n'_m].

The product of ``d`` such passes equals the direct sum over ``G`` once the
first ``d - 1`` matrices are split into level-lower and level-upper parts
(``2**(d-1)`` terms); see :func:`fast_multiply`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .basis1d import AlpertFamily, Family, InterpolatoryFamily, levels_of_ids
from .grid import IndexSet

_LOWER, _UPPER = "lower", "upper"


@dataclass(eq=False)
class TransferMatrix:
    """Dense 1D matrix between two hierarchical families of equal ``N``.

    Rows are source functions (``p`` per element), columns target functions
    (``q`` per element), both in the global 1D ordering.
    """

    T: np.ndarray
    p: int
    q: int
    name: str = ""

    def __post_init__(self):
        self.T = np.asarray(self.T, dtype=float)
        ne_s, rem_s = divmod(self.T.shape[0], self.p)
        ne_t, rem_t = divmod(self.T.shape[1], self.q)
        if rem_s or rem_t or ne_s != ne_t:
            raise ValueError("matrix shape does not match the per-element sizes")
        self.n_elements = ne_s
        self.blocks = self.T.reshape(ne_s, self.p, ne_t, self.q)
        lev = levels_of_ids(np.arange(ne_s))
        self.elem_levels = lev
        nz = np.abs(self.blocks).max(axis=(1, 3)) != 0
        self.block_nonzero = nz
        ls, lt = np.meshgrid(lev, lev, indexing="ij")
        self.has_lower = bool((nz & (ls > lt)).any())
        self.has_upper = bool((nz & (ls < lt)).any())

    @property
    def src_levels(self) -> np.ndarray:
        return np.repeat(self.elem_levels, self.p)

    @property
    def tgt_levels(self) -> np.ndarray:
        return np.repeat(self.elem_levels, self.q)

    def part(self, which: str, diagonal: str = _LOWER) -> "TransferMatrix":
        L, U = split_level_triangular(self, diagonal)
        return L if which == _LOWER else U


def split_level_triangular(T: TransferMatrix, diagonal_side: str = _LOWER):
    """Split ``T = L + U`` by level: ``L`` keeps source level >= target level.

    Same-level blocks go to ``diagonal_side``.
    """
    if diagonal_side not in (_LOWER, _UPPER):
        raise ValueError("diagonal_side must be 'lower' or 'upper'")
    ls = T.src_levels[:, None]
    lt = T.tgt_levels[None, :]
    if diagonal_side == _LOWER:
        lmask = ls >= lt
    else:
        lmask = ls > lt
    L = TransferMatrix(np.where(lmask, T.T, 0.0), T.p, T.q, T.name + "|L")
    U = TransferMatrix(np.where(lmask, 0.0, T.T), T.p, T.q, T.name + "|U")
    return L, U


def _auto_side(T: TransferMatrix) -> str:
    # put the diagonal where it makes the other part vanish
    if not T.has_lower:
        return _UPPER
    return _LOWER


def dim_operator(G: IndexSet, T: TransferMatrix, dim: int, sizes) -> sp.csr_matrix:
    """Sparse matrix of one pass along ``dim`` for the field layout ``sizes``.

    Maps the flattened input field (``sizes[dim] == T.p``) to the output
    field with ``sizes[dim]`` replaced by ``T.q``.
    """
    sizes = tuple(int(s) for s in sizes)
    if sizes[dim] != T.p:
        raise ValueError("field layout does not match the transfer matrix")
    if T.n_elements != 2**G.N:
        raise ValueError("transfer matrix level does not match the index set")
    nel = len(G)
    A = int(np.prod(sizes[:dim], dtype=np.int64))
    B = int(np.prod(sizes[dim + 1:], dtype=np.int64))
    s_in = A * T.p * B
    s_out = A * T.q * B

    # block pattern grouped by target element (CSC of the block mask)
    t_of, s_of = np.nonzero(T.block_nonzero.T)
    ptr = np.searchsorted(t_of, np.arange(T.n_elements + 1))
    cnt = np.diff(ptr)

    t_ids = G.ids[:, dim]
    rep = cnt[t_ids]
    tgt_rows = np.repeat(np.arange(nel), rep)
    start = np.repeat(ptr[t_ids], rep)
    offs = np.arange(rep.sum()) - np.repeat(np.cumsum(rep) - rep, rep)
    s_ids = s_of[start + offs]
    tid_rep = t_ids[tgt_rows]

    radix = G.base ** (G.d - 1 - dim)
    fiber = G.codes - t_ids.astype(np.int64) * radix
    qcode = fiber[tgt_rows] + s_ids.astype(np.int64) * radix
    pos = np.searchsorted(G.codes, qcode)
    pos = np.minimum(pos, nel - 1)
    found = G.codes[pos] == qcode
    src_rows = pos[found]
    tgt_rows = tgt_rows[found]
    s_ids = s_ids[found]
    tid_rep = tid_rep[found]

    blocks = T.blocks[s_ids, :, tid_rep, :]  # (P, p, q)
    P = blocks.shape[0]
    if P == 0:
        return sp.csr_matrix((nel * s_out, nel * s_in))
    a = np.arange(A)[None, :, None, None, None]
    s = np.arange(T.p)[None, None, :, None, None]
    t = np.arange(T.q)[None, None, None, :, None]
    b = np.arange(B)[None, None, None, None, :]
    rows = tgt_rows[:, None, None, None, None] * s_out + (a * T.q + t) * B + b
    cols = src_rows[:, None, None, None, None] * s_in + (a * T.p + s) * B + b
    vals = np.broadcast_to(blocks[:, None, :, :, None], (P, A, T.p, T.q, B))
    shape = (P, A, T.p, T.q, B)
    rows = np.broadcast_to(rows, shape).ravel()
    cols = np.broadcast_to(cols, shape).ravel()
    vals = vals.ravel()
    keep = vals != 0
    mat = sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(nel * s_out, nel * s_in))
    return mat


def transform_along_dim(G: IndexSet, field: np.ndarray, T: TransferMatrix, dim: int, sizes):
    """One pass of :func:`dim_operator`; returns ``(new_field, new_sizes)``."""
    op = dim_operator(G, T, dim, sizes)
    out = op @ np.asarray(field).reshape(-1)
    new_sizes = list(sizes)
    new_sizes[dim] = T.q
    return out.reshape(len(G), -1), tuple(new_sizes)


def _terms(d: int):
    """Pass sequences of the ``2**(d-1)`` LU terms as ``(dim, part)`` lists."""
    for bits in itertools.product((_LOWER, _UPPER), repeat=d - 1):
        low = [(m, _LOWER) for m in range(d - 1) if bits[m] == _LOWER]
        up = [(m, _UPPER) for m in range(d - 1) if bits[m] == _UPPER]
        yield low + [(d - 1, "full")] + up


class FastMultiplier:
    """Fast tensor products bound to one index set, with operator caching.

    Parameters
    ----------
    G : IndexSet
        Must be downward closed; this is checked whenever it changes.
    """

    def __init__(self, G: IndexSet):
        self.G = G
        self._version = None
        self._cache: dict = {}

    def _sync(self):
        if self._version != self.G.version:
            if not self.G.is_downward_closed():
                raise ValueError("fast multiply requires a downward-closed index set")
            self._cache.clear()
            self._version = self.G.version

    def _op(self, T: TransferMatrix, dim: int, sizes) -> sp.csr_matrix:
        key = (id(T), dim, tuple(sizes))
        hit = self._cache.get(key)
        if hit is None or hit[0] is not T:
            hit = (T, dim_operator(self.G, T, dim, sizes))
            self._cache[key] = hit
        return hit[1]

    def _parts(self, T: TransferMatrix, diagonal: str):
        key = ("split", id(T), diagonal)
        hit = self._cache.get(key)
        if hit is None or hit[0] is not T:
            side = _auto_side(T) if diagonal == "auto" else diagonal
            L, U = split_level_triangular(T, side)
            parts = {_LOWER: L if L.block_nonzero.any() else None,
                     _UPPER: U if U.block_nonzero.any() else None}
            hit = (T, parts)
            self._cache[key] = hit
        return hit[1]

    def multiply(self, field: np.ndarray, mats, diagonal: str = "auto") -> np.ndarray:
        """Evaluate the tensor product of ``mats`` over the index set.

        ``field`` has shape ``(nel, prod(p_m))`` optionally followed by
        batch axes; the result has shape ``(nel, prod(q_m))`` plus the same
        batch axes.  ``diagonal`` selects where same-level blocks
        of ``mats[:-1]`` go: ``"lower"``, ``"upper"`` or ``"auto"`` (the side
        that lets one part vanish, which drops whole terms).
        """
        self._sync()
        G = self.G
        d = G.d
        mats = list(mats)
        if len(mats) != d:
            raise ValueError(f"need {d} matrices, got {len(mats)}")
        sizes0 = tuple(T.p for T in mats)
        field = np.asarray(field, dtype=float)
        batch = field.shape[2:] if field.ndim > 2 else ()
        nb = int(np.prod(batch, dtype=np.int64)) if batch else 1
        if field.shape[0] != len(G) or field.shape[1] != int(np.prod(sizes0)):
            raise ValueError("field block size does not match the transfer matrices")
        flat = field.reshape(-1, nb)
        parts = [self._parts(T, diagonal) for T in mats[:-1]]
        out = None
        for seq in _terms(d):
            mats_seq = []
            for m, kind in seq:
                Tm = mats[m] if kind == "full" else parts[m][kind]
                if Tm is None:
                    break
                mats_seq.append((m, Tm))
            else:
                v = flat
                sizes = list(sizes0)
                for m, Tm in mats_seq:
                    v = self._op(Tm, m, sizes) @ v
                    sizes[m] = Tm.q
                out = v if out is None else out + v
        nq = int(np.prod([T.q for T in mats]))
        if out is None:
            out = np.zeros((len(G) * nq, nb))
        return out.reshape((len(G), nq) + batch)


def fast_multiply(G: IndexSet, field: np.ndarray, mats, diagonal: str = "lower") -> np.ndarray:
    """One-shot :meth:`FastMultiplier.multiply`."""
    return FastMultiplier(G).multiply(field, mats, diagonal)


def direct_multiply(G: IndexSet, field: np.ndarray, mats) -> np.ndarray:
    """Brute-force ``O(|G|^2)`` evaluation of the same tensor product."""
    d = G.d
    nel = len(G)
    field = np.asarray(field, dtype=float).reshape(nel, -1)

    def glob(per):
        loc = np.stack(np.meshgrid(*[np.arange(s) for s in per], indexing="ij"), -1).reshape(-1, d)
        return [(G.ids[:, m, None] * per[m] + loc[None, :, m]).ravel() for m in range(d)]

    gin = glob([T.p for T in mats])
    gout = glob([T.q for T in mats])
    R = np.ones((gin[0].size, gout[0].size))
    for m, T in enumerate(mats):
        R *= T.T[np.ix_(gin[m], gout[m])]
    return (field.reshape(-1) @ R).reshape(nel, -1)


# -- 1D transfers between Alpert coefficients, point values and interpolants --

@lru_cache(maxsize=64)
def _alpert_to_values(alpert: AlpertFamily, interp: InterpolatoryFamily, extra_deriv: int,
                      slot_orders: bool):
    loc, side = interp.point_table()
    orders = np.full(interp.size, extra_deriv)
    if slot_orders:
        orders += interp.deriv_orders[np.arange(interp.size) % interp.per_element]
    T = np.zeros((alpert.size, interp.size))
    for l in np.unique(orders):
        sel = orders == l
        if l > alpert.degree:
            continue
        T[:, sel] = alpert.evaluate(loc[sel], side[sel], int(l)).toarray()
    return TransferMatrix(T, alpert.per_element, interp.per_element, f"alpt->val d{extra_deriv}")


def alpert_to_values_matrix(alpert: AlpertFamily, interp: InterpolatoryFamily,
                            extra_deriv: int = 0, slot_orders: bool = True) -> TransferMatrix:
    """``T[b, a] = d^(l_a + extra) v_b(x_a)`` at every interpolation slot ``a``.

    With ``slot_orders=False`` the slot's own derivative order ``l_a`` is
    ignored, giving the plain ``extra``-th derivative at every slot point.
    """
    if alpert.max_level != interp.max_level:
        raise ValueError("families must share the maximum level")
    return _alpert_to_values(alpert, interp, int(extra_deriv), bool(slot_orders))


@lru_cache(maxsize=32)
def _interp_values(interp: InterpolatoryFamily):
    loc, side = interp.point_table()
    orders = interp.deriv_orders[np.arange(interp.size) % interp.per_element]
    V = np.zeros((interp.size, interp.size))
    for l in np.unique(orders):
        sel = orders == l
        V[:, sel] = interp.evaluate(loc[sel], side[sel], int(l)).toarray()
    lev = interp.levels
    # psi_b vanishes with its derivatives on all coarser points
    coarse = lev[:, None] > lev[None, :]
    if np.abs(V[coarse]).max(initial=0.0) > 1e-10:
        raise AssertionError("interpolatory family is not hierarchical on its points")
    V[coarse] = 0.0
    V[np.abs(V) < 1e-13] = 0.0
    W = np.linalg.inv(V)
    W[coarse] = 0.0
    W[np.abs(W) < 1e-13 * np.abs(W).max()] = 0.0
    p = interp.per_element
    return TransferMatrix(V, p, p, "coe->val"), TransferMatrix(W, p, p, "val->coe")


def interp_coeffs_to_values_matrix(interp: InterpolatoryFamily) -> TransferMatrix:
    """``V[b, a] = d^(l_a) psi_b(x_a)``; level upper triangular with unit diagonal."""
    return _interp_values(interp)[0]


def values_to_interp_coeffs_matrix(interp: InterpolatoryFamily) -> TransferMatrix:
    """Inverse of :func:`interp_coeffs_to_values_matrix`.

    Both matrices are level upper triangular, so on a downward-closed set the
    restriction of the inverse is the inverse of the restriction.
    """
    return _interp_values(interp)[1]


def alpert_to_point_values(G: IndexSet, coeffs: np.ndarray, alpert: AlpertFamily,
                           interp: InterpolatoryFamily, deriv_dims=(),
                           multiplier: FastMultiplier | None = None) -> np.ndarray:
    """Values of ``u_h`` (or a first derivative) at all interpolation slots.

    ``deriv_dims`` lists dimensions in which one extra derivative is taken.
    """
    fm = multiplier or FastMultiplier(G)
    mats = [alpert_to_values_matrix(alpert, interp, int(m in deriv_dims)) for m in range(G.d)]
    return fm.multiply(coeffs, mats, "auto")


def point_values_to_interp_coeffs(G: IndexSet, values: np.ndarray, interp: InterpolatoryFamily,
                                  multiplier: FastMultiplier | None = None) -> np.ndarray:
    fm = multiplier or FastMultiplier(G)
    W = values_to_interp_coeffs_matrix(interp)
    return fm.multiply(values, [W] * G.d, "auto")


def interp_coeffs_to_point_values(G: IndexSet, coeffs: np.ndarray, interp: InterpolatoryFamily,
                                  multiplier: FastMultiplier | None = None) -> np.ndarray:
    fm = multiplier or FastMultiplier(G)
    V = interp_coeffs_to_values_matrix(interp)
    return fm.multiply(coeffs, [V] * G.d, "auto")
