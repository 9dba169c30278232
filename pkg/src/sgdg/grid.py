"""Multi-dimensional element indexing and downward-closed index sets.

An element is identified per dimension by its 1D element id (see
:func:`sgdg.basis1d.element_id`), so an index set is an ``(nel, d)`` integer
array kept in lexicographic order.  Lookups use a mixed-radix code with base
``2**N`` and binary search.
"""
from __future__ import annotations

import hashlib
import itertools
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .basis1d import element_id, element_of_id, levels_of_ids


class ElementKey(NamedTuple):
    """Level and support multi-indices ``(l, j)`` of one element."""

    levels: tuple
    supports: tuple


def key_to_ids(key: ElementKey) -> tuple[int, ...]:
    return tuple(element_id(l, j) for l, j in zip(key.levels, key.supports))


def ids_to_key(ids: Iterable[int]) -> ElementKey:
    pairs = [element_of_id(int(e)) for e in ids]
    return ElementKey(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


def hash_key(key: ElementKey, N: int | None = None) -> int:
    """Deterministic 64-bit hash of an element key.

    With ``N`` given and ``d * N <= 64`` the 1D element ids are packed into
    ``N``-bit fields, which is injective for levels up to ``N``.  Otherwise a
    keyed BLAKE2b digest is used; callers that need injectivity in that regime
    must keep the key next to the hash.  No ordering contract is implied.
    """
    d = len(key.levels)
    if N is None:
        N = max(key.levels, default=0)
    if any(l > N for l in key.levels):
        raise OverflowError("level exceeds the packing width")
    ids = key_to_ids(key)
    if d * N <= 64:
        h = 0
        for m, e in enumerate(ids):
            h |= e << (N * m)
        return h
    payload = b"".join(int(e).to_bytes(8, "little") for e in ids)
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def children(key: ElementKey, N: int) -> set[ElementKey]:
    """Children of ``key`` with every level at most ``N``."""
    out = set()
    for m, (l, j) in enumerate(zip(key.levels, key.supports)):
        if l >= N:
            continue
        sup = [0] if l == 0 else [2 * j, 2 * j + 1]
        for js in sup:
            lv = list(key.levels)
            sp = list(key.supports)
            lv[m] = l + 1
            sp[m] = js
            out.add(ElementKey(tuple(lv), tuple(sp)))
    return out


def parents(key: ElementKey) -> set[ElementKey]:
    out = set()
    for m, (l, j) in enumerate(zip(key.levels, key.supports)):
        if l == 0:
            continue
        lv = list(key.levels)
        sp = list(key.supports)
        lv[m] = l - 1
        sp[m] = 0 if l == 1 else j // 2
        out.add(ElementKey(tuple(lv), tuple(sp)))
    return out


def n_children_possible(levels: np.ndarray, N: int) -> np.ndarray:
    """Number of admissible children per dimension for an array of levels."""
    levels = np.asarray(levels)
    return np.where(levels >= N, 0, np.where(levels == 0, 1, 2))


class IndexSet:
    """Sorted set of elements over ``[0, 1]^d`` with per-dimension level cap ``N``.

    ``ids`` holds the per-dimension 1D element ids, rows in canonical
    (lexicographic) order.  ``version`` increments on every mutation so that
    operators cached against a set can detect staleness.
    """

    def __init__(self, d: int, N: int, ids: np.ndarray | None = None):
        if d < 1 or N < 0:
            raise ValueError("need d >= 1 and N >= 0")
        if d * max(N, 1) > 62:
            raise ValueError("d * N must not exceed 62 for mixed-radix codes")
        self.d = int(d)
        self.N = int(N)
        self.base = np.int64(2**self.N)
        self.version = 0
        if ids is None:
            ids = np.zeros((1, d), dtype=np.int64)
        self._set_ids(np.asarray(ids, dtype=np.int64).reshape(-1, d))

    # -- codes and lookup ---------------------------------------------------
    def encode(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64).reshape(-1, self.d)
        code = np.zeros(ids.shape[0], dtype=np.int64)
        for m in range(self.d):
            code = code * self.base + ids[:, m]
        return code

    def _set_ids(self, ids: np.ndarray) -> None:
        if ids.size and (ids.min() < 0 or ids.max() >= self.base):
            raise ValueError("element id outside the level cap")
        codes = self.encode(ids)
        codes, first = np.unique(codes, return_index=True)
        self.ids = ids[first]
        self.codes = codes
        self.levels = levels_of_ids(self.ids)
        self.version += 1

    def __len__(self) -> int:
        return self.ids.shape[0]

    def positions(self, ids: np.ndarray) -> np.ndarray:
        """Row of every queried element, ``-1`` where absent."""
        q = self.encode(ids)
        pos = np.searchsorted(self.codes, q)
        pos = np.minimum(pos, len(self) - 1)
        return np.where(self.codes[pos] == q, pos, -1)

    def __contains__(self, key: ElementKey) -> bool:
        return bool(self.positions(np.array([key_to_ids(key)]))[0] >= 0)

    def position(self, key: ElementKey) -> int:
        p = int(self.positions(np.array([key_to_ids(key)]))[0])
        if p < 0:
            raise KeyError(key)
        return p

    def keys(self) -> Iterator[ElementKey]:
        for row in self.ids:
            yield ids_to_key(row)

    def copy(self) -> "IndexSet":
        return IndexSet(self.d, self.N, self.ids.copy())

    # -- mutation -------------------------------------------------------------
    def add(self, ids: np.ndarray) -> np.ndarray:
        """Insert elements; returns ``old_to_new`` row map of existing rows."""
        ids = np.asarray(ids, dtype=np.int64).reshape(-1, self.d)
        old_codes = self.codes
        self._set_ids(np.vstack([self.ids, ids]))
        return np.searchsorted(self.codes, old_codes)

    def remove(self, mask: np.ndarray) -> np.ndarray:
        """Drop rows where ``mask`` is true; returns kept old row indices."""
        keep = np.flatnonzero(~np.asarray(mask, bool))
        self._set_ids(self.ids[keep])
        return keep

    # -- structure ------------------------------------------------------------
    def parent_ids(self, ids: np.ndarray | None = None) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per dimension: (rows having a parent in that dimension, parent ids)."""
        ids = self.ids if ids is None else np.asarray(ids, dtype=np.int64)
        out = []
        for m in range(self.d):
            rows = np.flatnonzero(ids[:, m] > 0)
            p = ids[rows].copy()
            p[:, m] //= 2
            out.append((rows, p))
        return out

    def child_ids(self, ids: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """All admissible children as ``(source_row, child_ids)`` arrays."""
        ids = self.ids if ids is None else np.asarray(ids, dtype=np.int64)
        lev = levels_of_ids(ids)
        src, kids = [], []
        for m in range(self.d):
            r0 = np.flatnonzero((lev[:, m] == 0) & (self.N >= 1))
            c = ids[r0].copy()
            c[:, m] = 1
            src.append(r0)
            kids.append(c)
            r1 = np.flatnonzero((lev[:, m] >= 1) & (lev[:, m] < self.N))
            for off in (0, 1):
                c = ids[r1].copy()
                c[:, m] = 2 * c[:, m] + off
                src.append(r1)
                kids.append(c)
        if not src:
            return np.zeros(0, np.int64), np.zeros((0, self.d), np.int64)
        return np.concatenate(src), np.vstack(kids)

    def missing_parents(self, ids: np.ndarray | None = None) -> np.ndarray:
        found = []
        for _, p in self.parent_ids(ids):
            if len(p):
                found.append(p[self.positions(p) < 0])
        if not found:
            return np.zeros((0, self.d), np.int64)
        return np.unique(np.vstack(found), axis=0)

    def is_downward_closed(self) -> bool:
        return len(self.missing_parents()) == 0

    def close_downward(self) -> int:
        """Add missing ancestors; returns the number of elements added."""
        added = 0
        while True:
            miss = self.missing_parents()
            if len(miss) == 0:
                return added
            self.add(miss)
            added += len(miss)

    def children_present(self) -> tuple[np.ndarray, np.ndarray]:
        """Per element: number of present children and number possible."""
        src, kids = self.child_ids()
        possible = np.bincount(src, minlength=len(self))
        present = np.bincount(src[self.positions(kids) >= 0], minlength=len(self))
        return present, possible

    def leaf_mask(self) -> np.ndarray:
        """Elements missing an admissible child, or having no child at all."""
        present, possible = self.children_present()
        return (present < possible) | (present == 0)

    def zero_child_leaf_mask(self) -> np.ndarray:
        present, _ = self.children_present()
        return present == 0

    def max_level_vec(self) -> np.ndarray:
        return self.levels.max(axis=0)

    def dof(self, per_element: int) -> int:
        """Degrees of freedom for ``per_element`` functions per dimension."""
        return len(self) * per_element**self.d


def _level_multi_indices(d: int, N: int, sparse: bool):
    for lv in itertools.product(range(N + 1), repeat=d):
        if (sum(lv) if sparse else max(lv)) <= N:
            yield lv


def enumerate_initial(d: int, N: int, sparse: bool = True, k: int | None = None) -> IndexSet:
    """Sparse (``|l|_1 <= N``) or full (``|l|_inf <= N``) index set.

    ``k`` is accepted for symmetry with the DOF formula and is not needed to
    build the set.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    blocks = []
    for lv in _level_multi_indices(d, N, sparse):
        ranges = [np.array([0]) if l == 0 else 2 ** (l - 1) + np.arange(2 ** (l - 1)) for l in lv]
        mesh = np.meshgrid(*ranges, indexing="ij")
        blocks.append(np.stack([g.ravel() for g in mesh], axis=1))
    return IndexSet(d, N, np.vstack(blocks))


def sparse_dof(d: int, N: int, k: int, sparse: bool = True) -> int:
    """Closed-form DOF count of the initial sparse or full set."""
    total = 0
    for lv in _level_multi_indices(d, N, sparse):
        total += int(np.prod([2 ** max(l - 1, 0) for l in lv]))
    return total * (k + 1) ** d
