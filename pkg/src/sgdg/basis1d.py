"""One-dimensional multiwavelet families on [0, 1].

Three families share one representation: every basis function of level ``n``
lives on the dyadic cell of level ``max(n - 1, 0)`` indexed by its support
index, and is stored as two polynomial pieces (one per half of that cell) in
the local coordinate ``t`` of the half.  All pieces are built in exact
rational arithmetic and only converted to floating point at the end.

Cells are half-open ``(a, b]``, so point values default to the limit from the
left.  ``side=+1`` requests the limit from the right, which is what interface
terms and the left endpoint interpolation points need.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

LEFT = -1
RIGHT = 1


class Basis1DIndex(NamedTuple):
    """(level, support, degree) triple of a 1D multiwavelet."""

    level: int
    support: int
    degree: int


def element_id(level: int, support: int) -> int:
    """Position of the 1D element ``(level, support)`` in level-major order.

    Level 0 maps to 0 and level ``n >= 1`` occupies ``[2**(n-1), 2**n)``, so
    ids of children are ``2*e`` and ``2*e + 1`` (and ``1`` for the root).
    """
    if level == 0:
        if support != 0:
            raise ValueError("support index must be 0 on level 0")
        return 0
    if not 0 <= support < 2 ** (level - 1):
        raise ValueError(f"support index {support} out of range for level {level}")
    return 2 ** (level - 1) + support


def element_of_id(eid: int) -> tuple[int, int]:
    if eid == 0:
        return 0, 0
    level = int(eid).bit_length()
    return level, eid - 2 ** (level - 1)


def levels_of_ids(ids: np.ndarray) -> np.ndarray:
    """Vectorised ``bit_length`` of nonnegative 1D element ids."""
    ids = np.asarray(ids, dtype=np.int64)
    out = np.zeros(ids.shape, dtype=np.int64)
    nz = ids > 0
    out[nz] = np.floor(np.log2(ids[nz])).astype(np.int64) + 1
    return out


# -- exact polynomial helpers (coefficient lists, ascending powers) ----------

def _padd(a, b):
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]


def _pscale(a, s):
    return [c * s for c in a]


def _pmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        for j, cb in enumerate(b):
            out[i + j] += ca * cb
    return out


def _pint01(a) -> Fraction:
    return sum((c / (i + 1) for i, c in enumerate(a)), Fraction(0))


def _pderiv_at(a, x: Fraction, order: int) -> Fraction:
    total = Fraction(0)
    for i, c in enumerate(a):
        if i < order:
            continue
        total += c * math.perm(i, order) * x ** (i - order)
    return total


def _affine_compose(a, scale: Fraction, shift: Fraction):
    """Coefficients of ``p(scale * t + shift)`` as a polynomial in ``t``."""
    out = [Fraction(0)] * len(a)
    for i, c in enumerate(a):
        for m in range(i + 1):
            out[m] += c * math.comb(i, m) * scale**m * shift ** (i - m)
    return out


def _halves(a, degree: int):
    """Split a polynomial on [0, 1] into its two half-cell pieces."""
    pieces = []
    for h in (0, 1):
        q = _affine_compose(a, Fraction(1, 2), Fraction(h, 2))
        pieces.append(q + [Fraction(0)] * (degree + 1 - len(q)))
    return pieces


def _piecewise_dot(f, g) -> Fraction:
    """L2 inner product on [0, 1] of two functions given as half pieces."""
    return sum((Fraction(1, 2) * _pint01(_pmul(f[h], g[h])) for h in (0, 1)), Fraction(0))


def _solve_fraction(a: list[list[Fraction]], b: list[list[Fraction]]) -> list[list[Fraction]]:
    """Gauss-Jordan solve of ``a x = b`` over the rationals."""
    n = len(a)
    m = [row[:] + rhs[:] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [vr - f * vc for vr, vc in zip(m[r], m[col])]
    return [row[n:] for row in m]


# -- families -----------------------------------------------------------------

@dataclass(eq=False)
class Family:
    """Common container for the Alpert and interpolatory families.

    ``level0`` and ``wavelet`` hold float coefficients of shape
    ``(per_element, 2, degree + 1)``: per local function, per half, ascending
    monomial coefficients in the local half-cell coordinate.
    """

    kind: str
    max_level: int
    degree: int
    per_element: int
    level0: np.ndarray
    wavelet: np.ndarray
    deriv_orders: np.ndarray
    exact_level0: list = field(repr=False, default_factory=list)
    exact_wavelet: list = field(repr=False, default_factory=list)

    @property
    def size(self) -> int:
        return self.per_element * 2**self.max_level

    @property
    def n_elements(self) -> int:
        return 2**self.max_level

    def index(self, idx: Basis1DIndex) -> int:
        """Global 1D ordering position of ``idx``."""
        level, support, degree = idx
        if level > self.max_level or level < 0:
            raise IndexError(f"level {level} outside 0..{self.max_level}")
        if not 0 <= degree < self.per_element:
            raise IndexError(f"degree slot {degree} outside 0..{self.per_element - 1}")
        try:
            eid = element_id(level, support)
        except ValueError as exc:
            raise IndexError(str(exc)) from None
        return self.per_element * eid + degree

    def basis_index(self, pos: int) -> Basis1DIndex:
        eid, deg = divmod(int(pos), self.per_element)
        level, support = element_of_id(eid)
        return Basis1DIndex(level, support, deg)

    @property
    def levels(self) -> np.ndarray:
        """Level of every global 1D basis function."""
        return np.repeat(levels_of_ids(np.arange(self.n_elements)), self.per_element)

    def _scale(self, level: np.ndarray, local: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, x, side=LEFT, deriv: int = 0) -> sp.csr_matrix:
        """Values (or derivatives) of every basis function at ``x``.

        Returns a sparse ``(size, len(x))`` matrix.  At most
        ``(max_level + 1) * per_element`` functions are nonzero at a point.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        side = np.broadcast_to(np.asarray(side), x.shape)
        npts = x.size
        rows, cols, vals = [], [], []
        pts = np.arange(npts)
        powers = np.arange(self.degree + 1)
        dcoef = np.array([math.perm(int(p), deriv) if p >= deriv else 0 for p in powers], float)
        dpow = np.maximum(powers - deriv, 0)
        left = side == LEFT
        for n in range(self.max_level + 1):
            s = max(n - 1, 0)
            y = x * 2.0**s
            cell = np.where(left, np.ceil(y) - 1, np.floor(y)).astype(np.int64)
            ncell = 2**s
            ok = (cell >= 0) & (cell < ncell)
            if not ok.any():
                continue
            y = y - cell
            half = np.where(left, y > 0.5, y >= 0.5).astype(np.int64)
            tau = 2.0 * y - half
            eid = 0 if n == 0 else 2 ** (n - 1) + cell
            table = self.level0 if n == 0 else self.wavelet
            # (npts, per_element, degree + 1)
            coef = table[:, half, :].transpose(1, 0, 2)
            mono = dcoef * np.where(powers >= deriv, tau[:, None] ** dpow, 0.0)
            v = np.einsum("pic,pc->pi", coef, mono)
            local = np.arange(self.per_element)
            scale = self._scale(np.full(self.per_element, n), local)
            v = v * scale[None, :] * (2.0 ** (s + 1)) ** deriv
            glob = self.per_element * np.broadcast_to(np.atleast_1d(eid), (npts,))[:, None] + local
            sel = ok
            rows.append(glob[sel].ravel())
            cols.append(np.repeat(pts[sel], self.per_element))
            vals.append(v[sel].ravel())
        if rows:
            rows = np.concatenate(rows)
            cols = np.concatenate(cols)
            vals = np.concatenate(vals)
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(self.size, npts))
        mat.sum_duplicates()
        return mat


class AlpertFamily(Family):
    """L2-orthonormal multiwavelets of degree ``k`` up to level ``N``."""

    @property
    def k(self) -> int:
        return self.degree

    def _scale(self, level, local):
        level = np.asarray(level, float)
        return np.where(level >= 1, 2.0 ** ((level - 1) / 2.0), 1.0)


class InterpolatoryFamily(Family):
    """Lagrange (``K = 0``) or Hermite (``K >= 1``) interpolatory multiwavelets.

    ``points0`` is ``X_0`` and ``points1`` the increment set of level 1, each
    a list of ``(location, side)`` pairs with exact rational locations.
    """

    P: int = 0
    K: int = 0
    points0: tuple = ()
    points1: tuple = ()

    @property
    def M(self) -> int:
        return self.degree

    def _scale(self, level, local):
        level = np.asarray(level, float)
        order = self.deriv_orders[np.asarray(local)]
        return np.where(level >= 1, 2.0 ** (-(level - 1) * order), 1.0)

    def point_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Location and side of the point owned by every global basis index.

        Hermite slots share the point of their value slot; the derivative
        order is in ``deriv_orders[pos % per_element]``.
        """
        nel = self.n_elements
        loc = np.empty(self.size)
        side = np.empty(self.size, dtype=np.int64)
        kk = self.K + 1
        for eid in range(nel):
            level, sup = element_of_id(eid)
            pts = self.points0 if level == 0 else self.points1
            s = max(level - 1, 0)
            for i, (xl, sd) in enumerate(pts):
                for l in range(kk):
                    pos = self.per_element * eid + i * kk + l
                    loc[pos] = float((xl + sup) / Fraction(2**s))
                    side[pos] = sd
        return loc, side


def _point_side(x: Fraction) -> int:
    return RIGHT if x == 0 else LEFT


def equispaced_points(P: int) -> list[Fraction]:
    """``P + 1`` equispaced points including both endpoints.

    Interior points are taken as left limits, which makes the set invariant
    under dyadic refinement for every ``P``.
    """
    if P < 1:
        raise ValueError("need at least two points")
    return [Fraction(i, P) for i in range(P + 1)]


def nested_point_sets(x0: Sequence[Fraction]) -> tuple[tuple, tuple]:
    """``X_0`` and the level-1 increment, with nesting verified."""
    x0 = sorted(Fraction(x) for x in x0)
    if len(set(x0)) != len(x0) or x0[0] < 0 or x0[-1] > 1:
        raise ValueError("points must be distinct and lie in [0, 1]")
    p0 = [(x, _point_side(x)) for x in x0]
    p1 = []
    for h in (0, 1):
        for x in x0:
            p1.append(((x + h) / 2, RIGHT if x == 0 else LEFT))
    if not set(p0) <= set(p1):
        raise ValueError("point set is not nested under dyadic refinement")
    inc = sorted(set(p1) - set(p0))
    if len(inc) != len(p0):
        raise ValueError("point set is not nested under dyadic refinement")
    return tuple(p0), tuple(inc)


def _nodal_polynomials(x0: Sequence[Fraction], K: int) -> list[list[Fraction]]:
    """Hermite/Lagrange nodal basis on [0, 1]; ordered (point, deriv)."""
    npts = len(x0)
    M = npts * (K + 1) - 1
    rows = []
    for x in x0:
        for l in range(K + 1):
            rows.append([Fraction(math.perm(c, l)) * x ** (c - l) if c >= l else Fraction(0)
                         for c in range(M + 1)])
    # columns of the inverse of the confluent Vandermonde are the nodal polys
    ident = [[Fraction(int(i == j)) for j in range(M + 1)] for i in range(M + 1)]
    inv = _solve_fraction(rows, ident)
    return [[inv[c][r] for c in range(M + 1)] for r in range(M + 1)]


def _legendre_shifted(i: int) -> list[Fraction]:
    """Unnormalised Legendre polynomial ``P_i(2x - 1)``."""
    # Rodrigues on [0, 1]: P_i(2x-1) = sum_m (-1)^(i+m) C(i,m) C(i+m,m) x^m
    return [Fraction((-1) ** (i + m) * math.comb(i, m) * math.comb(i + m, m)) for m in range(i + 1)]


def _to_float(pieces_list, degree) -> np.ndarray:
    out = np.zeros((len(pieces_list), 2, degree + 1))
    for a, pieces in enumerate(pieces_list):
        for h in (0, 1):
            for c, v in enumerate(pieces[h]):
                out[a, h, c] = float(v)
    return out


@lru_cache(maxsize=None)
def _alpert_tables(k: int):
    legendre = [_halves(_legendre_shifted(i), k) for i in range(k + 1)]
    lnorm = [_piecewise_dot(p, p) for p in legendre]
    waves = []
    for i in range(k + 1):
        # monomial x^i restricted to the right half, expressed in local t:
        # x = (1 + t)/2 on the right half
        right = _affine_compose([Fraction(0)] * i + [Fraction(1)], Fraction(1, 2), Fraction(1, 2))
        f = [[Fraction(0)] * (k + 1), right + [Fraction(0)] * (k + 1 - len(right))]
        for p, n2 in zip(legendre, lnorm):
            c = _piecewise_dot(f, p) / n2
            f = [_padd(f[h], _pscale(p[h], -c)) for h in (0, 1)]
        for w, n2 in waves:
            c = _piecewise_dot(f, w) / n2
            f = [_padd(f[h], _pscale(w[h], -c)) for h in (0, 1)]
        n2 = _piecewise_dot(f, f)
        lead = next(c for c in reversed(f[1]) if c != 0)
        if lead < 0:
            f = [_pscale(f[h], -1) for h in (0, 1)]
        waves.append((f, n2))
    lev0 = _to_float(legendre, k) * np.sqrt([float(1 / n) for n in lnorm])[:, None, None]
    wav = _to_float([w for w, _ in waves], k) / np.sqrt([float(n) for _, n in waves])[:, None, None]
    return lev0, wav, legendre, lnorm, waves


def build_alpert_family(k: int, N: int) -> AlpertFamily:
    """Alpert multiwavelets of degree ``k`` on levels ``0..N``.

    Level 0 holds normalised shifted Legendre polynomials.  Level-1 wavelets
    come from Gram-Schmidt on right-half monomials after removing ``V_0``;
    finer levels are dyadic dilations ``2**((n-1)/2) w(2**(n-1) x - j)``.
    """
    if k < 0 or N < 0:
        raise ValueError("degree and level must be nonnegative")
    return _alpert_cached(int(k), int(N))


@lru_cache(maxsize=None)
def _alpert_cached(k: int, N: int) -> AlpertFamily:
    lev0, wav, legendre, lnorm, waves = _alpert_tables(k)
    fam = AlpertFamily(kind="alpert", max_level=N, degree=k, per_element=k + 1,
                       level0=lev0, wavelet=wav, deriv_orders=np.zeros(k + 1, dtype=np.int64),
                       exact_level0=legendre, exact_wavelet=[w for w, _ in waves])
    return fam


def build_interpolatory_family(P: int = 1, K: int = 0, N: int = 0,
                               points: Sequence[Fraction] | None = None) -> InterpolatoryFamily:
    """Interpolatory multiwavelets with ``P + 1`` points and ``K`` derivatives.

    ``points`` defaults to the equispaced set including 0 and 1.
    """
    if P < 1 or K < 0 or N < 0:
        raise ValueError("need P >= 1, K >= 0, N >= 0")
    key = None if points is None else tuple(Fraction(p) for p in points)
    return _interp_cached(int(P), int(K), int(N), key)


@lru_cache(maxsize=None)
def _interp_cached(P: int, K: int, N: int, points) -> InterpolatoryFamily:
    x0 = equispaced_points(P) if points is None else list(points)
    if len(x0) != P + 1:
        raise ValueError(f"expected {P + 1} points, got {len(x0)}")
    p0, p1 = nested_point_sets(x0)
    M = (P + 1) * (K + 1) - 1
    local_x = [x for x, _ in p0]
    nodal = _nodal_polynomials(local_x, K)
    level0 = [_halves(poly, M) for poly in nodal]
    wavelets = []
    for loc, sd in p1:
        h = 1 if (loc > Fraction(1, 2) or (loc == Fraction(1, 2) and sd == RIGHT)) else 0
        t = 2 * loc - h
        ip = local_x.index(t)
        for l in range(K + 1):
            poly = nodal[ip * (K + 1) + l]
            piece = [c * Fraction(1, 2**l) for c in poly]
            pieces = [[Fraction(0)] * (M + 1), [Fraction(0)] * (M + 1)]
            pieces[h] = piece + [Fraction(0)] * (M + 1 - len(piece))
            wavelets.append(pieces)
    orders = np.tile(np.arange(K + 1), P + 1)
    fam = InterpolatoryFamily(kind="lagrange" if K == 0 else "hermite", max_level=N, degree=M,
                              per_element=M + 1, level0=_to_float(level0, M),
                              wavelet=_to_float(wavelets, M), deriv_orders=orders,
                              exact_level0=level0, exact_wavelet=wavelets)
    fam.P, fam.K, fam.points0, fam.points1 = P, K, p0, p1
    return fam


def eval_basis(family: Family, idx: Basis1DIndex, x: float, deriv: int = 0,
               side: int = LEFT) -> float:
    """Value of one basis function; see :meth:`Family.evaluate`."""
    if deriv > family.degree:
        raise ValueError(f"derivative order {deriv} exceeds polynomial degree {family.degree}")
    pos = family.index(idx)
    col = family.evaluate([x], side=side, deriv=deriv).getcol(0)
    return float(col[pos, 0])


def gauss_legendre01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w
