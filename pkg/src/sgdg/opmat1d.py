"""Precomputed 1D volume and interface operator matrices.

Entry ``M[a, b]`` pairs trial function ``a`` (the ``u`` slot) with test
function ``b`` (the ``v`` slot), e.g. ``u_vx[a, b] = int b_a b_b' dx``.
Jumps are ``[w] = w^+ - w^-`` and averages ``{w} = (w^+ + w^-)/2``.
"""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .basis1d import LEFT, RIGHT, Family, gauss_legendre01

CACHE_FORMAT_VERSION = 1


class BC(str, enum.Enum):
    PERIODIC = "periodic"
    ZERO_DIRICHLET = "zero_dirichlet"
    INSIDE = "inside"


class OperatorKind(str, enum.Enum):
    u_v = "u_v"
    u_vx = "u_vx"
    ux_v = "ux_v"
    ux_vx = "ux_vx"
    u_vxx = "u_vxx"
    u_vxxx = "u_vxxx"
    ulft_vjp = "ulft_vjp"
    urgt_vjp = "urgt_vjp"
    uxave_vjp = "uxave_vjp"
    ujp_vxave = "ujp_vxave"
    ujp_vjp = "ujp_vjp"
    uxxrgt_vjp = "uxxrgt_vjp"
    uxrgt_vxjp = "uxrgt_vxjp"
    ulft_vxxjp = "ulft_vxxjp"
    # one-sided test-derivative variants used by the wave scheme
    ujp_vxlft = "ujp_vxlft"
    ujp_vxrgt = "ujp_vxrgt"


# kind -> (trial derivative, test derivative, form)
#   form: "vol" or (trial_trace, test_trace) where trace in
#   {"lft", "rgt", "ave", "jp"}
_KINDS = {
    "u_v": (0, 0, "vol"),
    "u_vx": (0, 1, "vol"),
    "ux_v": (1, 0, "vol"),
    "ux_vx": (1, 1, "vol"),
    "u_vxx": (0, 2, "vol"),
    "u_vxxx": (0, 3, "vol"),
    "ulft_vjp": (0, 0, ("lft", "jp")),
    "urgt_vjp": (0, 0, ("rgt", "jp")),
    "uxave_vjp": (1, 0, ("ave", "jp")),
    "ujp_vxave": (0, 1, ("jp", "ave")),
    "ujp_vjp": (0, 0, ("jp", "jp")),
    "uxxrgt_vjp": (2, 0, ("rgt", "jp")),
    "uxrgt_vxjp": (1, 1, ("rgt", "jp")),
    "ulft_vxxjp": (0, 2, ("lft", "jp")),
    "ujp_vxlft": (0, 1, ("jp", "lft")),
    "ujp_vxrgt": (0, 1, ("jp", "rgt")),
}


def _chop(m: np.ndarray) -> np.ndarray:
    """Zero roundoff entries relative to their row and column scale."""
    r = np.abs(m).max(axis=1, keepdims=True)
    c = np.abs(m).max(axis=0, keepdims=True)
    m = m.copy()
    m[np.abs(m) < 1e-12 * np.sqrt(r * c)] = 0.0
    return m


@dataclass(eq=False)
class OperatorMatrix1D:
    """Dense 1D operator matrices for one (trial, test, bc) triple."""

    trial: Family
    test: Family
    bc: BC
    matrices: dict = field(default_factory=dict)

    def __getitem__(self, kind) -> np.ndarray:
        key = OperatorKind(kind).value
        if key not in self.matrices:
            self.matrices[key] = _build_kind(self.trial, self.test, self.bc, key)
        return self.matrices[key]

    def __getattr__(self, name):
        if name in _KINDS:
            return self[name]
        raise AttributeError(name)

    def save(self, path: str | os.PathLike) -> None:
        """Write the computed kinds to an ``.npz`` cache file."""
        arrays = {k: np.ascontiguousarray(v, dtype="<f8") for k, v in self.matrices.items()}
        np.savez(path, format_version=np.array(CACHE_FORMAT_VERSION, dtype="<i8"),
                 meta=np.array(_cache_meta(self.trial, self.test, self.bc)), **arrays)

    def load(self, path: str | os.PathLike) -> bool:
        """Fill from a cache file if it matches; return whether it was used."""
        if not os.path.exists(path):
            return False
        with np.load(path) as data:
            if int(data["format_version"]) != CACHE_FORMAT_VERSION:
                return False
            if str(data["meta"]) != _cache_meta(self.trial, self.test, self.bc):
                return False
            for k in data.files:
                if k in _KINDS:
                    self.matrices[k] = np.array(data[k], dtype=float)
        return True


def _cache_meta(trial: Family, test: Family, bc: BC) -> str:
    def desc(f):
        extra = f"P{getattr(f, 'P', 0)}K{getattr(f, 'K', 0)}" if f.kind != "alpert" else ""
        return f"{f.kind}{extra}k{f.degree}N{f.max_level}"
    return f"{desc(trial)}|{desc(test)}|{BC(bc).value}"


def _interfaces(G: int, bc: BC):
    """Interface trace locations ``(x_minus, x_plus, has_minus, has_plus)``."""
    xs = np.arange(2**G + 1) / 2.0**G
    xm = xs.copy()
    xp = xs.copy()
    hm = np.ones(xs.size, bool)
    hp = np.ones(xs.size, bool)
    if bc == BC.PERIODIC:
        # single wrap interface: u^- = u(1^-), u^+ = u(0^+)
        xm, xp = xm[1:], xp[1:]
        hm, hp = hm[1:], hp[1:]
        xp[-1] = 0.0
    elif bc == BC.ZERO_DIRICHLET:
        hm[0] = False
        hp[-1] = False
    elif bc == BC.INSIDE:
        xm, xp, hm, hp = xm[1:-1], xp[1:-1], hm[1:-1], hp[1:-1]
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")
    return xm, xp, hm, hp


def _traces(fam: Family, G: int, bc: BC, deriv: int):
    xm, xp, hm, hp = _interfaces(G, bc)
    tm = fam.evaluate(xm, LEFT, deriv).toarray() * hm
    tp = fam.evaluate(xp, RIGHT, deriv).toarray() * hp
    return tm, tp


def _combine(tm, tp, how):
    if how == "lft":
        return tm
    if how == "rgt":
        return tp
    if how == "ave":
        return 0.5 * (tm + tp)
    if how == "jp":
        return tp - tm
    raise ValueError(how)


@lru_cache(maxsize=256)
def _build_kind_cached(trial: Family, test: Family, bc: BC, kind: str) -> np.ndarray:
    du, dv, form = _KINDS[kind]
    if du > trial.degree or dv > test.degree:
        raise ValueError(f"operator {kind} needs derivatives beyond the family degree")
    G = max(trial.max_level, 1)
    if form == "vol":
        x, w = gauss_legendre01(max(trial.degree, test.degree) + 1)
        cells = np.arange(2**G)
        xs = ((cells[:, None] + x[None, :]) / 2.0**G).ravel()
        ws = np.tile(w, cells.size) / 2.0**G
        bu = trial.evaluate(xs, LEFT, du)
        bv = test.evaluate(xs, LEFT, dv)
        m = (bu @ sp.diags(ws) @ bv.T).toarray()
    else:
        um, up = _traces(trial, G, bc, du)
        vm, vp = _traces(test, G, bc, dv)
        m = _combine(um, up, form[0]) @ _combine(vm, vp, form[1]).T
    m = _chop(m)
    m.setflags(write=False)
    return m


def _build_kind(trial: Family, test: Family, bc, kind: str) -> np.ndarray:
    if trial.max_level != test.max_level:
        raise ValueError("families must share the maximum level")
    return _build_kind_cached(trial, test, BC(bc), OperatorKind(kind).value)


def build_operator_matrix(trial: Family, test: Family, bc="periodic", kinds=(),
                          cache_file: str | os.PathLike | None = None) -> OperatorMatrix1D:
    """Build the requested operator kinds; others are built lazily on access.

    Parameters
    ----------
    trial, test : Family
        Families in the ``u`` and ``v`` slot; they must share ``max_level``.
    bc : {"periodic", "zero_dirichlet", "inside"}
        Boundary treatment of the interface sums.
    kinds : iterable of OperatorKind or str
    cache_file : path, optional
        ``.npz`` file read if compatible and rewritten after building.
    """
    if trial.max_level != test.max_level:
        raise ValueError("families must share the maximum level")
    op = OperatorMatrix1D(trial, test, BC(bc))
    loaded = cache_file is not None and op.load(cache_file)
    kinds = tuple(kinds)
    for k in kinds:
        op[k]
    if cache_file is not None and not (loaded and kinds == ()):
        op.save(cache_file)
    return op
