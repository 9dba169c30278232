"""Command-line front end: single runs and convergence sweeps written as CSV.

Examples
--------
``python -m sgdg -N 6 -s 1 -tf 1.0 --equation transport -d 2 -k 1``

``python -m sgdg --equation wave -N 8 --sweep-eps 1e-1,1e-2 --out wave.csv``
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

log = logging.getLogger(__name__)

THREADS_ENV = "SGDG_NUM_THREADS"
EQUATIONS = ("transport", "hj", "wave")
_DEFAULT_T = {"transport": 1.0, "hj": 0.1, "wave": 0.01}
CSV_COLUMNS = ["equation", "d", "k", "N", "sparse", "eps", "dof", "error", "order", "R_eps",
               "R_dof", "time_per_step", "steps", "status", "message"]


@dataclass
class RunConfig:
    """Resolved options of one run; ``None`` fields take the driver defaults."""

    equation: str = "transport"
    d: int = 2
    k: int = 1
    N: int = 4
    sparse: bool = True
    eps: float = 1e-3
    eta: float | None = None
    cfl: float | None = None
    T: float = 1.0
    sigma: float | None = None
    out: str | None = None
    seed: int = 0
    sweep_N: list = field(default_factory=list)
    sweep_eps: list = field(default_factory=list)
    jobs: int = 1
    manifest: str | None = None

    def validate(self) -> None:
        if self.equation not in EQUATIONS:
            raise ValueError(f"equation must be one of {EQUATIONS}")
        if self.d < 1 or self.k < 0 or self.N < 1:
            raise ValueError("need d >= 1, k >= 0 and N >= 1")
        if self.eps <= 0 or self.T <= 0:
            raise ValueError("epsilon and final time must be positive")
        if self.cfl is not None and self.cfl <= 0:
            raise ValueError("cfl must be positive")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.sweep_N and self.sweep_eps:
            raise ValueError("sweep over N or epsilon, not both")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")


def _sparse_flag(text: str) -> bool:
    if text not in ("0", "1"):
        raise argparse.ArgumentTypeError("sparse flag must be 0 or 1")
    return text == "1"


def _list_of(conv):
    def parse(text: str):
        try:
            vals = [conv(t) for t in text.split(",") if t.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
        if not vals:
            raise argparse.ArgumentTypeError("empty list")
        return vals
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sgdg", description=__doc__.split("\n")[0],
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--equation", choices=EQUATIONS, default="transport")
    p.add_argument("-d", "--dim", dest="d", type=int, default=2, help="space dimension")
    p.add_argument("-k", "--degree", dest="k", type=int, default=1, help="Alpert polynomial degree")
    p.add_argument("-N", "--max-mesh-level", dest="N", type=int, default=4)
    p.add_argument("-s", "--sparse-grid", dest="sparse", type=_sparse_flag, default=True,
                   help="1 for sparse grid, 0 for full grid")
    p.add_argument("-tf", "--final-time", dest="T", type=float, default=None,
                   help="final time (transport 1.0, hj 0.1, wave 0.01)")
    p.add_argument("-e", "--epsilon", dest="eps", type=float, default=1e-3, help="refine threshold")
    p.add_argument("--eta", type=float, default=None, help="coarsen threshold (0.1 epsilon)")
    p.add_argument("--cfl", type=float, default=None, help="CFL number (driver default)")
    p.add_argument("--sigma", type=float, default=None, help="IPDG penalty (20 (k+1)^2)")
    p.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweep-N", dest="sweep_N", type=_list_of(int), default=[],
                   help="comma-separated max levels")
    p.add_argument("--sweep-eps", dest="sweep_eps", type=_list_of(float), default=[],
                   help="comma-separated refine thresholds")
    p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers (untimed runs)")
    p.add_argument("--manifest", default=None, help="JSON run manifest path")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_args(argv: Sequence[str] | None = None, echo: bool = True) -> RunConfig:
    """Parse and validate ``argv``; exits with status 2 on malformed input."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.verbose:
        logging.basicConfig(level=logging.DEBUG)
    vals = vars(ns)
    vals.pop("verbose")
    if vals["T"] is None:
        vals["T"] = _DEFAULT_T[vals["equation"]]
    cfg = RunConfig(**vals)
    try:
        cfg.validate()
    except ValueError as exc:
        parser.error(str(exc))
    if echo:
        print("options: " + " ".join(f"{k}={v}" for k, v in dataclasses.asdict(cfg).items()),
              file=sys.stderr)
    return cfg


def run_one(cfg: RunConfig) -> dict:
    """Run one configuration and return a CSV row (without ratio columns)."""
    from .pde import (HJProblem, TransportProblem, WaveProblem, run_hj, run_transport,
                      run_wave)
    row = {"equation": cfg.equation, "d": cfg.d, "k": cfg.k, "N": cfg.N, "sparse": int(cfg.sparse),
           "eps": cfg.eps if cfg.equation != "transport" else "", "status": "ok", "message": ""}
    extra = {} if cfg.cfl is None else {"cfl": cfg.cfl}
    try:
        if cfg.equation == "transport":
            res = run_transport(TransportProblem(cfg.d, cfg.k, cfg.N, cfg.sparse, T=cfg.T, **extra))
        elif cfg.equation == "hj":
            res = run_hj(HJProblem(cfg.d, cfg.k, cfg.N, cfg.eps, cfg.eta, T=cfg.T, **extra))
        else:
            res = run_wave(WaveProblem(cfg.d, cfg.k, cfg.N, cfg.eps, cfg.eta, T=cfg.T,
                                       sigma=cfg.sigma, **extra))
        row.update(dof=res.dof, error=res.error, time_per_step=res.time_per_step, steps=res.steps)
    except Exception as exc:  # recorded, the sweep goes on
        log.exception("run failed")
        row.update(dof="", error="", time_per_step="", steps="", status="failed",
                   message=f"{type(exc).__name__}: {exc}")
    return row


def add_rates(rows: list[dict], axis: str) -> list[dict]:
    """Fill ``order`` (N sweeps) or ``R_eps``/``R_dof`` (epsilon sweeps) between neighbours."""
    for r in rows:
        r.setdefault("order", "")
        r.setdefault("R_eps", "")
        r.setdefault("R_dof", "")
    for a, b in zip(rows, rows[1:]):
        if a["status"] != "ok" or b["status"] != "ok" or not a["error"] or not b["error"]:
            continue
        ratio = math.log(a["error"] / b["error"])
        if axis == "N" and b["N"] != a["N"]:
            b["order"] = ratio / math.log(2.0) / (b["N"] - a["N"])
        elif axis == "eps":
            b["R_eps"] = ratio / math.log(a["eps"] / b["eps"])
            if b["dof"] != a["dof"]:
                b["R_dof"] = ratio / math.log(b["dof"] / a["dof"])
    return rows


def run_sweep(cfg: RunConfig, axis: str | None = None, values: Sequence | None = None) -> list[dict]:
    """One row per axis value; ``axis`` is ``"N"``, ``"eps"`` or ``None`` for a single run."""
    if axis is None:
        axis, values = ("N", cfg.sweep_N) if cfg.sweep_N else ("eps", cfg.sweep_eps)
        if not values:
            axis, values = "N", [cfg.N]
    if not values:
        raise ValueError("sweep axis is empty")
    field_name = {"N": "N", "eps": "eps"}[axis]
    cfgs = [dataclasses.replace(cfg, **{field_name: v}) for v in values]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            rows = list(pool.map(run_one, cfgs))
    else:
        rows = [run_one(c) for c in cfgs]
    return add_rates(rows, axis)


def write_csv(rows: list[dict], path: str | None = None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: r.get(c, "") for c in CSV_COLUMNS})
    text = buf.getvalue()
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def write_manifest(cfg: RunConfig, rows: list[dict], path: str, wall: float) -> None:
    from . import __version__
    with open(path, "w") as fh:
        json.dump({"version": __version__, "config": dataclasses.asdict(cfg), "rows": rows,
                   "wall_seconds": wall, "threads": os.environ.get(THREADS_ENV)}, fh, indent=2,
                  default=str)


def _apply_threads() -> None:
    n = os.environ.get(THREADS_ENV)
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)


def main(argv: Sequence[str] | None = None) -> int:
    _apply_threads()
    cfg = parse_args(argv)
    t0 = time.perf_counter()
    rows = run_sweep(cfg)
    text = write_csv(rows, cfg.out)
    if not cfg.out:
        sys.stdout.write(text)
    if cfg.manifest:
        write_manifest(cfg, rows, cfg.manifest, time.perf_counter() - t0)
    return 0 if all(r["status"] == "ok" for r in rows) else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
