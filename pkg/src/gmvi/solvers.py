"""Extragradient solvers over the simplex with full prox accounting.

Two methods are provided:

* fixed-step: y_k = P_{x_k}(gamma F(x_k)), x_{k+1} = P_{x_k}(gamma F(y_k))
  with gamma = alpha / (sqrt(2) L) for Lipschitz operators, or the
  horizon-dependent Holder stepsize for exponent nu < 1;
* line-searched: gamma_k is the largest of gamma0, gamma0*lam,
  gamma0*lam^2, ... satisfying
  ||F(x_k) - F(y_k)||_*^2 <= (alpha / gamma_k^2) V(x_k, y_k),
  which needs no Lipschitz constant.

Both prox calls of an iteration are anchored at x_k.  ``np`` counts
every prox-mapping invocation: line-search trials (the gamma0
evaluation doubles as the residual termination check, one prox in two
roles), iterate updates, and optional residual tracking.  Runs are
strictly sequential and bitwise deterministic; distinct runs share
only immutable instances and geometries.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from .diagnostics import gap, residual
from .geometry import Geometry, ProxError, bregman, prox_map
from .problems import (
    ProblemInstance,
    as_point,
    dual_norm,
    eval_operator,
    lipschitz_constant,
    primal_norm,
    simplex_center,
)

CONVERGED = "converged"
PROX_BUDGET_EXCEEDED = "prox_budget_exceeded"
INTERNAL_ERROR = "internal_error"

GAP_AT_XK = "x_k"
GAP_AT_YK = "y_k"

_LS_TRIAL_CAP = 60  # lam^60 underflows any sensible stepsize range
_RESIDUAL_ZERO_REL = 1e-14


@dataclass(frozen=True)
class NegFixed:
    """Fixed-stepsize variant; L may be omitted to use the instance estimate.

    nu < 1 selects the Holder stepsize, which depends on an a-priori
    iteration count ``horizon_k``.
    """

    L: Optional[float] = None
    nu: float = 1.0
    horizon_k: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ValueError("nu must lie in (0, 1]")
        if self.nu < 1.0 and self.horizon_k is None:
            raise ValueError("nu < 1 requires horizon_k")


@dataclass(frozen=True)
class NegLS:
    """Line-searched variant with backtracking parameters in (0, 1)."""

    gamma0: float
    lam: float

    def __post_init__(self):
        if not 0.0 < self.gamma0 < 1.0:
            raise ValueError("gamma0 must lie in (0, 1)")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lam must lie in (0, 1)")


@dataclass(frozen=True)
class SolverConfig:
    algorithm: Union[NegFixed, NegLS]
    gap_tol: float = 1e-3
    max_prox_calls: int = 100_000
    x1: Optional[np.ndarray] = None
    gap_eval_point: str = GAP_AT_XK
    track_residual: bool = False
    keep_points: bool = False

    def __post_init__(self):
        if self.gap_tol <= 0 or self.max_prox_calls <= 0:
            raise ValueError("gap_tol and max_prox_calls must be positive")
        if self.gap_eval_point not in (GAP_AT_XK, GAP_AT_YK):
            raise ValueError(f"bad gap_eval_point {self.gap_eval_point!r}")


@dataclass
class IterationRecord:
    k: int
    gamma: float
    ls_trials: int
    gap: float
    residual_norm: float
    np_so_far: int
    x_k: Optional[np.ndarray] = None
    y_k: Optional[np.ndarray] = None
    x_next: Optional[np.ndarray] = None


@dataclass
class RunResult:
    status: str
    x_final: np.ndarray
    k: int
    np: int
    wall_seconds: float
    trace: List[IterationRecord] = field(default_factory=list)
    best_certificate: Optional[object] = None
    message: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "status": self.status,
                "x_final": self.x_final.tolist(),
                "k": self.k,
                "np": self.np,
                "wall_seconds": self.wall_seconds,
            }
        )


def stepsize_lipschitz(alpha: float, L: float) -> float:
    """alpha / (sqrt(2) L), the fixed stepsize for Lipschitz operators."""
    if alpha <= 0 or L <= 0:
        raise ValueError("alpha and L must be positive")
    return alpha / (L * 2.0**0.5)


def stepsize_holder(alpha: float, L: float, nu: float, k: int) -> float:
    """Constant stepsize for Holder exponent nu over an a-priori horizon k.

    Coincides exactly with the Lipschitz stepsize at nu = 1.
    """
    if alpha <= 0 or L <= 0:
        raise ValueError("alpha and L must be positive")
    if not 0.0 < nu <= 1.0:
        raise ValueError("nu must lie in (0, 1]")
    if k < 1:
        raise ValueError("k must be at least 1")
    return alpha ** ((1.0 + nu) / 2.0) / (L * (2.0 * nu) ** (nu / 2.0)) * (1.0 / k) ** (
        (1.0 - nu) / 2.0
    )


def neg_iteration(
    g: Geometry, inst: ProblemInstance, x_k: np.ndarray, gamma: float
):
    """One extragradient step: two prox calls, both anchored at x_k."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    y_k = prox_map(g, x_k, gamma * eval_operator(inst, x_k))
    x_next = prox_map(g, x_k, gamma * eval_operator(inst, y_k))
    return y_k, x_next


@dataclass
class LineSearchResult:
    gamma: float
    y: np.ndarray
    trials: int
    residual0_norm: float
    f_y: np.ndarray
    prox_calls: int
    terminated: bool  # residual test at gamma0 fired


def line_search(
    g: Geometry,
    inst: ProblemInstance,
    x_k: np.ndarray,
    gamma0: float,
    lam: float,
    f_x: Optional[np.ndarray] = None,
    prox_budget: Optional[int] = None,
) -> LineSearchResult:
    """Backtrack gamma from gamma0 until the curvature test accepts.

    The gamma0 prox evaluation doubles as the residual termination
    check; every trial costs one prox call.  Raises ProxError past 60
    trials (a discontinuous operator or a tolerance pathology).
    """
    if f_x is None:
        f_x = eval_operator(inst, x_k)
    alpha = g.alpha
    gamma = gamma0
    y = prox_map(g, x_k, gamma * f_x)
    calls = 1
    trials = 1
    r0 = primal_norm(x_k - y, g.norms) / gamma0
    if r0 <= _RESIDUAL_ZERO_REL * (1.0 + dual_norm(f_x, g.norms)):
        return LineSearchResult(gamma0, y, trials, r0, f_x, calls, True)
    while True:
        f_y = eval_operator(inst, y)
        if dual_norm(f_x - f_y, g.norms) ** 2 <= (alpha / gamma**2) * bregman(g, x_k, y):
            return LineSearchResult(gamma, y, trials, r0, f_y, calls, False)
        if trials >= _LS_TRIAL_CAP:
            raise ProxError(f"line search exceeded {_LS_TRIAL_CAP} trials")
        if prox_budget is not None and calls >= prox_budget:
            # Budget exhausted mid-search; surface the partial state.
            return LineSearchResult(gamma, y, trials, r0, f_y, calls, False)
        gamma *= lam
        y = prox_map(g, x_k, gamma * f_x)
        calls += 1
        trials += 1


def _resolve_start(g: Geometry, inst: ProblemInstance, cfg: SolverConfig) -> np.ndarray:
    if cfg.x1 is not None:
        return as_point(cfg.x1, inst.n)
    return simplex_center(inst.n)


def run_neg_fixed(g: Geometry, inst: ProblemInstance, cfg: SolverConfig) -> RunResult:
    """Fixed-stepsize extragradient run.

    Stops on gap <= gap_tol at the configured evaluation point, on the
    prox budget, or when the nu < 1 horizon is exhausted (reported as
    a budget stop; the Holder stepsize is only valid up to its
    horizon).  np = 2k without residual tracking; tracking adds one
    counted prox per iteration.
    """
    algo = cfg.algorithm
    if not isinstance(algo, NegFixed):
        raise TypeError("config does not select the fixed-step algorithm")
    L = algo.L if algo.L is not None else lipschitz_constant(inst, g.norms)
    if L <= 0:
        raise ValueError("L must be positive")
    if algo.nu == 1.0:
        gamma = stepsize_lipschitz(g.alpha, L)
    else:
        gamma = stepsize_holder(g.alpha, L, algo.nu, algo.horizon_k)

    x = _resolve_start(g, inst, cfg)
    trace: List[IterationRecord] = []
    n_prox = 0
    k = 0
    status = PROX_BUDGET_EXCEEDED
    x_final = x
    t0 = time.perf_counter()
    f_x = eval_operator(inst, x)
    while True:
        if algo.nu < 1.0 and k >= algo.horizon_k:
            break
        if n_prox + 2 > cfg.max_prox_calls:
            break
        y = prox_map(g, x, gamma * f_x)
        n_prox += 1
        x_next = prox_map(g, x, gamma * eval_operator(inst, y))
        n_prox += 1
        k += 1
        res_norm = primal_norm(x - y, g.norms) / gamma
        if cfg.track_residual:
            # Convention: tracking re-evaluates the residual through the
            # diagnostics path and pays for its prox call.
            _, res_norm = residual(g, inst, x, gamma)
            n_prox += 1
        if cfg.gap_eval_point == GAP_AT_XK:
            gap_point = x_next
            f_next = eval_operator(inst, gap_point)
            gval = max(float(f_next @ gap_point) - float(np.min(f_next)), 0.0)
        else:
            gap_point = y
            gval = gap(inst, y)
            f_next = None
        trace.append(
            IterationRecord(
                k=k,
                gamma=gamma,
                ls_trials=1,
                gap=gval,
                residual_norm=res_norm,
                np_so_far=n_prox,
                x_k=x.copy() if cfg.keep_points else None,
                y_k=y.copy() if cfg.keep_points else None,
                x_next=x_next.copy() if cfg.keep_points else None,
            )
        )
        x = x_next
        f_x = f_next if f_next is not None else eval_operator(inst, x)
        x_final = gap_point
        if gval <= cfg.gap_tol:
            status = CONVERGED
            break
    wall = time.perf_counter() - t0
    if status != CONVERGED:
        x_final = x
    return RunResult(status=status, x_final=x_final, k=k, np=n_prox, wall_seconds=wall, trace=trace)


def run_neg_ls(g: Geometry, inst: ProblemInstance, cfg: SolverConfig) -> RunResult:
    """Line-searched extragradient run; needs no Lipschitz constant.

    Terminates when the residual test at gamma0 fires, the gap at the
    configured point drops to gap_tol, or the prox budget runs out.
    np sums (trials + 1) over iterations.
    """
    algo = cfg.algorithm
    if not isinstance(algo, NegLS):
        raise TypeError("config does not select the line-search algorithm")
    x = _resolve_start(g, inst, cfg)
    trace: List[IterationRecord] = []
    n_prox = 0
    k = 0
    status = PROX_BUDGET_EXCEEDED
    message = ""
    x_final = x
    t0 = time.perf_counter()
    f_x = eval_operator(inst, x)
    while True:
        if n_prox >= cfg.max_prox_calls:
            break
        try:
            ls = line_search(
                g,
                inst,
                x,
                algo.gamma0,
                algo.lam,
                f_x=f_x,
                prox_budget=cfg.max_prox_calls - n_prox,
            )
        except ProxError as exc:
            status = INTERNAL_ERROR
            message = str(exc)
            x_final = x
            break
        n_prox += ls.prox_calls
        if ls.terminated:
            status = CONVERGED
            x_final = x
            break
        if n_prox >= cfg.max_prox_calls:
            x_final = x
            break
        x_next = prox_map(g, x, ls.gamma * ls.f_y)
        n_prox += 1
        k += 1
        if cfg.gap_eval_point == GAP_AT_XK:
            gap_point = x_next
            f_next = eval_operator(inst, gap_point)
            gval = max(float(f_next @ gap_point) - float(np.min(f_next)), 0.0)
        else:
            gap_point = ls.y
            gval = gap(inst, ls.y)
            f_next = None
        trace.append(
            IterationRecord(
                k=k,
                gamma=ls.gamma,
                ls_trials=ls.trials,
                gap=gval,
                residual_norm=ls.residual0_norm,
                np_so_far=n_prox,
                x_k=x.copy() if cfg.keep_points else None,
                y_k=ls.y.copy() if cfg.keep_points else None,
                x_next=x_next.copy() if cfg.keep_points else None,
            )
        )
        x = x_next
        f_x = f_next if f_next is not None else eval_operator(inst, x)
        if gval <= cfg.gap_tol:
            status = CONVERGED
            x_final = gap_point
            break
        x_final = x
    wall = time.perf_counter() - t0
    return RunResult(
        status=status,
        x_final=x_final,
        k=k,
        np=n_prox,
        wall_seconds=wall,
        trace=trace,
        message=message,
    )


def run_solver(g: Geometry, inst: ProblemInstance, cfg: SolverConfig) -> RunResult:
    if isinstance(cfg.algorithm, NegFixed):
        return run_neg_fixed(g, inst, cfg)
    return run_neg_ls(g, inst, cfg)


def write_trace_csv(result: RunResult, path: str) -> None:
    """Stream the per-iteration trace as CSV rows."""
    with open(path, "w") as fh:
        fh.write("k,gamma,ls_trials,gap,residual_norm,np\n")
        for rec in result.trace:
            fh.write(
                f"{rec.k},{rec.gamma!r},{rec.ls_trials},{rec.gap!r},"
                f"{rec.residual_norm!r},{rec.np_so_far}\n"
            )
