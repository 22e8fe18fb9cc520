"""Slow, independent reference computations for cross-checking.

``brute_prox`` re-solves the prox subproblem by plain projected
gradient with Euclidean simplex projection and diminishing steps --
deliberately sharing no code path with the production prox routines.
``reference_solution`` produces a high-accuracy solution point for
rate and descent checks.  These are validation tools: they may be
orders of magnitude slower than the production path, and their
tolerances are meant to confirm structure, not precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Geometry, grad_omega, omega, project_simplex_euclidean
from .problems import ProblemInstance
from .solvers import CONVERGED, NegLS, SolverConfig, run_neg_ls


class NonConvergent(RuntimeError):
    """The reference run exhausted its budget before reaching target accuracy."""


@dataclass(frozen=True)
class OracleConfig:
    pg_steps: int = 1_000_000
    pg_step_size: float = 1e-4
    grid_resolution: float = 1e-3

    def __post_init__(self):
        if self.pg_steps <= 0 or self.pg_step_size <= 0 or self.grid_resolution <= 0:
            raise ValueError("oracle parameters must be positive")


def brute_prox(
    g: Geometry, x: np.ndarray, phi: np.ndarray, cfg: OracleConfig = OracleConfig()
) -> np.ndarray:
    """Minimize <phi, z> + V(x, z) by projected gradient, keep the best point.

    Steps diminish as step_size / sqrt(t); the best objective value seen
    over all iterations decides the returned point.  Intended for
    n <= 50.
    """
    grad_x = grad_omega(g, x)
    omega_x = omega(g, x)

    def objective(z):
        return float(phi @ z) + omega(g, z) - omega_x - float(grad_x @ (z - x))

    z = np.asarray(x, dtype=float).copy()
    best = z
    best_val = objective(z)
    for t in range(1, cfg.pg_steps + 1):
        step = cfg.pg_step_size / np.sqrt(t)
        z = project_simplex_euclidean(z - step * (phi + grad_omega(g, z) - grad_x))
        val = objective(z)
        if val < best_val:
            best_val = val
            best = z
    return best


def brute_prox_batch(
    g: Geometry, xs: np.ndarray, phis: np.ndarray, cfg: OracleConfig = OracleConfig()
) -> np.ndarray:
    """Row-wise ``brute_prox`` over stacked draws, one PG run per row.

    Vectorizing the projected-gradient sweep across rows keeps the
    oracle usable for hundreds of draws; per-row results match the
    scalar routine.
    """
    m, n = xs.shape
    grad_xs = np.stack([grad_omega(g, xs[i]) for i in range(m)])
    omega_xs = np.array([omega(g, xs[i]) for i in range(m)])

    def objectives(zs):
        om = np.array([omega(g, zs[i]) for i in range(m)])
        return (
            np.einsum("ij,ij->i", phis, zs)
            + om
            - omega_xs
            - np.einsum("ij,ij->i", grad_xs, zs - xs)
        )

    def grads(zs):
        return phis + np.stack([grad_omega(g, zs[i]) for i in range(m)]) - grad_xs

    def project_rows(vs):
        u = np.sort(vs, axis=1)[:, ::-1]
        css = np.cumsum(u, axis=1) - 1.0
        ks = np.arange(1, n + 1)
        mask = u - css / ks > 0
        rho = n - 1 - np.argmax(mask[:, ::-1], axis=1)
        theta = css[np.arange(m), rho] / (rho + 1.0)
        return np.maximum(vs - theta[:, None], 0.0)

    zs = xs.copy()
    best = zs.copy()
    best_val = objectives(zs)
    for t in range(1, cfg.pg_steps + 1):
        step = cfg.pg_step_size / np.sqrt(t)
        zs = project_rows(zs - step * grads(zs))
        vals = objectives(zs)
        improved = vals < best_val
        if np.any(improved):
            best_val = np.where(improved, vals, best_val)
            best[improved] = zs[improved]
    return best


def grid_prox_3d(g: Geometry, x: np.ndarray, phi: np.ndarray, resolution: float = 1e-3) -> np.ndarray:
    """Exhaustive grid argmin of the prox objective on the 2-simplex (n = 3)."""
    assert x.size == 3
    ticks = np.arange(0.0, 1.0 + resolution / 2, resolution)
    a, b = np.meshgrid(ticks, ticks, indexing="ij")
    keep = a + b <= 1.0 + 1e-15
    zs = np.column_stack([a[keep], b[keep], 1.0 - a[keep] - b[keep]])
    np.clip(zs, 0.0, None, out=zs)
    grad_x = grad_omega(g, x)
    if g.kind == "euclidean":
        om = 0.5 * np.sum(zs**2, axis=1)
    elif g.kind == "entropy":
        s = zs + g.delta / g.n
        om = np.sum(s * np.log(s), axis=1)
    else:
        om = 0.5 * np.sum(zs**g.p, axis=1) ** (2.0 / g.p)
    vals = zs @ phi + om - zs @ grad_x
    return zs[int(np.argmin(vals))]


def reference_solution(
    g: Geometry,
    inst: ProblemInstance,
    budget: int = 2_000_000,
    gamma0: float = 0.2,
    lam: float = 0.4,
    gap_target: float = 1e-10,
) -> np.ndarray:
    """High-accuracy solution via a long line-searched run (gap <= 1e-10)."""
    cfg = SolverConfig(
        algorithm=NegLS(gamma0=gamma0, lam=lam),
        gap_tol=gap_target,
        max_prox_calls=budget,
    )
    result = run_neg_ls(g, inst, cfg)
    if result.status != CONVERGED:
        raise NonConvergent(
            f"{inst.name}: status {result.status} after np={result.np}"
        )
    return result.x_final
