"""Residual, gap, and certificate computations for solver termination.

For a point x, a stepsize gamma and the prox point
x+ = P_x(gamma F(x)), the perturbation

    phi = F(x) - F(x+) + (grad w(x+) - grad w(x)) / gamma

makes x+ an (eps, 0)-strong solution with eps = ||phi||_*: the
perturbed gap sup_z <F(x+) + phi, x+ - z> is nonpositive by the prox
optimality condition.  When F is Holder continuous with constants
(L, nu) and the generating function has Q-Lipschitz gradients, eps is
bounded by L (gamma ||R||)^nu + Q ||R|| in terms of the residual
R = (x - x+) / gamma.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .geometry import Geometry, bregman, grad_omega, prox_map
from .problems import ProblemInstance, dual_norm, eval_operator, primal_norm


@dataclass(frozen=True)
class Certificate:
    """An approximate-strong-solution witness at x+ = P_x(gamma F(x))."""

    x_plus: np.ndarray
    phi: np.ndarray
    eps: float
    tilde_gap_value: float
    residual_norm: float
    gamma: float
    eps_bound: Optional[float] = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "eps": self.eps,
                "tilde_gap": self.tilde_gap_value,
                "residual_norm": self.residual_norm,
                "gamma": self.gamma,
            }
        )


def residual(
    g: Geometry, inst: ProblemInstance, x: np.ndarray, gamma: float
) -> Tuple[np.ndarray, float]:
    """R_gamma(x) = (x - P_x(gamma F(x))) / gamma and its primal norm.

    Zero exactly at strong solutions.  Costs one prox-mapping call;
    the caller owns the accounting.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    y = prox_map(g, x, gamma * eval_operator(inst, x))
    r = (x - y) / gamma
    return r, primal_norm(r, g.norms)


def gap(inst: ProblemInstance, x: np.ndarray) -> float:
    """g(x) = <F(x), x> - min_i F_i(x), clamped at 0.

    The supremum of a linear functional over the simplex sits at a
    vertex, so the closed form is exact.
    """
    f = eval_operator(inst, x)
    return max(float(f @ x) - float(np.min(f)), 0.0)


def tilde_gap(inst: ProblemInstance, x: np.ndarray, phi: np.ndarray) -> float:
    """Perturbed gap sup_z <F(x) + phi, x - z>; reported signed."""
    c = eval_operator(inst, x) + phi
    return float(c @ x) - float(np.min(c))


def make_certificate(
    g: Geometry,
    inst: ProblemInstance,
    x: np.ndarray,
    gamma: float,
    L: Optional[float] = None,
    nu: Optional[float] = None,
) -> Certificate:
    """Build the (eps, 0)-certificate at x+ = P_x(gamma F(x)).

    When L and nu are given (and the geometry carries Q) the bound
    L (gamma ||R||)^nu + Q ||R|| is attached as ``eps_bound``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    fx = eval_operator(inst, x)
    x_plus = prox_map(g, x, gamma * fx)
    r = (x - x_plus) / gamma
    r_norm = primal_norm(r, g.norms)
    phi = fx - eval_operator(inst, x_plus) + (grad_omega(g, x_plus) - grad_omega(g, x)) / gamma
    eps = dual_norm(phi, g.norms)
    eps_bound = None
    if L is not None or nu is not None:
        if L is None or nu is None or g.Q is None:
            raise ValueError("eps_bound needs L, nu and a geometry with Q")
        eps_bound = L * (gamma * r_norm) ** nu + g.Q * r_norm
    return Certificate(
        x_plus=x_plus,
        phi=phi,
        eps=eps,
        tilde_gap_value=tilde_gap(inst, x_plus, phi),
        residual_norm=r_norm,
        gamma=gamma,
        eps_bound=eps_bound,
    )


def is_strong_solution(
    g: Geometry, inst: ProblemInstance, x: np.ndarray, gamma: float, tol: float
) -> bool:
    """True iff ||x - P_x(gamma F(x))|| <= tol in the primal norm."""
    if gamma <= 0 or tol <= 0:
        raise ValueError("gamma and tol must be positive")
    y = prox_map(g, x, gamma * eval_operator(inst, x))
    return primal_norm(x - y, g.norms) <= tol


def gap_bound_from_residual(
    g: Geometry, L: float, nu: float, gamma: float, r_norm: float, omega_radius_value: float
) -> float:
    """2 Omega [L gamma^nu ||R||^nu + Q ||R||], the gap bound on bounded sets."""
    if g.Q is None:
        raise ValueError("gap bound needs a geometry with Q")
    return 2.0 * omega_radius_value * (L * gamma**nu * r_norm**nu + g.Q * r_norm)


__all__ = [
    "Certificate",
    "residual",
    "gap",
    "tilde_gap",
    "make_certificate",
    "is_strong_solution",
    "gap_bound_from_residual",
    "bregman",
]
