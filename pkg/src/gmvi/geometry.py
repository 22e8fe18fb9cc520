"""Distance-generating functions and prox-mappings over the simplex.

Three setups are provided:

* ``euclidean``: w(x) = ||x||_2^2 / 2 with the l2 norm pair; the
  prox-mapping is the metric projection of x - phi onto the simplex.
* ``entropy``: w(x) = sum (x_i + d/n) log(x_i + d/n) with a small
  shift d (default 1e-16) keeping the gradient finite on the boundary;
  l1 norm pair, strong-convexity modulus 1 (Pinsker), gradient
  Lipschitz constant Q = 1 + n/d.
* ``pnorm``: w(x) = ||x||_p^2 / 2 with p = 1 + 1/ln(n) for n >= 3
  (1.5 for n <= 2); l1 norm pair.  The strong-convexity modulus is
  fixed at (p-1)/e^2: ||x||_p^2/2 is (p-1)-strongly convex w.r.t.
  ||.||_p and ||d||_1 <= n^(1-1/p) ||d||_p with n^(1-1/p) <= e at this
  p, so the constant is safe if conservative.

The prox-mapping is P_x(phi) = argmin_z <phi, z> + V(x, z) over the
simplex, where V is the Bregman distance of w.  Both non-Euclidean
proxes reduce to one-dimensional dual root-finding problems solved by
safeguarded bisection; bisection is chosen over Newton for
unconditional robustness since the feasibility target is 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .problems import L1_LINF, L2_L2, NormPair, primal_norm

_SUM_TOL = 1e-12
_BISECT_CAP = 200
_PNORM_OUTER_CAP = 500
_PNORM_Z_TOL = 1e-11


class ProxError(RuntimeError):
    """Inner solver failed to converge; signals a geometry bug, not user error."""


@dataclass(frozen=True)
class Geometry:
    """A distance generating function with its norm pair and constants.

    ``alpha`` is the strong-convexity modulus w.r.t. the primal norm;
    ``Q``, when present, is the Lipschitz constant of the gradient of
    the generating function (absent for the p-norm setup).
    Immutable and shareable; all prox operations are pure functions.
    """

    kind: str  # "euclidean" | "entropy" | "pnorm"
    n: int
    alpha: float
    norms: NormPair
    Q: Optional[float] = None
    delta: Optional[float] = None
    p: Optional[float] = None

    @property
    def q_ratio(self) -> Optional[float]:
        """1 + (Q/alpha)^2, the prox-ratio constant; None when Q is absent."""
        if self.Q is None:
            return None
        return 1.0 + (self.Q / self.alpha) ** 2


@dataclass(frozen=True)
class RadiusReport:
    """Simplex radius of the generating function: D and sqrt(2/alpha)*D."""

    D: float
    Omega: float


def euclidean(n: int) -> Geometry:
    return Geometry(kind="euclidean", n=n, alpha=1.0, Q=1.0, norms=L2_L2)


def entropy(n: int, delta: float = 1e-16) -> Geometry:
    if delta <= 0:
        raise ValueError("delta must be positive")
    return Geometry(
        kind="entropy", n=n, alpha=1.0, Q=1.0 + n / delta, norms=L1_LINF, delta=delta
    )


def pnorm(n: int) -> Geometry:
    p = 1.0 + 1.0 / math.log(n) if n >= 3 else 1.5
    alpha = (p - 1.0) / math.e**2
    return Geometry(kind="pnorm", n=n, alpha=alpha, norms=L1_LINF, p=p)


def by_name(name: str, n: int) -> Geometry:
    try:
        return {"euclidean": euclidean, "entropy": entropy, "pnorm": pnorm}[name](n)
    except KeyError:
        raise ValueError(f"unknown geometry {name!r}") from None


def omega(g: Geometry, x: np.ndarray) -> float:
    """Value of the distance generating function at x."""
    if g.kind == "euclidean":
        return 0.5 * float(x @ x)
    if g.kind == "entropy":
        s = x + g.delta / g.n
        return float(np.sum(s * np.log(s)))
    return 0.5 * float(np.sum(np.abs(x) ** g.p) ** (2.0 / g.p))


def grad_omega(g: Geometry, x: np.ndarray) -> np.ndarray:
    if g.kind == "euclidean":
        return np.asarray(x, dtype=float)
    if g.kind == "entropy":
        return np.log(x + g.delta / g.n) + 1.0
    p = g.p
    norm_p = float(np.sum(np.abs(x) ** p) ** (1.0 / p))
    # 0 at x_i = 0 since p > 1
    return np.sign(x) * np.abs(x) ** (p - 1.0) * norm_p ** (2.0 - p)


def bregman(g: Geometry, x: np.ndarray, z: np.ndarray) -> float:
    """Bregman distance V(x, z); tiny negative rounding is clamped to 0."""
    v = omega(g, z) - omega(g, x) - float(grad_omega(g, x) @ (z - x))
    return max(v, 0.0)


def project_simplex_euclidean(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the simplex by sort-and-threshold."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ks > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _check_optimality(g: Geometry, x, phi, z, tol: float = 1e-8) -> float:
    """Slack of the variational condition <phi + grad w(z) - grad w(x), v - z> >= 0.

    The condition is linear in v, so its infimum over the simplex is
    attained at a vertex.  Returns the (signed) slack, scaled check is
    the caller's job.
    """
    c = phi + grad_omega(g, z) - grad_omega(g, x)
    return float(np.min(c) - c @ z)


def prox_entropy(g: Geometry, x: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Entropy prox via its one-dimensional dual.

    The optimal point has z_i = max(0, (x_i + d/n) e^(-phi_i - mu) - d/n)
    for the multiplier mu that makes the coordinates sum to one; mu is
    bracket-and-bisected.  Exponents are shifted by their maximum so no
    overflow can occur.
    """
    if g.kind != "entropy":
        raise ValueError("geometry is not the entropy setup")
    c = g.delta / g.n
    t = np.log(x + c) - phi
    m = float(np.max(t))
    # z_i(mu) = e^(t_i - mu) - c, clipped at 0; the sum is decreasing in
    # mu, >= e^0.001 - nc > 1 at lo and <= 1/e < 1 at hi.
    lo = m - 1e-3
    hi = m + math.log(g.n) + 1.0
    z = None
    for _ in range(_BISECT_CAP):
        mu = 0.5 * (lo + hi)
        z = np.maximum(np.exp(t - mu) - c, 0.0)
        f = float(z.sum()) - 1.0
        if abs(f) <= _SUM_TOL:
            return z
        if f > 0.0:
            lo = mu
        else:
            hi = mu
        if hi - lo <= 1e-18 * max(1.0, abs(m)):
            break
    if z is not None and abs(float(z.sum()) - 1.0) <= 1e-9:
        return z
    raise ProxError("entropy prox bisection failed to bracket the multiplier")


def prox_pnorm(g: Geometry, x: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """p-norm prox via a fixed point on the scale s = ||z||_p^(2-p).

    For a trial s the stationarity system gives
    z_i = max(0, (h_i - mu)/s)^(1/(p-1)) with h = grad w(x) - phi and
    mu fixed by the unit-sum constraint (inner bisection).  The outer
    iteration damps s by 1/2 averaging and stops once successive z
    differ by less than 1e-11 in l1.  The variational optimality
    condition is verified before returning.
    """
    if g.kind != "pnorm":
        raise ValueError("geometry is not the p-norm setup")
    p = g.p
    expo = 1.0 / (p - 1.0)
    h = grad_omega(g, x) - phi
    hmax = float(np.max(h))
    s = 1.0
    z = np.asarray(x, dtype=float)
    for _ in range(_PNORM_OUTER_CAP):
        # Inner solve: sum_i max(0, (h_i - mu)/s)^expo = 1, decreasing
        # in mu, with a sure bracket [hmax - s, hmax].
        lo, hi = hmax - s, hmax
        z_new = None
        for _ in range(_BISECT_CAP):
            mu = 0.5 * (lo + hi)
            z_new = np.maximum((h - mu) / s, 0.0) ** expo
            f = float(z_new.sum()) - 1.0
            if abs(f) <= _SUM_TOL:
                break
            if f > 0.0:
                lo = mu
            else:
                hi = mu
            if hi - lo <= 1e-17 * max(1.0, abs(hmax)):
                break
        change = float(np.sum(np.abs(z_new - z)))
        z = z_new
        s_new = float(np.sum(z**p) ** (1.0 / p)) ** (2.0 - p)
        if change < _PNORM_Z_TOL:
            break
        s = 0.5 * (s + s_new)
    else:
        raise ProxError(
            f"p-norm prox did not converge: last change {change:g}, scale {s:g}"
        )
    slack = _check_optimality(g, x, phi, z)
    scale = 1.0 + float(np.max(np.abs(phi))) if phi.size else 1.0
    if slack < -1e-8 * scale:
        raise ProxError(f"p-norm prox optimality slack {slack:g} at scale {scale:g}")
    return z


def prox_map(g: Geometry, x: np.ndarray, phi: np.ndarray, validate: bool = False) -> np.ndarray:
    """P_x(phi) = argmin over the simplex of <phi, z> + V(x, z).

    ``validate`` re-checks the variational optimality condition on the
    result (an extra O(n) pass, meant for tests and debugging).
    """
    phi = np.asarray(phi, dtype=float)
    if g.kind == "euclidean":
        z = project_simplex_euclidean(x - phi)
    elif g.kind == "entropy":
        z = prox_entropy(g, x, phi)
    else:
        z = prox_pnorm(g, x, phi)
    if validate:
        slack = _check_optimality(g, x, phi, z)
        scale = 1.0 + float(np.max(np.abs(phi))) if phi.size else 1.0
        if slack < -1e-8 * scale:
            raise ProxError(f"prox optimality slack {slack:g} on {g.kind}")
    return z


def omega_radius(g: Geometry) -> RadiusReport:
    """Analytic simplex range of w: D^2 = max w - min w, Omega = sqrt(2/alpha) D.

    The generating functions are convex and permutation-symmetric, so
    the maximum sits at a vertex and the minimum at the center.
    """
    n = g.n
    if g.kind == "euclidean":
        d2 = 0.5 - 0.5 / n
    elif g.kind == "entropy":
        c = g.delta / n
        vertex = (1.0 + c) * math.log1p(c) + (n - 1) * c * math.log(c)
        center = (1.0 + g.delta) * math.log((1.0 + g.delta) / n)
        d2 = vertex - center
    else:
        d2 = 0.5 - 0.5 * n ** (2.0 / g.p - 2.0)
    d = math.sqrt(max(d2, 0.0))
    return RadiusReport(D=d, Omega=math.sqrt(2.0 / g.alpha) * d)


def residual_magnitude(x: np.ndarray, d: np.ndarray, beta: float) -> float:
    """||proj(x + beta d) - x||_2 / beta, the Euclidean step-length ratio."""
    return float(np.linalg.norm(project_simplex_euclidean(x + beta * d) - x)) / beta


def primal_distance(g: Geometry, a: np.ndarray, b: np.ndarray) -> float:
    return primal_norm(a - b, g.norms)
